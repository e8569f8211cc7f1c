use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::eigen::eigvalsh;
use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance for norms, traces and Hermiticity of constructed objects.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Lowest eigenvalue accepted as "positive semidefinite".
pub const PSD_TOL: f64 = 1e-10;

/// A unit vector in C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: Vec<C64>,
}

impl Ket {
    /// Wraps amplitudes that are already unit-normalized.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn qubit(a: C64, b: C64) -> Result<Self> {
        Self::new(vec![a, b])
    }

    /// Computational basis vector |index⟩ in C^dim.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    /// Unitarily invariant random unit vector: 2·dim standard Gaussians,
    /// normalized.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let amplitudes: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(k) = Self::normalized(amplitudes) {
                return k;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ket { amplitudes }
    }

    /// ⟨self|M|self⟩
    pub fn expectation(&self, m: &ComplexMatrix) -> f64 {
        m.quadratic_form(&self.amplitudes)
    }

    /// `|⟨self|other⟩| = 1` within `tol`, i.e. equal up to a global phase.
    pub fn same_ray(&self, other: &Ket, tol: f64) -> bool {
        self.dim() == other.dim() && (self.inner(other).norm() - 1.0).abs() <= tol
    }
}

fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// True iff `m` is Hermitian, positive semidefinite and unit-trace, each
/// within `tol`.
pub fn is_density(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() || !m.is_hermitian(tol) {
        return false;
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return false;
    }
    match eigvalsh(m) {
        Ok(vals) => vals.iter().all(|&v| v >= -tol),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        matrix.require_square()?;
        let herm = matrix.hermiticity_error();
        if herm > STRUCTURE_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCTURE_TOL || tr.im.abs() > STRUCTURE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = eigvalsh(&matrix)?[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn pure(ket: &Ket) -> Self {
        Self {
            matrix: ket.projector(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Tr[ρ·op], real part.
    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        let n = self.dim();
        assert_eq!((op.rows(), op.cols()), (n, n), "operator shape mismatch");
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += (self.matrix[(r, c)] * op[(c, r)]).re;
            }
        }
        acc
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    pub fn partial_trace(&self, dims: (usize, usize), traced: Subsystem) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            matrix: partial_trace(&self.matrix, dims, traced)?,
        })
    }
}

/// Traces out one factor of a matrix on C^{d_a} ⊗ C^{d_b}. Works on
/// unnormalized operators too.
pub fn partial_trace(
    m: &ComplexMatrix,
    (da, db): (usize, usize),
    traced: Subsystem,
) -> Result<ComplexMatrix> {
    let n = m.require_square()?;
    if da * db != n || da == 0 || db == 0 {
        return Err(Error::NotFactorable {
            dim: n,
            left: da,
            right: db,
        });
    }
    let out = match traced {
        Subsystem::A => ComplexMatrix::from_fn(db, db, |j, jp| {
            (0..da).map(|i| m[(i * db + j, i * db + jp)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(da, da, |i, ip| {
            (0..db).map(|j| m[(i * db + j, ip * db + j)]).sum()
        }),
    };
    Ok(out)
}

/// Real 3-vector on (or inside) the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Checked constructor for directions: norm must be 1 within 1e-12.
    pub fn unit(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        v.require_unit()?;
        Ok(v)
    }

    /// Uniform on the unit sphere (three normalized Gaussians).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Self::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let n = v.norm();
            if n > 1e-12 {
                return v.scale(1.0 / n);
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn require_unit(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    /// n⃗·σ⃗
    pub fn dot_sigma(&self) -> ComplexMatrix {
        let z = C64::new(self.z, 0.0);
        let off = C64::new(self.x, -self.y);
        ComplexMatrix::from_rows([[z, off], [off.conj(), -z]])
    }
}

impl std::ops::Neg for BlochVector {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Pure qubit state with Bloch vector `m`: (cos θ/2, e^{iφ} sin θ/2).
pub fn bloch_to_ket(m: &BlochVector) -> Result<Ket> {
    m.require_unit()?;
    let theta = m.z.clamp(-1.0, 1.0).acos();
    let phi = m.y.atan2(m.x);
    let a = C64::new((theta / 2.0).cos(), 0.0);
    let b = C64::from_polar((theta / 2.0).sin(), phi);
    Ok(Ket {
        amplitudes: vec![a, b],
    })
}

/// (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩) of a qubit ket.
pub fn ket_to_bloch(chi: &Ket) -> Result<BlochVector> {
    if chi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: chi.dim(),
        });
    }
    let [a, b] = [chi.amplitudes[0], chi.amplitudes[1]];
    let ab = a.conj() * b;
    Ok(BlochVector::new(
        2.0 * ab.re,
        2.0 * ab.im,
        a.norm_sqr() - b.norm_sqr(),
    ))
}

/// (I + sign·n⃗·σ⃗)/2
pub fn spin_projector(n: &BlochVector, sign: i8) -> Result<ComplexMatrix> {
    n.require_unit()?;
    let s = if sign >= 0 { 0.5 } else { -0.5 };
    Ok(&ComplexMatrix::identity(2).scale(0.5) + &n.dot_sigma().scale(s))
}

/// Bell states in the order ψ−, ψ+, φ−, φ+ with the singlet ψ− = (|01⟩−|10⟩)/√2.
pub fn bell_basis() -> [Ket; 4] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let k = |v: [C64; 4]| Ket {
        amplitudes: v.to_vec(),
    };
    [
        k([ZERO, h, -h, ZERO]),
        k([ZERO, h, h, ZERO]),
        k([h, ZERO, ZERO, -h]),
        k([h, ZERO, ZERO, h]),
    ]
}

/// Projector onto the singlet.
pub fn singlet_projector() -> ComplexMatrix {
    bell_basis()[0].projector()
}

/// Projector onto the antisymmetric subspace of C^d ⊗ C^d, (I − V)/2.
pub fn antisymmetric_projector(d: usize) -> ComplexMatrix {
    (&ComplexMatrix::identity(d * d) - &ComplexMatrix::swap(d)).scale(0.5)
}

/// The d-dimensional Werner state I/d³ + (2/d²)·P_anti.
pub fn werner_general(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            allowed: "d >= 2",
        });
    }
    let df = d as f64;
    let m = &ComplexMatrix::identity(d * d).scale(1.0 / (df * df * df))
        + &antisymmetric_projector(d).scale(2.0 / (df * df));
    Ok(DensityMatrix { matrix: m })
}

/// The same state written with the swap operator: ((1+d)/d³)·I − (1/d²)·V.
pub fn werner_general_swap_form(d: usize) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            allowed: "d >= 2",
        });
    }
    let df = d as f64;
    Ok(
        &ComplexMatrix::identity(d * d).scale((1.0 + df) / (df * df * df))
            - &ComplexMatrix::swap(d).scale(1.0 / (df * df)),
    )
}

/// ((1−α)/4)·I + α·P_singlet, for α ∈ [0, 1].
pub fn werner_alpha(alpha: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            allowed: "[0, 1]",
        });
    }
    Ok(DensityMatrix {
        matrix: werner_alpha_unchecked(alpha),
    })
}

/// The Werner-α matrix without the range check; outside [0, 1/3]..[0, 1]
/// it need not be a state.
pub fn werner_alpha_unchecked(alpha: f64) -> ComplexMatrix {
    &ComplexMatrix::identity(4).scale((1.0 - alpha) / 4.0) + &singlet_projector().scale(alpha)
}

/// ⟨χ|M|χ⟩
pub fn fidelity(chi: &Ket, m: &DensityMatrix) -> Result<f64> {
    if chi.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: chi.dim(),
        });
    }
    Ok(chi.expectation(m.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_valid_state(rho: &DensityMatrix) {
        let m = rho.matrix();
        assert!(m.hermiticity_error() <= 1e-12);
        assert!((m.trace().re - 1.0).abs() <= 1e-12);
        assert!(eigvalsh(m).unwrap()[0] >= -1e-10);
    }

    #[test]
    fn singlet_marginal_is_maximally_mixed() {
        let ps = DensityMatrix::new(singlet_projector()).unwrap();
        let red = ps.partial_trace((2, 2), Subsystem::A).unwrap();
        assert!(red
            .matrix()
            .approx_eq(DensityMatrix::maximally_mixed(2).matrix(), 1e-15));
    }

    #[test]
    fn product_state_partial_trace() {
        let r1 = DensityMatrix::new(ComplexMatrix::from_rows([
            [c(0.7, 0.0), c(0.1, 0.2)],
            [c(0.1, -0.2), c(0.3, 0.0)],
        ]))
        .unwrap();
        let r2 = DensityMatrix::new(ComplexMatrix::diag(&[0.25, 0.25, 0.5])).unwrap();
        let prod = r1.tensor(&r2);
        let back = prod.partial_trace((2, 3), Subsystem::B).unwrap();
        assert!(back.matrix().approx_eq(r1.matrix(), 1e-15));
        let other = prod.partial_trace((2, 3), Subsystem::A).unwrap();
        assert!(other.matrix().approx_eq(r2.matrix(), 1e-15));
    }

    #[test]
    fn werner_marginals_maximally_mixed() {
        for alpha in [0.0, 0.2, 0.5, FRAC_1_SQRT_2, 1.0] {
            let w = werner_alpha(alpha).unwrap();
            let red = w.partial_trace((2, 2), Subsystem::A).unwrap();
            assert!(red
                .matrix()
                .approx_eq(&ComplexMatrix::identity(2).scale(0.5), 1e-15));
        }
    }

    #[test]
    fn partial_trace_rejects_bad_factorization() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            partial_trace(&m, (3, 2), Subsystem::A),
            Err(Error::NotFactorable { .. })
        ));
    }

    #[test]
    fn bloch_poles_and_equator() {
        let up = bloch_to_ket(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(up.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let h = FRAC_1_SQRT_2;
        let x = bloch_to_ket(&BlochVector::new(1.0, 0.0, 0.0)).unwrap();
        assert!(x.same_ray(&Ket::qubit(c(h, 0.0), c(h, 0.0)).unwrap(), 1e-15));
        let y = bloch_to_ket(&BlochVector::new(0.0, 1.0, 0.0)).unwrap();
        assert!(y.same_ray(&Ket::qubit(c(h, 0.0), c(0.0, h)).unwrap(), 1e-15));
        assert!((y.amplitudes()[1] - c(0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn bloch_rejects_non_unit() {
        assert!(matches!(
            bloch_to_ket(&BlochVector::new(0.0, 0.0, 0.9)),
            Err(Error::NotNormalized { .. })
        ));
        assert!(ket_to_bloch(&Ket::basis(3, 0)).is_err());
    }

    #[test]
    fn spin_projectors() {
        let z = BlochVector::new(0.0, 0.0, 1.0);
        assert!(spin_projector(&z, 1)
            .unwrap()
            .approx_eq(&ComplexMatrix::diag(&[1.0, 0.0]), 0.0));
        let h = FRAC_1_SQRT_2;
        let r = BlochVector::new(h, h, 0.0);
        let p = spin_projector(&r, 1).unwrap();
        let expected = ComplexMatrix::from_rows([
            [c(0.5, 0.0), c(0.5 / SQRT_2, -0.5 / SQRT_2)],
            [c(0.5 / SQRT_2, 0.5 / SQRT_2), c(0.5, 0.0)],
        ]);
        assert!(p.approx_eq(&expected, 1e-15));
        let sum = &p + &spin_projector(&r, -1).unwrap();
        assert!(sum.approx_eq(&ComplexMatrix::identity(2), 1e-15));
        assert!(spin_projector(&BlochVector::new(1.0, 1.0, 0.0), 1).is_err());
    }

    #[test]
    fn bell_basis_is_orthonormal_and_complete() {
        let basis = bell_basis();
        let mut sum = ComplexMatrix::zeros(4, 4);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip = a.inner(b);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want, 0.0)).norm() < 1e-15);
            }
            sum = &sum + &a.projector();
        }
        assert!(sum.approx_eq(&ComplexMatrix::identity(4), 1e-15));
    }

    #[test]
    fn werner_two_matches_alpha_half() {
        let w2 = werner_general(2).unwrap();
        let direct = &ComplexMatrix::identity(4).scale(1.0 / 8.0) + &singlet_projector().scale(0.5);
        assert!(w2.matrix().approx_eq(&direct, 1e-15));
        assert!(w2
            .matrix()
            .approx_eq(werner_alpha(0.5).unwrap().matrix(), 1e-15));
    }

    #[test]
    fn werner_general_forms_agree() {
        for d in 2..=5 {
            let w = werner_general(d).unwrap();
            assert_valid_state(&w);
            let swap_form = werner_general_swap_form(d).unwrap();
            assert!(w.matrix().max_abs_diff(&swap_form) <= 1e-12, "d = {d}");
            assert!((w.matrix().trace().re - 1.0).abs() < 1e-12);
        }
        assert!(werner_general(1).is_err());
    }

    #[test]
    fn swap_coefficient_cubed_is_not_normalized() {
        // With a 1/d³ coefficient on V the trace is (1+d)/d − 1/d² ≠ 1.
        for d in 2..=5usize {
            let df = d as f64;
            let m = &ComplexMatrix::identity(d * d).scale((1.0 + df) / df.powi(3))
                - &ComplexMatrix::swap(d).scale(1.0 / df.powi(3));
            assert!((m.trace().re - 1.0).abs() > 0.1);
        }
    }

    #[test]
    fn werner_alpha_endpoints() {
        assert!(werner_alpha(0.0)
            .unwrap()
            .matrix()
            .approx_eq(&ComplexMatrix::identity(4).scale(0.25), 0.0));
        assert!(werner_alpha(1.0)
            .unwrap()
            .matrix()
            .approx_eq(&singlet_projector(), 1e-16));
        assert!(werner_alpha(1.2).is_err());
        assert!(werner_alpha(-0.1).is_err());
    }

    #[test]
    fn fidelity_values() {
        let chi = Ket::basis(2, 0);
        assert!((fidelity(&chi, &DensityMatrix::pure(&chi)).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&chi, &DensityMatrix::maximally_mixed(2)).unwrap() - 0.5).abs() < 1e-15);
        let m = DensityMatrix::new(ComplexMatrix::diag(&[0.75, 0.25])).unwrap();
        assert!((fidelity(&chi, &m).unwrap() - 0.75).abs() < 1e-15);
        assert!(fidelity(&Ket::basis(4, 0), &m).is_err());
    }

    #[test]
    fn density_checks() {
        for alpha in [0.0, 1.0 / 3.0, FRAC_1_SQRT_2, 1.0] {
            assert!(is_density(werner_alpha(alpha).unwrap().matrix(), 1e-10));
        }
        assert!(!is_density(&ComplexMatrix::diag(&[2.0, -1.0]), 1e-10));
        // At α = 1.5 the triplet eigenvalue (1 − α)/4 = −1/8 is negative.
        let bad = werner_alpha_unchecked(1.5);
        assert!((eigvalsh(&bad).unwrap()[0] + 0.125).abs() < 1e-12);
        assert!(!is_density(&bad, 1e-10));
        assert!(DensityMatrix::new(bad).is_err());
    }

    #[test]
    fn singlet_overlap_of_werner() {
        let ps = singlet_projector();
        for i in 0..=20 {
            let alpha = i as f64 / 20.0;
            let w = werner_alpha(alpha).unwrap();
            let brute = (w.matrix() * &ps).trace().re;
            assert!((brute - (1.0 + 3.0 * alpha) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn bloch_round_trip_1000() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = BlochVector::random(&mut rng);
            let back = ket_to_bloch(&bloch_to_ket(&m).unwrap()).unwrap();
            assert!((back.x - m.x).abs() < 1e-12);
            assert!((back.y - m.y).abs() < 1e-12);
            assert!((back.z - m.z).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn spin_projectors_are_orthogonal(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let n = (x * x + y * y + z * z).sqrt();
            prop_assume!(n > 1e-3);
            let v = BlochVector::new(x / n, y / n, z / n);
            let p = spin_projector(&v, 1).unwrap();
            let q = spin_projector(&v, -1).unwrap();
            prop_assert!((&p * &q).approx_eq(&ComplexMatrix::zeros(2, 2), 1e-15));
            prop_assert!((&p * &p).approx_eq(&p, 1e-15));
        }

        #[test]
        fn ket_bloch_expectations(re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, re1 in -1.0f64..1.0, im1 in -1.0f64..1.0) {
            let chi = match Ket::normalized(vec![c(re0, im0), c(re1, im1)]) {
                Ok(k) => k,
                Err(_) => return Ok(()),
            };
            let m = ket_to_bloch(&chi).unwrap();
            let [sx, sy, sz] = ComplexMatrix::paulis();
            prop_assert!((chi.expectation(&sx) - m.x).abs() < 1e-12);
            prop_assert!((chi.expectation(&sy) - m.y).abs() < 1e-12);
            prop_assert!((chi.expectation(&sz) - m.z).abs() < 1e-12);
            let back = bloch_to_ket(&m).unwrap();
            prop_assert!(back.same_ray(&chi, 1e-12));
        }
    }
}
