//! Bell-type checks for the teleportation scenario.
//!
//! Alice's two "measurements" T and U are the POVMs induced by teleporting
//! χ and χ′, each coarse-grained to two outcomes; Bob measures spin along r⃗
//! or s⃗. The CH-type combination
//!
//! ```text
//! Pr(t, s̄) + Pr(ū, r) + Pr(u, s) − Pr(t, r)
//! ```
//!
//! lies in [0, 1] for every local hidden variable model.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::montecarlo::map_ordered;
use crate::qcore::{
    eigvalsh, spin_projector, werner_alpha, BlochVector, ComplexMatrix, DensityMatrix, Ket,
};
use crate::teleport::{joint_probability, povm_from_input};

/// Tolerance on the per-setting normalization of a probability table.
pub const TABLE_NORMALIZATION_TOL: f64 = 1e-9;
/// t₁ + t₂ must exceed 1 by more than this to count as a CHSH violation.
pub const CHSH_TOL: f64 = 1e-12;
/// A CH value counts as violating when below −VIOLATION_TOL.
pub const VIOLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportBellSetting {
    /// Input teleported when Alice "performs" T.
    pub chi: Ket,
    /// Input teleported when Alice "performs" U.
    pub chi_prime: Ket,
    pub r: BlochVector,
    pub s: BlochVector,
}

impl TeleportBellSetting {
    pub fn new(chi: Ket, chi_prime: Ket, r: BlochVector, s: BlochVector) -> Result<Self> {
        for k in [&chi, &chi_prime] {
            if k.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: k.dim(),
                });
            }
        }
        r.require_unit()?;
        s.require_unit()?;
        Ok(Self {
            chi,
            chi_prime,
            r,
            s,
        })
    }

    /// χ spin-up along x, χ′ spin-up along y, Bob's directions in the
    /// xy-plane at ±45° to the x-axis. The singlet violates the CH bound
    /// here by (1 − √2)/2.
    pub fn canonical() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            chi: Ket::qubit(h, h).expect("unit"),
            chi_prime: Ket::qubit(h, C64::new(0.0, FRAC_1_SQRT_2)).expect("unit"),
            r: BlochVector::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0),
            s: BlochVector::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0),
        }
    }

    /// c = ab* + a*b for χ = (a, b).
    pub fn c(&self) -> f64 {
        let (a, b) = (self.chi.amplitudes()[0], self.chi.amplitudes()[1]);
        (a * b.conj() + a.conj() * b).re
    }

    /// d = −i(a′b′* − a′*b′) for χ′ = (a′, b′).
    pub fn d(&self) -> f64 {
        let (a, b) = (
            self.chi_prime.amplitudes()[0],
            self.chi_prime.amplitudes()[1],
        );
        (C64::new(0.0, -1.0) * (a * b.conj() - a.conj() * b)).re
    }
}

/// Which of the four POVM outcomes count as `t` (for T) and `u` (for U).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeGrouping {
    pub t_set: [usize; 2],
    pub u_set: [usize; 2],
}

impl OutcomeGrouping {
    pub fn new(t_set: [usize; 2], u_set: [usize; 2]) -> Result<Self> {
        for set in [t_set, u_set] {
            if set[0] == set[1] || set.iter().any(|&k| k > 3) {
                return Err(Error::InvalidMeasurement(format!(
                    "grouping {set:?} must name two distinct outcomes in 0..4"
                )));
            }
        }
        Ok(Self { t_set, u_set })
    }

    /// t = {A₀, A₂}, u = {A₀, A₃}.
    pub fn canonical() -> Self {
        Self {
            t_set: [0, 2],
            u_set: [0, 3],
        }
    }

    pub fn t_complement(&self) -> [usize; 2] {
        complement(self.t_set)
    }

    pub fn u_complement(&self) -> [usize; 2] {
        complement(self.u_set)
    }
}

fn complement(set: [usize; 2]) -> [usize; 2] {
    let mut out = [0; 2];
    let mut i = 0;
    for k in 0..4 {
        if !set.contains(&k) {
            out[i] = k;
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceSetting {
    T,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobSetting {
    R,
    S,
}

/// `Plus` is the unbarred outcome (t, u, r, s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];
}

/// Joint outcome probabilities for the 2×2 settings × 2×2 outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProbabilityTable {
    entries: [Option<f64>; 16],
}

fn slot(a: AliceSetting, ao: Outcome, b: BobSetting, bo: Outcome) -> usize {
    (a as usize) << 3 | (ao as usize) << 2 | (b as usize) << 1 | bo as usize
}

fn slot_name(i: usize) -> String {
    let alice = if i >> 3 == 0 { "T" } else { "U" };
    let bob = if (i >> 1) & 1 == 0 { "R" } else { "S" };
    let sign = |bit: usize| if bit == 0 { "+" } else { "-" };
    format!("({alice}{}, {bob}{})", sign((i >> 2) & 1), sign(i & 1))
}

impl ProbabilityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, a: AliceSetting, ao: Outcome, b: BobSetting, bo: Outcome, p: f64) {
        self.entries[slot(a, ao, b, bo)] = Some(p);
    }

    pub fn get(&self, a: AliceSetting, ao: Outcome, b: BobSetting, bo: Outcome) -> Option<f64> {
        self.entries[slot(a, ao, b, bo)]
    }

    fn require(&self, a: AliceSetting, ao: Outcome, b: BobSetting, bo: Outcome) -> Result<f64> {
        let i = slot(a, ao, b, bo);
        self.entries[i].ok_or_else(|| Error::MissingEntry(slot_name(i)))
    }

    /// Entries lie in [0, 1]; each fully populated setting pair sums to 1.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.entries.iter().enumerate() {
            if let Some(p) = *p {
                if !(-TABLE_NORMALIZATION_TOL..=1.0 + TABLE_NORMALIZATION_TOL).contains(&p) {
                    return Err(Error::InvalidTable(format!(
                        "entry {} = {p} outside [0, 1]",
                        slot_name(i)
                    )));
                }
            }
        }
        for a in [AliceSetting::T, AliceSetting::U] {
            for b in [BobSetting::R, BobSetting::S] {
                let block: Option<Vec<f64>> = Outcome::BOTH
                    .iter()
                    .flat_map(|&ao| Outcome::BOTH.iter().map(move |&bo| (ao, bo)))
                    .map(|(ao, bo)| self.get(a, ao, b, bo))
                    .collect();
                if let Some(block) = block {
                    let sum: f64 = block.iter().sum();
                    if (sum - 1.0).abs() > TABLE_NORMALIZATION_TOL {
                        return Err(Error::InvalidTable(format!(
                            "setting ({a:?}, {b:?}) sums to {sum}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Pr(t, s̄) + Pr(ū, r) + Pr(u, s) − Pr(t, r).
pub fn ch_value(table: &ProbabilityTable) -> Result<f64> {
    use AliceSetting::{T, U};
    use BobSetting::{R, S};
    use Outcome::{Minus, Plus};
    table.validate()?;
    Ok(table.require(T, Plus, S, Minus)?
        + table.require(U, Minus, R, Plus)?
        + table.require(U, Plus, S, Plus)?
        - table.require(T, Plus, R, Plus)?)
}

/// Quantum probability table Tr[ρ (X ⊗ P)] for the setting and grouping.
pub fn teleport_table(
    setting: &TeleportBellSetting,
    grouping: &OutcomeGrouping,
    rho: &DensityMatrix,
) -> Result<ProbabilityTable> {
    let t_povm = povm_from_input(&setting.chi)?;
    let u_povm = povm_from_input(&setting.chi_prime)?;
    let alice = [
        (
            AliceSetting::T,
            [
                t_povm.grouped(&grouping.t_set),
                t_povm.grouped(&grouping.t_complement()),
            ],
        ),
        (
            AliceSetting::U,
            [
                u_povm.grouped(&grouping.u_set),
                u_povm.grouped(&grouping.u_complement()),
            ],
        ),
    ];
    let bob = [
        (
            BobSetting::R,
            [
                spin_projector(&setting.r, 1)?,
                spin_projector(&setting.r, -1)?,
            ],
        ),
        (
            BobSetting::S,
            [
                spin_projector(&setting.s, 1)?,
                spin_projector(&setting.s, -1)?,
            ],
        ),
    ];
    let mut table = ProbabilityTable::new();
    for (a, a_ops) in &alice {
        for (b, b_ops) in &bob {
            for (ao, a_op) in Outcome::BOTH.iter().zip(a_ops) {
                for (bo, b_op) in Outcome::BOTH.iter().zip(b_ops) {
                    table.set(*a, *ao, *b, *bo, joint_probability(rho, a_op, b_op)?);
                }
            }
        }
    }
    Ok(table)
}

pub fn teleport_ch_value(
    setting: &TeleportBellSetting,
    grouping: &OutcomeGrouping,
    rho: &DensityMatrix,
) -> Result<f64> {
    ch_value(&teleport_table(setting, grouping, rho)?)
}

/// ¼(2 − α·c(r_x + s_x) + α·d(r_y − s_y)): the CH value of the Werner-α
/// state under the canonical grouping.
pub fn closed_form_value(alpha: f64, setting: &TeleportBellSetting) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            allowed: "[0, 1]",
        });
    }
    let (r, s) = (&setting.r, &setting.s);
    Ok(0.25 * (2.0 - alpha * setting.c() * (r.x + s.x) + alpha * setting.d() * (r.y - s.y)))
}

/// The α at which the closed form crosses zero, if it does so in [0, 1].
pub fn closed_form_root(setting: &TeleportBellSetting) -> Option<f64> {
    let (r, s) = (&setting.r, &setting.s);
    let slope = setting.c() * (r.x + s.x) - setting.d() * (r.y - s.y);
    if slope <= 0.0 {
        return None;
    }
    let root = 2.0 / slope;
    (root <= 1.0).then_some(root)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    /// Smallest grid α whose Werner-α CH value is negative.
    pub first_violation: Option<f64>,
    /// Exact boundary from the closed form.
    pub closed_form_boundary: Option<f64>,
    /// (α, CH value) for every grid point.
    pub values: Vec<(f64, f64)>,
}

/// Evaluates the CH value of Werner-α states (canonical grouping) over an
/// ascending α grid.
pub fn threshold_scan(setting: &TeleportBellSetting, grid: &[f64]) -> Result<ThresholdReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedGrid);
    }
    let grouping = OutcomeGrouping::canonical();
    let values = map_ordered(grid, |&alpha| -> Result<(f64, f64)> {
        let rho = werner_alpha(alpha)?;
        Ok((alpha, teleport_ch_value(setting, &grouping, &rho)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let first_violation = values
        .iter()
        .find(|(_, v)| *v < -VIOLATION_TOL)
        .map(|(a, _)| *a);
    Ok(ThresholdReport {
        first_violation,
        closed_form_boundary: closed_form_root(setting),
        values,
    })
}

/// Evenly spaced points from `lo` up to `hi` inclusive. Points are rounded
/// to 12 decimals so that e.g. step 0.01 yields exactly 0.71, not
/// 0.7100000000000001.
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            allowed: "> 0",
        });
    }
    if hi < lo {
        return Err(Error::UnsortedGrid);
    }
    let steps = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Correlation matrix T_ij = Tr[ρ σ_i ⊗ σ_j].
pub fn horodecki_t(rho: &DensityMatrix) -> Result<[[f64; 3]; 3]> {
    rho.matrix().require_dim(4)?;
    let paulis = ComplexMatrix::paulis();
    let mut t = [[0.0; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = rho.expectation(&si.kron(sj));
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshCriterion {
    /// t₁ + t₂, the two largest eigenvalues of TᵀT.
    pub value: f64,
    pub violates: bool,
}

impl ChshCriterion {
    /// Largest CHSH value reachable with projective measurements, 2√(t₁+t₂).
    pub fn max_chsh(&self) -> f64 {
        2.0 * self.value.sqrt()
    }
}

/// ρ violates CHSH for some projective settings iff t₁ + t₂ > 1.
pub fn chsh_criterion(rho: &DensityMatrix) -> Result<ChshCriterion> {
    let t = horodecki_t(rho)?;
    let tt = ComplexMatrix::from_fn(3, 3, |i, j| {
        C64::new((0..3).map(|k| t[k][i] * t[k][j]).sum(), 0.0)
    });
    let vals = eigvalsh(&tt)?;
    let value = vals[1] + vals[2];
    Ok(ChshCriterion {
        value,
        violates: value > 1.0 + CHSH_TOL,
    })
}
