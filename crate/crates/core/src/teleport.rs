//! The standard teleportation scheme and its reduction to a POVM.
//!
//! Qubit 1 carries the input |χ⟩, qubits 2 and 3 hold the shared state ρ
//! (2 on Alice's side, 3 on Bob's). Alice projects qubits 1 and 2 onto the
//! Bell basis; seen from qubit 2 alone this is a four-outcome POVM whose
//! elements depend on χ.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::montecarlo::{estimate_mean, Estimate, McConfig};
use crate::qcore::{
    bell_basis, partial_trace, ComplexMatrix, DensityMatrix, Ket, Subsystem, ONE, STRUCTURE_TOL,
    ZERO,
};

/// Probability below which an outcome is treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Alice's effective measurement on her half of the shared pair, indexed
/// like the Bell basis (ψ−, ψ+, φ−, φ+).
#[derive(Debug, Clone, PartialEq)]
pub struct PovmFour {
    elements: [ComplexMatrix; 4],
    source: Ket,
}

impl PovmFour {
    pub fn elements(&self) -> &[ComplexMatrix; 4] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &ComplexMatrix {
        &self.elements[k]
    }

    pub fn source_state(&self) -> &Ket {
        &self.source
    }

    /// Elements sum to the identity within 1e-12.
    pub fn is_complete(&self) -> bool {
        self.grouped(&[0, 1, 2, 3])
            .approx_eq(&ComplexMatrix::identity(2), STRUCTURE_TOL)
    }

    /// Sum of the elements with the given indices.
    pub fn grouped(&self, indices: &[usize]) -> ComplexMatrix {
        indices.iter().fold(ComplexMatrix::zeros(2, 2), |acc, &k| {
            &acc + &self.elements[k]
        })
    }
}

fn require_qubit(chi: &Ket) -> Result<()> {
    if chi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: chi.dim(),
        });
    }
    Ok(())
}

fn require_pair(rho: &DensityMatrix) -> Result<()> {
    rho.matrix().require_dim(4)
}

/// The four POVM elements induced by teleporting χ = (a, b):
///
/// ```text
/// A0 = ½[[|b|², −ab*], [−a*b, |a|²]]    A1 = ½[[|b|², ab*], [a*b, |a|²]]
/// A2 = ½[[|a|², −a*b], [−ab*, |b|²]]    A3 = ½[[|a|², a*b], [ab*, |b|²]]
/// ```
pub fn povm_from_input(chi: &Ket) -> Result<PovmFour> {
    require_qubit(chi)?;
    let (a, b) = (chi.amplitudes()[0], chi.amplitudes()[1]);
    let aa = C64::new(a.norm_sqr(), 0.0);
    let bb = C64::new(b.norm_sqr(), 0.0);
    let ab_ = a * b.conj();
    let a_b = a.conj() * b;
    let half = |m: ComplexMatrix| m.scale(0.5);
    let elements = [
        half(ComplexMatrix::from_rows([[bb, -ab_], [-a_b, aa]])),
        half(ComplexMatrix::from_rows([[bb, ab_], [a_b, aa]])),
        half(ComplexMatrix::from_rows([[aa, -a_b], [-ab_, bb]])),
        half(ComplexMatrix::from_rows([[aa, a_b], [ab_, bb]])),
    ];
    Ok(PovmFour {
        elements,
        source: chi.clone(),
    })
}

/// Tr[ρ (alice_op ⊗ bob_op)] for a two-qubit ρ.
pub fn joint_probability(
    rho: &DensityMatrix,
    alice_op: &ComplexMatrix,
    bob_op: &ComplexMatrix,
) -> Result<f64> {
    require_pair(rho)?;
    alice_op.require_dim(2)?;
    bob_op.require_dim(2)?;
    Ok(rho.expectation(&alice_op.kron(bob_op)))
}

/// Bell-outcome probabilities computed twice: on the full three-qubit state
/// and through the POVM acting on Alice's reduced state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellProbabilities {
    pub projective: [f64; 4],
    pub povm: [f64; 4],
}

impl BellProbabilities {
    pub fn probabilities(&self) -> [f64; 4] {
        self.projective
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.projective
            .iter()
            .zip(&self.povm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn bell_measurement_probabilities(chi: &Ket, rho: &DensityMatrix) -> Result<BellProbabilities> {
    require_qubit(chi)?;
    require_pair(rho)?;
    let joint = DensityMatrix::pure(chi).tensor(rho);
    let id2 = ComplexMatrix::identity(2);
    let mut projective = [0.0; 4];
    for (k, bell) in bell_basis().iter().enumerate() {
        projective[k] = joint.expectation(&bell.projector().kron(&id2));
    }

    let alice = rho.partial_trace((2, 2), Subsystem::B)?;
    let povm = povm_from_input(chi)?;
    let mut via_povm = [0.0; 4];
    for (k, p) in via_povm.iter_mut().enumerate() {
        *p = alice.expectation(povm.element(k));
    }
    Ok(BellProbabilities {
        projective,
        povm: via_povm,
    })
}

/// Bob's state after outcome `k`, before any correction:
/// Tr₁₂[(P_k⊗I)(|χ⟩⟨χ|⊗ρ)(P_k⊗I)] / p_k, evaluated on the full 8×8 state.
pub fn bob_conditional_state(chi: &Ket, rho: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    require_qubit(chi)?;
    require_pair(rho)?;
    let bell = bell_basis();
    let proj = bell
        .get(k)
        .ok_or(Error::OutOfRange {
            name: "k",
            value: k as f64,
            allowed: "{0, 1, 2, 3}",
        })?
        .projector()
        .kron(&ComplexMatrix::identity(2));
    let joint = DensityMatrix::pure(chi).tensor(rho);
    let projected = &(&proj * joint.matrix()) * &proj;
    let bob = partial_trace(&projected, (4, 2), Subsystem::A)?;
    let p = bob.trace().re;
    if p <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability(k));
    }
    DensityMatrix::new(hermitize(&bob.scale(1.0 / p)))
}

fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale(0.5)
}

/// Unnormalized conditional states for all four outcomes, computed from
/// the partial overlap v_y = Σ_x ⟨β_k|x y⟩·χ_x without forming the
/// three-qubit state. Traces are the outcome probabilities.
fn conditional_states(chi: &Ket, rho: &ComplexMatrix) -> [[C64; 4]; 4] {
    let x = chi.amplitudes();
    let mut out = [[ZERO; 4]; 4];
    for (k, bell) in bell_basis().iter().enumerate() {
        let beta = bell.amplitudes();
        let v = [
            beta[0].conj() * x[0] + beta[2].conj() * x[1],
            beta[1].conj() * x[0] + beta[3].conj() * x[1],
        ];
        // M[j][j'] = Σ_{y,y'} v_y ρ[(y,j),(y',j')] v*_{y'}
        for j in 0..2 {
            for jp in 0..2 {
                let mut acc = ZERO;
                for y in 0..2 {
                    for yp in 0..2 {
                        acc += v[y] * rho[(2 * y + j, 2 * yp + jp)] * v[yp].conj();
                    }
                }
                out[k][2 * j + jp] = acc;
            }
        }
    }
    out
}

/// Bob's correction for outcome `k` (−I, −σ_z, σ_x, iσ_y). Maps the
/// singlet-resource conditional state back onto χ.
pub fn correction_unitary(k: usize) -> ComplexMatrix {
    match k {
        0 => ComplexMatrix::identity(2).scale(-1.0),
        1 => ComplexMatrix::pauli_z().scale(-1.0),
        2 => ComplexMatrix::pauli_x(),
        3 => ComplexMatrix::from_rows([[ZERO, ONE], [-ONE, ZERO]]),
        _ => panic!("Bell outcome index {k} out of range"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportOutcome {
    /// Bell outcome, ordered ψ−, ψ+, φ−, φ+.
    pub index: usize,
    pub probability: f64,
    /// Bob's state before correction.
    pub bob_state: DensityMatrix,
}

/// One sampled round of the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportRound {
    pub outcome: TeleportOutcome,
    /// Bob's state after applying [`correction_unitary`].
    pub final_state: DensityMatrix,
}

fn sample_outcome<R: Rng + ?Sized>(probs: &[f64; 4], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= ZERO_PROBABILITY {
            continue;
        }
        cum += p;
        last = k;
        if u < cum {
            return k;
        }
    }
    last
}

fn traces(states: &[[C64; 4]; 4]) -> [f64; 4] {
    states.map(|m| (m[0] + m[3]).re)
}

fn play_round<R: Rng + ?Sized>(
    chi: &Ket,
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<TeleportRound> {
    let states = conditional_states(chi, rho.matrix());
    let probs = traces(&states);
    let k = sample_outcome(&probs, rng);
    let p = probs[k];
    let m = &states[k];
    let bob = ComplexMatrix::from_rows([[m[0], m[1]], [m[2], m[3]]]).scale(1.0 / p);
    let bob_state = DensityMatrix::new(hermitize(&bob))?;
    let u = correction_unitary(k);
    let corrected = &(&u * bob_state.matrix()) * &u.adjoint();
    Ok(TeleportRound {
        outcome: TeleportOutcome {
            index: k,
            probability: p,
            bob_state,
        },
        final_state: DensityMatrix::new(hermitize(&corrected))?,
    })
}

/// Plays one round: samples Alice's outcome, hands Bob the conditional
/// state and applies the matching correction. Deterministic in `seed`.
pub fn run_protocol(chi: &Ket, rho: &DensityMatrix, seed: u64) -> Result<TeleportRound> {
    require_qubit(chi)?;
    require_pair(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    play_round(chi, rho, &mut rng)
}

/// All outcomes with nonzero probability and their uncorrected Bob states.
pub fn teleport_outcomes(chi: &Ket, rho: &DensityMatrix) -> Result<Vec<TeleportOutcome>> {
    require_qubit(chi)?;
    require_pair(rho)?;
    let states = conditional_states(chi, rho.matrix());
    let mut out = Vec::new();
    for (k, m) in states.iter().enumerate() {
        let p = (m[0] + m[3]).re;
        if p <= ZERO_PROBABILITY {
            continue;
        }
        let bob = ComplexMatrix::from_rows([[m[0], m[1]], [m[2], m[3]]]).scale(1.0 / p);
        out.push(TeleportOutcome {
            index: k,
            probability: p,
            bob_state: DensityMatrix::new(hermitize(&bob))?,
        });
    }
    Ok(out)
}

/// Fidelity of one round with input χ; the sampled outcome is corrected and
/// compared to χ.
fn round_fidelity<R: Rng + ?Sized>(chi: &Ket, rho: &ComplexMatrix, rng: &mut R) -> f64 {
    let states = conditional_states(chi, rho);
    let probs = traces(&states);
    let k = sample_outcome(&probs, rng);
    // ⟨χ|U M U†|χ⟩ = ⟨U†χ| M |U†χ⟩
    let w = correction_unitary(k).adjoint().mul_vec(chi.amplitudes());
    let m = ComplexMatrix::from_rows([[states[k][0], states[k][1]], [states[k][2], states[k][3]]]);
    m.quadratic_form(&w) / probs[k]
}

/// Average teleportation fidelity over Haar-random inputs.
pub fn average_fidelity(rho: &DensityMatrix, cfg: &McConfig) -> Result<Estimate> {
    require_pair(rho)?;
    let m = rho.matrix();
    estimate_mean(cfg, |rng| {
        let chi = Ket::random(2, rng);
        round_fidelity(&chi, m, rng)
    })
}

/// Bob's corrected state for a Werner resource, α|χ⟩⟨χ| + (1−α)·I/2.
pub fn werner_corrected_state(chi: &Ket, alpha: f64) -> Result<ComplexMatrix> {
    require_qubit(chi)?;
    Ok(&chi.projector().scale(alpha) + &ComplexMatrix::identity(2).scale((1.0 - alpha) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{eigvalsh, singlet_projector, werner_alpha, BlochVector};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
        // Mixture of a few random pure states.
        let mut m = ComplexMatrix::zeros(dim, dim);
        let weights: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            m = &m + &Ket::random(dim, rng).projector().scale(w / total);
        }
        DensityMatrix::new(hermitize(&m)).unwrap()
    }

    #[test]
    fn povm_for_basis_input() {
        let povm = povm_from_input(&Ket::basis(2, 0)).unwrap();
        assert!(povm
            .element(0)
            .approx_eq(&ComplexMatrix::diag(&[0.0, 0.5]), 0.0));
        assert!(povm
            .element(2)
            .approx_eq(&ComplexMatrix::diag(&[0.5, 0.0]), 0.0));
        assert!(povm.is_complete());
    }

    #[test]
    fn povm_for_x_input() {
        let h = FRAC_1_SQRT_2;
        let povm = povm_from_input(&Ket::qubit(c(h, 0.0), c(h, 0.0)).unwrap()).unwrap();
        let want = ComplexMatrix::from_real_rows([[0.25, -0.25], [-0.25, 0.25]]);
        assert!(povm.element(0).approx_eq(&want, 1e-15));
    }

    #[test]
    fn povm_matches_partial_overlap_with_bell_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let chi = Ket::random(2, &mut rng);
            let povm = povm_from_input(&chi).unwrap();
            let x = chi.amplitudes();
            for (k, bell) in bell_basis().iter().enumerate() {
                let b = bell.amplitudes();
                // w_y = Σ_x χ*_x β_{xy}
                let w = [
                    x[0].conj() * b[0] + x[1].conj() * b[2],
                    x[0].conj() * b[1] + x[1].conj() * b[3],
                ];
                let oracle = ComplexMatrix::outer(&w, &w);
                assert!(povm.element(k).approx_eq(&oracle, 1e-15));
                assert!((povm.element(k).trace().re - 0.5).abs() < 1e-12);
                assert!(eigvalsh(povm.element(k)).unwrap()[0] >= -1e-10);
            }
            assert!(povm.is_complete());
        }
    }

    #[test]
    fn joint_probability_examples() {
        let ps = DensityMatrix::new(singlet_projector()).unwrap();
        let z = BlochVector::new(0.0, 0.0, 1.0);
        let pz = crate::qcore::spin_projector(&z, 1).unwrap();
        let p = joint_probability(&ps, &ComplexMatrix::identity(2), &pz).unwrap();
        assert!((p - 0.5).abs() < 1e-15);

        let noise = DensityMatrix::maximally_mixed(4);
        let alice = ComplexMatrix::from_real_rows([[0.7, 0.1], [0.1, 0.3]]);
        let r = BlochVector::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0);
        let pr = crate::qcore::spin_projector(&r, 1).unwrap();
        let p = joint_probability(&noise, &alice, &pr).unwrap();
        assert!((p - alice.trace().re * pr.trace().re / 4.0).abs() < 1e-15);

        assert!(joint_probability(&noise, &ComplexMatrix::identity(4), &pz).is_err());
    }

    #[test]
    fn bell_probabilities_uniform_for_singlet_and_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ps = DensityMatrix::new(singlet_projector()).unwrap();
        let noise = DensityMatrix::maximally_mixed(4);
        for _ in 0..20 {
            let chi = Ket::random(2, &mut rng);
            for rho in [&ps, &noise] {
                let bp = bell_measurement_probabilities(&chi, rho).unwrap();
                for p in bp.projective {
                    assert!((p - 0.25).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn bell_probability_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let chi = Ket::random(2, &mut rng);
            let rho = random_state(&mut rng, 4);
            let bp = bell_measurement_probabilities(&chi, &rho).unwrap();
            assert!(bp.max_discrepancy() <= 1e-12);
            assert!((bp.projective.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn singlet_conditional_states_match_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ps = DensityMatrix::new(singlet_projector()).unwrap();
        for _ in 0..20 {
            let chi = Ket::random(2, &mut rng);
            let (a, b) = (chi.amplitudes()[0], chi.amplitudes()[1]);
            let table = [
                Ket::qubit(-a, -b).unwrap(),
                Ket::qubit(-a, b).unwrap(),
                Ket::qubit(b, a).unwrap(),
                Ket::qubit(-b, a).unwrap(),
            ];
            for (k, want) in table.iter().enumerate() {
                let got = bob_conditional_state(&chi, &ps, k).unwrap();
                assert!(got.matrix().approx_eq(&want.projector(), 1e-12));
                let fixed = correction_unitary(k).mul_vec(want.amplitudes());
                assert!((fixed[0] - a).norm() < 1e-12 && (fixed[1] - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_conditional_state_is_maximally_mixed() {
        let chi = Ket::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let noise = DensityMatrix::maximally_mixed(4);
        for k in 0..4 {
            let got = bob_conditional_state(&chi, &noise, k).unwrap();
            assert!(got
                .matrix()
                .approx_eq(&ComplexMatrix::identity(2).scale(0.5), 1e-14));
        }
    }

    #[test]
    fn zero_probability_outcome_is_an_error() {
        // ρ = |00⟩⟨00| and χ = |0⟩: qubits 1,2 are |00⟩, orthogonal to ψ±.
        let rho = DensityMatrix::pure(&Ket::basis(4, 0));
        let chi = Ket::basis(2, 0);
        assert_eq!(
            bob_conditional_state(&chi, &rho, 0),
            Err(Error::ZeroProbability(0))
        );
        assert!(bob_conditional_state(&chi, &rho, 2).is_ok());
        assert!(bob_conditional_state(&chi, &rho, 7).is_err());
    }

    #[test]
    fn fast_conditional_states_match_full_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let chi = Ket::random(2, &mut rng);
            let rho = random_state(&mut rng, 4);
            for o in teleport_outcomes(&chi, &rho).unwrap() {
                let full = bob_conditional_state(&chi, &rho, o.index).unwrap();
                assert!(o.bob_state.matrix().approx_eq(full.matrix(), 1e-12));
            }
        }
    }

    #[test]
    fn corrections_are_unitary() {
        for k in 0..4 {
            let u = correction_unitary(k);
            assert!((&u.adjoint() * &u).approx_eq(&ComplexMatrix::identity(2), 0.0));
        }
    }

    #[test]
    fn perfect_teleportation_with_singlet() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ps = DensityMatrix::new(singlet_projector()).unwrap();
        for seed in 0..20 {
            let chi = Ket::random(2, &mut rng);
            let round = run_protocol(&chi, &ps, seed).unwrap();
            assert!(round
                .final_state
                .matrix()
                .approx_eq(&chi.projector(), 1e-12));
        }
    }

    #[test]
    fn werner_resource_gives_outcome_independent_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for alpha in [0.0, 1.0 / 3.0, 0.5, FRAC_1_SQRT_2, 1.0] {
            let w = werner_alpha(alpha).unwrap();
            for _ in 0..20 {
                let chi = Ket::random(2, &mut rng);
                let want = werner_corrected_state(&chi, alpha).unwrap();
                for o in teleport_outcomes(&chi, &w).unwrap() {
                    let u = correction_unitary(o.index);
                    let fixed = &(&u * o.bob_state.matrix()) * &u.adjoint();
                    assert!(fixed.approx_eq(&want, 1e-12));
                }
                let round = run_protocol(&chi, &w, 1).unwrap();
                let f = crate::qcore::fidelity(&chi, &round.final_state).unwrap();
                assert!((f - (1.0 + alpha) / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn run_protocol_is_deterministic() {
        let chi = Ket::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let rho = random_state(&mut ChaCha8Rng::seed_from_u64(9), 4);
        assert_eq!(
            run_protocol(&chi, &rho, 17).unwrap(),
            run_protocol(&chi, &rho, 17).unwrap()
        );
    }

    #[test]
    fn average_fidelity_singlet_is_one() {
        let ps = DensityMatrix::new(singlet_projector()).unwrap();
        let e = average_fidelity(&ps, &McConfig::new(5_000, 1)).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_fidelity_follows_werner_law() {
        for alpha in [0.0, 1.0 / 3.0, 0.5, FRAC_1_SQRT_2, 1.0] {
            let w = werner_alpha(alpha).unwrap();
            let e = average_fidelity(&w, &McConfig::new(20_000, 2)).unwrap();
            assert!(
                e.within((1.0 + alpha) / 2.0, 3.0, 1e-12),
                "alpha {alpha}: {e:?}"
            );
        }
    }

    #[test]
    fn average_fidelity_of_product_resource() {
        // Shared |00⟩: outcomes ψ± leave Bob with |0⟩, φ± with |1⟩, so the
        // fidelity is 2|a|²|b|² = (1 − z²)/2 with mean 1/3 over the sphere.
        let rho = DensityMatrix::pure(&Ket::basis(4, 0));
        let e = average_fidelity(&rho, &McConfig::new(100_000, 3)).unwrap();
        assert!(e.within(1.0 / 3.0, 4.0, 0.0), "{e:?}");
        assert!(e.stderr > 0.0);
    }
}
