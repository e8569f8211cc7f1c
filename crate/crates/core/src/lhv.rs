//! Werner's local hidden variable model for W₂ and its POVM extensions.
//!
//! A pair carries a hidden unit vector λ ∈ C², drawn from the unitarily
//! invariant measure. One party answers deterministically: outcome `i` is
//! the projector with the *smallest* overlap ⟨λ|P_i|λ⟩. The other party
//! answers at random with probability ⟨λ|P|λ⟩. Averaged over λ this
//! reproduces Tr[W₂ P ⊗ Q] with W₂ = ¼·I/2 + ½·P_singlet.
//!
//! Extensions:
//! * a POVM on either side can take the ⟨λ|A|λ⟩ role, because that response
//!   is linear in A and so reduces to the projective case through the
//!   spectral decomposition of A;
//! * a POVM with pairwise-commuting elements B_n = Σ_j q_j^n Q_j can take the
//!   deterministic role: the rule picks Q_j and B_n fires with probability
//!   q_j^n;
//! * a non-maximal projective measurement on the deterministic side is
//!   refined to rank-one projectors and the outcome coarse-grained back.
//!
//! Bob-side POVMs whose elements do not commute have no model here and are
//! rejected.
//!
//! Werner-α states with α < ½ are W₂ mixed with white noise,
//! W₂^α = 2α·W₂ + (1 − 2α)·I/4, so the model answers with the Werner rule
//! with weight 2α and with the product response Tr(A)/2 · Tr(B)/2 otherwise.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::bellcheck::{
    ch_value, AliceSetting, BobSetting, Outcome, OutcomeGrouping, ProbabilityTable,
    TeleportBellSetting,
};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_vector, McConfig};
use crate::qcore::{eigh, spin_projector, ComplexMatrix, Ket};
use crate::teleport::povm_from_input;

/// Tolerance for measurement validation (completeness, idempotence,
/// positivity, commutation).
pub const MEASUREMENT_TOL: f64 = 1e-10;

/// The hidden variable λ: a unit vector in C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenKet(Ket);

impl HiddenKet {
    pub fn new(ket: Ket) -> Self {
        Self(ket)
    }

    pub fn ket(&self) -> &Ket {
        &self.0
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.amplitudes()
    }

    /// ⟨λ|M|λ⟩
    pub fn overlap(&self, m: &ComplexMatrix) -> f64 {
        self.0.expectation(m)
    }
}

/// Draws λ from the U(d)-invariant measure.
pub fn sample_hidden<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HiddenKet {
    HiddenKet(Ket::random(d, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Projective,
    Povm,
}

/// A measurement given by its outcome operators.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpec {
    kind: MeasurementKind,
    operators: Vec<ComplexMatrix>,
}

fn check_common(operators: &[ComplexMatrix]) -> Result<usize> {
    let first = operators
        .first()
        .ok_or_else(|| Error::InvalidMeasurement("no operators".into()))?;
    let d = first.require_square()?;
    let mut sum = ComplexMatrix::zeros(d, d);
    for op in operators {
        op.require_dim(d)?;
        if !op.is_hermitian(MEASUREMENT_TOL) {
            return Err(Error::InvalidMeasurement(
                "operator is not Hermitian".into(),
            ));
        }
        sum = &sum + op;
    }
    let err = sum.max_abs_diff(&ComplexMatrix::identity(d));
    if err > MEASUREMENT_TOL {
        return Err(Error::InvalidMeasurement(format!(
            "operators do not sum to the identity (error {err:e})"
        )));
    }
    Ok(d)
}

impl MeasurementSpec {
    /// Orthogonal projectors summing to the identity.
    pub fn projective(operators: Vec<ComplexMatrix>) -> Result<Self> {
        check_common(&operators)?;
        for p in &operators {
            if (p * p).max_abs_diff(p) > MEASUREMENT_TOL {
                return Err(Error::InvalidMeasurement(
                    "operator is not a projector".into(),
                ));
            }
        }
        Ok(Self {
            kind: MeasurementKind::Projective,
            operators,
        })
    }

    /// Positive operators summing to the identity.
    pub fn povm(operators: Vec<ComplexMatrix>) -> Result<Self> {
        check_common(&operators)?;
        for op in &operators {
            if eigh(op)?.values[0] < -MEASUREMENT_TOL {
                return Err(Error::InvalidMeasurement("operator is not positive".into()));
            }
        }
        Ok(Self {
            kind: MeasurementKind::Povm,
            operators,
        })
    }

    /// Spin measurement along `n`: outcomes (up, down).
    pub fn spin(n: &crate::qcore::BlochVector) -> Result<Self> {
        Self::projective(vec![spin_projector(n, 1)?, spin_projector(n, -1)?])
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].rows()
    }
}

/// Deterministic response on a fixed orthonormal basis {e_j}: the rule
/// selects the e_j with the smallest |⟨e_j|λ⟩|² (lowest j on ties) and
/// outcome n then fires with probability `weights[j][n]`.
#[derive(Debug, Clone)]
struct DeterministicResponse {
    basis: Vec<Vec<C64>>,
    weights: Vec<Vec<f64>>,
}

impl DeterministicResponse {
    /// Rank-one refinement of a projective measurement.
    fn from_projective(spec: &MeasurementSpec) -> Result<Self> {
        let n_out = spec.outcomes();
        let mut basis = Vec::new();
        let mut weights = Vec::new();
        for (n, p) in spec.operators.iter().enumerate() {
            let e = eigh(p)?;
            for (j, &v) in e.values.iter().enumerate() {
                if v > 0.5 {
                    basis.push(e.vector(j));
                    let mut w = vec![0.0; n_out];
                    w[n] = 1.0;
                    weights.push(w);
                }
            }
        }
        if basis.len() != spec.dim() {
            return Err(Error::InvalidMeasurement(
                "projector ranks do not add up to the dimension".into(),
            ));
        }
        Ok(Self { basis, weights })
    }

    /// Common eigenbasis of pairwise-commuting POVM elements.
    fn from_commuting(spec: &MeasurementSpec) -> Result<Self> {
        let ops = &spec.operators;
        let worst = ops
            .iter()
            .enumerate()
            .flat_map(|(i, a)| ops[i + 1..].iter().map(move |b| a.commutator(b)))
            .map(|c| c.max_abs_diff(&ComplexMatrix::zeros(c.rows(), c.cols())))
            .fold(0.0, f64::max);
        if worst > MEASUREMENT_TOL {
            return Err(Error::NonCommuting(worst));
        }
        // A generic real combination has non-degenerate spectrum wherever
        // the elements can be told apart, so its eigenbasis diagonalizes
        // every element.
        let d = spec.dim();
        let mix = ops
            .iter()
            .enumerate()
            .fold(ComplexMatrix::zeros(d, d), |acc, (n, op)| {
                &acc + &op.scale(((n + 2) as f64).sqrt() + 0.1 * n as f64)
            });
        let e = eigh(&mix)?;
        let basis: Vec<Vec<C64>> = (0..d).map(|j| e.vector(j)).collect();
        let weights: Vec<Vec<f64>> = basis
            .iter()
            .map(|v| ops.iter().map(|op| op.quadratic_form(v)).collect())
            .collect();
        for (n, op) in ops.iter().enumerate() {
            let rebuilt = basis
                .iter()
                .zip(&weights)
                .fold(ComplexMatrix::zeros(d, d), |acc, (v, w)| {
                    &acc + &ComplexMatrix::outer(v, v).scale(w[n])
                });
            let err = rebuilt.max_abs_diff(op);
            if err > 1e-9 {
                return Err(Error::NonCommuting(err));
            }
        }
        Ok(Self { basis, weights })
    }

    fn selected(&self, lambda: &[C64]) -> usize {
        let mut best = 0;
        let mut best_overlap = f64::INFINITY;
        for (j, e) in self.basis.iter().enumerate() {
            let amp: C64 = e.iter().zip(lambda).map(|(a, b)| a.conj() * b).sum();
            let overlap = amp.norm_sqr();
            if overlap < best_overlap {
                best = j;
                best_overlap = overlap;
            }
        }
        best
    }

    fn respond(&self, lambda: &[C64], out: &mut [f64]) {
        out.copy_from_slice(&self.weights[self.selected(lambda)]);
    }
}

#[derive(Debug, Clone)]
enum Response {
    /// Fires outcome n with probability ⟨λ|O_n|λ⟩.
    Quadratic(Vec<ComplexMatrix>),
    Deterministic(DeterministicResponse),
}

impl Response {
    fn respond(&self, lambda: &[C64], out: &mut [f64]) {
        match self {
            Response::Quadratic(ops) => {
                for (o, op) in out.iter_mut().zip(ops) {
                    *o = op.quadratic_form(lambda);
                }
            }
            Response::Deterministic(det) => det.respond(lambda, out),
        }
    }
}

/// Deterministic rule for projective measurements: the index of the
/// projector with the smallest ⟨λ|P|λ⟩, ties to the lowest index.
/// Non-maximal projectors are refined into rank-one pieces first.
pub fn alice_rule_projective(lambda: &HiddenKet, projectors: &[ComplexMatrix]) -> Result<usize> {
    let spec = MeasurementSpec::projective(projectors.to_vec())?;
    require_lambda_dim(lambda, &spec)?;
    let det = DeterministicResponse::from_projective(&spec)?;
    let j = det.selected(lambda.amplitudes());
    Ok(det.weights[j]
        .iter()
        .position(|&w| w == 1.0)
        .expect("one-hot weights"))
}

/// ⟨λ|P|λ⟩
pub fn bob_rule_projective(lambda: &HiddenKet, projector: &ComplexMatrix) -> f64 {
    lambda.overlap(projector)
}

/// ⟨λ|A|λ⟩ for a POVM element A.
pub fn alice_rule_povm(lambda: &HiddenKet, element: &ComplexMatrix) -> f64 {
    lambda.overlap(element)
}

/// Outcome probabilities for a POVM with pairwise-commuting elements
/// B_n = Σ_j q_j^n Q_j: the deterministic rule picks Q_j, then B_n fires
/// with probability q_j^n.
pub fn bob_rule_commuting_povm(lambda: &HiddenKet, elements: &[ComplexMatrix]) -> Result<Vec<f64>> {
    let spec = MeasurementSpec::povm(elements.to_vec())?;
    require_lambda_dim(lambda, &spec)?;
    let det = DeterministicResponse::from_commuting(&spec)?;
    let mut out = vec![0.0; spec.outcomes()];
    det.respond(lambda.amplitudes(), &mut out);
    Ok(out)
}

fn require_lambda_dim(lambda: &HiddenKet, spec: &MeasurementSpec) -> Result<()> {
    if lambda.ket().dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: lambda.ket().dim(),
        });
    }
    Ok(())
}

/// Monte-Carlo estimate of a joint outcome distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEstimate {
    /// `probabilities[a][b]` for Alice outcome `a`, Bob outcome `b`.
    pub probabilities: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub samples: u64,
}

impl JointEstimate {
    /// Largest |estimate − target| in units of the entry's stderr.
    /// Deviations below 1e-12 count as zero, so entries with vanishing
    /// variance do not blow up on rounding.
    pub fn max_z_score(&self, target: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, row) in self.probabilities.iter().enumerate() {
            for (b, &p) in row.iter().enumerate() {
                let d = (p - target[a][b]).abs();
                if d > 1e-12 {
                    worst = worst.max(d / self.stderr[a][b]);
                }
            }
        }
        worst
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// CH value estimated from a local model, with its table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub table: ProbabilityTable,
}

/// Werner's model, optionally diluted with white noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerLhvModel {
    alpha: f64,
}

impl Default for WernerLhvModel {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl WernerLhvModel {
    /// The model for W₂ = W₂^{1/2}.
    pub fn werner() -> Self {
        Self::default()
    }

    /// The model for W₂^α, α ∈ [0, ½].
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: alpha,
                allowed: "[0, 1/2] (no local model is provided above 1/2)",
            });
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn roles(alice: &MeasurementSpec, bob: &MeasurementSpec) -> Result<(Response, Response)> {
        for spec in [alice, bob] {
            if spec.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: spec.dim(),
                });
            }
        }
        use MeasurementKind::{Povm, Projective};
        Ok(match (alice.kind, bob.kind) {
            (Projective, Projective) => (
                Response::Deterministic(DeterministicResponse::from_projective(alice)?),
                Response::Quadratic(bob.operators.clone()),
            ),
            (Povm, Projective) => (
                Response::Quadratic(alice.operators.clone()),
                Response::Deterministic(DeterministicResponse::from_projective(bob)?),
            ),
            (_, Povm) => (
                Response::Quadratic(alice.operators.clone()),
                Response::Deterministic(DeterministicResponse::from_commuting(bob)?),
            ),
        })
    }

    /// Estimates Pr(a, b) = ∫dλ Pr(a|λ) Pr(b|λ).
    pub fn estimate_joint(
        &self,
        alice: &MeasurementSpec,
        bob: &MeasurementSpec,
        cfg: &McConfig,
    ) -> Result<JointEstimate> {
        let (a_resp, b_resp) = Self::roles(alice, bob)?;
        let (na, nb) = (alice.outcomes(), bob.outcomes());
        let a_noise: Vec<f64> = alice.operators.iter().map(|o| o.trace().re / 2.0).collect();
        let b_noise: Vec<f64> = bob.operators.iter().map(|o| o.trace().re / 2.0).collect();
        let w = 2.0 * self.alpha;
        let est = estimate_vector(cfg, na * nb, |rng, out| {
            let lambda = Ket::random(2, rng);
            let mut pa = [0.0; 8];
            let mut pb = [0.0; 8];
            a_resp.respond(lambda.amplitudes(), &mut pa[..na]);
            b_resp.respond(lambda.amplitudes(), &mut pb[..nb]);
            for i in 0..na {
                for j in 0..nb {
                    out[i * nb + j] = w * pa[i] * pb[j] + (1.0 - w) * a_noise[i] * b_noise[j];
                }
            }
        })?;
        let grid = |f: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
            (0..na)
                .map(|i| (0..nb).map(|j| f(i * nb + j)).collect())
                .collect()
        };
        Ok(JointEstimate {
            probabilities: grid(&|k| est[k].mean),
            stderr: grid(&|k| est[k].stderr),
            samples: cfg.samples,
        })
    }

    /// Simulates the teleportation Bell test: Alice's two-outcome POVMs
    /// come from teleporting χ (T) or χ′ (U) under `grouping`, Bob measures
    /// spin along r⃗ or s⃗. Returns the CH combination of the simulated
    /// probabilities.
    pub fn teleport_experiment(
        &self,
        setting: &TeleportBellSetting,
        grouping: &OutcomeGrouping,
        cfg: &McConfig,
    ) -> Result<ChEstimate> {
        let id = ComplexMatrix::identity(2);
        let t = povm_from_input(&setting.chi)?.grouped(&grouping.t_set);
        let u = povm_from_input(&setting.chi_prime)?.grouped(&grouping.u_set);
        let alice = [
            MeasurementSpec::povm(vec![t.clone(), &id - &t])?,
            MeasurementSpec::povm(vec![u.clone(), &id - &u])?,
        ];
        let bob = [
            MeasurementSpec::spin(&setting.r)?,
            MeasurementSpec::spin(&setting.s)?,
        ];
        // Alice's POVMs take the ⟨λ|A|λ⟩ role, Bob's spins the deterministic one.
        let a_resp: Vec<Response> = alice
            .iter()
            .map(|m| Response::Quadratic(m.operators.clone()))
            .collect();
        let b_resp: Vec<Response> = bob
            .iter()
            .map(|m| DeterministicResponse::from_projective(m).map(Response::Deterministic))
            .collect::<Result<_>>()?;
        let w = 2.0 * self.alpha;
        let a_noise: Vec<[f64; 2]> = alice
            .iter()
            .map(|m| {
                [
                    m.operators[0].trace().re / 2.0,
                    m.operators[1].trace().re / 2.0,
                ]
            })
            .collect();

        // Layout: 16 table entries indexed (alice, a_out, bob, b_out) as
        // bits 3..0, then the per-sample CH combination.
        let est = estimate_vector(cfg, 17, |rng, out| {
            let lambda = Ket::random(2, rng);
            let mut pa = [[0.0; 2]; 2];
            let mut pb = [[0.0; 2]; 2];
            for (p, r) in pa.iter_mut().zip(&a_resp) {
                r.respond(lambda.amplitudes(), p);
            }
            for (p, r) in pb.iter_mut().zip(&b_resp) {
                r.respond(lambda.amplitudes(), p);
            }
            for a in 0..2 {
                for ao in 0..2 {
                    for b in 0..2 {
                        for bo in 0..2 {
                            out[a << 3 | ao << 2 | b << 1 | bo] =
                                w * pa[a][ao] * pb[b][bo] + (1.0 - w) * a_noise[a][ao] * 0.5;
                        }
                    }
                }
            }
            // Pr(t,s̄) + Pr(ū,r) + Pr(u,s) − Pr(t,r)
            out[16] = out[0b0011] + out[0b1100] + out[0b1010] - out[0b0000];
        })?;

        let mut table = ProbabilityTable::new();
        let alice_settings = [AliceSetting::T, AliceSetting::U];
        let bob_settings = [BobSetting::R, BobSetting::S];
        for (a, &aset) in alice_settings.iter().enumerate() {
            for (ao, &aout) in Outcome::BOTH.iter().enumerate() {
                for (b, &bset) in bob_settings.iter().enumerate() {
                    for (bo, &bout) in Outcome::BOTH.iter().enumerate() {
                        table.set(
                            aset,
                            aout,
                            bset,
                            bout,
                            est[a << 3 | ao << 2 | b << 1 | bo].mean,
                        );
                    }
                }
            }
        }
        // Validates the table; the value itself comes from the per-sample
        // combination so that it carries a standard error.
        ch_value(&table)?;
        Ok(ChEstimate {
            value: est[16].mean,
            stderr: est[16].stderr,
            samples: cfg.samples,
            table,
        })
    }
}

/// [`WernerLhvModel::estimate_joint`] for W₂.
pub fn estimate_joint(
    alice: &MeasurementSpec,
    bob: &MeasurementSpec,
    cfg: &McConfig,
) -> Result<JointEstimate> {
    WernerLhvModel::werner().estimate_joint(alice, bob, cfg)
}

/// [`WernerLhvModel::teleport_experiment`] for W₂.
pub fn lhv_teleport_experiment(
    setting: &TeleportBellSetting,
    grouping: &OutcomeGrouping,
    cfg: &McConfig,
) -> Result<ChEstimate> {
    WernerLhvModel::werner().teleport_experiment(setting, grouping, cfg)
}
