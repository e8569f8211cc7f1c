//! Hardy's local toy theory, restricted to the teleportation fragment.
//!
//! Each particle sits in one of four hidden states 0..3. Particles 2 and 3
//! are prepared equal, (x, x) with x uniform. Alice's joint measurement on
//! particles 1 and 2 has four outcomes B₀..B₃, each compatible with four
//! (x₁, x₂) pairs. She sends i ∈ {0..3} (two bits) and Bob replaces x₃ by
//! (x₃ − i) mod 4, which always equals x₁.
//!
//! Everything is local: the outcome is a function of x₁ and x₂ alone, and
//! Bob's final state depends only on x₃ and i.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};

/// A hidden state in {0, 1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyState(u8);

impl ToyState {
    pub const ALL: [ToyState; 4] = [ToyState(0), ToyState(1), ToyState(2), ToyState(3)];

    pub fn new(value: u8) -> Result<Self> {
        if value > 3 {
            return Err(Error::OutOfRange {
                name: "toy state",
                value: value as f64,
                allowed: "{0, 1, 2, 3}",
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.random_range(0..4))
    }

    fn shift_down(self, i: u8) -> Self {
        Self((self.0 + 4 - i % 4) % 4)
    }
}

impl fmt::Display for ToyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type ToyPair = (ToyState, ToyState);

/// The rows of the four outcome tables as raw (x₁, x₂) values.
pub type RawTables = [[(u8, u8); 4]; 4];

/// The standard B₀..B₃ tables.
pub const STANDARD_TABLES: RawTables = [
    [(0, 0), (1, 1), (2, 2), (3, 3)],
    [(0, 3), (1, 0), (2, 1), (3, 2)],
    [(0, 2), (1, 3), (2, 0), (3, 1)],
    [(0, 1), (1, 2), (2, 3), (3, 0)],
];

/// Measurement outcome B_k with the pairs it is compatible with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyOutcome {
    pub index: usize,
    pub compatible_pairs: [ToyPair; 4],
}

/// A validated set of outcome tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyTables {
    outcomes: [ToyOutcome; 4],
    /// `lookup[x1][x2]` = outcome index.
    lookup: [[usize; 4]; 4],
}

impl ToyTables {
    /// Builds tables, requiring that they partition all 16 pairs.
    pub fn new(raw: RawTables) -> Result<Self> {
        let mut lookup = [[usize::MAX; 4]; 4];
        let mut outcomes = [ToyOutcome {
            index: 0,
            compatible_pairs: [(ToyState(0), ToyState(0)); 4],
        }; 4];
        for (k, rows) in raw.iter().enumerate() {
            outcomes[k].index = k;
            for (r, &(a, b)) in rows.iter().enumerate() {
                let pair = (ToyState::new(a)?, ToyState::new(b)?);
                let slot = &mut lookup[a as usize][b as usize];
                if *slot != usize::MAX {
                    return Err(Error::InvalidTable(format!(
                        "pair ({a},{b}) appears in both B{} and B{k}",
                        *slot
                    )));
                }
                *slot = k;
                outcomes[k].compatible_pairs[r] = pair;
            }
        }
        // 16 distinct rows over 16 cells: every pair is covered.
        Ok(Self { outcomes, lookup })
    }

    pub fn standard() -> &'static ToyTables {
        static TABLES: OnceLock<ToyTables> = OnceLock::new();
        TABLES.get_or_init(|| ToyTables::new(STANDARD_TABLES).expect("standard tables partition"))
    }

    pub fn outcome(&self, k: usize) -> &ToyOutcome {
        &self.outcomes[k]
    }

    pub fn outcomes(&self) -> &[ToyOutcome; 4] {
        &self.outcomes
    }

    pub fn measure(&self, x1: ToyState, x2: ToyState) -> ToyOutcome {
        self.outcomes[self.lookup[x1.0 as usize][x2.0 as usize]]
    }

    /// The message for each outcome: the common value of (x₂ − x₁) mod 4
    /// over its rows. Errors if some table's rows disagree.
    pub fn message_map(&self) -> Result<[u8; 4]> {
        let mut map = [0; 4];
        for (k, o) in self.outcomes.iter().enumerate() {
            let diffs: Vec<u8> = o.compatible_pairs.iter().map(|&p| pair_shift(p)).collect();
            if diffs.iter().any(|&d| d != diffs[0]) {
                return Err(Error::InvalidTable(format!(
                    "rows of B{k} disagree on (x2 - x1) mod 4: {diffs:?}"
                )));
            }
            map[k] = diffs[0];
        }
        Ok(map)
    }

    /// Like [`message_map`](Self::message_map) but never fails: each
    /// outcome gets the most common shift among its rows (lowest on ties).
    fn majority_message_map(&self) -> [u8; 4] {
        let mut map = [0; 4];
        for (k, o) in self.outcomes.iter().enumerate() {
            let mut counts = [0usize; 4];
            for &p in &o.compatible_pairs {
                counts[pair_shift(p) as usize] += 1;
            }
            let best = (0..4)
                .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
                .unwrap();
            map[k] = best as u8;
        }
        map
    }
}

fn pair_shift((x1, x2): ToyPair) -> u8 {
    (x2.0 + 4 - x1.0) % 4
}

/// One run of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyTranscript {
    pub x1: ToyState,
    pub x2: ToyState,
    pub x3: ToyState,
    pub outcome: ToyOutcome,
    pub i: u8,
    pub x3_final: ToyState,
}

/// Correlated preparation of particles 2 and 3: (x, x), x uniform.
pub fn prepare_pair<R: Rng + ?Sized>(rng: &mut R) -> ToyPair {
    let x = ToyState::uniform(rng);
    (x, x)
}

/// The unique B_k containing (x₁, x₂).
pub fn joint_measurement(x1: ToyState, x2: ToyState) -> ToyOutcome {
    ToyTables::standard().measure(x1, x2)
}

/// Post-measurement disturbance: a uniform draw among the outcome's rows.
pub fn post_measurement_resample<R: Rng + ?Sized>(outcome: &ToyOutcome, rng: &mut R) -> ToyPair {
    outcome.compatible_pairs[rng.random_range(0..4)]
}

/// The two-bit message Alice sends for `outcome`.
pub fn classical_message(outcome: &ToyOutcome) -> u8 {
    static MAP: OnceLock<[u8; 4]> = OnceLock::new();
    MAP.get_or_init(|| {
        ToyTables::standard()
            .message_map()
            .expect("standard tables have consistent rows")
    })[outcome.index]
}

/// U_i: x₃ ↦ (x₃ − i) mod 4.
pub fn bob_correction(x3: ToyState, i: u8) -> ToyState {
    x3.shift_down(i)
}

fn run_with(tables: &ToyTables, map: &[u8; 4], x1: ToyState, shared: ToyState) -> ToyTranscript {
    let (x2, x3) = (shared, shared);
    let outcome = tables.measure(x1, x2);
    let i = map[outcome.index];
    ToyTranscript {
        x1,
        x2,
        x3,
        outcome,
        i,
        x3_final: bob_correction(x3, i),
    }
}

/// Teleports `x1`. The measured pair is disturbed afterwards, which has no
/// effect on Bob.
pub fn run_toy_protocol<R: Rng + ?Sized>(x1: ToyState, rng: &mut R) -> ToyTranscript {
    let (shared, _) = prepare_pair(rng);
    let map = [0, 1, 2, 3].map(|k| classical_message(ToyTables::standard().outcome(k)));
    let transcript = run_with(ToyTables::standard(), &map, x1, shared);
    let _disturbed = post_measurement_resample(&transcript.outcome, rng);
    transcript
}

/// A failing enumeration case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counterexample {
    pub x1: ToyState,
    pub shared: ToyState,
    pub outcome: usize,
    pub message: u8,
    pub x3_final: ToyState,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x1={} shared={} (pair ({}, {}) in B{}, i={}) gave x3_final={}",
            self.x1, self.shared, self.x1, self.shared, self.outcome, self.message, self.x3_final
        )
    }
}

/// Result of checking the tables and all 16 protocol cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardyReport {
    pub partition_ok: bool,
    /// `Some` when every table's rows share one shift.
    pub message_map: Option<[u8; 4]>,
    pub cases_passed: usize,
    pub cases_total: usize,
    pub counterexamples: Vec<Counterexample>,
    /// Human-readable descriptions of failed structural checks.
    pub issues: Vec<String>,
}

impl HardyReport {
    pub fn passed(&self) -> bool {
        self.partition_ok
            && self.message_map.is_some()
            && self.cases_passed == self.cases_total
            && self.issues.is_empty()
    }
}

/// [`exhaustive_verify_with`] on the standard tables.
pub fn exhaustive_verify() -> HardyReport {
    exhaustive_verify_with(STANDARD_TABLES)
}

/// Checks that `raw` partitions the 16 pairs, that each table has a
/// consistent message, and that all 4 × 4 (x₁, shared value) cases end
/// with x3_final = x₁. Inconsistent tables are still run, using the
/// majority message, so that failing cases are reported.
pub fn exhaustive_verify_with(raw: RawTables) -> HardyReport {
    let mut issues = Vec::new();
    let tables = match ToyTables::new(raw) {
        Ok(t) => t,
        Err(e) => {
            return HardyReport {
                partition_ok: false,
                message_map: None,
                cases_passed: 0,
                cases_total: 16,
                counterexamples: Vec::new(),
                issues: vec![e.to_string()],
            }
        }
    };
    let message_map = match tables.message_map() {
        Ok(m) => Some(m),
        Err(e) => {
            issues.push(e.to_string());
            None
        }
    };
    let map = message_map.unwrap_or_else(|| tables.majority_message_map());

    // Measurement must be idempotent: every row re-measures to its table.
    for o in tables.outcomes() {
        for &(a, b) in &o.compatible_pairs {
            if tables.measure(a, b).index != o.index {
                issues.push(format!(
                    "pair ({a}, {b}) does not re-measure to B{}",
                    o.index
                ));
            }
        }
    }

    let mut counterexamples = Vec::new();
    let mut passed = 0;
    for x1 in ToyState::ALL {
        for shared in ToyState::ALL {
            let t = run_with(&tables, &map, x1, shared);
            if t.x3_final == x1 {
                passed += 1;
            } else {
                counterexamples.push(Counterexample {
                    x1,
                    shared,
                    outcome: t.outcome.index,
                    message: t.i,
                    x3_final: t.x3_final,
                });
            }
        }
    }
    HardyReport {
        partition_ok: true,
        message_map,
        cases_passed: passed,
        cases_total: 16,
        counterexamples,
        issues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(v: u8) -> ToyState {
        ToyState::new(v).unwrap()
    }

    #[test]
    fn state_range() {
        assert!(ToyState::new(4).is_err());
        assert_eq!(s(3).value(), 3);
    }

    #[test]
    fn preparation_is_uniform_and_correlated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let (a, b) = prepare_pair(&mut rng);
            assert_eq!(a, b);
            counts[a.value() as usize] += 1;
        }
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() <= 3.0 * se, "{counts:?}");
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(2);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            assert_eq!(prepare_pair(&mut r1), prepare_pair(&mut r2));
        }
    }

    #[test]
    fn measurement_examples() {
        assert_eq!(joint_measurement(s(0), s(0)).index, 0);
        assert_eq!(joint_measurement(s(2), s(2)).index, 0);
        assert_eq!(joint_measurement(s(1), s(0)).index, 1);
        assert_eq!(joint_measurement(s(3), s(2)).index, 1);
        assert_eq!(joint_measurement(s(0), s(1)).index, 3);
    }

    #[test]
    fn resample_stays_in_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b0 = joint_measurement(s(0), s(0));
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let (a, b) = post_measurement_resample(&b0, &mut rng);
            assert_eq!(a, b);
            assert_eq!(joint_measurement(a, b).index, 0);
            counts[a.value() as usize] += 1;
        }
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() <= 3.0 * se);
        }
        for k in 0..4 {
            let o = *ToyTables::standard().outcome(k);
            for _ in 0..50 {
                let (a, b) = post_measurement_resample(&o, &mut rng);
                assert_eq!(joint_measurement(a, b).index, k);
            }
        }
    }

    #[test]
    fn message_map_is_derived_from_rows() {
        let t = ToyTables::standard();
        assert_eq!(t.message_map().unwrap(), [0, 3, 2, 1]);
        for k in 0..4 {
            assert_eq!(classical_message(t.outcome(k)), [0, 3, 2, 1][k]);
        }
    }

    #[test]
    fn correction_examples() {
        assert_eq!(bob_correction(s(3), 0), s(3));
        assert_eq!(bob_correction(s(0), 3), s(1));
        assert_eq!(bob_correction(s(2), 2), s(0));
    }

    #[test]
    fn protocol_teleports_every_input() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for x1 in ToyState::ALL {
                let t = run_toy_protocol(x1, &mut rng);
                assert_eq!(t.x2, t.x3);
                assert_eq!(t.x3_final, x1);
                assert_eq!(t.outcome, joint_measurement(t.x1, t.x2));
                assert_eq!(t.x3_final, bob_correction(t.x3, t.i));
            }
        }
    }

    #[test]
    fn bob_state_before_correction_carries_no_signal() {
        // For each x1 the pre-correction x3 runs over all four values once.
        for x1 in ToyState::ALL {
            let mut seen = [0; 4];
            let map = ToyTables::standard().message_map().unwrap();
            for shared in ToyState::ALL {
                let t = run_with(ToyTables::standard(), &map, x1, shared);
                seen[t.x3.value() as usize] += 1;
            }
            assert_eq!(seen, [1, 1, 1, 1]);
        }
    }

    #[test]
    fn exhaustive_verification_passes() {
        let r = exhaustive_verify();
        assert!(r.passed(), "{r:?}");
        assert_eq!((r.cases_passed, r.cases_total), (16, 16));
        assert_eq!(r.message_map, Some([0, 3, 2, 1]));
    }

    #[test]
    fn swapped_row_is_caught() {
        let mut raw = STANDARD_TABLES;
        // Exchange (0,3) of B₁ with (0,2) of B₂.
        let tmp = raw[1][0];
        raw[1][0] = raw[2][0];
        raw[2][0] = tmp;
        let r = exhaustive_verify_with(raw);
        assert!(!r.passed());
        assert!(r.partition_ok);
        assert!(r.message_map.is_none());
        assert!(r.cases_passed < 16);
        assert!(r
            .counterexamples
            .iter()
            .any(|c| c.x1 == s(0) && (c.shared == s(2) || c.shared == s(3))));
    }

    #[test]
    fn overlapping_tables_fail_partition() {
        let mut raw = STANDARD_TABLES;
        raw[3][0] = (0, 0);
        let r = exhaustive_verify_with(raw);
        assert!(!r.partition_ok);
        assert!(!r.passed());
        assert!(r.issues[0].contains("(0,0)"));
    }
}
