//! Report model and its JSON / CSV encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};
use telelocal_core::Estimate;

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance for checks against exact values.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Stochastic checks pass within this many standard errors.
pub const STDERR_MULTIPLIER: f64 = 4.0;
/// Added to stochastic tolerances so zero-variance estimators are not
/// failed by rounding.
pub const STOCHASTIC_FLOOR: f64 = 1e-12;

pub const REFERENCE: &str = "Teleportation as a Bell experiment: CH-type inequality for the \
teleportation POVM, Werner-state local hidden variable model, a local toy theory, and \
classical fidelity baselines";

/// Echo of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub grid: Option<[f64; 3]>,
}

/// One named value, optionally checked against an expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

impl ResultRow {
    /// An unchecked value.
    pub fn value(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            stderr: None,
            expected: None,
            tolerance: None,
            pass: None,
            samples: None,
        }
    }

    /// |value − expected| ≤ tolerance.
    pub fn check(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            expected: Some(expected),
            tolerance: Some(tolerance),
            pass: Some((value - expected).abs() <= tolerance),
            ..Self::value(name, value)
        }
    }

    /// A check at [`ANALYTIC_TOL`].
    pub fn analytic(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self::check(name, value, expected, ANALYTIC_TOL)
    }

    /// A Monte-Carlo estimate checked within 4 stderr. With a single sample
    /// the stderr is undefined and the check fails.
    pub fn stochastic(name: impl Into<String>, est: &Estimate, expected: f64) -> Self {
        let stderr = est.stderr.is_finite().then_some(est.stderr);
        let tolerance = stderr.map_or(0.0, |s| STDERR_MULTIPLIER * s + STOCHASTIC_FLOOR);
        Self {
            stderr,
            samples: Some(est.samples),
            pass: Some(stderr.is_some() && (est.mean - expected).abs() <= tolerance),
            ..Self::check(name, est.mean, expected, tolerance)
        }
    }

    /// A flag rendered as 1/0 that must be true.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::check(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub results: Vec<ResultRow>,
    pub paper_reference: String,
}

impl Report {
    pub fn new(command: &str, config: ConfigEcho) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            results: Vec::new(),
            paper_reference: REFERENCE.to_string(),
        }
    }

    pub fn push(&mut self, row: ResultRow) {
        self.results.push(row);
    }

    /// True when no checked row failed.
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResultRow> {
        self.results.iter().filter(|r| r.pass == Some(false))
    }

    pub fn row(&self, name: &str) -> Option<&ResultRow> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["name", "value", "stderr", "expected", "tolerance", "pass"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.results {
            w.write_record([
                r.name.clone(),
                r.value.to_string(),
                opt(r.stderr),
                opt(r.expected),
                opt(r.tolerance),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}
