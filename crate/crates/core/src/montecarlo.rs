//! Seeded Monte-Carlo estimation.
//!
//! Samples are split into fixed-size chunks. Chunk `i` draws from its own
//! ChaCha8 stream (`seed`, stream `i`) and keeps Welford statistics; the
//! chunk summaries are merged left to right. The estimate therefore depends
//! only on `(samples, seed)`, never on how chunks are scheduled, and the
//! parallel and sequential paths agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples per chunk.
pub const CHUNK_SIZE: u64 = 4096;

/// The RNG handed to per-sample closures.
pub type SampleRng = ChaCha8Rng;

/// How chunks are scheduled.
/// Parallel when the `parallel` feature is on, sequential otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub execution: Execution,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::NoSamples);
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    /// `|mean − target| ≤ k·stderr + floor`. The floor absorbs rounding when
    /// the sampled quantity has (numerically) zero variance.
    pub fn within(&self, target: f64, k: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + floor
    }

    /// Deviation from `target` in units of stderr.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Running mean / second moment for one component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / nf,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / nf,
        }
    }

    fn estimate(&self) -> Estimate {
        let stderr = if self.n > 1 {
            (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            mean: self.mean,
            stderr,
            samples: self.n,
        }
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Estimates the means of a `dim`-component random vector. `sample` fills
/// one draw into the provided buffer.
///
/// With a single sample the standard errors are NaN.
pub fn estimate_vector<F>(cfg: &McConfig, dim: usize, sample: F) -> Result<Vec<Estimate>>
where
    F: Fn(&mut SampleRng, &mut [f64]) + Sync,
{
    cfg.validate()?;
    let n_chunks = cfg.samples.div_ceil(CHUNK_SIZE);
    let run_chunk = |chunk: u64| -> Vec<Moments> {
        let mut rng = chunk_rng(cfg.seed, chunk);
        let len = CHUNK_SIZE.min(cfg.samples - chunk * CHUNK_SIZE);
        let mut acc = vec![Moments::default(); dim];
        let mut buf = vec![0.0; dim];
        for _ in 0..len {
            sample(&mut rng, &mut buf);
            for (m, &x) in acc.iter_mut().zip(&buf) {
                m.push(x);
            }
        }
        acc
    };

    let chunks: Vec<Vec<Moments>> = match cfg.execution {
        Execution::Sequential => (0..n_chunks).map(run_chunk).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n_chunks).into_par_iter().map(run_chunk).collect(),
    };

    let total = chunks
        .into_iter()
        .reduce(|a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect())
        .unwrap_or_default();
    Ok(total.iter().map(Moments::estimate).collect())
}

/// Scalar version of [`estimate_vector`].
pub fn estimate_mean<F>(cfg: &McConfig, sample: F) -> Result<Estimate>
where
    F: Fn(&mut SampleRng) -> f64 + Sync,
{
    let v = estimate_vector(cfg, 1, |rng, out| out[0] = sample(rng))?;
    Ok(v[0])
}

/// Maps `f` over `items`, in parallel when the feature is enabled. Output
/// order matches input order.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
