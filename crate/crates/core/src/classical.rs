//! Entanglement-free teleportation baselines.
//!
//! * Known state (tetrahedron scheme): Alice knows the Bloch vector m⃗ of the
//!   input, reports which of four tetrahedral regions it falls in, and Bob
//!   prepares that region's vertex. Two bits buy an average fidelity of
//!   ½ + √(3/2)·arctan(√2)/π ≈ 0.8724.
//! * Unknown state (z scheme): Alice measures spin along z and Bob prepares
//!   the eigenstate she found, for an average fidelity of 2/3.

use crate::error::{Error, Result};
use crate::montecarlo::{estimate_mean, Estimate, McConfig};
use crate::qcore::BlochVector;

const REGULARITY_TOL: f64 = 1e-12;

/// Four unit vectors with pairwise dot products −1/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tetrahedron {
    vertices: [BlochVector; 4],
}

impl Tetrahedron {
    pub fn new(vertices: [BlochVector; 4]) -> Result<Self> {
        for v in &vertices {
            v.require_unit()?;
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let d = vertices[i].dot(&vertices[j]);
                if (d + 1.0 / 3.0).abs() > REGULARITY_TOL {
                    return Err(Error::OutOfRange {
                        name: "vertex dot product",
                        value: d,
                        allowed: "-1/3 (regular tetrahedron)",
                    });
                }
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[BlochVector; 4] {
        &self.vertices
    }

    pub fn vertex(&self, k: usize) -> &BlochVector {
        &self.vertices[k]
    }

    /// Applies a 3×3 rotation to every vertex.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Result<Self> {
        Self::new(self.vertices.map(|v| {
            let c = v.components();
            let row = |i: usize| r[i][0] * c[0] + r[i][1] * c[1] + r[i][2] * c[2];
            BlochVector::new(row(0), row(1), row(2))
        }))
    }
}

/// The canonical tetrahedron, with v₀ at the north pole.
pub fn tetrahedron_vertices() -> Tetrahedron {
    let s2 = 2f64.sqrt();
    Tetrahedron {
        vertices: [
            BlochVector::new(0.0, 0.0, 1.0),
            BlochVector::new(2.0 * s2 / 3.0, 0.0, -1.0 / 3.0),
            BlochVector::new(-s2 / 3.0, (2.0f64 / 3.0).sqrt(), -1.0 / 3.0),
            BlochVector::new(-s2 / 3.0, -(2.0f64 / 3.0).sqrt(), -1.0 / 3.0),
        ],
    }
}

/// The vertex closest to `m` (largest m·v_k), lowest index on ties.
pub fn region_index(m: &BlochVector, tet: &Tetrahedron) -> Result<usize> {
    m.require_unit()?;
    Ok(nearest_vertex(m, tet))
}

fn nearest_vertex(m: &BlochVector, tet: &Tetrahedron) -> usize {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (k, v) in tet.vertices.iter().enumerate() {
        let d = m.dot(v);
        if d > best_dot {
            best = k;
            best_dot = d;
        }
    }
    best
}

/// Fidelity of Bob's vertex state with the input: (1 + m·v_k)/2.
pub fn gisin_trial_fidelity(m: &BlochVector, tet: &Tetrahedron) -> Result<f64> {
    let k = region_index(m, tet)?;
    Ok((1.0 + m.dot(tet.vertex(k))) / 2.0)
}

/// Monte-Carlo average fidelity of the tetrahedron scheme.
pub fn gisin_scheme_fidelity(cfg: &McConfig) -> Result<Estimate> {
    gisin_scheme_fidelity_with(&tetrahedron_vertices(), cfg)
}

/// [`gisin_scheme_fidelity`] for an arbitrarily oriented tetrahedron.
pub fn gisin_scheme_fidelity_with(tet: &Tetrahedron, cfg: &McConfig) -> Result<Estimate> {
    estimate_mean(cfg, |rng| {
        let m = BlochVector::random(rng);
        (1.0 + m.dot(tet.vertex(nearest_vertex(&m, tet)))) / 2.0
    })
}

/// ½ + √(3/2)·arctan(√2)/π
pub fn gisin_fidelity_analytic() -> f64 {
    0.5 + 1.5f64.sqrt() * 2f64.sqrt().atan() / std::f64::consts::PI
}

/// Expected fidelity of the z scheme for input m⃗:
/// Σ± Pr(±)·|⟨±z|χ⟩|² = ((1 + m_z)² + (1 − m_z)²)/4 = (1 + m_z²)/2.
pub fn z_trial_fidelity(m: &BlochVector) -> Result<f64> {
    m.require_unit()?;
    Ok((1.0 + m.z * m.z) / 2.0)
}

/// Monte-Carlo average fidelity of the z scheme over uniform inputs.
pub fn z_scheme_fidelity(cfg: &McConfig) -> Result<Estimate> {
    estimate_mean(cfg, |rng| {
        let m = BlochVector::random(rng);
        (1.0 + m.z * m.z) / 2.0
    })
}
