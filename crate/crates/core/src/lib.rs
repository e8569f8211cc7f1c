//! Simulation toolkit for quantum teleportation viewed as a Bell experiment.
//!
//! * [`qcore`]: dense complex matrices, kets, density matrices, Werner states.
//! * [`teleport`]: the standard scheme and its four-element POVM on Alice's side.
//! * [`bellcheck`]: the CH-type inequality for teleportation and the Horodecki
//!   CHSH criterion.
//! * [`lhv`]: Werner's local hidden variable model and its POVM extensions.
//! * [`hardytoy`]: a local toy theory in which teleportation works perfectly.
//! * [`classical`]: entanglement-free fidelity baselines.
//! * [`montecarlo`]: seeded, chunked estimators (parallel with the
//!   `parallel` feature).

pub mod bellcheck;
pub mod classical;
pub mod error;
pub mod hardytoy;
pub mod lhv;
pub mod montecarlo;
pub mod qcore;
pub mod teleport;

pub use error::{Error, Result};
pub use montecarlo::{Estimate, Execution, McConfig};
