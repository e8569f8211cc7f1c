//! Dense complex linear algebra and the quantum primitives built on it.

mod eigen;
mod matrix;
mod state;

pub use eigen::{eigh, eigvalsh, HermitianEigen};
pub use matrix::{tensor, ComplexMatrix, I, ONE, ZERO};
pub use state::{
    antisymmetric_projector, bell_basis, bloch_to_ket, fidelity, is_density, ket_to_bloch,
    partial_trace, singlet_projector, spin_projector, werner_alpha, werner_alpha_unchecked,
    werner_general, werner_general_swap_form, BlochVector, DensityMatrix, Ket, Subsystem, PSD_TOL,
    STRUCTURE_TOL,
};
