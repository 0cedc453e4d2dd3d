//! Harmonic-domain algebra for linear time-periodic (LTP) systems.
//!
//! A periodic signal is represented by its two-sided Fourier coefficients over
//! a truncated harmonic set `H = {-h_max, …, h_max}`; a periodic matrix acts on
//! such vectors through the block-Toeplitz matrix of its own coefficients.

mod harmonics;
mod spectral;
mod toeplitz;

pub use harmonics::HarmonicSet;
pub use spectral::{conjugate_symmetrize, Ordering, SpectralVector};
pub use toeplitz::{lift_ltp_matrix, LtpMatrix, ToeplitzOperator};

pub use crate::linalg::{inf_norm, inf_norm_vec};
