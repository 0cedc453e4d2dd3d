//! Fixed-point harmonic power flow (HPF) for polyphase grids hosting
//! converter-interfaced distributed energy resources (CIDERs).
//!
//! The crate is organised bottom-up:
//!
//! * [`ltp`] harmonic-domain algebra: harmonic sets, spectral vectors and
//!   Toeplitz lifts of linear time-periodic matrices.
//! * [`grid`] polyphase network model: sequence-to-phase conversion,
//!   nodal admittance assembly, Kron reduction, hybrid partitioning and the
//!   grid/resource sorting permutations.
//! * [`cider`] resource models: LTP closed loops, grid responses, reference
//!   calculations and Thévenin/Norton harmonic sources.
//! * [`solver`] the reduced fixed-point map, its iteration, Jacobian and the
//!   contraction-based uniqueness certificate.
//! * [`tds`] a time-domain simulator used as an independent oracle.
//! * [`study`] study-case files, the CIGRE-LV style benchmark and scenario
//!   transforms.
//! * [`cli`] the command layer behind the `hpf` binary.

pub mod cider;
pub mod cli;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod ltp;
pub mod solver;
pub mod study;
pub mod tds;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
