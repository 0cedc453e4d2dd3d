//! Converter-interfaced resources in the harmonic domain.
//!
//! A resource is an LTP state-space model closed through a periodic feedback
//! matrix. Its grid response is affine in the control reference; for
//! grid-following resources the reference itself depends on the direct-axis
//! voltage through a truncated `1/v_D` series.

mod designs;
mod model;
pub mod park;
mod reference;
mod response;
mod sources;

pub use designs::{closed_loop_matrices, closed_loop_state_matrix, Fd1Params, Fm1Params, Legs};
pub use model::{close_loop, omega, ClosedLoopGain, FeedbackInterconnect, LtpStateSpace};
pub use reference::{forming_reference, PqReference, SeriesOrder, MIN_DIRECT_VOLTAGE};
pub use response::{grid_response, CiderGridResponse, ResourceKind};
pub use sources::{balanced_spectrum, series_rx, HarmonicPhasor, HarmonicSourceEquivalent};
