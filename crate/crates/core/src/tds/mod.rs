//! Time-domain oracle: fixed-step simulation of the grid with the converter
//! closed loops, synchronous DFT and spectrum comparison.

mod config;
mod dft;
mod kpi;
mod model;
mod sim;

pub use config::{Integrator, TdsConfig};
pub use dft::dft_spectrum;
pub use kpi::{compare, wrapped_phase_error, KpiEntry, KpiResult, LabeledSpectrum, Quantity, PHASE_FLOOR};
pub use model::TdsModel;
pub use sim::{simulate, EnergyAudit, PhaseSeries, TdsResult};
