use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Trapezoidal,
    Rk4,
}

/// Fixed-step simulation settings; the step is one sample of the fundamental period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdsConfig {
    pub samples_per_period: usize,
    /// Upper bound on simulated periods before capture.
    pub periods_settle: usize,
    pub periods_capture: usize,
    #[serde(default)]
    pub integrator: Integrator,
    /// Relative per-period RMS change regarded as steady state.
    pub settle_tol: f64,
    /// Jump to the periodic orbit of the one-period map between plain periods
    /// (trapezoidal only). Lightly damped stiff modes otherwise take hundreds of periods to fade.
    #[serde(default = "enabled")]
    pub shooting: bool,
}

fn enabled() -> bool {
    true
}

impl Default for TdsConfig {
    fn default() -> Self {
        Self {
            samples_per_period: 2048,
            periods_settle: 400,
            periods_capture: 1,
            integrator: Integrator::Trapezoidal,
            settle_tol: 1e-9,
            shooting: true,
        }
    }
}

impl TdsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_period < 512 {
            return Err(Error::Config(format!(
                "at least 512 samples per period are required, got {}",
                self.samples_per_period
            )));
        }
        if self.periods_capture == 0 {
            return Err(Error::Config("capture window must span at least one period".into()));
        }
        if !(self.settle_tol > 0.0) {
            return Err(Error::Config("settling tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn step(&self, f1: f64) -> f64 {
        1.0 / (f1 * self.samples_per_period as f64)
    }
}
