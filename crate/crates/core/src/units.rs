//! Per-unit bases.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Base power (W, three-phase) and base voltage (V-RMS, phase-to-ground).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bases {
    pub power: f64,
    pub voltage: f64,
}

impl Default for Bases {
    fn default() -> Self {
        Self {
            power: 10e3,
            voltage: 230.0,
        }
    }
}

impl Bases {
    pub fn new(power: f64, voltage: f64) -> Result<Self> {
        let b = Self { power, voltage };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.voltage > 0.0 && self.power.is_finite() && self.voltage.is_finite()) {
            return Err(Error::Validation("bases must be positive".into()));
        }
        Ok(())
    }

    pub fn impedance(&self) -> f64 {
        self.voltage * self.voltage / self.power
    }

    pub fn current(&self) -> f64 {
        self.power / self.voltage
    }

    pub fn same_as(&self, other: &Bases) -> bool {
        (self.power - other.power).abs() <= 1e-12 * self.power
            && (self.voltage - other.voltage).abs() <= 1e-12 * self.voltage
    }
}
