use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The truncated harmonic spectrum `{-h_max, …, h_max}` of fundamental `f1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSet {
    pub f1: f64,
    pub h_max: usize,
}

impl HarmonicSet {
    pub fn new(f1: f64, h_max: usize) -> Result<Self> {
        if !(f1 > 0.0 && f1.is_finite()) {
            return Err(Error::Validation(format!("fundamental frequency must be positive, got {f1}")));
        }
        Ok(Self { f1, h_max })
    }

    /// Cardinality `2 h_max + 1`.
    pub fn len(&self) -> usize {
        2 * self.h_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h_max_i(&self) -> i32 {
        self.h_max as i32
    }

    /// Harmonic orders in ascending order.
    pub fn orders(&self) -> impl Iterator<Item = i32> + '_ {
        let m = self.h_max_i();
        -m..=m
    }

    /// Position of harmonic `h` inside the spectrum, if present.
    pub fn index(&self, h: i32) -> Option<usize> {
        let m = self.h_max_i();
        (-m..=m).contains(&h).then(|| (h + m) as usize)
    }

    pub fn order(&self, index: usize) -> i32 {
        index as i32 - self.h_max_i()
    }

    pub fn contains(&self, h: i32) -> bool {
        self.index(h).is_some()
    }

    /// `f_h = h · f1`.
    pub fn frequency(&self, h: i32) -> f64 {
        h as f64 * self.f1
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f1
    }

    pub fn same_as(&self, other: &HarmonicSet) -> bool {
        self.h_max == other.h_max && (self.f1 - other.f1).abs() <= 1e-12 * self.f1
    }
}
