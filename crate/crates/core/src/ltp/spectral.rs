use crate::linalg::inf_norm_vec;
use crate::{CVector, Error, Result, C64};

use super::HarmonicSet;

/// Layout of a multi-group spectral vector.
///
/// A group is a node (or resource) and carries `width` channels (e.g. three
/// phases). For a single group both layouts coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// `col_h col_group col_channel`: harmonic first, as seen by the grid.
    GridSorted,
    /// `col_group col_h col_channel`: group first, as seen by the resources.
    ResourceSorted,
}

/// Fourier coefficients of a periodic polyphase signal over a harmonic set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    harmonics: HarmonicSet,
    groups: usize,
    width: usize,
    ordering: Ordering,
    coeffs: CVector,
}

impl SpectralVector {
    pub fn zeros(harmonics: HarmonicSet, groups: usize, width: usize, ordering: Ordering) -> Self {
        let n = groups * width * harmonics.len();
        Self {
            harmonics,
            groups,
            width,
            ordering,
            coeffs: CVector::zeros(n),
        }
    }

    /// Single-group vector with `width` channels.
    pub fn single(harmonics: HarmonicSet, width: usize) -> Self {
        Self::zeros(harmonics, 1, width, Ordering::ResourceSorted)
    }

    pub fn from_coeffs(
        harmonics: HarmonicSet,
        groups: usize,
        width: usize,
        ordering: Ordering,
        coeffs: CVector,
    ) -> Result<Self> {
        let expected = groups * width * harmonics.len();
        if coeffs.len() != expected {
            return Err(Error::Shape(format!(
                "spectral vector needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self {
            harmonics,
            groups,
            width,
            ordering,
            coeffs,
        })
    }

    pub fn harmonics(&self) -> &HarmonicSet {
        &self.harmonics
    }
    pub fn groups(&self) -> usize {
        self.groups
    }
    pub fn width(&self) -> usize {
        self.width
    }
    /// Signal dimension per harmonic (`groups · width`).
    pub fn channels(&self) -> usize {
        self.groups * self.width
    }
    pub fn ordering(&self) -> Ordering {
        self.ordering
    }
    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut CVector {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Flat position of `(group, h, channel)` under the vector's ordering.
    pub fn position(&self, group: usize, h: i32, channel: usize) -> Option<usize> {
        let hi = self.harmonics.index(h)?;
        if group >= self.groups || channel >= self.width {
            return None;
        }
        Some(layout_index(self.ordering, self.harmonics.len(), self.groups, self.width, group, hi, channel))
    }

    pub fn get(&self, group: usize, h: i32, channel: usize) -> C64 {
        self.position(group, h, channel)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn set(&mut self, group: usize, h: i32, channel: usize, value: C64) {
        if let Some(i) = self.position(group, h, channel) {
            self.coeffs[i] = value;
        }
    }

    /// Checks harmonic set, shape and ordering agreement.
    pub fn check_compatible(&self, other: &SpectralVector) -> Result<()> {
        if !self.harmonics.same_as(&other.harmonics) {
            return Err(Error::Incompatible("harmonic sets differ".into()));
        }
        if self.groups != other.groups || self.width != other.width {
            return Err(Error::Incompatible(format!(
                "shapes differ: {}x{} vs {}x{}",
                self.groups, self.width, other.groups, other.width
            )));
        }
        if self.groups > 1 && self.ordering != other.ordering {
            return Err(Error::Incompatible("mixed grid/resource orderings".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &SpectralVector) -> Result<SpectralVector> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.coeffs += &other.coeffs;
        Ok(out)
    }

    pub fn try_sub(&self, other: &SpectralVector) -> Result<SpectralVector> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.coeffs -= &other.coeffs;
        Ok(out)
    }

    pub fn scaled(&self, k: C64) -> SpectralVector {
        let mut out = self.clone();
        out.coeffs *= k;
        out
    }

    pub fn inf_norm(&self) -> f64 {
        inf_norm_vec(&self.coeffs)
    }

    /// Re-sorts the coefficients into `target` ordering.
    pub fn reordered(&self, target: Ordering) -> SpectralVector {
        if target == self.ordering {
            return self.clone();
        }
        let nh = self.harmonics.len();
        let mut out = SpectralVector::zeros(self.harmonics, self.groups, self.width, target);
        for g in 0..self.groups {
            for hi in 0..nh {
                for c in 0..self.width {
                    let src = layout_index(self.ordering, nh, self.groups, self.width, g, hi, c);
                    let dst = layout_index(target, nh, self.groups, self.width, g, hi, c);
                    out.coeffs[dst] = self.coeffs[src];
                }
            }
        }
        out
    }

    /// Extracts one group as a single-group vector.
    pub fn group(&self, g: usize) -> SpectralVector {
        let mut out = SpectralVector::single(self.harmonics, self.width);
        for h in self.harmonics.orders() {
            for c in 0..self.width {
                out.set(0, h, c, self.get(g, h, c));
            }
        }
        out
    }

    /// Stacks single-group vectors into one multi-group vector.
    pub fn stack(parts: &[SpectralVector], ordering: Ordering) -> Result<SpectralVector> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero vectors".into()))?;
        let mut out = SpectralVector::zeros(first.harmonics, parts.len(), first.width, ordering);
        for (g, p) in parts.iter().enumerate() {
            if p.groups != 1 || p.width != first.width || !p.harmonics.same_as(&first.harmonics) {
                return Err(Error::Incompatible("stacked parts must share shape".into()));
            }
            for h in p.harmonics.orders() {
                for c in 0..p.width {
                    out.set(g, h, c, p.get(0, h, c));
                }
            }
        }
        Ok(out)
    }

    /// Largest violation of `X(-h) = conj(X(h))`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for g in 0..self.groups {
            for h in 0..=self.harmonics.h_max_i() {
                for c in 0..self.width {
                    let d = self.get(g, h, c) - self.get(g, -h, c).conj();
                    worst = worst.max(d.norm());
                }
            }
        }
        worst
    }
}

pub(crate) fn layout_index(
    ordering: Ordering,
    nh: usize,
    groups: usize,
    width: usize,
    group: usize,
    hi: usize,
    channel: usize,
) -> usize {
    match ordering {
        Ordering::GridSorted => (hi * groups + group) * width + channel,
        Ordering::ResourceSorted => (group * nh + hi) * width + channel,
    }
}

/// Orthogonal projection onto conjugate-symmetric spectra (real time signals).
pub fn conjugate_symmetrize(x: &SpectralVector) -> SpectralVector {
    let mut out = x.clone();
    for g in 0..x.groups {
        for h in 0..=x.harmonics.h_max_i() {
            for c in 0..x.width {
                let avg = (x.get(g, h, c) + x.get(g, -h, c).conj()) * 0.5;
                out.set(g, h, c, avg);
                out.set(g, -h, c, avg.conj());
            }
        }
    }
    out
}
