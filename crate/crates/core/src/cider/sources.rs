use std::f64::consts::PI;

use crate::ltp::{HarmonicSet, SpectralVector};
use crate::{CMatrix, CVector, Error, Result, C64};

use super::response::{CiderGridResponse, ResourceKind};

/// One harmonic of a balanced source: RMS magnitude (p.u.) and phase (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPhasor {
    pub order: u32,
    pub magnitude: f64,
    pub phase: f64,
}

/// Balanced three-phase spectrum: phase `k` lags by `h·2πk/3` at harmonic `h`.
pub fn balanced_spectrum(harmonics: &HarmonicSet, table: &[HarmonicPhasor]) -> SpectralVector {
    let mut v = SpectralVector::single(*harmonics, 3);
    for e in table {
        let h = e.order as i32;
        if !harmonics.contains(h) {
            continue;
        }
        for k in 0..3 {
            let ph = e.phase - h as f64 * 2.0 * PI * k as f64 / 3.0;
            let x = if h == 0 {
                C64::new(e.magnitude * e.phase.cos(), 0.0)
            } else {
                C64::from_polar(e.magnitude / 2f64.sqrt(), ph)
            };
            v.set(0, h, k, x);
            if h != 0 {
                v.set(0, -h, k, x.conj());
            }
        }
    }
    v
}

/// Non-CIDER harmonic source behind a balanced impedance or admittance.
#[derive(Debug, Clone)]
pub enum HarmonicSourceEquivalent {
    /// `Î = Ẑ⁻¹ (V̂ - V̂_TE)` drawn from the node.
    Thevenin { z: Vec<CMatrix>, v: SpectralVector },
    /// `Î = Î_NE - Ŷ V̂` drawn from the node.
    Norton { y: Vec<CMatrix>, i: SpectralVector },
}

/// Per-harmonic 3x3 blocks `(R + j h X) I` (`X` at the fundamental).
pub fn series_rx(harmonics: &HarmonicSet, r: f64, x: f64) -> Vec<CMatrix> {
    harmonics
        .orders()
        .map(|h| CMatrix::identity(3, 3) * C64::new(r, h as f64 * x))
        .collect()
}

fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let refs: Vec<&CMatrix> = blocks.iter().collect();
    crate::linalg::block_diag(&refs)
}

impl HarmonicSourceEquivalent {
    /// Current absorbed by the source from node voltage `v_m`.
    pub fn source_injection(&self, v_m: &SpectralVector) -> Result<SpectralVector> {
        match self {
            Self::Thevenin { z, v } => {
                let d = v_m.try_sub(v)?;
                let mut out = SpectralVector::single(*v.harmonics(), 3);
                for (hi, h) in v.harmonics().orders().enumerate() {
                    let dv = CVector::from_fn(3, |p, _| d.get(0, h, p));
                    let i = z[hi].clone().lu().solve(&dv).ok_or_else(|| {
                        Error::SourceModel(format!("source impedance singular at h = {h}"))
                    })?;
                    for p in 0..3 {
                        out.set(0, h, p, i[p]);
                    }
                }
                Ok(out)
            }
            Self::Norton { y, i } => {
                let mut out = i.clone();
                for (hi, h) in i.harmonics().orders().enumerate() {
                    let vm = CVector::from_fn(3, |p, _| v_m.get(0, h, p));
                    let yv = &y[hi] * vm;
                    for p in 0..3 {
                        out.set(0, h, p, i.get(0, h, p) - yv[p]);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Packs the source as a resource with grid-injection convention.
    ///
    /// Thévenin: `V̂ = -Ẑ Î_inj + V̂_TE` (forming); Norton: `Î_inj = -Ŷ V̂ + Î_NE`
    /// (following with a fixed reference). Returns the response and the reference.
    pub fn as_resource(&self) -> Result<(CiderGridResponse, SpectralVector)> {
        let (kind, blocks, w) = match self {
            Self::Thevenin { z, v } => {
                for (k, b) in z.iter().enumerate() {
                    if crate::linalg::invert(b, "Z_TE", 1e-12).is_err() {
                        return Err(Error::SourceModel(format!("source impedance singular at harmonic index {k}")));
                    }
                }
                (ResourceKind::Forming, z, v)
            }
            Self::Norton { y, i } => (ResourceKind::Following, y, i),
        };
        let hs = *w.harmonics();
        let n = 3 * hs.len();
        Ok((
            CiderGridResponse {
                kind,
                harmonics: hs,
                g_pp: -block_diag(blocks),
                g_pk: CMatrix::identity(n, n),
                kappa_width: 3,
            },
            w.clone(),
        ))
    }
}
