use serde::{Deserialize, Serialize};

use crate::ltp::{HarmonicSet, SpectralVector};
use crate::{CMatrix, Error, Result, C64};

/// Smallest admissible `|v_D,0|` (p.u.).
pub const MIN_DIRECT_VOLTAGE: f64 = 1e-6;

/// Truncation order of the `1/v_D` series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeriesOrder {
    #[default]
    First,
    Second,
}

impl SeriesOrder {
    pub fn from_int(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            _ => Err(Error::Validation(format!("series order must be 1 or 2, got {n}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

/// Constant-power current reference `i*_DQ = (1/v_D) [P; -Q]` in p.u.
///
/// `P`, `Q` are injections into the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqReference {
    pub p: f64,
    pub q: f64,
    pub order: SeriesOrder,
}

/// Direct-axis coefficients `v_D,h` of a two-channel (D, Q) spectrum.
fn direct(w_rho: &SpectralVector) -> Result<(Vec<C64>, C64)> {
    if w_rho.groups() != 1 || w_rho.width() != 2 {
        return Err(Error::Incompatible("reference input must be a single D/Q spectrum".into()));
    }
    let hs = w_rho.harmonics();
    let v: Vec<C64> = hs.orders().map(|h| w_rho.get(0, h, 0)).collect();
    let v0 = v[hs.index(0).expect("h = 0 present")];
    if v0.norm() < MIN_DIRECT_VOLTAGE {
        return Err(Error::DegenerateOperatingPoint(format!(
            "direct-axis voltage {:.3e} p.u. is below {MIN_DIRECT_VOLTAGE:e}",
            v0.norm()
        )));
    }
    Ok((v, v0))
}

/// Truncated convolution `(a * b)_h` over the harmonic set.
fn convolve(hs: &HarmonicSet, a: &[C64], b: &[C64]) -> Vec<C64> {
    let m = hs.h_max_i();
    let mut out = vec![C64::new(0.0, 0.0); hs.len()];
    for h in -m..=m {
        let mut acc = C64::new(0.0, 0.0);
        for k in -m..=m {
            let r = h - k;
            if r.abs() <= m {
                acc += a[(k + m) as usize] * b[(r + m) as usize];
            }
        }
        out[(h + m) as usize] = acc;
    }
    out
}

impl PqReference {
    /// Fourier coefficients `Ψ_h` of the truncated `1/v_D` series.
    pub fn psi(&self, hs: &HarmonicSet, v: &[C64], v0: C64) -> Vec<C64> {
        let i0 = hs.h_max;
        let mut xi: Vec<C64> = v.iter().map(|x| x / v0).collect();
        xi[i0] = C64::new(0.0, 0.0);
        let mut psi: Vec<C64> = xi.iter().map(|x| -x / v0).collect();
        psi[i0] += C64::new(1.0, 0.0) / v0;
        if self.order == SeriesOrder::Second {
            let sq = convolve(hs, &xi, &xi);
            for (p, s) in psi.iter_mut().zip(sq) {
                *p += s / v0;
            }
        }
        psi
    }

    /// `Ŵ_κ`: D channel `Ψ P`, Q channel `-Ψ Q`.
    pub fn evaluate(&self, w_rho: &SpectralVector) -> Result<SpectralVector> {
        let hs = *w_rho.harmonics();
        let (v, v0) = direct(w_rho)?;
        let psi = self.psi(&hs, &v, v0);
        let mut out = SpectralVector::single(hs, 2);
        for (i, h) in hs.orders().enumerate() {
            out.set(0, h, 0, psi[i] * self.p);
            out.set(0, h, 1, -psi[i] * self.q);
        }
        Ok(out)
    }

    /// `∂Ŵ_κ/∂Ŵ_ρ` (`2|H| × 2|H|`, harmonic-major, Q-axis columns zero).
    pub fn jacobian(&self, w_rho: &SpectralVector) -> Result<CMatrix> {
        let hs = *w_rho.harmonics();
        let (v, v0) = direct(w_rho)?;
        let n = hs.len();
        let i0 = hs.h_max;
        let m = hs.h_max_i();
        let psi = self.psi(&hs, &v, v0);
        let mut xi: Vec<C64> = v.iter().map(|x| x / v0).collect();
        xi[i0] = C64::new(0.0, 0.0);
        let second = self.order == SeriesOrder::Second;
        let sq = if second { convolve(&hs, &xi, &xi) } else { vec![C64::new(0.0, 0.0); n] };
        // dpsi[h][k] = ∂Ψ_h / ∂v_k
        let mut dpsi = CMatrix::zeros(n, n);
        for hi in 0..n {
            let h = hs.order(hi);
            for ki in 0..n {
                let k = hs.order(ki);
                let val = if ki == i0 {
                    if second {
                        (-v0 * psi[hi] + xi[hi] - sq[hi] * 2.0) / (v0 * v0)
                    } else {
                        -psi[hi] / v0 + xi[hi] / (v0 * v0)
                    }
                } else {
                    let mut d = if hi == ki { -C64::new(1.0, 0.0) / v0 } else { C64::new(0.0, 0.0) };
                    if second && (h - k).abs() <= m {
                        let r = (h - k + m) as usize;
                        if r != i0 {
                            d += xi[r] * 2.0 / v0;
                        }
                    }
                    d / v0
                };
                dpsi[(hi, ki)] = val;
            }
        }
        let mut jac = CMatrix::zeros(2 * n, 2 * n);
        for hi in 0..n {
            for ki in 0..n {
                jac[(2 * hi, 2 * ki)] = dpsi[(hi, ki)] * self.p;
                jac[(2 * hi + 1, 2 * ki)] = -dpsi[(hi, ki)] * self.q;
            }
        }
        Ok(jac)
    }
}

/// Reference of a forming resource: direct component `√3 V_σ / V_b` at `h = 0`
/// of a `width`-channel DQ(0) spectrum (power-invariant frame).
pub fn forming_reference(v_sigma_pu: f64, harmonics: &HarmonicSet, width: usize) -> Result<SpectralVector> {
    if !(v_sigma_pu >= 0.0 && v_sigma_pu.is_finite()) {
        return Err(Error::Validation(format!("forming voltage must be nonnegative, got {v_sigma_pu}")));
    }
    let mut out = SpectralVector::single(*harmonics, width);
    out.set(0, 0, 0, C64::new(3f64.sqrt() * v_sigma_pu, 0.0));
    Ok(out)
}
