use std::f64::consts::PI;

use serde::Serialize;

use crate::ltp::SpectralVector;
use crate::units::Bases;
use crate::{Error, Result};

/// Magnitude (p.u.) below which phase errors are not reported.
pub const PHASE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Voltage,
    Current,
}

/// One spectrum to compare: what it is, where, and its coefficients.
#[derive(Debug, Clone)]
pub struct LabeledSpectrum {
    pub quantity: Quantity,
    pub node: String,
    pub spectrum: SpectralVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiEntry {
    pub quantity: Quantity,
    pub node: String,
    pub order: u32,
    /// Largest magnitude of the reference phasor over the phases.
    pub magnitude: f64,
    pub e_abs: f64,
    /// Largest wrapped phase error over the phases above [`PHASE_FLOOR`]; 0 if none.
    pub e_arg: f64,
    pub phase_compared: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KpiResult {
    pub entries: Vec<KpiEntry>,
}

impl KpiResult {
    pub fn max_e_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.e_abs).fold(0.0, f64::max)
    }

    pub fn max_e_arg(&self) -> f64 {
        self.entries.iter().map(|e| e.e_arg).fold(0.0, f64::max)
    }

    /// Worst entry per harmonic order: `(order, e_abs, e_arg)`.
    pub fn by_order(&self) -> Vec<(u32, f64, f64)> {
        let mut out: Vec<(u32, f64, f64)> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|o| o.0 == e.order) {
                Some(o) => {
                    o.1 = o.1.max(e.e_abs);
                    o.2 = o.2.max(e.e_arg);
                }
                None => out.push((e.order, e.e_abs, e.e_arg)),
            }
        }
        out.sort_by_key(|o| o.0);
        out
    }
}

/// Phase difference wrapped to `[0, π]`.
pub fn wrapped_phase_error(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// RMS phasor of harmonic `h ≥ 0` from a two-sided coefficient.
fn rms(x: crate::C64, h: i32) -> crate::C64 {
    if h == 0 {
        x
    } else {
        x * 2f64.sqrt()
    }
}

/// Per-harmonic magnitude and phase errors between matched spectra.
pub fn compare(
    hpf: &[LabeledSpectrum],
    tds: &[LabeledSpectrum],
    hpf_bases: &Bases,
    tds_bases: &Bases,
) -> Result<KpiResult> {
    if !hpf_bases.same_as(tds_bases) {
        return Err(Error::Comparison("spectra are expressed in different per-unit bases".into()));
    }
    let mut entries = Vec::new();
    for a in hpf {
        let b = tds
            .iter()
            .find(|b| b.quantity == a.quantity && b.node == a.node)
            .ok_or_else(|| Error::Comparison(format!("no counterpart for {:?} at {}", a.quantity, a.node)))?;
        let (sa, sb) = (&a.spectrum, &b.spectrum);
        if !sa.harmonics().same_as(sb.harmonics()) || sa.channels() != sb.channels() {
            return Err(Error::Comparison(format!("spectra at {} have different shapes", a.node)));
        }
        for h in 0..=sa.harmonics().h_max_i() {
            let mut entry = KpiEntry {
                quantity: a.quantity,
                node: a.node.clone(),
                order: h as u32,
                magnitude: 0.0,
                e_abs: 0.0,
                e_arg: 0.0,
                phase_compared: false,
            };
            for p in 0..sa.channels() {
                let (xa, xb) = (rms(sa.get(0, h, p), h), rms(sb.get(0, h, p), h));
                entry.magnitude = entry.magnitude.max(xa.norm());
                entry.e_abs = entry.e_abs.max((xa.norm() - xb.norm()).abs());
                if xa.norm().min(xb.norm()) >= PHASE_FLOOR {
                    entry.phase_compared = true;
                    entry.e_arg = entry.e_arg.max(wrapped_phase_error(xa.arg(), xb.arg()));
                }
            }
            entries.push(entry);
        }
    }
    Ok(KpiResult { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltp::HarmonicSet;
    use crate::C64;

    fn spectrum() -> SpectralVector {
        let hs = HarmonicSet::new(50.0, 3).unwrap();
        let mut s = SpectralVector::single(hs, 3);
        for p in 0..3 {
            for h in 0..=3 {
                let x = C64::from_polar(0.4 / (h + 1) as f64, 0.3 * h as f64 - p as f64);
                s.set(0, h, p, x);
                s.set(0, -h, p, x.conj());
            }
        }
        s
    }

    fn labeled(s: SpectralVector) -> Vec<LabeledSpectrum> {
        vec![LabeledSpectrum {
            quantity: Quantity::Voltage,
            node: "N1".into(),
            spectrum: s,
        }]
    }

    #[test]
    fn identical_inputs_give_zero() {
        let b = Bases::default();
        let k = compare(&labeled(spectrum()), &labeled(spectrum()), &b, &b).unwrap();
        assert_eq!(k.max_e_abs(), 0.0);
        assert_eq!(k.max_e_arg(), 0.0);
    }

    #[test]
    fn known_perturbation_is_recovered() {
        let b = Bases::default();
        let mut t = spectrum();
        let x = t.get(0, 2, 1);
        let rms_mag = x.norm() * 2f64.sqrt() + 1e-3;
        let y = C64::from_polar(rms_mag / 2f64.sqrt(), x.arg() + 0.01);
        t.set(0, 2, 1, y);
        t.set(0, -2, 1, y.conj());
        let k = compare(&labeled(spectrum()), &labeled(t), &b, &b).unwrap();
        let e = k.entries.iter().find(|e| e.order == 2).unwrap();
        assert!((e.e_abs - 1e-3).abs() < 1e-12);
        assert!((e.e_arg - 0.01).abs() < 1e-12);
        assert_eq!(k.max_e_abs(), e.e_abs);
    }

    #[test]
    fn phase_wrap_is_invariant() {
        assert!((wrapped_phase_error(0.1 + 2.0 * PI, -0.1) - 0.2).abs() < 1e-12);
        assert!((wrapped_phase_error(3.0, -3.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn base_mismatch_is_rejected() {
        let b2 = Bases::new(20e3, 230.0).unwrap();
        assert!(matches!(
            compare(&labeled(spectrum()), &labeled(spectrum()), &Bases::default(), &b2),
            Err(Error::Comparison(_))
        ));
    }
}
