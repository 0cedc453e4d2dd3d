use serde::{Deserialize, Serialize};

use crate::linalg::{inf_norm, inf_norm_vec, stacked_real_inf_norm};
use crate::{CVector, Error, Result};

use super::map::FixedPointMap;
use super::reduced::{FullState, ReducedSystem};

/// Iterates whose change exceeds this are treated as divergent.
const BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialGuess {
    /// Nominal balanced fundamental at every follower.
    #[default]
    FlatStart,
    Provided(CVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_x: f64,
    pub tol_f: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
    /// Record `‖∇Φ‖∞` at every iterate.
    pub track_jacobian: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_x: 1e-8,
            tol_f: 1e-8,
            max_iter: 200,
            initial: InitialGuess::FlatStart,
            track_jacobian: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_x > 0.0 && self.tol_f > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// `δ_x = ‖W⁽ᵏ⁾ - W⁽ᵏ⁻¹⁾‖∞` and `δ_f = ‖Φ(W⁽ᵏ⁾) - W⁽ᵏ⁾‖∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub dx: f64,
    pub df: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Uniqueness {
    CertifiedUnique,
    Inconclusive,
    NotConverged,
}

/// Contraction test at the fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub jac_inf_norm: f64,
    /// Same Jacobian as a real map on stacked (Re, Im) coordinates.
    pub jac_stacked_norm: f64,
    /// `ln ‖∇Φ‖∞`.
    pub rho: f64,
    pub rho_log10: f64,
    pub verdict: Uniqueness,
}

impl Certificate {
    pub fn from_norms(jac_inf_norm: f64, jac_stacked_norm: f64) -> Self {
        let verdict = if jac_inf_norm < 1.0 {
            Uniqueness::CertifiedUnique
        } else {
            Uniqueness::Inconclusive
        };
        Self {
            jac_inf_norm,
            jac_stacked_norm,
            rho: jac_inf_norm.ln(),
            rho_log10: jac_inf_norm.log10(),
            verdict,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub converged: bool,
    pub iterations: usize,
    pub w_rho: CVector,
    pub history: Vec<Residual>,
    pub jacobian_history: Vec<f64>,
    pub certificate: Option<Certificate>,
    /// Why iteration stopped early, if it did.
    pub failure: Option<String>,
    pub state: Option<FullState>,
}

impl FixedPointReport {
    pub fn uniqueness(&self) -> Uniqueness {
        match (&self.certificate, self.converged) {
            (Some(c), true) => c.verdict,
            _ => Uniqueness::NotConverged,
        }
    }

    pub fn empirical_rate(&self) -> Option<f64> {
        empirical_rate(&self.history.iter().map(|r| r.dx).collect::<Vec<_>>())
    }
}

/// Fixed-point iteration `W⁽ᵏ⁺¹⁾ = Φ(W⁽ᵏ⁾)` until both `δ_x ≤ δ_x*` and `δ_f ≤ δ_f*`.
///
/// Non-convergence is reported, not raised.
pub fn iterate(map: &FixedPointMap, cfg: &SolverConfig) -> Result<FixedPointReport> {
    cfg.validate()?;
    let mut w = match &cfg.initial {
        InitialGuess::FlatStart => map.flat_start.clone(),
        InitialGuess::Provided(w0) => {
            if w0.len() != map.dim() {
                return Err(Error::Shape(format!(
                    "initial point has {} entries, map {}",
                    w0.len(),
                    map.dim()
                )));
            }
            w0.clone()
        }
    };
    let mut report = FixedPointReport {
        converged: false,
        iterations: 0,
        w_rho: w.clone(),
        history: Vec::new(),
        jacobian_history: Vec::new(),
        certificate: None,
        failure: None,
        state: None,
    };
    let mut phi = match map.eval(&w) {
        Ok(p) => p,
        Err(e) => {
            report.failure = Some(e.to_string());
            return Ok(report);
        }
    };
    for k in 1..=cfg.max_iter {
        let next = phi;
        let dx = inf_norm_vec(&(&next - &w));
        w = next;
        report.iterations = k;
        if !dx.is_finite() || dx > BLOW_UP {
            report.history.push(Residual { dx, df: f64::NAN });
            report.failure = Some(format!("iterates diverged at iteration {k}"));
            break;
        }
        phi = match map.eval(&w) {
            Ok(p) => p,
            Err(e) => {
                report.history.push(Residual { dx, df: f64::NAN });
                report.failure = Some(e.to_string());
                break;
            }
        };
        let df = inf_norm_vec(&(&phi - &w));
        report.history.push(Residual { dx, df });
        if cfg.track_jacobian {
            report
                .jacobian_history
                .push(map.jacobian_norm(&w).unwrap_or(f64::NAN));
        }
        if dx <= cfg.tol_x && df <= cfg.tol_f {
            report.converged = true;
            break;
        }
    }
    if !report.converged && report.failure.is_none() {
        report.failure = Some(format!("no convergence within {} iterations", cfg.max_iter));
    }
    report.w_rho = w;
    if report.converged {
        report.certificate = Some(certify_at(map, &report.w_rho)?);
    }
    Ok(report)
}

/// Contraction certificate at an arbitrary point.
pub fn certify_at(map: &FixedPointMap, w: &CVector) -> Result<Certificate> {
    let j = map.jacobian(w)?;
    Ok(Certificate::from_norms(inf_norm(&j), stacked_real_inf_norm(&j)))
}

/// Certificate of a finished run; fails if the run did not converge.
pub fn certify_uniqueness(report: &FixedPointReport, map: &FixedPointMap) -> Result<Certificate> {
    if !report.converged {
        return Err(Error::State("the fixed-point iteration has not converged".into()));
    }
    certify_at(map, &report.w_rho)
}

/// Solves the reduced system and back-substitutes the network state.
pub fn solve(sys: &ReducedSystem, cfg: &SolverConfig) -> Result<FixedPointReport> {
    let mut report = iterate(&sys.map, cfg)?;
    if report.converged {
        report.state = Some(sys.state(&report.w_rho)?);
    }
    Ok(report)
}

/// Least-squares slope of `ln δ` against the iteration count over the tail.
///
/// Returns `-∞` when the sequence hits zero (immediate convergence) and
/// `None` with fewer than four usable points.
pub fn empirical_rate(deltas: &[f64]) -> Option<f64> {
    if deltas.contains(&0.0) {
        return Some(f64::NEG_INFINITY);
    }
    let scale = deltas.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let floor = 1e-13 * scale.max(1.0);
    let usable: Vec<(f64, f64)> = deltas
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite() && **d > floor)
        .map(|(k, d)| (k as f64, d.ln()))
        .collect();
    let tail = &usable[usable.len().saturating_sub(8)..];
    if tail.len() < 4 {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequence_rate() {
        let r: f64 = 0.37;
        let d: Vec<f64> = (0..20).map(|k| 2.5 * r.powi(k)).collect();
        assert!((empirical_rate(&d).unwrap() - r.ln()).abs() < 1e-12);
        assert_eq!(empirical_rate(&[1.0, 0.0]), Some(f64::NEG_INFINITY));
        assert_eq!(empirical_rate(&[1.0, 0.5]), None);
    }

    #[test]
    fn threshold_semantics() {
        assert_eq!(Certificate::from_norms(1.02, 1.2).verdict, Uniqueness::Inconclusive);
        assert_eq!(Certificate::from_norms(1.0, 1.0).verdict, Uniqueness::Inconclusive);
        assert_eq!(Certificate::from_norms(0.187, 0.2).verdict, Uniqueness::CertifiedUnique);
        assert!((Certificate::from_norms(0.187, 0.2).rho + 1.6766).abs() < 1e-3);
    }
}
