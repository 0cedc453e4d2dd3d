use nalgebra::DMatrix;

use crate::linalg::invert;
use crate::ltp::HarmonicSet;
use crate::{CMatrix, Error, Result, C64};

use super::topology::GridTopology;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;
const MIN_RCOND: f64 = 1e-12;

/// Outcome of the symmetric / invertible / lossy audit of one element at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub element: String,
    pub frequency: f64,
    /// Largest `|Z_ij - Z_ji|` relative to the largest entry.
    pub asymmetry: f64,
    pub rcond: f64,
    /// Smallest eigenvalue of the symmetric part of `Re Z`.
    pub min_real_eigenvalue: f64,
}

impl HypothesisCheck {
    fn of(element: String, frequency: f64, m: &CMatrix) -> Self {
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let asymmetry = (m - m.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
        let rcond = invert(m, &element, 0.0).map(|i| i.rcond).unwrap_or(0.0);
        let re: DMatrix<f64> = m.map(|z| z.re);
        let sym = (&re + re.transpose()) * 0.5;
        let min_real_eigenvalue = sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            element,
            frequency,
            asymmetry,
            rcond,
            min_real_eigenvalue,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure().is_none()
    }

    fn failure(&self) -> Option<String> {
        if self.asymmetry > SYMMETRY_TOL {
            Some(format!("not symmetric (relative asymmetry {:e})", self.asymmetry))
        } else if !(self.rcond >= MIN_RCOND) {
            Some(format!("not invertible (rcond {:e})", self.rcond))
        } else if self.min_real_eigenvalue < -PSD_TOL {
            Some(format!("real part not PSD (min eigenvalue {:e})", self.min_real_eigenvalue))
        } else {
            None
        }
    }

    pub fn into_result(self) -> Result<Self> {
        match self.failure() {
            None => Ok(self),
            Some(reason) => Err(Error::Hypothesis {
                element: self.element,
                frequency: self.frequency,
                reason,
            }),
        }
    }
}

/// Audits every branch impedance, nonzero shunt admittance and load impedance at every `f_h ≥ 0`.
pub fn audit_hypotheses(topo: &GridTopology, harmonics: &HarmonicSet) -> Vec<HypothesisCheck> {
    let mut out = Vec::new();
    for h in 0..=harmonics.h_max_i() {
        let f = harmonics.frequency(h);
        for (k, b) in topo.branches.iter().enumerate() {
            if let Ok((z, y)) = topo.branch_elements(k, f) {
                out.push(HypothesisCheck::of(format!("branch {}-{}", b.from, b.to), f, &z));
                if y.iter().any(|e| e.norm() > 0.0) {
                    out.push(HypothesisCheck::of(format!("shunt of {}-{}", b.from, b.to), f, &y));
                }
            }
        }
        for l in &topo.loads {
            out.push(HypothesisCheck::of(format!("load at {}", l.node), f, &l.impedance(f)));
        }
    }
    out
}

fn stamp(y: &mut CMatrix, i: usize, j: usize, block: &CMatrix, sign: f64) {
    let mut v = y.view_mut((3 * i, 3 * j), (3, 3));
    v += block * C64::new(sign, 0.0);
}

/// Compound nodal admittance `Y(f)` in siemens, π-model shunts and passive loads included.
pub fn assemble_admittance(topo: &GridTopology, f: f64) -> Result<CMatrix> {
    let n = topo.nodes.len();
    let mut y = CMatrix::zeros(3 * n, 3 * n);
    for (k, b) in topo.branches.iter().enumerate() {
        let (z, ysh) = topo.branch_elements(k, f)?;
        let name = format!("branch {}-{}", b.from, b.to);
        let yb = HypothesisCheck::of(name.clone(), f, &z).into_result().and_then(|_| {
            invert(&z, &name, MIN_RCOND).map_err(|_| Error::Hypothesis {
                element: name.clone(),
                frequency: f,
                reason: "singular impedance".into(),
            })
        })?;
        let i = topo.node_index(&b.from).expect("validated");
        let j = topo.node_index(&b.to).expect("validated");
        let half = &ysh * C64::new(0.5, 0.0);
        stamp(&mut y, i, i, &yb.matrix, 1.0);
        stamp(&mut y, j, j, &yb.matrix, 1.0);
        stamp(&mut y, i, j, &yb.matrix, -1.0);
        stamp(&mut y, j, i, &yb.matrix, -1.0);
        stamp(&mut y, i, i, &half, 1.0);
        stamp(&mut y, j, j, &half, 1.0);
    }
    for l in &topo.loads {
        let name = format!("load at {}", l.node);
        let zp = l.impedance(f);
        let yp = invert(&zp, &name, MIN_RCOND).map_err(|_| Error::Hypothesis {
            element: name,
            frequency: f,
            reason: "singular impedance".into(),
        })?;
        let i = topo.node_index(&l.node).expect("validated");
        stamp(&mut y, i, i, &yp.matrix, 1.0);
    }
    Ok(y)
}
