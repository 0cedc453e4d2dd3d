//! Reference converter designs.
//!
//! FD-1 follows the grid: L filter, PI current control in DQ with voltage
//! feed-forward. FM-1 forms the grid: LC filter, cascaded voltage/current PI
//! in DQ0 on a four-leg bridge. Parameters are physical and converted to p.u.
//! on build.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ltp::LtpMatrix;
use crate::units::Bases;
use crate::{CMatrix, Error, Result};

use super::model::{FeedbackInterconnect, LtpStateSpace};
use super::park::{park_dq, park_dq0, zero_sequence_filter};

/// Wiring between a four-wire grid node and the converter bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Legs {
    /// Three-wire bridge: zero-sequence components are filtered out.
    #[default]
    ThreeLeg,
    FourLeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fd1Params {
    /// Filter inductance (H) and its series resistance (Ω).
    pub l: f64,
    pub r: f64,
    /// Current PI gains (Ω, Ω/s).
    pub kp: f64,
    pub ki: f64,
    #[serde(default)]
    pub legs: Legs,
}

impl Default for Fd1Params {
    fn default() -> Self {
        let l = 1.5e-3;
        let kp = 2.0 * std::f64::consts::PI * 600.0 * l;
        Self {
            l,
            r: 0.05,
            kp,
            ki: kp * 200.0,
            legs: Legs::ThreeLeg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fm1Params {
    /// Filter inductance (H), resistance (Ω) and capacitance (F).
    pub l: f64,
    pub r: f64,
    pub c: f64,
    /// Voltage PI gains (S, S/s).
    pub kpv: f64,
    pub kiv: f64,
    /// Current PI gains (Ω, Ω/s).
    pub kpi: f64,
    pub kii: f64,
}

impl Default for Fm1Params {
    fn default() -> Self {
        let (l, c) = (1.2e-3, 50e-6);
        let kpi = 2.0 * std::f64::consts::PI * 800.0 * l;
        let kpv = 2.0 * std::f64::consts::PI * 150.0 * c;
        Self {
            l,
            r: 0.05,
            c,
            kpv,
            kiv: kpv * 100.0,
            kpi,
            kii: kpi * 400.0,
        }
    }
}

fn check_positive(name: &str, vals: &[f64]) -> Result<()> {
    if vals.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Validation(format!("{name} parameters must be positive")));
    }
    Ok(())
}

/// Dense real block matrix from `(row, col, block)` placements.
fn blocks(rows: usize, cols: usize, parts: &[(usize, usize, DMatrix<f64>)]) -> LtpMatrix {
    let mut m = DMatrix::<f64>::zeros(rows, cols);
    for (r, c, b) in parts {
        m.view_mut((*r, *c), (b.nrows(), b.ncols())).copy_from(b);
    }
    LtpMatrix::from_real(&m)
}

fn eye(n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::identity(n, n) * s
}

/// Feedback `u = [[0, Tᵀ], [diag(T, T), 0]] y` for a hardware output split into two measured triples.
fn feedback(park: &LtpMatrix, n_y_pi: usize) -> Result<LtpMatrix> {
    let k = park.rows();
    let zero = |r, c| LtpMatrix::zeros(r, c);
    let meas = LtpMatrix::block_diag(&[park, park]);
    LtpMatrix::from_quadrants(&zero(3, n_y_pi), &park.transpose(), &meas, &zero(2 * k, k))
}

impl Fd1Params {
    pub fn validate(&self) -> Result<()> {
        check_positive("FD-1", &[self.l, self.kp, self.ki])?;
        if self.r < 0.0 {
            return Err(Error::Validation("FD-1 resistance must be nonnegative".into()));
        }
        Ok(())
    }

    /// States `[i_abc, x_dq]`, inputs `[e_abc; i_dq, v_dq]`,
    /// disturbances `[v_abc; i*_dq]`, outputs `[i_abc, v_abc; e_dq]`.
    pub fn build(&self, bases: &Bases) -> Result<(LtpStateSpace, FeedbackInterconnect)> {
        self.validate()?;
        let zb = bases.impedance();
        let (l, r, kp, ki) = (self.l / zb, self.r / zb, self.kp / zb, self.ki / zb);
        let a = blocks(5, 5, &[(0, 0, eye(3, -r / l))]);
        let mut bk = DMatrix::zeros(2, 4);
        bk.view_mut((0, 0), (2, 2)).copy_from(&eye(2, -1.0));
        let b = blocks(5, 7, &[(0, 0, eye(3, 1.0 / l)), (3, 3, bk)]);
        let e = blocks(5, 5, &[(0, 0, eye(3, -1.0 / l)), (3, 3, eye(2, 1.0))]);
        let c = blocks(8, 5, &[(0, 0, eye(3, 1.0)), (6, 3, eye(2, ki))]);
        let mut dk = DMatrix::zeros(2, 4);
        dk.view_mut((0, 0), (2, 2)).copy_from(&eye(2, -kp));
        dk.view_mut((0, 2), (2, 2)).copy_from(&eye(2, 1.0));
        let d = blocks(8, 7, &[(6, 3, dk)]);
        let f = blocks(8, 5, &[(3, 0, eye(3, 1.0)), (6, 3, eye(2, kp))]);
        let sys = LtpStateSpace::new(a, b, c, d, e, f)?;
        let side = match self.legs {
            Legs::ThreeLeg => zero_sequence_filter(),
            Legs::FourLeg => CMatrix::identity(3, 3),
        };
        let mut sel = CMatrix::zeros(3, 6);
        sel.view_mut((0, 0), (3, 3)).copy_from(&side);
        let fb = FeedbackInterconnect {
            t: feedback(&park_dq(), 6)?,
            t_gamma_pi: LtpMatrix::constant(sel),
            t_pi_gamma: LtpMatrix::constant(side),
        };
        Ok((sys, fb))
    }
}

impl Fm1Params {
    pub fn validate(&self) -> Result<()> {
        check_positive("FM-1", &[self.l, self.c, self.kpv, self.kiv, self.kpi, self.kii])?;
        if self.r < 0.0 {
            return Err(Error::Validation("FM-1 resistance must be nonnegative".into()));
        }
        Ok(())
    }

    /// States `[i_L, v_C, x_v, x_i]`, inputs `[e_abc; v_dq0, i_dq0]`,
    /// disturbances `[i_grid; v*_dq0]`, outputs `[v_C, i_L; e_dq0]`.
    pub fn build(&self, bases: &Bases) -> Result<(LtpStateSpace, FeedbackInterconnect)> {
        self.validate()?;
        let zb = bases.impedance();
        let (l, r, c) = (self.l / zb, self.r / zb, self.c * zb);
        let (kpv, kiv, kpi, kii) = (self.kpv * zb, self.kiv * zb, self.kpi / zb, self.kii / zb);
        let a = blocks(
            12,
            12,
            &[
                (0, 0, eye(3, -r / l)),
                (0, 3, eye(3, -1.0 / l)),
                (3, 0, eye(3, 1.0 / c)),
                (9, 6, eye(3, kiv)),
            ],
        );
        let b = blocks(
            12,
            9,
            &[
                (0, 0, eye(3, 1.0 / l)),
                (6, 3, eye(3, -1.0)),
                (9, 3, eye(3, -kpv)),
                (9, 6, eye(3, -1.0)),
            ],
        );
        let e = blocks(
            12,
            6,
            &[(3, 0, eye(3, -1.0 / c)), (6, 3, eye(3, 1.0)), (9, 3, eye(3, kpv))],
        );
        let cm = blocks(
            9,
            12,
            &[
                (0, 3, eye(3, 1.0)),
                (3, 0, eye(3, 1.0)),
                (6, 6, eye(3, kpi * kiv)),
                (6, 9, eye(3, kii)),
            ],
        );
        let d = blocks(9, 9, &[(6, 3, eye(3, 1.0 - kpi * kpv)), (6, 6, eye(3, -kpi))]);
        let f = blocks(9, 6, &[(6, 3, eye(3, kpi * kpv))]);
        let sys = LtpStateSpace::new(a, b, cm, d, e, f)?;
        let mut sel = CMatrix::zeros(3, 6);
        sel.view_mut((0, 0), (3, 3)).copy_from(&CMatrix::identity(3, 3));
        let fb = FeedbackInterconnect {
            t: feedback(&park_dq0(), 6)?,
            t_gamma_pi: LtpMatrix::constant(sel),
            t_pi_gamma: LtpMatrix::constant(CMatrix::identity(3, 3)),
        };
        Ok((sys, fb))
    }
}

/// Pointwise closed-loop matrices `(A_cl, E_cl, C_cl, F_cl)` at time `t`.
pub fn closed_loop_matrices(
    sys: &LtpStateSpace,
    fb: &FeedbackInterconnect,
    t: f64,
    f1: f64,
) -> Result<[DMatrix<f64>; 4]> {
    let at = |m: &LtpMatrix| m.at_real(t, f1);
    let (a, b, c, d, e, f) = (at(&sys.a), at(&sys.b), at(&sys.c), at(&sys.d), at(&sys.e), at(&sys.f));
    let tt = at(&fb.t);
    let nu = tt.nrows();
    let m = (DMatrix::identity(nu, nu) - &tt * &d)
        .try_inverse()
        .ok_or_else(|| Error::Resonance("algebraic loop is singular".into()))?;
    let mt = m * tt;
    let bmt = &b * &mt;
    let dmt = &d * &mt;
    Ok([&a + &bmt * &c, &e + &bmt * &f, &c + &dmt * &c, &f + &dmt * &f])
}

/// Closed-loop state matrix at time `t` (real), for stability checks and simulation.
pub fn closed_loop_state_matrix(sys: &LtpStateSpace, fb: &FeedbackInterconnect, t: f64, f1: f64) -> Result<DMatrix<f64>> {
    let [a, ..] = closed_loop_matrices(sys, fb, t, f1)?;
    Ok(a)
}

