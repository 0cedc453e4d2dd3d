use std::f64::consts::PI;

use crate::linalg::{invert, mul};
use crate::ltp::{lift_ltp_matrix, HarmonicSet, LtpMatrix};
use crate::{CMatrix, Error, Result, C64};

const MIN_RCOND: f64 = 1e-12;

/// `ẋ = A x + B u + E w`, `y = C x + D u + F w` with periodic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LtpStateSpace {
    pub a: LtpMatrix,
    pub b: LtpMatrix,
    pub c: LtpMatrix,
    pub d: LtpMatrix,
    pub e: LtpMatrix,
    pub f: LtpMatrix,
}

impl LtpStateSpace {
    pub fn new(a: LtpMatrix, b: LtpMatrix, c: LtpMatrix, d: LtpMatrix, e: LtpMatrix, f: LtpMatrix) -> Result<Self> {
        let s = Self { a, b, c, d, e, f };
        s.validate()?;
        Ok(s)
    }

    pub fn n_x(&self) -> usize {
        self.a.rows()
    }
    pub fn n_u(&self) -> usize {
        self.b.cols()
    }
    pub fn n_w(&self) -> usize {
        self.e.cols()
    }
    pub fn n_y(&self) -> usize {
        self.c.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, nu, nw, ny) = (self.n_x(), self.n_u(), self.n_w(), self.n_y());
        let ok = self.a.cols() == nx
            && self.b.rows() == nx
            && self.e.rows() == nx
            && self.c.cols() == nx
            && self.d.rows() == ny
            && self.d.cols() == nu
            && self.f.rows() == ny
            && self.f.cols() == nw;
        if !ok {
            return Err(Error::Shape("state-space dimensions are inconsistent".into()));
        }
        let worst = [&self.a, &self.b, &self.c, &self.d, &self.e, &self.f]
            .iter()
            .map(|m| m.conjugate_asymmetry())
            .fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(Error::Validation(format!(
                "state-space coefficients are not real in time (asymmetry {worst:e})"
            )));
        }
        Ok(())
    }
}

/// Coupling `u = T(t) y` plus the grid-side coordinate changes.
///
/// The first `n_w_pi` disturbances and `n_y_pi` outputs belong to the power
/// hardware; the rest to the control software.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackInterconnect {
    pub t: LtpMatrix,
    /// Hardware outputs → grid quantities (`3 × n_y_pi`).
    pub t_gamma_pi: LtpMatrix,
    /// Grid quantities → hardware disturbances (`n_w_pi × 3`).
    pub t_pi_gamma: LtpMatrix,
}

impl FeedbackInterconnect {
    pub fn n_w_pi(&self) -> usize {
        self.t_pi_gamma.rows()
    }
    pub fn n_y_pi(&self) -> usize {
        self.t_gamma_pi.cols()
    }
}

/// Harmonic-domain closed-loop gain `Ŷ = Ĝ Ŵ` (harmonic-major layout).
#[derive(Debug, Clone)]
pub struct ClosedLoopGain {
    pub harmonics: HarmonicSet,
    pub n_w_pi: usize,
    pub n_w: usize,
    pub n_y_pi: usize,
    pub n_y: usize,
    pub g: CMatrix,
}

impl ClosedLoopGain {
    fn sub(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CMatrix {
        let nh = self.harmonics.len();
        let (nr, nc) = (rows.len(), cols.len());
        CMatrix::from_fn(nh * nr, nh * nc, |i, j| {
            let (hi, a) = (i / nr, i % nr);
            let (hj, b) = (j / nc, j % nc);
            self.g[(hi * self.n_y + rows.start + a, hj * self.n_w + cols.start + b)]
        })
    }

    pub fn g_pp(&self) -> CMatrix {
        self.sub(0..self.n_y_pi, 0..self.n_w_pi)
    }
    pub fn g_pk(&self) -> CMatrix {
        self.sub(0..self.n_y_pi, self.n_w_pi..self.n_w)
    }
    pub fn g_kp(&self) -> CMatrix {
        self.sub(self.n_y_pi..self.n_y, 0..self.n_w_pi)
    }
    pub fn g_kk(&self) -> CMatrix {
        self.sub(self.n_y_pi..self.n_y, self.n_w_pi..self.n_w)
    }
}

/// `jΩ` for `size` channels: `diag_h(j 2π f1 h I)`.
pub fn omega(harmonics: &HarmonicSet, size: usize) -> CMatrix {
    let n = harmonics.len() * size;
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 2.0 * PI * harmonics.frequency(harmonics.order(i / size)))
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Periodic steady-state gain of the feedback loop.
///
/// With `M = (I - T D)⁻¹` the loop closes to `A + B M T C`, `E + B M T F`,
/// `C + D M T C`, `F + D M T F`; the lifted response is
/// `Ĝ = Ĉ_cl (jΩ - Â_cl)⁻¹ Ê_cl + F̂_cl`.
pub fn close_loop(sys: &LtpStateSpace, fb: &FeedbackInterconnect, harmonics: &HarmonicSet) -> Result<ClosedLoopGain> {
    sys.validate()?;
    if fb.t.rows() != sys.n_u() || fb.t.cols() != sys.n_y() {
        return Err(Error::Shape(format!(
            "feedback is {}x{}, expected {}x{}",
            fb.t.rows(),
            fb.t.cols(),
            sys.n_u(),
            sys.n_y()
        )));
    }
    if fb.n_w_pi() > sys.n_w() || fb.n_y_pi() > sys.n_y() {
        return Err(Error::Shape("grid-side transforms exceed the hardware ports".into()));
    }
    let lift = |m: &LtpMatrix| lift_ltp_matrix(m, harmonics).map(|o| o.into_matrix());
    let (a, b, c, d, e, f, t) = (
        lift(&sys.a)?,
        lift(&sys.b)?,
        lift(&sys.c)?,
        lift(&sys.d)?,
        lift(&sys.e)?,
        lift(&sys.f)?,
        lift(&fb.t)?,
    );
    let nu = harmonics.len() * sys.n_u();
    let td = mul(&t, &d);
    let m = invert(&(CMatrix::identity(nu, nu) - td), "I - TD", MIN_RCOND)
        .map_err(|_| Error::Resonance("algebraic loop I - TD is singular".into()))?
        .matrix;
    let mt = mul(&m, &t);
    let bmt = mul(&b, &mt);
    let dmt = mul(&d, &mt);
    let a_cl = &a + mul(&bmt, &c);
    let e_cl = &e + mul(&bmt, &f);
    let c_cl = &c + mul(&dmt, &c);
    let f_cl = &f + mul(&dmt, &f);
    let g = if sys.n_x() == 0 {
        f_cl
    } else {
        let res = omega(harmonics, sys.n_x()) - a_cl;
        let inv = invert(&res, "jΩ - A_cl", MIN_RCOND).map_err(|e| match e {
            Error::Condition { rcond, .. } => {
                Error::Resonance(format!("jΩ - A_cl is singular (rcond {rcond:e})"))
            }
            other => other,
        })?;
        mul(&mul(&c_cl, &inv.matrix), &e_cl) + f_cl
    };
    Ok(ClosedLoopGain {
        harmonics: *harmonics,
        n_w_pi: fb.n_w_pi(),
        n_w: sys.n_w(),
        n_y_pi: fb.n_y_pi(),
        n_y: sys.n_y(),
        g,
    })
}
