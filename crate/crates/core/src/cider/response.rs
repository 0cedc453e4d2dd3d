use crate::ltp::{lift_ltp_matrix, HarmonicSet};
use crate::linalg::mul;
use crate::{CMatrix, Result};

use super::model::{ClosedLoopGain, FeedbackInterconnect};

/// Whether the resource imposes voltage (`S`) or current (`R`) at its node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    Forming,
    Following,
}

/// Grid-facing gains of one resource.
///
/// Forming: `V̂ = Ḡ_ππ Î + Ḡ_πκ Ŵ_κ`; following: `Î = Ḡ_ππ V̂ + Ḡ_πκ Ŵ_κ`.
/// Currents are injections into the grid.
#[derive(Debug, Clone)]
pub struct CiderGridResponse {
    pub kind: ResourceKind,
    pub harmonics: HarmonicSet,
    /// `3|H| × 3|H|`.
    pub g_pp: CMatrix,
    /// `3|H| × κ|H|`.
    pub g_pk: CMatrix,
    pub kappa_width: usize,
}

/// `Ḡ_ππ = T̂_γ|π Ĝ_ππ T̂_π|γ`, `Ḡ_πκ = T̂_γ|π Ĝ_πκ`.
pub fn grid_response(gain: &ClosedLoopGain, fb: &FeedbackInterconnect, kind: ResourceKind) -> Result<CiderGridResponse> {
    let hs = gain.harmonics;
    let tgp = lift_ltp_matrix(&fb.t_gamma_pi, &hs)?.into_matrix();
    let tpg = lift_ltp_matrix(&fb.t_pi_gamma, &hs)?.into_matrix();
    let g_pp = mul(&mul(&tgp, &gain.g_pp()), &tpg);
    let g_pk = mul(&tgp, &gain.g_pk());
    Ok(CiderGridResponse {
        kind,
        harmonics: hs,
        g_pp,
        g_pk,
        kappa_width: gain.n_w - gain.n_w_pi,
    })
}

impl CiderGridResponse {
    /// Evaluates the affine response for a grid-side input (current for
    /// forming, voltage for following) and a control reference.
    pub fn output(&self, grid_input: &crate::CVector, w_kappa: &crate::CVector) -> crate::CVector {
        &self.g_pp * grid_input + &self.g_pk * w_kappa
    }
}
