use crate::cider::{balanced_spectrum, CiderGridResponse, HarmonicPhasor, ResourceKind};
use crate::grid::HybridHarmonicMatrix;
use crate::linalg::{block_diag, invert, mul};
use crate::ltp::{HarmonicSet, SpectralVector};
use crate::{CMatrix, CVector, Error, Result};

use super::map::{FixedPointMap, ReferenceMap};

/// Reciprocal condition below which `L̃` or `K̃` counts as singular.
pub const MIN_RCOND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FormingResource {
    pub name: String,
    pub response: CiderGridResponse,
    pub reference: SpectralVector,
}

#[derive(Debug, Clone)]
pub struct FollowingResource {
    pub name: String,
    pub response: CiderGridResponse,
    /// `T̂_κ|γ`: node phase voltages → reference-calculation input (`ρ|H| × 3|H|`).
    pub rho_transform: CMatrix,
    pub reference: ReferenceMap,
}

/// Everything the reduced fixed-point problem needs, in resource-sorted order.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub harmonics: HarmonicSet,
    pub forming_names: Vec<String>,
    pub following_names: Vec<String>,
    pub h_ss: CMatrix,
    pub h_sr: CMatrix,
    pub h_rs: CMatrix,
    pub h_rr: CMatrix,
    pub g_pp_s: CMatrix,
    pub g_pk_s: CMatrix,
    pub g_pp_r: CMatrix,
    pub g_pk_r: CMatrix,
    pub t_kg: CMatrix,
    pub w_kappa_s: CVector,
    pub l_inv: CMatrix,
    pub k_inv: CMatrix,
    pub k_rs: CMatrix,
    pub rcond_l: f64,
    pub rcond_k: f64,
    pub map: FixedPointMap,
}

/// Network and resource quantities reconstructed from `W̃_ρ`.
#[derive(Debug, Clone)]
pub struct FullState {
    pub w_rho: CVector,
    pub w_kappa_r: CVector,
    pub v_r: CVector,
    pub i_s: CVector,
    pub v_s: CVector,
    pub i_r: CVector,
}

fn diag(ms: Vec<&CMatrix>) -> CMatrix {
    block_diag(&ms)
}

fn stack(vs: &[&CVector]) -> CVector {
    let n = vs.iter().map(|v| v.len()).sum();
    let mut out = CVector::zeros(n);
    let mut o = 0;
    for v in vs {
        out.rows_mut(o, v.len()).copy_from(v);
        o += v.len();
    }
    out
}

/// Checks Conditions on `L̃` and `K̃` and assembles the reduced map.
pub fn build_reduced_system(
    hybrid: &HybridHarmonicMatrix,
    forming: &[FormingResource],
    following: &[FollowingResource],
) -> Result<ReducedSystem> {
    let hs = hybrid.harmonics;
    if forming.len() != hybrid.n_s || following.len() != hybrid.n_r {
        return Err(Error::Shape(format!(
            "hybrid matrix has {}+{} nodes, {}+{} resources given",
            hybrid.n_s,
            hybrid.n_r,
            forming.len(),
            following.len()
        )));
    }
    for f in forming {
        if f.response.kind != ResourceKind::Forming || !f.response.harmonics.same_as(&hs) {
            return Err(Error::Incompatible(format!("{} is not a forming response over H", f.name)));
        }
    }
    for f in following {
        if f.response.kind != ResourceKind::Following || !f.response.harmonics.same_as(&hs) {
            return Err(Error::Incompatible(format!("{} is not a following response over H", f.name)));
        }
    }
    let g_pp_s = diag(forming.iter().map(|f| &f.response.g_pp).collect());
    let g_pk_s = diag(forming.iter().map(|f| &f.response.g_pk).collect());
    let g_pp_r = diag(following.iter().map(|f| &f.response.g_pp).collect());
    let g_pk_r = diag(following.iter().map(|f| &f.response.g_pk).collect());
    let t_kg = diag(following.iter().map(|f| &f.rho_transform).collect());
    let w_kappa_s = stack(&forming.iter().map(|f| f.reference.coeffs()).collect::<Vec<_>>());

    let h = &hybrid.resource;
    let l = &g_pp_s - &h.ss;
    let l_inv = invert(&l, "L_SS", MIN_RCOND)?;
    let k_rs = mul(&h.rs, &l_inv.matrix);
    let k = &h.rr - &g_pp_r + mul(&k_rs, &h.sr);
    let k_inv = invert(&k, "K_RR", MIN_RCOND)?;

    let tk = mul(&t_kg, &k_inv.matrix);
    let b_rr = mul(&tk, &g_pk_r);
    let drive = &tk * (&k_rs * (&g_pk_s * &w_kappa_s));

    let flat_phase = balanced_spectrum(
        &hs,
        &[HarmonicPhasor {
            order: 1,
            magnitude: 1.0,
            phase: 0.0,
        }],
    );
    let v_flat = stack(&vec![flat_phase.coeffs(); following.len()]);
    let flat_start = &t_kg * v_flat;

    let slots = following
        .iter()
        .map(|f| {
            (
                f.name.clone(),
                f.rho_transform.nrows() / hs.len(),
                f.response.kappa_width,
                f.reference.clone(),
            )
        })
        .collect();
    let map = FixedPointMap::new(hs, b_rr, drive, slots, flat_start)?;
    Ok(ReducedSystem {
        harmonics: hs,
        forming_names: forming.iter().map(|f| f.name.clone()).collect(),
        following_names: following.iter().map(|f| f.name.clone()).collect(),
        h_ss: h.ss.clone(),
        h_sr: h.sr.clone(),
        h_rs: h.rs.clone(),
        h_rr: h.rr.clone(),
        g_pp_s,
        g_pk_s,
        g_pp_r,
        g_pk_r,
        t_kg,
        w_kappa_s,
        l_inv: l_inv.matrix,
        k_inv: k_inv.matrix,
        k_rs,
        rcond_l: l_inv.rcond,
        rcond_k: k_inv.rcond,
        map,
    })
}

impl ReducedSystem {
    /// Back-substitution: `Ṽ_R`, then `Ĩ_S`, `Ṽ_S`, `Ĩ_R`.
    pub fn state(&self, w_rho: &CVector) -> Result<FullState> {
        let w_kappa_r = self.map.references(w_rho)?;
        let drive_s = &self.g_pk_s * &self.w_kappa_s;
        let v_r = &self.k_inv * (&self.g_pk_r * &w_kappa_r + &self.k_rs * &drive_s);
        let i_s = &self.l_inv * (&self.h_sr * &v_r - &drive_s);
        let v_s = &self.h_ss * &i_s + &self.h_sr * &v_r;
        let i_r = &self.h_rs * &i_s + &self.h_rr * &v_r;
        Ok(FullState {
            w_rho: w_rho.clone(),
            w_kappa_r,
            v_r,
            i_s,
            v_s,
            i_r,
        })
    }

    /// Un-reduced mismatches `(ΔṼ_S, ΔĨ_R)` at `(Ĩ_S, Ṽ_R)`, with the
    /// followers' references re-evaluated from `T̃_κ|γ Ṽ_R`.
    pub fn residual_mismatch(&self, i_s: &CVector, v_r: &CVector) -> Result<(CVector, CVector)> {
        let w_rho = &self.t_kg * v_r;
        let w_kappa_r = self.map.references(&w_rho)?;
        let dv = &self.h_ss * i_s + &self.h_sr * v_r - &self.g_pp_s * i_s - &self.g_pk_s * &self.w_kappa_s;
        let di = &self.h_rs * i_s + &self.h_rr * v_r - &self.g_pp_r * v_r - &self.g_pk_r * w_kappa_r;
        Ok((dv, di))
    }

    /// Spectrum of one node out of a stacked resource-sorted vector.
    pub fn node_spectrum(&self, stacked: &CVector, k: usize) -> Result<SpectralVector> {
        let n = 3 * self.harmonics.len();
        if (k + 1) * n > stacked.len() {
            return Err(Error::Shape("node index outside stacked vector".into()));
        }
        SpectralVector::from_coeffs(
            self.harmonics,
            1,
            3,
            crate::ltp::Ordering::ResourceSorted,
            stacked.rows(k * n, n).into_owned(),
        )
    }
}
