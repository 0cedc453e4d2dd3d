//! Study cases: file schema, bundled benchmarks and assembly of the reduced
//! fixed-point system.

mod assemble;
mod benchmarks;
mod schema;

pub use assemble::{assemble, hybrid_matrix, AssembledStudy, ResourceRole};
pub use benchmarks::{build_cigre_lv, build_desk, CIGRE_LV_TOML, DESK_TOML};
pub use schema::{BranchSpec, HarmonicEntry, ResourceSpec, SolverSection, StudyCase};

use crate::grid::PassiveLoad;

/// Per-phase series R-L drawing `p_w · weights[k]` at power factor `pf`
/// (lagging) from a nominal phase voltage `v_nom`.
pub fn impedance_load(node: &str, p_w: f64, pf: f64, weights: &[f64; 3], v_nom: f64, f1: f64) -> PassiveLoad {
    let tan = (1.0 - pf * pf).sqrt() / pf;
    let mut r = [0.0; 3];
    let mut l = [0.0; 3];
    for k in 0..3 {
        let p = p_w * weights[k];
        let q = p * tan;
        let s2 = p * p + q * q;
        r[k] = v_nom * v_nom * p / s2;
        l[k] = v_nom * v_nom * q / s2 / (2.0 * std::f64::consts::PI * f1);
    }
    PassiveLoad {
        node: node.to_string(),
        r,
        l,
    }
}
