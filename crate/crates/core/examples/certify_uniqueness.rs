//! Runs the fixed-point iteration on the desk case with Jacobian tracking and
//! prints the contraction certificate at the solution.

use hpf::solver::{certify_uniqueness, solve};
use hpf::study::{assemble, build_desk};

fn main() -> hpf::Result<()> {
    let case = build_desk();
    let study = assemble(&case)?;
    let mut cfg = case.solver.config();
    cfg.track_jacobian = true;
    let report = solve(&study.system, &cfg)?;
    for (k, (r, j)) in report.history.iter().zip(&report.jacobian_history).enumerate() {
        println!("iter {:>3}  dx {:.3e}  df {:.3e}  |grad|inf {:.4}", k + 1, r.dx, r.df, j);
    }
    let cert = certify_uniqueness(&report, &study.system.map)?;
    println!(
        "|grad Phi|inf = {:.4}, ln = {:.4}, verdict {:?}",
        cert.jac_inf_norm, cert.rho, cert.verdict
    );
    if let Some(rate) = report.empirical_rate() {
        println!("empirical rate {rate:.4}");
    }
    Ok(())
}
