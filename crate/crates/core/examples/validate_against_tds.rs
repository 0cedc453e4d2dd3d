//! Compares the harmonic power flow with a time-domain simulation of the desk case.

use hpf::cli::tds_spectra;
use hpf::solver::solve;
use hpf::study::{assemble, build_desk};
use hpf::tds::{compare, simulate};

fn main() -> hpf::Result<()> {
    let case = build_desk();
    let study = assemble(&case)?;
    let report = solve(&study.system, &case.solver.config())?;
    let hpf = study.node_spectra(&report.w_rho)?;
    let tds = simulate(&case, &case.tds)?;
    println!(
        "simulated {} periods, settled={}, energy imbalance {:.2e}",
        tds.periods_simulated,
        tds.settled,
        tds.energy.imbalance()
    );
    let kpi = compare(&hpf, &tds_spectra(&hpf, &tds)?, &case.bases, &tds.bases)?;
    for (h, e_abs, e_arg) in kpi.by_order() {
        println!("h={h:>2}  e_abs {e_abs:.2e} p.u.  e_arg {e_arg:.2e} rad");
    }
    Ok(())
}
