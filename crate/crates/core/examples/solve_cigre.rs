//! Solves the bundled CIGRE-LV style case and prints the voltage THD per node.

use hpf::solver::solve;
use hpf::study::{assemble, build_cigre_lv};
use hpf::tds::Quantity;

fn main() -> hpf::Result<()> {
    let case = build_cigre_lv();
    case.validate()?;
    let study = assemble(&case)?;
    let report = solve(&study.system, &case.solver.config())?;
    println!(
        "{}: converged={} after {} iterations",
        case.name, report.converged, report.iterations
    );
    if !report.converged {
        return Ok(());
    }
    println!("{:<6} {:>10} {:>8}", "node", "|V1| p.u.", "THD %");
    for s in study.node_spectra(&report.w_rho)? {
        if s.quantity != Quantity::Voltage {
            continue;
        }
        let rms = |h: i32| s.spectrum.get(0, h, 0).norm() * 2f64.sqrt();
        let distortion: f64 = (2..=s.spectrum.harmonics().h_max_i()).map(|h| rms(h).powi(2)).sum();
        println!("{:<6} {:>10.5} {:>8.3}", s.node, rms(1), 100.0 * distortion.sqrt() / rms(1));
    }
    Ok(())
}
