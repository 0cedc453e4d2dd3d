//! Closes the loop of the default grid-following design and prints the
//! harmonic admittance it presents to the grid.

use hpf::cider::{close_loop, grid_response, Fd1Params, ResourceKind};
use hpf::ltp::HarmonicSet;
use hpf::units::Bases;

fn main() -> hpf::Result<()> {
    let hs = HarmonicSet::new(50.0, 13)?;
    let (sys, fb) = Fd1Params::default().build(&Bases::default())?;
    let gain = close_loop(&sys, &fb, &hs)?;
    let resp = grid_response(&gain, &fb, ResourceKind::Following)?;
    println!("G_pp {}x{}, reference width {}", resp.g_pp.nrows(), resp.g_pp.ncols(), resp.kappa_width);
    for h in [1, 5, 7, 11, 13] {
        let i = hs.index(h).expect("order in set");
        let y = resp.g_pp[(3 * i, 3 * i)];
        println!("h={h:>2}  Y_aa = {:.3e} {:+.3e}j p.u.", y.re, y.im);
    }
    Ok(())
}
