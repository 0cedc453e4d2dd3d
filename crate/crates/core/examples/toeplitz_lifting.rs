//! Lifts a time-periodic 2x2 matrix to its Toeplitz operator and checks the
//! product against pointwise multiplication in time.

use hpf::ltp::{lift_ltp_matrix, HarmonicSet, LtpMatrix, SpectralVector};
use hpf::{CMatrix, C64};

fn main() -> hpf::Result<()> {
    let hs = HarmonicSet::new(50.0, 6)?;
    let c = |re: f64, im: f64| C64::new(re, im);
    let a0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.2, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
    let a1 = CMatrix::from_row_slice(2, 2, &[c(0.1, 0.3), c(0.0, 0.0), c(0.05, -0.02), c(0.0, 0.1)]);
    let a = LtpMatrix::constant(a0).with(1, a1.clone())?.with(-1, a1.map(|z| z.conj()))?;
    let op = lift_ltp_matrix(&a, &hs)?;

    let mut x = SpectralVector::single(hs, 2);
    x.set(0, 1, 0, c(0.5, 0.0));
    x.set(0, -1, 0, c(0.5, 0.0));
    x.set(0, 2, 1, c(0.0, -0.2));
    x.set(0, -2, 1, c(0.0, 0.2));
    let y = op.apply(&x)?;

    let t = 0.0037;
    let w = 2.0 * std::f64::consts::PI * hs.f1 * t;
    let eval = |s: &SpectralVector, ch: usize| -> C64 {
        hs.orders().map(|h| s.get(0, h, ch) * C64::from_polar(1.0, h as f64 * w)).sum()
    };
    let xt = nalgebra::DVector::from_fn(2, |i, _| eval(&x, i));
    let direct = a.at(t, hs.f1) * xt;
    for ch in 0..2 {
        println!(
            "channel {ch}: lifted {:.6}, pointwise {:.6}",
            eval(&y, ch),
            direct[ch]
        );
    }
    println!("operator size {}x{}", op.matrix().nrows(), op.matrix().ncols());
    Ok(())
}
