use std::f64::consts::PI;

use crate::ltp::{HarmonicSet, SpectralVector};
use crate::{Error, Result, C64};

/// Synchronous DFT at the harmonics of `H` over an integer number of periods.
///
/// Two-sided convention: a cosine of amplitude 1 at `f1` gives `0.5` at `h = ±1`.
pub fn dft_spectrum<S: AsRef<[f64]>>(
    series: &[S],
    harmonics: &HarmonicSet,
    samples_per_period: usize,
) -> Result<SpectralVector> {
    if series.is_empty() || samples_per_period == 0 {
        return Err(Error::Config("nothing to transform".into()));
    }
    let len = series[0].as_ref().len();
    if len == 0 || len % samples_per_period != 0 {
        return Err(Error::Config(format!(
            "window of {len} samples is not a whole number of {samples_per_period}-sample periods"
        )));
    }
    if series.iter().any(|s| s.as_ref().len() != len) {
        return Err(Error::Config("channels have different lengths".into()));
    }
    if harmonics.h_max * 2 >= samples_per_period {
        return Err(Error::Config("too few samples per period for the harmonic set".into()));
    }
    let twiddle: Vec<C64> = (0..samples_per_period)
        .map(|m| C64::from_polar(1.0, -2.0 * PI * m as f64 / samples_per_period as f64))
        .collect();
    let mut out = SpectralVector::single(*harmonics, series.len());
    for (c, s) in series.iter().enumerate() {
        let s = s.as_ref();
        for h in 0..=harmonics.h_max {
            let mut acc = C64::new(0.0, 0.0);
            for (n, x) in s.iter().enumerate() {
                acc += twiddle[(h * n) % samples_per_period] * x;
            }
            let x = acc / len as f64;
            out.set(0, h as i32, c, x);
            out.set(0, -(h as i32), c, x.conj());
        }
    }
    Ok(out)
}
