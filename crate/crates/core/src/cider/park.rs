//! Park transforms as LTP matrices (Fourier content at `±1` only).

use std::f64::consts::PI;

use crate::ltp::LtpMatrix;
use crate::{CMatrix, C64};

fn phase_row(scale: C64) -> [C64; 3] {
    let a = C64::from_polar(1.0, 2.0 * PI / 3.0);
    [scale, scale * a.conj(), scale * a]
}

/// Power-invariant abc→dq transform `T(θ)`, `θ = 2π f1 t`:
/// `√(2/3) [[cos θ, cos(θ-2π/3), cos(θ+2π/3)], [-sin θ, -sin(θ-2π/3), -sin(θ+2π/3)]]`.
pub fn park_dq() -> LtpMatrix {
    let k = (2.0f64 / 3.0).sqrt() / 2.0;
    let d = phase_row(C64::new(k, 0.0));
    let q = phase_row(C64::new(0.0, k));
    let plus = CMatrix::from_row_slice(2, 3, &[d[0], d[1], d[2], q[0], q[1], q[2]]);
    let minus = plus.map(|z| z.conj());
    LtpMatrix::zeros(2, 3)
        .with(1, plus)
        .and_then(|m| m.with(-1, minus))
        .expect("static shapes")
}

/// abc→dq0 transform: [`park_dq`] plus the zero-sequence row `(1,1,1)/√3`.
pub fn park_dq0() -> LtpMatrix {
    let dq = park_dq();
    let z = 1.0 / 3f64.sqrt();
    let mut out = LtpMatrix::zeros(3, 3);
    for k in [-1, 1] {
        let mut m = CMatrix::zeros(3, 3);
        m.view_mut((0, 0), (2, 3)).copy_from(&dq.block(k));
        out.set(k, m).expect("static shapes");
    }
    let mut m0 = CMatrix::zeros(3, 3);
    for j in 0..3 {
        m0[(2, j)] = C64::new(z, 0.0);
    }
    out.set(0, m0).expect("static shapes");
    out
}

/// Projector removing the zero sequence, `I - 11ᵀ/3`.
pub fn zero_sequence_filter() -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| {
        C64::new(if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 }, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_trigonometric_definition() {
        let f1 = 50.0;
        let t = 0.00371;
        let th = 2.0 * PI * f1 * t;
        let m = park_dq().at_real(t, f1);
        let s = (2.0f64 / 3.0).sqrt();
        for k in 0..3 {
            let ph = th - 2.0 * PI * k as f64 / 3.0;
            assert!((m[(0, k)] - s * ph.cos()).abs() < 1e-14);
            assert!((m[(1, k)] + s * ph.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn dq0_is_orthogonal_at_every_instant() {
        for i in 0..16 {
            let t = i as f64 * 0.02 / 16.0;
            let m = park_dq0().at_real(t, 50.0);
            let e = &m * m.transpose() - nalgebra::DMatrix::<f64>::identity(3, 3);
            assert!(e.amax() < 1e-14);
        }
    }
}
