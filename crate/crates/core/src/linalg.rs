//! Small dense linear-algebra helpers shared by the grid and solver modules.

use crate::{CMatrix, CVector, Error, Result, C64};

/// Induced infinity norm of a matrix: the largest row sum of entry magnitudes.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry magnitude of a vector.
pub fn inf_norm_vec(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced 1-norm (largest column sum of magnitudes).
pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Infinity norm of the real 2n x 2n representation `[[Re, -Im], [Im, Re]]`.
pub fn stacked_real_inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.re.abs() + z.im.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// An inverse together with its reciprocal 1-norm condition number.
#[derive(Debug, Clone)]
pub struct Inverse {
    pub matrix: CMatrix,
    pub rcond: f64,
}

/// Inverts a square matrix through LU, reporting `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
///
/// Fails with [`Error::Condition`] when the matrix is singular or the
/// reciprocal condition falls below `min_rcond`.
pub fn invert(m: &CMatrix, name: &str, min_rcond: f64) -> Result<Inverse> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "{name} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Inverse {
            matrix: m.clone(),
            rcond: 1.0,
        });
    }
    let inv = m.clone().lu().try_inverse().ok_or_else(|| Error::Condition {
        matrix: name.to_string(),
        rcond: 0.0,
    })?;
    let rcond = 1.0 / (one_norm(m) * one_norm(&inv));
    if !rcond.is_finite() || rcond < min_rcond {
        return Err(Error::Condition {
            matrix: name.to_string(),
            rcond: if rcond.is_finite() { rcond } else { 0.0 },
        });
    }
    Ok(Inverse { matrix: inv, rcond })
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for (j, col) in m.column_iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i, j, *z));
            }
        }
    }
    out
}

/// Matrix product that skips the zeros of a sparse operand.
///
/// Lifted LTP matrices are mostly block-banded; the dense product is used
/// only when both sides are dense.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "product dimension mismatch");
    let sparse = |m: &CMatrix| {
        let n = m.iter().filter(|z| z.re != 0.0 || z.im != 0.0).count();
        4 * n < m.len()
    };
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    if sparse(b) {
        for (k, j, v) in nonzeros(b) {
            out.column_mut(j).axpy(v, &a.column(k), C64::new(1.0, 0.0));
        }
    } else if sparse(a) {
        let nz = nonzeros(a);
        for j in 0..b.ncols() {
            let bj = b.column(j);
            let mut oj = out.column_mut(j);
            for &(i, k, v) in &nz {
                oj[i] += v * bj[k];
            }
        }
    } else {
        a.mul_to(b, &mut out);
    }
    out
}

/// Block-diagonal composition of square or rectangular blocks.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Lifts a real matrix to complex.
pub fn to_complex(m: &nalgebra::DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Maximum absolute entry difference, scaled by the largest entry of `reference`.
pub fn max_rel_diff(a: &CMatrix, reference: &CMatrix) -> f64 {
    let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (a - reference).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}
