use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::{CMatrix, Error, Result, C64};

use super::{HarmonicSet, Ordering, SpectralVector};

/// Fourier-series description of a T-periodic matrix `A(t) = Σ_k A_k e^{jk2πf1 t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtpMatrix {
    rows: usize,
    cols: usize,
    blocks: BTreeMap<i32, CMatrix>,
}

impl LtpMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            blocks: BTreeMap::new(),
        }
    }

    /// Time-invariant matrix (only the `k = 0` coefficient).
    pub fn constant(m: CMatrix) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        out.blocks.insert(0, m);
        out
    }

    pub fn from_real(m: &nalgebra::DMatrix<f64>) -> Self {
        Self::constant(crate::linalg::to_complex(m))
    }

    /// Builds from explicit coefficients, checking that all blocks agree in shape.
    pub fn from_blocks(blocks: BTreeMap<i32, CMatrix>) -> Result<Self> {
        let (rows, cols) = blocks
            .values()
            .next()
            .map(|b| (b.nrows(), b.ncols()))
            .ok_or_else(|| Error::Shape("no Fourier blocks given".into()))?;
        let mut out = Self::zeros(rows, cols);
        for (k, b) in blocks {
            out.set(k, b)?;
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn blocks(&self) -> &BTreeMap<i32, CMatrix> {
        &self.blocks
    }

    pub fn set(&mut self, k: i32, m: CMatrix) -> Result<()> {
        if m.nrows() != self.rows || m.ncols() != self.cols {
            return Err(Error::Shape(format!(
                "Fourier block {k} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.rows,
                self.cols
            )));
        }
        self.blocks.insert(k, m);
        Ok(())
    }

    pub fn with(mut self, k: i32, m: CMatrix) -> Result<Self> {
        self.set(k, m)?;
        Ok(self)
    }

    pub fn block(&self, k: i32) -> CMatrix {
        self.blocks
            .get(&k)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.rows, self.cols))
    }

    /// Highest `|k|` with a stored coefficient.
    pub fn support(&self) -> i32 {
        self.blocks.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// Samples the matrix at time `t` (complex; real for conjugate-symmetric data).
    pub fn at(&self, t: f64, f1: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for (k, b) in &self.blocks {
            let ph = C64::from_polar(1.0, 2.0 * PI * f1 * (*k as f64) * t);
            out += b * ph;
        }
        out
    }

    /// Real part of [`LtpMatrix::at`] as a real matrix.
    pub fn at_real(&self, t: f64, f1: f64) -> nalgebra::DMatrix<f64> {
        self.at(t, f1).map(|z| z.re)
    }

    /// Coefficients of the pointwise product `A(t) B(t)` (spectral convolution, untruncated).
    pub fn product(&self, other: &LtpMatrix) -> Result<LtpMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = LtpMatrix::zeros(self.rows, other.cols);
        for (ka, a) in &self.blocks {
            for (kb, b) in &other.blocks {
                let k = ka + kb;
                let term = a * b;
                match out.blocks.get_mut(&k) {
                    Some(acc) => *acc += term,
                    None => {
                        out.blocks.insert(k, term);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sum(&self, other: &LtpMatrix) -> Result<LtpMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("cannot add LTP matrices of different shapes".into()));
        }
        let mut out = self.clone();
        for (k, b) in &other.blocks {
            match out.blocks.get_mut(k) {
                Some(acc) => *acc += b,
                None => {
                    out.blocks.insert(*k, b.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> LtpMatrix {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b *= C64::new(s, 0.0);
        }
        out
    }

    /// `A(t)ᵀ`, coefficient-wise transpose.
    pub fn transpose(&self) -> LtpMatrix {
        LtpMatrix {
            rows: self.cols,
            cols: self.rows,
            blocks: self.blocks.iter().map(|(k, b)| (*k, b.transpose())).collect(),
        }
    }

    /// Largest violation of `A_{-k} = conj(A_k)`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.support() {
            let d = self.block(k) - self.block(-k).map(|z| z.conj());
            worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// Block-diagonal composition.
    pub fn block_diag(parts: &[&LtpMatrix]) -> LtpMatrix {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = LtpMatrix::zeros(rows, cols);
        let mut keys: Vec<i32> = parts.iter().flat_map(|p| p.blocks.keys().copied()).collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            let bs: Vec<CMatrix> = parts.iter().map(|p| p.block(k)).collect();
            let refs: Vec<&CMatrix> = bs.iter().collect();
            out.blocks.insert(k, crate::linalg::block_diag(&refs));
        }
        out
    }

    /// `[[A, B], [C, D]]` from four coefficient maps.
    pub fn from_quadrants(a: &LtpMatrix, b: &LtpMatrix, c: &LtpMatrix, d: &LtpMatrix) -> Result<LtpMatrix> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::Shape("quadrant shapes do not tile".into()));
        }
        let mut out = LtpMatrix::zeros(a.rows + c.rows, a.cols + b.cols);
        let mut keys: Vec<i32> = [a, b, c, d].iter().flat_map(|p| p.blocks.keys().copied()).collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            let mut m = CMatrix::zeros(out.rows, out.cols);
            m.view_mut((0, 0), (a.rows, a.cols)).copy_from(&a.block(k));
            m.view_mut((0, a.cols), (b.rows, b.cols)).copy_from(&b.block(k));
            m.view_mut((a.rows, 0), (c.rows, c.cols)).copy_from(&c.block(k));
            m.view_mut((a.rows, a.cols), (d.rows, d.cols)).copy_from(&d.block(k));
            out.blocks.insert(k, m);
        }
        Ok(out)
    }
}

/// Dense realization of a lifted LTP matrix over a harmonic set.
///
/// Rows and columns are harmonic-major: entry `(i·rows + a, j·cols + b)`
/// belongs to harmonics `(h_i, h_j)`. This is the layout of a single-group
/// [`SpectralVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzOperator {
    harmonics: HarmonicSet,
    rows: usize,
    cols: usize,
    matrix: CMatrix,
}

/// Lifts `A(t)` to its block-Toeplitz operator: block `(i, j)` is `A_{h_i - h_j}`.
pub fn lift_ltp_matrix(a: &LtpMatrix, harmonics: &HarmonicSet) -> Result<ToeplitzOperator> {
    let lim = 2 * harmonics.h_max_i();
    if let Some(k) = a.blocks.keys().find(|k| k.abs() > lim) {
        return Err(Error::Shape(format!(
            "Fourier block {k} lies outside ±{lim} for h_max = {}",
            harmonics.h_max
        )));
    }
    let n = harmonics.len();
    let (r, c) = (a.rows, a.cols);
    let mut m = CMatrix::zeros(n * r, n * c);
    for i in 0..n {
        for j in 0..n {
            let k = harmonics.order(i) - harmonics.order(j);
            if let Some(b) = a.blocks.get(&k) {
                m.view_mut((i * r, j * c), (r, c)).copy_from(b);
            }
        }
    }
    Ok(ToeplitzOperator {
        harmonics: *harmonics,
        rows: r,
        cols: c,
        matrix: m,
    })
}

impl ToeplitzOperator {
    /// Wraps an already realized matrix (e.g. a resolvent that is no longer Toeplitz).
    pub fn from_dense(harmonics: HarmonicSet, rows: usize, cols: usize, matrix: CMatrix) -> Result<Self> {
        let n = harmonics.len();
        if matrix.nrows() != n * rows || matrix.ncols() != n * cols {
            return Err(Error::Shape(format!(
                "dense operator is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                n * rows,
                n * cols
            )));
        }
        Ok(Self {
            harmonics,
            rows,
            cols,
            matrix,
        })
    }

    pub fn identity(harmonics: HarmonicSet, size: usize) -> Self {
        let n = harmonics.len() * size;
        Self {
            harmonics,
            rows: size,
            cols: size,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(harmonics: HarmonicSet, rows: usize, cols: usize) -> Self {
        let n = harmonics.len();
        Self {
            harmonics,
            rows,
            cols,
            matrix: CMatrix::zeros(n * rows, n * cols),
        }
    }

    /// Block-diagonal operator from one matrix per harmonic (frequency-wise elements).
    pub fn from_harmonic_blocks(harmonics: HarmonicSet, blocks: &[CMatrix]) -> Result<Self> {
        let n = harmonics.len();
        if blocks.len() != n {
            return Err(Error::Completeness(format!(
                "{} harmonic blocks given, {n} required",
                blocks.len()
            )));
        }
        let (r, c) = (blocks[0].nrows(), blocks[0].ncols());
        let mut m = CMatrix::zeros(n * r, n * c);
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != r || b.ncols() != c {
                return Err(Error::Shape("harmonic blocks differ in shape".into()));
            }
            m.view_mut((i * r, i * c), (r, c)).copy_from(b);
        }
        Self::from_dense(harmonics, r, c, m)
    }

    pub fn harmonics(&self) -> &HarmonicSet {
        &self.harmonics
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Block between output harmonic `h` and input harmonic `k`.
    pub fn block(&self, h: i32, k: i32) -> Option<CMatrix> {
        let i = self.harmonics.index(h)?;
        let j = self.harmonics.index(k)?;
        Some(
            self.matrix
                .view((i * self.rows, j * self.cols), (self.rows, self.cols))
                .into_owned(),
        )
    }

    /// Truncated convolution `A * x`.
    pub fn apply(&self, x: &SpectralVector) -> Result<SpectralVector> {
        if !x.harmonics().same_as(&self.harmonics) {
            return Err(Error::Incompatible("operator and vector use different harmonic sets".into()));
        }
        if x.groups() != 1 || x.width() != self.cols {
            return Err(Error::Incompatible(format!(
                "operator expects {} channels, vector has {}x{}",
                self.cols,
                x.groups(),
                x.width()
            )));
        }
        let y = &self.matrix * x.coeffs();
        SpectralVector::from_coeffs(self.harmonics, 1, self.rows, Ordering::ResourceSorted, y)
    }

    pub fn compose(&self, other: &ToeplitzOperator) -> Result<ToeplitzOperator> {
        if !self.harmonics.same_as(&other.harmonics) || self.cols != other.rows {
            return Err(Error::Incompatible("operators cannot be composed".into()));
        }
        Ok(ToeplitzOperator {
            harmonics: self.harmonics,
            rows: self.rows,
            cols: other.cols,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &ToeplitzOperator) -> Result<ToeplitzOperator> {
        self.check_same_shape(other)?;
        Ok(ToeplitzOperator {
            matrix: &self.matrix + &other.matrix,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &ToeplitzOperator) -> Result<ToeplitzOperator> {
        self.check_same_shape(other)?;
        Ok(ToeplitzOperator {
            matrix: &self.matrix - &other.matrix,
            ..self.clone()
        })
    }

    pub fn neg(&self) -> ToeplitzOperator {
        ToeplitzOperator {
            matrix: -&self.matrix,
            ..self.clone()
        }
    }

    fn check_same_shape(&self, other: &ToeplitzOperator) -> Result<()> {
        if !self.harmonics.same_as(&other.harmonics) || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Incompatible("operator shapes differ".into()));
        }
        Ok(())
    }

    pub fn inf_norm(&self) -> f64 {
        crate::linalg::inf_norm(&self.matrix)
    }
}
