use crate::ltp::HarmonicSet;
use crate::{CMatrix, CVector, C64};

/// Sorting permutation for one node set, stored as an index map.
///
/// `P x` re-sorts a grid-sorted (harmonic-major) vector into resource-sorted
/// (node-major) order; three phases travel together as a 3x3 identity block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPermutation {
    nodes: usize,
    nh: usize,
    /// `dest[j] = i` when `P_ij = 1` (grid position `j` lands on resource position `i`).
    dest: Vec<usize>,
}

impl IndexPermutation {
    /// Block positions follow `i = (s-1)|H| + h + (h_max+1)`, `j = (h+h_max)|S| + s`
    /// with 1-based `s` and block indices.
    pub fn new(nodes: usize, harmonics: &HarmonicSet) -> Self {
        let nh = harmonics.len();
        let hm = harmonics.h_max_i();
        let mut dest = vec![0; 3 * nodes * nh];
        for s in 1..=nodes as i32 {
            for h in -hm..=hm {
                let i = (s - 1) * nh as i32 + h + (hm + 1);
                let j = (h + hm) * nodes as i32 + s;
                for p in 0..3 {
                    dest[3 * (j as usize - 1) + p] = 3 * (i as usize - 1) + p;
                }
            }
        }
        Self { nodes, nh, dest }
    }

    pub fn len(&self) -> usize {
        self.dest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dest.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn harmonics_len(&self) -> usize {
        self.nh
    }

    /// Resource position of grid position `j`.
    pub fn dest(&self, j: usize) -> usize {
        self.dest[j]
    }

    /// Dense 0/1 matrix.
    pub fn matrix(&self) -> CMatrix {
        let n = self.len();
        let mut m = CMatrix::zeros(n, n);
        for (j, &i) in self.dest.iter().enumerate() {
            m[(i, j)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// `P x`.
    pub fn to_resource(&self, x: &CVector) -> CVector {
        let mut out = CVector::zeros(x.len());
        for (j, &i) in self.dest.iter().enumerate() {
            out[i] = x[j];
        }
        out
    }

    /// `Pᵀ x`.
    pub fn to_grid(&self, x: &CVector) -> CVector {
        let mut out = CVector::zeros(x.len());
        for (j, &i) in self.dest.iter().enumerate() {
            out[j] = x[i];
        }
        out
    }
}

/// `P = diag(P_S, P_R)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSpec {
    pub p_s: IndexPermutation,
    pub p_r: IndexPermutation,
}

pub fn build_permutations(n_s: usize, n_r: usize, harmonics: &HarmonicSet) -> PermutationSpec {
    PermutationSpec {
        p_s: IndexPermutation::new(n_s, harmonics),
        p_r: IndexPermutation::new(n_r, harmonics),
    }
}

impl PermutationSpec {
    pub fn matrix(&self) -> CMatrix {
        crate::linalg::block_diag(&[&self.p_s.matrix(), &self.p_r.matrix()])
    }
}

/// `P_row M P_colᵀ` by index remapping.
pub fn permute(m: &CMatrix, rows: &IndexPermutation, cols: &IndexPermutation) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let jj = cols.dest(j);
        for i in 0..m.nrows() {
            out[(rows.dest(i), jj)] = m[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltp::{Ordering, SpectralVector};

    #[test]
    fn single_node_is_identity() {
        let hs = HarmonicSet::new(50.0, 4).unwrap();
        let p = IndexPermutation::new(1, &hs);
        assert_eq!(p.matrix(), CMatrix::identity(27, 27));
    }

    #[test]
    fn two_nodes_one_harmonic_enumeration() {
        let hs = HarmonicSet::new(50.0, 1).unwrap();
        let p = IndexPermutation::new(2, &hs);
        // grid blocks (h,s): (-1,1)(-1,2)(0,1)(0,2)(1,1)(1,2)
        // resource blocks (s,h): (1,-1)(1,0)(1,1)(2,-1)(2,0)(2,1)
        let expect = [0, 3, 1, 4, 2, 5];
        for (j, e) in expect.iter().enumerate() {
            assert_eq!(p.dest(3 * j), 3 * e);
            assert_eq!(p.dest(3 * j + 2), 3 * e + 2);
        }
    }

    #[test]
    fn agrees_with_spectral_reorder() {
        let hs = HarmonicSet::new(50.0, 2).unwrap();
        let mut v = SpectralVector::zeros(hs, 3, 3, Ordering::GridSorted);
        for (i, z) in v.coeffs_mut().iter_mut().enumerate() {
            *z = C64::new(i as f64, -(i as f64));
        }
        let p = IndexPermutation::new(3, &hs);
        let r = v.reordered(Ordering::ResourceSorted);
        assert_eq!(&p.to_resource(v.coeffs()), r.coeffs());
        assert_eq!(p.to_grid(r.coeffs()), *v.coeffs());
        let m = p.matrix();
        assert_eq!(&m * m.transpose(), CMatrix::identity(45, 45));
    }
}
