use crate::linalg::{block_diag, invert};
use crate::ltp::HarmonicSet;
use crate::{CMatrix, CVector, Error, Result};

use super::permutation::{build_permutations, permute, PermutationSpec};

const MIN_RCOND: f64 = 1e-12;

fn node_rows(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().flat_map(|&n| (0..3).map(move |p| 3 * n + p)).collect()
}

fn select(y: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])])
}

/// Eliminates every node not in `keep` (zero injection), returning the
/// admittance seen from `keep`, in that order.
pub fn kron_reduce(y: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    let n = y.nrows() / 3;
    let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let k = node_rows(keep);
    let e = node_rows(&elim);
    let ykk = select(y, &k, &k);
    if e.is_empty() {
        return Ok(ykk);
    }
    let yee = invert(&select(y, &e, &e), "Y_ee", MIN_RCOND)
        .map_err(|_| Error::Solvability("eliminated junction block is singular".into()))?;
    let yke = select(y, &k, &e);
    let yek = select(y, &e, &k);
    Ok(ykk - yke * yee.matrix * yek)
}

/// Hybrid blocks at one frequency: `[V_S; I_R] = [[H_SS, H_SR], [H_RS, H_RR]] [I_S; V_R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBlocks {
    pub ss: CMatrix,
    pub sr: CMatrix,
    pub rs: CMatrix,
    pub rr: CMatrix,
}

impl HybridBlocks {
    pub fn apply(&self, i_s: &CVector, v_r: &CVector) -> (CVector, CVector) {
        (&self.ss * i_s + &self.sr * v_r, &self.rs * i_s + &self.rr * v_r)
    }

    pub fn conj(&self) -> HybridBlocks {
        let c = |m: &CMatrix| m.map(|z| z.conj());
        HybridBlocks {
            ss: c(&self.ss),
            sr: c(&self.sr),
            rs: c(&self.rs),
            rr: c(&self.rr),
        }
    }
}

/// Partial inversion of `Y` ordered as `[S, R]` with `n_s` forming nodes.
pub fn hybrid_partition(y: &CMatrix, n_s: usize) -> Result<HybridBlocks> {
    if n_s == 0 {
        return Err(Error::Solvability("the forming set is empty".into()));
    }
    let n = y.nrows();
    let s = 3 * n_s;
    if s > n || y.ncols() != n {
        return Err(Error::Shape("admittance does not cover the forming set".into()));
    }
    let r = n - s;
    let yss = y.view((0, 0), (s, s)).into_owned();
    let ysr = y.view((0, s), (s, r)).into_owned();
    let yrs = y.view((s, 0), (r, s)).into_owned();
    let yrr = y.view((s, s), (r, r)).into_owned();
    let zss = invert(&yss, "Y_SS", MIN_RCOND)
        .map_err(|e| Error::Solvability(format!("Y_SS is not invertible: {e}")))?
        .matrix;
    let sr = -(&zss * &ysr);
    let rs = &yrs * &zss;
    let rr = yrr + &yrs * &sr;
    Ok(HybridBlocks { ss: zss, sr, rs, rr })
}

/// Hybrid matrix lifted over the harmonic set in both orderings.
#[derive(Debug, Clone)]
pub struct HybridHarmonicMatrix {
    pub harmonics: HarmonicSet,
    pub n_s: usize,
    pub n_r: usize,
    /// Grid-sorted `Ĥ` blocks (block diagonal over `h`).
    pub grid: HybridBlocks,
    /// Resource-sorted `H̃ = P Ĥ Pᵀ` blocks.
    pub resource: HybridBlocks,
    pub permutations: PermutationSpec,
}

/// Lifts one block set per harmonic (ascending `h`) and re-sorts it.
pub fn lift_hybrid(blocks: &[HybridBlocks], harmonics: &HarmonicSet) -> Result<HybridHarmonicMatrix> {
    if blocks.len() != harmonics.len() {
        return Err(Error::Completeness(format!(
            "{} hybrid block sets for {} harmonics",
            blocks.len(),
            harmonics.len()
        )));
    }
    let n_s = blocks[0].ss.nrows() / 3;
    let n_r = blocks[0].rr.nrows() / 3;
    let diag = |f: fn(&HybridBlocks) -> &CMatrix| {
        let parts: Vec<&CMatrix> = blocks.iter().map(f).collect();
        block_diag(&parts)
    };
    let grid = HybridBlocks {
        ss: diag(|b| &b.ss),
        sr: diag(|b| &b.sr),
        rs: diag(|b| &b.rs),
        rr: diag(|b| &b.rr),
    };
    let p = build_permutations(n_s, n_r, harmonics);
    let resource = HybridBlocks {
        ss: permute(&grid.ss, &p.p_s, &p.p_s),
        sr: permute(&grid.sr, &p.p_s, &p.p_r),
        rs: permute(&grid.rs, &p.p_r, &p.p_s),
        rr: permute(&grid.rr, &p.p_r, &p.p_r),
    };
    Ok(HybridHarmonicMatrix {
        harmonics: *harmonics,
        n_s,
        n_r,
        grid,
        resource,
        permutations: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn branch_y(a: C64) -> CMatrix {
        CMatrix::identity(3, 3) * a
    }

    fn chain(ys: &[C64], shunt: C64) -> CMatrix {
        let n = ys.len() + 1;
        let mut y = CMatrix::zeros(3 * n, 3 * n);
        for (k, &a) in ys.iter().enumerate() {
            let b = branch_y(a);
            for (i, j, s) in [(k, k, 1.0), (k + 1, k + 1, 1.0), (k, k + 1, -1.0), (k + 1, k, -1.0)] {
                let mut v = y.view_mut((3 * i, 3 * j), (3, 3));
                v += &b * c(s, 0.0);
            }
        }
        for i in 0..n {
            let mut v = y.view_mut((3 * i, 3 * i), (3, 3));
            v += branch_y(shunt);
        }
        y
    }

    #[test]
    fn single_forming_node_is_impedance() {
        let y = branch_y(c(2.0, -1.0));
        let h = hybrid_partition(&y, 1).unwrap();
        assert!((h.ss.clone() * &y - CMatrix::identity(3, 3)).norm() < 1e-14);
        assert_eq!(h.rr.nrows(), 0);
        assert!(hybrid_partition(&y, 0).is_err());
    }

    #[test]
    fn two_node_block_elimination() {
        let y = chain(&[c(3.0, -2.0)], c(0.1, 0.05));
        let h = hybrid_partition(&y, 1).unwrap();
        let i_s = CVector::from_fn(3, |i, _| c(1.0 + i as f64, 0.5));
        let v_r = CVector::from_fn(3, |i, _| c(0.9, -0.1 * i as f64));
        let (v_s, i_r) = h.apply(&i_s, &v_r);
        let mut v = CVector::zeros(6);
        v.rows_mut(0, 3).copy_from(&v_s);
        v.rows_mut(3, 3).copy_from(&v_r);
        let i = &y * v;
        assert!((i.rows(0, 3) - &i_s).norm() < 1e-12);
        assert!((i.rows(3, 3) - &i_r).norm() < 1e-12);
    }

    #[test]
    fn kron_matches_zero_injection() {
        let y = chain(&[c(3.0, -2.0), c(1.0, -0.5), c(2.0, -1.5)], c(0.05, 0.02));
        // keep nodes 0 and 3, eliminate 1 and 2
        let yr = kron_reduce(&y, &[0, 3]).unwrap();
        let h = hybrid_partition(&yr, 1).unwrap();
        let i_s = CVector::from_fn(3, |i, _| c(0.3 * i as f64, 1.0));
        let v_r = CVector::from_fn(3, |i, _| c(1.0, 0.2 * i as f64));
        let (v_s, i_r) = h.apply(&i_s, &v_r);
        // full solve with I = 0 at the junctions
        let known = [0usize, 1, 2, 9, 10, 11];
        let unknown = [3usize, 4, 5, 6, 7, 8];
        let mut vfull = CVector::zeros(12);
        for p in 0..3 {
            vfull[p] = v_s[p];
            vfull[9 + p] = v_r[p];
        }
        let yuu = select(&y, &unknown, &unknown);
        let yuk = select(&y, &unknown, &known);
        let vk = CVector::from_iterator(6, known.iter().map(|&i| vfull[i]));
        let vu = -yuu.lu().solve(&(yuk * vk)).unwrap();
        for (a, &i) in unknown.iter().enumerate() {
            vfull[i] = vu[a];
        }
        let ifull = &y * &vfull;
        for p in 0..3 {
            assert!((ifull[p] - i_s[p]).norm() < 1e-11);
            assert!((ifull[9 + p] - i_r[p]).norm() < 1e-11);
            assert!(ifull[3 + p].norm() < 1e-11);
        }
    }

    #[test]
    fn lift_requires_every_harmonic() {
        let hs = HarmonicSet::new(50.0, 1).unwrap();
        let y = chain(&[c(3.0, -2.0)], c(0.1, 0.0));
        let b = hybrid_partition(&y, 1).unwrap();
        assert!(matches!(lift_hybrid(&[b.clone()], &hs), Err(Error::Completeness(_))));
        let l = lift_hybrid(&[b.conj(), b.clone(), b.clone()], &hs).unwrap();
        assert_eq!(l.grid.ss.nrows(), 9);
        let back = permute(&l.resource.sr, &l.permutations.p_s, &l.permutations.p_r);
        assert_eq!(back.nrows(), 9);
    }
}
