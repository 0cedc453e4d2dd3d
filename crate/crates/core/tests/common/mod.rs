#![allow(dead_code)]

use std::collections::BTreeMap;

use hpf::grid::GridTopology;
use hpf::ltp::{HarmonicSet, LtpMatrix, Ordering, SpectralVector};
use hpf::solver::{FixedPointMap, ReducedSystem, ReferenceMap};
use hpf::{CMatrix, CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_c(r: &mut ChaCha8Rng) -> C64 {
    c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_c(r))
}

pub fn random_vector(r: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| random_c(r))
}

/// Real-valued periodic matrix with Fourier support `|k| ≤ support`.
pub fn random_ltp(r: &mut ChaCha8Rng, rows: usize, cols: usize, support: i32) -> LtpMatrix {
    let mut blocks = BTreeMap::new();
    blocks.insert(0, random_matrix(r, rows, cols).map(|z| c(z.re, 0.0)));
    for k in 1..=support {
        let m = random_matrix(r, rows, cols).scale(0.5 / k as f64);
        blocks.insert(-k, m.map(|z| z.conj()));
        blocks.insert(k, m);
    }
    LtpMatrix::from_blocks(blocks).unwrap()
}

pub fn random_spectrum(r: &mut ChaCha8Rng, hs: HarmonicSet, width: usize) -> SpectralVector {
    let mut x = SpectralVector::single(hs, width);
    for h in hs.orders() {
        for ch in 0..width {
            x.set(0, h, ch, random_c(r));
        }
    }
    x
}

/// Truncated product `a(t) x(t)` through FFT sampling on a grid fine enough
/// to hold every product harmonic without aliasing.
pub fn fft_product(a: &LtpMatrix, x: &SpectralVector) -> SpectralVector {
    let hs = *x.harmonics();
    let m = hs.h_max_i();
    let n = ((2 * (m + a.support()) + 2) as usize).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let inverse = planner.plan_fft_inverse(n);
    let forward = planner.plan_fft_forward(n);
    let width = x.width();
    let to_time = |coeff: &dyn Fn(i32) -> C64| -> Vec<C64> {
        let mut buf = vec![c(0.0, 0.0); n];
        for h in -(n as i32) / 2..(n as i32) / 2 {
            buf[h.rem_euclid(n as i32) as usize] = coeff(h);
        }
        inverse.process(&mut buf);
        buf
    };
    let xt: Vec<Vec<C64>> = (0..width)
        .map(|ch| to_time(&|h| if h.abs() <= m { x.get(0, h, ch) } else { c(0.0, 0.0) }))
        .collect();
    let mut out = SpectralVector::single(hs, a.rows());
    for i in 0..a.rows() {
        let mut yt = vec![c(0.0, 0.0); n];
        for (j, xj) in xt.iter().enumerate() {
            let at = to_time(&|k| a.block(k)[(i, j)]);
            for s in 0..n {
                yt[s] += at[s] * xj[s];
            }
        }
        forward.process(&mut yt);
        for h in hs.orders() {
            out.set(0, h, i, yt[h.rem_euclid(n as i32) as usize] / n as f64);
        }
    }
    out
}

pub fn max_abs(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_m(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Test-side constant-power reference: `Ψ_0 = 1/v_0`, `Ψ_h = -v_h / v_0²`
/// at first order, D channel `P Ψ`, Q channel `-Q Ψ`.
pub fn oracle_references(map: &FixedPointMap, w_rho: &CVector) -> CVector {
    let hs = map.harmonics;
    let nh = hs.len();
    let i0 = hs.index(0).unwrap();
    let mut out = CVector::zeros(map.kappa_dim());
    for s in &map.slots {
        match &s.reference {
            ReferenceMap::Pq(pq) => {
                assert_eq!(pq.order.as_int(), 1);
                let v = |hi: usize| w_rho[s.rho_offset + 2 * hi];
                let v0 = v(i0);
                for hi in 0..nh {
                    let psi = if hi == i0 { c(1.0, 0.0) / v0 } else { -v(hi) / (v0 * v0) };
                    out[s.kappa_offset + 2 * hi] = psi * pq.p;
                    out[s.kappa_offset + 2 * hi + 1] = -psi * pq.q;
                }
            }
            ReferenceMap::Fixed(w) => {
                out.rows_mut(s.kappa_offset, w.len()).copy_from(w.coeffs());
            }
        }
    }
    out
}

/// Un-reduced network/resource mismatch with the test-side reference law.
pub fn oracle_mismatch(sys: &ReducedSystem, i_s: &CVector, v_r: &CVector) -> CVector {
    let w_kr = oracle_references(&sys.map, &(&sys.t_kg * v_r));
    let dv = &sys.h_ss * i_s + &sys.h_sr * v_r - &sys.g_pp_s * i_s - &sys.g_pk_s * &sys.w_kappa_s;
    let di = &sys.h_rs * i_s + &sys.h_rr * v_r - &sys.g_pp_r * v_r - &sys.g_pk_r * w_kr;
    let mut out = CVector::zeros(dv.len() + di.len());
    out.rows_mut(0, dv.len()).copy_from(&dv);
    out.rows_mut(dv.len(), di.len()).copy_from(&di);
    out
}

/// Balanced 1 p.u. RMS fundamental at `nodes` nodes, resource-sorted.
pub fn balanced_fundamental(hs: &HarmonicSet, nodes: usize) -> CVector {
    let nh = hs.len();
    let mut v = CVector::zeros(3 * nh * nodes);
    let (ip, im) = (hs.index(1).unwrap(), hs.index(-1).unwrap());
    for g in 0..nodes {
        for p in 0..3 {
            let z = C64::from_polar(0.5f64.sqrt(), -2.0 * std::f64::consts::PI * p as f64 / 3.0);
            v[(g * nh + ip) * 3 + p] = z;
            v[(g * nh + im) * 3 + p] = z.conj();
        }
    }
    v
}

/// Dense Newton on `(Ĩ_S, Ṽ_R)` with a central-difference Jacobian.
///
/// Returns the solution and the final mismatch norm.
pub fn dense_newton(sys: &ReducedSystem, tol: f64, max_iter: usize) -> (CVector, CVector, f64) {
    let ns = sys.h_ss.nrows();
    let nr = sys.h_rr.nrows();
    let n = ns + nr;
    let mut z = CVector::zeros(n);
    z.rows_mut(ns, nr).copy_from(&balanced_fundamental(&sys.harmonics, nr / (3 * sys.harmonics.len())));
    let f = |z: &CVector| oracle_mismatch(sys, &z.rows(0, ns).into_owned(), &z.rows(ns, nr).into_owned());
    let mut r = f(&z);
    for _ in 0..max_iter {
        if max_abs(&r) <= tol {
            break;
        }
        let eps = 1e-6;
        let mut jac = CMatrix::zeros(n, n);
        for k in 0..n {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[k] += eps;
            zm[k] -= eps;
            jac.set_column(k, &((f(&zp) - f(&zm)) / c(2.0 * eps, 0.0)));
        }
        let step = jac.lu().solve(&r).expect("Newton Jacobian is singular");
        z -= step;
        r = f(&z);
    }
    let res = max_abs(&r);
    (z.rows(0, ns).into_owned(), z.rows(ns, nr).into_owned(), res)
}

/// Affine contraction with `∇Φ = λ P D`, `P` a permutation and `D` unit-modulus
/// phases on the D-axis harmonic entries (`h ≠ 0`), so `‖∇Φ‖∞` equals the
/// spectral radius `λ`. The `h = 0` D entry is held at `v0` by the drive, which
/// makes the first-order power reference affine in the remaining entries.
/// With `drive_scale = 0` the fixed point has zero harmonics and `∇Φ` there is
/// exactly `λ P D`; otherwise a `v0` column of size `O(drive_scale)` appears.
pub struct AffineCase {
    pub map: FixedPointMap,
    pub jacobian: CMatrix,
    pub lambda: f64,
}

pub fn affine_case(seed: u64, lambda: f64, h_max: usize, followers: usize, drive_scale: f64) -> AffineCase {
    use hpf::cider::{PqReference, SeriesOrder};
    let mut r = rng(seed);
    let hs = HarmonicSet::new(50.0, h_max).unwrap();
    let nh = hs.len();
    let i0 = hs.index(0).unwrap();
    let dim = 2 * nh * followers;
    let v0 = 1.6;
    let pqs: Vec<PqReference> = (0..followers)
        .map(|_| PqReference {
            p: r.random_range(0.3..1.2),
            q: 0.0,
            order: SeriesOrder::First,
        })
        .collect();
    let free: Vec<(usize, usize)> = (0..followers)
        .flat_map(|f| (0..nh).filter(move |hi| *hi != i0).map(move |hi| (f, hi)))
        .collect();
    let mut perm: Vec<usize> = (0..free.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, r.random_range(0..=i));
    }
    let mut jac = CMatrix::zeros(dim, dim);
    let mut b = CMatrix::zeros(dim, dim);
    for (row, &col) in perm.iter().enumerate() {
        let (fr, hr) = free[row];
        let (fc, hc) = free[col];
        let phase = C64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU));
        let ri = fr * 2 * nh + 2 * hr;
        let ci = fc * 2 * nh + 2 * hc;
        jac[(ri, ci)] = phase * lambda;
        // ∂W_κ,D,h / ∂v_h = -P / v0² at first order.
        b[(ri, ci)] = phase * lambda / c(-pqs[fc].p / (v0 * v0), 0.0);
    }
    let mut drive = random_vector(&mut r, dim).scale(drive_scale);
    for f in 0..followers {
        drive[f * 2 * nh + 2 * i0] = c(v0, 0.0);
        drive[f * 2 * nh + 2 * i0 + 1] = c(0.0, 0.0);
    }
    let mut flat = CVector::zeros(dim);
    for f in 0..followers {
        flat[f * 2 * nh + 2 * i0] = c(v0, 0.0);
    }
    let slots = pqs
        .into_iter()
        .enumerate()
        .map(|(i, pq)| (format!("F{i}"), 2, 2, ReferenceMap::Pq(pq)))
        .collect();
    let map = FixedPointMap::new(hs, b, drive, slots, flat).unwrap();
    AffineCase {
        map,
        jacobian: jac,
        lambda,
    }
}

/// Closed-form fixed point of the affine case: `(I - J) W = d` solved directly.
pub fn affine_fixed_point(case: &AffineCase) -> CVector {
    let map = &case.map;
    let base = map.eval(&map.flat_start).unwrap();
    let rhs = &base - &case.jacobian * &map.flat_start;
    let n = map.dim();
    (CMatrix::identity(n, n) - &case.jacobian).lu().solve(&rhs).unwrap()
}

pub fn spectrum_from(hs: HarmonicSet, width: usize, coeffs: CVector) -> SpectralVector {
    SpectralVector::from_coeffs(hs, 1, width, Ordering::ResourceSorted, coeffs).unwrap()
}

pub fn fortescue_oracle(zero: C64, pos: C64) -> CMatrix {
    let a = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let one = c(1.0, 0.0);
    let t = CMatrix::from_row_slice(3, 3, &[one, one, one, one, a * a, a, one, a, a * a]);
    let d = CMatrix::from_diagonal(&CVector::from_vec(vec![zero, pos, pos]));
    &t * d * t.try_inverse().unwrap()
}

/// Nodal admittance built element by element from the sequence data.
pub fn admittance_oracle(topo: &GridTopology, f: f64) -> CMatrix {
    let n = topo.nodes.len();
    let w = 2.0 * std::f64::consts::PI * f;
    let mut y = CMatrix::zeros(3 * n, 3 * n);
    let pos = |id: &str| topo.nodes.iter().position(|x| x == id).unwrap();
    for b in &topo.branches {
        let l = topo.line_types.iter().find(|l| l.id == b.line).unwrap();
        let km = b.length_m / 1000.0;
        let z = fortescue_oracle(c(l.r_zero, w * l.l_zero) * km, c(l.r_pos, w * l.l_pos) * km);
        let ysh = fortescue_oracle(c(0.0, w * l.c_zero * km / 2.0), c(0.0, w * l.c_pos * km / 2.0));
        let yb = z.try_inverse().unwrap();
        let (i, j) = (pos(&b.from), pos(&b.to));
        for (r, s, m) in [(i, i, &yb + &ysh), (j, j, &yb + &ysh), (i, j, -&yb), (j, i, -&yb)] {
            let mut v = y.view_mut((3 * r, 3 * s), (3, 3));
            v += m;
        }
    }
    for l in &topo.loads {
        let i = pos(&l.node);
        for p in 0..3 {
            y[(3 * i + p, 3 * i + p)] += c(1.0, 0.0) / c(l.r[p], w * l.l[p]);
        }
    }
    y
}
