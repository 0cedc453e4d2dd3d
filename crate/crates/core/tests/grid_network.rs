mod common;

use common::*;
use hpf::grid::{assemble_admittance, audit_hypotheses, build_permutations, hybrid_partition, kron_reduce};
use hpf::ltp::HarmonicSet;
use hpf::study::{build_cigre_lv, build_desk, hybrid_matrix, ResourceSpec};
use hpf::{CMatrix, C64};

#[test]
fn admittance_matches_element_stamping() {
    for case in [build_desk(), build_cigre_lv()] {
        let topo = case.topology().unwrap();
        for f in [0.0, 50.0, 350.0, 1150.0] {
            let y = assemble_admittance(&topo, f).unwrap();
            let oracle = admittance_oracle(&topo, f);
            assert!(max_abs_m(&(&y - &oracle)) <= 1e-9 * max_abs_m(&oracle), "{} at {f} Hz", case.name);
        }
    }
}

#[test]
fn kron_reduction_matches_zero_injection_solve() {
    let topo = build_cigre_lv().topology().unwrap();
    let y = assemble_admittance(&topo, 250.0).unwrap();
    let keep: Vec<usize> = topo.retained().iter().flat_map(|k| (3 * k..3 * k + 3).collect::<Vec<_>>()).collect();
    let reduced = kron_reduce(&y, &topo.retained()).unwrap();
    let mut r = rng(4);
    let v_keep = random_vector(&mut r, keep.len());
    let elim: Vec<usize> = (0..y.nrows()).filter(|i| !keep.contains(i)).collect();
    let sub = |rows: &[usize], cols: &[usize]| CMatrix::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])]);
    let v_elim = -sub(&elim, &elim).lu().solve(&(sub(&elim, &keep) * &v_keep)).unwrap();
    let i_keep = sub(&keep, &keep) * &v_keep + sub(&keep, &elim) * v_elim;
    let err = max_abs(&(&reduced * &v_keep - &i_keep)) / max_abs(&i_keep);
    assert!(err < 1e-10, "relative error {err}");
}

#[test]
fn hybrid_blocks_reproduce_nodal_equations() {
    let case = build_desk();
    let topo = case.topology().unwrap();
    let n_s = topo.forming.len();
    let mut r = rng(9);
    for f in [0.0, 50.0, 650.0] {
        let y = kron_reduce(&assemble_admittance(&topo, f).unwrap(), &topo.retained()).unwrap();
        let hb = hybrid_partition(&y, n_s).unwrap();
        for _ in 0..20 {
            let v = random_vector(&mut r, y.nrows());
            let i = &y * &v;
            let (v_s, i_r) = hb.apply(&i.rows(0, 3 * n_s).into_owned(), &v.rows(3 * n_s, y.nrows() - 3 * n_s).into_owned());
            assert!(max_abs(&(v_s - v.rows(0, 3 * n_s))) <= 1e-10 * max_abs(&v));
            assert!(max_abs(&(i_r - i.rows(3 * n_s, y.nrows() - 3 * n_s))) <= 1e-10 * max_abs(&i));
        }
    }
}

#[test]
fn negative_orders_use_the_conjugate_blocks() {
    let case = build_desk();
    let hs = HarmonicSet::new(50.0, 5).unwrap();
    let h = hybrid_matrix(&case.topology().unwrap(), &hs, case.bases.impedance()).unwrap();
    let n = 3 * h.n_s;
    let block = |hi: usize| h.grid.ss.view((hi * n, hi * n), (n, n)).into_owned();
    for k in 1..=5 {
        let (p, m) = (hs.index(k).unwrap(), hs.index(-k).unwrap());
        assert_eq!(block(m), block(p).map(|z| z.conj()));
    }
}

#[test]
fn permutation_is_orthogonal_and_matches_index_formula() {
    for (n_s, n_r, h_max) in [(1, 1, 0), (2, 3, 4), (3, 1, 7)] {
        let hs = HarmonicSet::new(50.0, h_max).unwrap();
        let spec = build_permutations(n_s, n_r, &hs);
        let p = spec.matrix();
        assert_eq!(&p * p.transpose(), CMatrix::identity(p.nrows(), p.ncols()));
        let nh = hs.len();
        let perm = &spec.p_r;
        for hi in 0..nh {
            for g in 0..n_r {
                for ch in 0..3 {
                    assert_eq!(perm.dest((hi * n_r + g) * 3 + ch), (g * nh + hi) * 3 + ch);
                }
            }
        }
    }
}

#[test]
fn bundled_cases_pass_the_element_audit() {
    for case in [build_desk(), build_cigre_lv()] {
        let checks = audit_hypotheses(&case.topology().unwrap(), case.harmonics());
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c.passed()), "{}", case.name);
    }
}

#[test]
fn active_element_fails_the_audit() {
    let mut case = build_desk();
    case.lines[0].r_pos = -0.5;
    assert!(case.validate().is_err());
}

/// Power drawn per phase at the nominal phase voltage.
fn drawn_power(case: &hpf::study::StudyCase, node: &str) -> [C64; 3] {
    let topo = case.topology().unwrap();
    let load = topo.loads.iter().find(|l| l.node == node).unwrap();
    let v = case.bases.voltage;
    let w = 2.0 * std::f64::consts::PI * case.spectrum.f1;
    std::array::from_fn(|p| c(v * v, 0.0) / c(load.r[p], w * load.l[p]).conj())
}

#[test]
fn impedance_loads_draw_their_rating() {
    let case = build_cigre_lv();
    for r in &case.resources {
        if let ResourceSpec::ImpedanceLoad { node, p_w, pf, weights } = r {
            let s = drawn_power(&case, node);
            for p in 0..3 {
                assert!((s[p].re - (-p_w) * weights[p]).abs() <= 1e-9 * p_w.abs());
                assert!((s[p].re / s[p].norm() - pf).abs() < 1e-12);
                assert!(s[p].im > 0.0, "lagging load absorbs reactive power");
            }
        }
    }
}
