use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::cider::{closed_loop_matrices, park::park_dq, FeedbackInterconnect, LtpStateSpace, SeriesOrder};
use crate::grid::fortescue;
use crate::ltp::LtpMatrix;
use crate::study::{HarmonicEntry, ResourceSpec, StudyCase};
use crate::{Error, Result, C64};

/// Where the voltage of a node lives in the state vector.
#[derive(Debug, Clone)]
pub(crate) enum NodeVoltage {
    State(usize),
    /// Imposed by a forming converter: `v = cv x`.
    Converter { x_off: usize, cv: DMatrix<f64> },
}

#[derive(Debug, Clone)]
pub(crate) struct BranchPart {
    pub from: usize,
    pub to: usize,
    pub off: usize,
    pub r: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

/// Series R-L behind an ideal source (Thévenin voltage or Norton current).
#[derive(Debug, Clone)]
pub(crate) struct SourcePart {
    pub node: usize,
    pub off: usize,
    pub r: f64,
    pub l: f64,
    pub table: Vec<HarmonicEntry>,
}

#[derive(Debug, Clone)]
pub(crate) struct LoadPhase {
    pub node: usize,
    pub phase: usize,
    pub r: f64,
    /// State offset of the phase current; `None` for a purely resistive phase.
    pub off: Option<usize>,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum ConverterReference {
    Forming(DVector<f64>),
    Pq { p: f64, q: f64, order: SeriesOrder },
}

#[derive(Debug, Clone)]
pub(crate) struct ConverterPart {
    pub node: usize,
    pub x_off: usize,
    pub nx: usize,
    pub sys: LtpStateSpace,
    pub fb: FeedbackInterconnect,
    pub rho: LtpMatrix,
    pub reference: ConverterReference,
}

/// Per-period quantities of the power references, frozen within a period.
#[derive(Debug, Clone)]
pub(crate) struct PeriodParams {
    pub v0: Vec<f64>,
    /// Second-order series term `ξ²` from the previous period, per follower and sample.
    pub lag: Vec<Vec<f64>>,
}

/// Pointwise converter coupling at one instant.
pub(crate) struct ConverterTerms {
    pub acl: DMatrix<f64>,
    /// `∂x'/∂v` (following) or `∂x'/∂i_grid` (forming), `nx × 3`.
    pub e_pi: DMatrix<f64>,
    pub e_k: DMatrix<f64>,
    pub g_x: DMatrix<f64>,
    pub g_v: DMatrix<f64>,
    pub g_k: DMatrix<f64>,
    pub rho_d: DMatrix<f64>,
}

/// Descriptor model `M z' = A(t) z + b(t)` of a study case in p.u.
#[derive(Debug, Clone)]
pub struct TdsModel {
    pub(crate) f1: f64,
    pub(crate) n: usize,
    pub(crate) nodes: Vec<String>,
    pub(crate) voltage: Vec<NodeVoltage>,
    pub(crate) cap: Vec<DMatrix<f64>>,
    pub(crate) m: DMatrix<f64>,
    pub(crate) a_static: DMatrix<f64>,
    pub(crate) branches: Vec<BranchPart>,
    pub(crate) thevenin: Vec<SourcePart>,
    pub(crate) norton: Vec<SourcePart>,
    pub(crate) loads: Vec<LoadPhase>,
    pub(crate) converters: Vec<ConverterPart>,
    /// Follower index of each `Pq` converter.
    pub(crate) followers: Vec<usize>,
    pub(crate) nominal_direct: f64,
}

fn real_fortescue(zero: f64, pos: f64, scale: f64) -> DMatrix<f64> {
    fortescue(C64::new(zero, 0.0), C64::new(pos, 0.0)).map(|z| z.re * scale)
}

fn add(a: &mut DMatrix<f64>, r: usize, c: usize, k: &DMatrix<f64>) {
    let mut v = a.view_mut((r, c), (k.nrows(), k.ncols()));
    v += k;
}

/// Balanced source waveform of phase `p` at `t`.
pub(crate) fn source_value(table: &[HarmonicEntry], p: usize, t: f64, f1: f64) -> f64 {
    table
        .iter()
        .map(|e| {
            let h = e.order as f64;
            if e.order == 0 {
                e.magnitude * e.phase.cos()
            } else {
                2f64.sqrt() * e.magnitude * (2.0 * PI * f1 * h * t + e.phase - h * 2.0 * PI * p as f64 / 3.0).cos()
            }
        })
        .sum()
}

impl TdsModel {
    /// Builds the simulation model from the same designs and bases as the harmonic-domain study.
    pub fn build(case: &StudyCase) -> Result<TdsModel> {
        let f1 = case.spectrum.f1;
        let zb = case.bases.impedance();
        let w1 = 2.0 * PI * f1;
        let topo = case.topology()?;
        let nn = topo.nodes.len();
        let idx = |id: &str| topo.node_index(id).expect("validated");

        let mut cap = vec![DMatrix::zeros(3, 3); nn];
        let mut branches = Vec::new();
        for b in &topo.branches {
            let line = topo.line_type(&b.line).expect("validated");
            let km = b.length_m / 1000.0;
            let half = real_fortescue(line.c_zero, line.c_pos, km * zb / 2.0);
            let (i, j) = (idx(&b.from), idx(&b.to));
            cap[i] += &half;
            cap[j] += &half;
            branches.push(BranchPart {
                from: i,
                to: j,
                off: 0,
                r: real_fortescue(line.r_zero, line.r_pos, km / zb),
                l: real_fortescue(line.l_zero, line.l_pos, km / zb),
            });
        }

        let mut converters = Vec::new();
        let mut thevenin = Vec::new();
        let mut norton = Vec::new();
        let mut forming_node = vec![None; nn];
        for r in &case.resources {
            let node = idx(r.node());
            match r {
                ResourceSpec::TeSource {
                    r_ohm, x_ohm, harmonics, ..
                }
                | ResourceSpec::NeSource {
                    r_ohm, x_ohm, harmonics, ..
                } => {
                    if !(*x_ohm > 0.0) {
                        return Err(Error::Config(format!(
                            "time-domain source at {} needs a positive reactance",
                            r.node()
                        )));
                    }
                    let part = SourcePart {
                        node,
                        off: 0,
                        r: r_ohm / zb,
                        l: x_ohm / zb / w1,
                        table: harmonics.clone(),
                    };
                    if matches!(r, ResourceSpec::TeSource { .. }) {
                        thevenin.push(part);
                    } else {
                        norton.push(part);
                    }
                }
                ResourceSpec::Forming { v_rms, design, .. } => {
                    let (sys, fb) = design.build(&case.bases)?;
                    let mut w = DVector::zeros(sys.n_w() - fb.n_w_pi());
                    w[0] = 3f64.sqrt() * v_rms / case.bases.voltage;
                    forming_node[node] = Some(converters.len());
                    converters.push(ConverterPart {
                        node,
                        x_off: 0,
                        nx: sys.n_x(),
                        rho: park_dq(),
                        sys,
                        fb,
                        reference: ConverterReference::Forming(w),
                    });
                }
                ResourceSpec::Following { p_w, q_var, design, .. } => {
                    let (sys, fb) = design.build(&case.bases)?;
                    let rho = park_dq().product(&fb.t_pi_gamma)?;
                    converters.push(ConverterPart {
                        node,
                        x_off: 0,
                        nx: sys.n_x(),
                        sys,
                        fb,
                        rho,
                        reference: ConverterReference::Pq {
                            p: p_w / case.bases.power,
                            q: q_var / case.bases.power,
                            order: case.solver.series_order()?,
                        },
                    });
                }
                ResourceSpec::ImpedanceLoad { .. } => {}
            }
        }

        // State layout: node voltages, branch currents, source currents, load currents, converter states.
        let mut n = 0;
        let mut voltage = Vec::with_capacity(nn);
        for k in 0..nn {
            if forming_node[k].is_some() {
                voltage.push(NodeVoltage::Converter {
                    x_off: 0,
                    cv: DMatrix::zeros(0, 0),
                });
            } else {
                if cap[k].clone().cholesky().is_none() {
                    return Err(Error::Config(format!(
                        "node {} has no shunt capacitance; the time-domain model needs one",
                        topo.nodes[k]
                    )));
                }
                voltage.push(NodeVoltage::State(n));
                n += 3;
            }
        }
        for b in &mut branches {
            b.off = n;
            n += 3;
        }
        for s in thevenin.iter_mut().chain(norton.iter_mut()) {
            s.off = n;
            n += 3;
        }
        let mut loads = Vec::new();
        for l in &topo.loads {
            for p in 0..3 {
                let (r, lh) = (l.r[p] / zb, l.l[p] / zb);
                let off = (lh > 0.0).then(|| {
                    n += 1;
                    n - 1
                });
                loads.push(LoadPhase {
                    node: idx(&l.node),
                    phase: p,
                    r,
                    off,
                    l: lh,
                });
            }
        }
        for c in &mut converters {
            c.x_off = n;
            n += c.nx;
        }
        let period = 1.0 / f1;
        for (k, slot) in forming_node.iter().enumerate() {
            let Some(ci) = slot else { continue };
            let c = &converters[*ci];
            let t0 = c.terms(0.0, f1)?;
            for frac in [0.13, 0.37, 0.71] {
                let tk = c.terms(frac * period, f1)?;
                if (&tk.g_x - &t0.g_x).amax() > 1e-12 || (&tk.e_pi - &t0.e_pi).amax() > 1e-12 {
                    return Err(Error::Config(format!(
                        "forming converter at {} has a time-varying output map",
                        topo.nodes[k]
                    )));
                }
            }
            if t0.g_v.amax() > 0.0 {
                return Err(Error::Config(format!(
                    "forming converter at {} has a direct feedthrough to its voltage",
                    topo.nodes[k]
                )));
            }
            voltage[k] = NodeVoltage::Converter {
                x_off: c.x_off,
                cv: t0.g_x.clone(),
            };
        }

        let followers = converters
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.reference, ConverterReference::Pq { .. }))
            .map(|(i, _)| i)
            .collect();
        let mut model = TdsModel {
            f1,
            n,
            nodes: topo.nodes.clone(),
            voltage,
            cap,
            m: DMatrix::zeros(n, n),
            a_static: DMatrix::zeros(n, n),
            branches,
            thevenin,
            norton,
            loads,
            converters,
            followers,
            nominal_direct: 3f64.sqrt(),
        };
        model.assemble_static(&forming_node)?;
        Ok(model)
    }

    /// Adds `k · v_node` to rows `r..r+k.nrows()`.
    pub(crate) fn add_voltage(&self, a: &mut DMatrix<f64>, r: usize, k: &DMatrix<f64>, node: usize) {
        match &self.voltage[node] {
            NodeVoltage::State(o) => add(a, r, *o, k),
            NodeVoltage::Converter { x_off, cv } => add(a, r, *x_off, &(k * cv)),
        }
    }

    fn assemble_static(&mut self, forming_node: &[Option<usize>]) -> Result<()> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        let mut a = DMatrix::zeros(n, n);
        let eye = DMatrix::<f64>::identity(3, 3);
        // KCL at a node: row block and the matrix that maps injected current into it.
        let kcl: Vec<(usize, DMatrix<f64>)> = (0..self.nodes.len())
            .map(|k| match (&self.voltage[k], forming_node[k]) {
                (NodeVoltage::State(o), _) => (*o, eye.clone()),
                (NodeVoltage::Converter { .. }, Some(ci)) => {
                    let c = &self.converters[ci];
                    let t0 = c.terms(0.0, self.f1).expect("checked at build");
                    // Forming converter sees i_grid = C v' + outflows: its rows absorb the node equation.
                    (c.x_off, -t0.e_pi)
                }
                _ => unreachable!(),
            })
            .collect();
        for k in 0..self.nodes.len() {
            match &self.voltage[k] {
                NodeVoltage::State(o) => add(&mut m, *o, *o, &self.cap[k]),
                NodeVoltage::Converter { x_off, cv } => {
                    let (_, ref e) = kcl[k];
                    let nx = cv.ncols();
                    let mut blk = DMatrix::identity(nx, nx);
                    blk += e * &self.cap[k] * cv;
                    add(&mut m, *x_off, *x_off, &blk);
                }
            }
        }
        for c in &self.converters {
            if forming_node[c.node].is_none() {
                add(&mut m, c.x_off, c.x_off, &DMatrix::identity(c.nx, c.nx));
            }
        }
        for b in &self.branches {
            add(&mut m, b.off, b.off, &b.l);
            add(&mut a, b.off, b.off, &(-&b.r));
            self.add_voltage(&mut a, b.off, &eye, b.from);
            self.add_voltage(&mut a, b.off, &(-&eye), b.to);
            let (rf, ref kf) = kcl[b.from];
            add(&mut a, rf, b.off, &(-kf));
            let (rt, ref kt) = kcl[b.to];
            add(&mut a, rt, b.off, kt);
        }
        for s in &self.thevenin {
            add(&mut m, s.off, s.off, &(&eye * s.l));
            add(&mut a, s.off, s.off, &(&eye * -s.r));
            self.add_voltage(&mut a, s.off, &(-&eye), s.node);
            let (r, ref k) = kcl[s.node];
            add(&mut a, r, s.off, k);
        }
        for s in &self.norton {
            add(&mut m, s.off, s.off, &(&eye * s.l));
            add(&mut a, s.off, s.off, &(&eye * -s.r));
            self.add_voltage(&mut a, s.off, &eye, s.node);
            let (r, ref k) = kcl[s.node];
            add(&mut a, r, s.off, &(-k));
        }
        for l in &self.loads {
            let (r, ref k) = kcl[l.node];
            let col = k.columns(l.phase, 1).into_owned();
            let mut sel = DMatrix::zeros(1, 3);
            sel[l.phase] = 1.0;
            match l.off {
                Some(o) => {
                    m[(o, o)] = l.l;
                    a[(o, o)] = -l.r;
                    self.add_voltage(&mut a, o, &sel, l.node);
                    add(&mut a, r, o, &(-col));
                }
                None => self.add_voltage(&mut a, r, &(-col * sel / l.r), l.node),
            }
        }
        self.m = m;
        self.a_static = a;
        Ok(())
    }

    /// Size of the state vector.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    /// `A(t)` and `b(t)` for the given reference parameters; `sample` indexes the lagged term.
    pub(crate) fn system(&self, t: f64, params: &PeriodParams, sample: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let mut a = self.a_static.clone();
        let mut b = DVector::zeros(self.n);
        for s in &self.thevenin {
            for p in 0..3 {
                b[s.off + p] = source_value(&s.table, p, t, self.f1);
            }
        }
        for s in &self.norton {
            if let NodeVoltage::State(o) = self.voltage[s.node] {
                for p in 0..3 {
                    b[o + p] += source_value(&s.table, p, t, self.f1);
                }
            }
        }
        for (ci, c) in self.converters.iter().enumerate() {
            let tm = c.terms(t, self.f1)?;
            add(&mut a, c.x_off, c.x_off, &tm.acl);
            match &c.reference {
                ConverterReference::Forming(w) => {
                    let bx = &tm.e_k * w;
                    let mut v = b.rows_mut(c.x_off, c.nx);
                    v += bx;
                }
                ConverterReference::Pq { p, q, .. } => {
                    let fi = self.followers.iter().position(|&i| i == ci).expect("follower");
                    let (lin, cst) = params.reference_coefficients(fi, sample);
                    let u = DVector::from_vec(vec![*p, -*q]);
                    // w_κ = u (cst + lin · rho_d v)
                    let ek_u = &tm.e_k * &u;
                    let gk_u = &tm.g_k * &u;
                    let dx_dv = &tm.e_pi + &ek_u * &tm.rho_d * lin;
                    self.add_voltage(&mut a, c.x_off, &dx_dv, c.node);
                    let o = match self.voltage[c.node] {
                        NodeVoltage::State(o) => o,
                        _ => unreachable!("followers sit on voltage nodes"),
                    };
                    add(&mut a, o, c.x_off, &tm.g_x);
                    let di_dv = &tm.g_v + &gk_u * &tm.rho_d * lin;
                    self.add_voltage(&mut a, o, &di_dv, c.node);
                    {
                        let mut v = b.rows_mut(c.x_off, c.nx);
                        v += &ek_u * cst;
                    }
                    let mut v = b.rows_mut(o, 3);
                    v += &gk_u * cst;
                }
            }
        }
        Ok((a, b))
    }

    /// Node phase voltages (3 per node) from a state vector.
    pub(crate) fn node_voltage(&self, z: &DVector<f64>, k: usize) -> DVector<f64> {
        match &self.voltage[k] {
            NodeVoltage::State(o) => z.rows(*o, 3).into_owned(),
            NodeVoltage::Converter { x_off, cv } => cv * z.rows(*x_off, cv.ncols()),
        }
    }
}

impl PeriodParams {
    pub(crate) fn new(followers: usize, nominal: f64, samples: usize) -> Self {
        Self {
            v0: vec![nominal; followers],
            lag: vec![vec![0.0; samples]; followers],
        }
    }

    /// `(lin, cst)` with `Ψ(t) = cst + lin · v_D(t)`.
    fn reference_coefficients(&self, fi: usize, sample: usize) -> (f64, f64) {
        let v0 = self.v0[fi];
        let lag = self.lag[fi][sample % self.lag[fi].len()];
        (-1.0 / (v0 * v0), (2.0 + lag) / v0)
    }
}

impl ConverterPart {
    pub(crate) fn terms(&self, t: f64, f1: f64) -> Result<ConverterTerms> {
        let [acl, ecl, ccl, fcl] = closed_loop_matrices(&self.sys, &self.fb, t, f1)?;
        let (nwp, nyp) = (self.fb.n_w_pi(), self.fb.n_y_pi());
        let nk = ecl.ncols() - nwp;
        let tgp = self.fb.t_gamma_pi.at_real(t, f1);
        let tpg = self.fb.t_pi_gamma.at_real(t, f1);
        let e_pi = ecl.columns(0, nwp) * &tpg;
        let e_k = ecl.columns(nwp, nk).into_owned();
        let g_x = &tgp * ccl.rows(0, nyp);
        let g_v = &tgp * fcl.view((0, 0), (nyp, nwp)) * &tpg;
        let g_k = &tgp * fcl.view((0, nwp), (nyp, nk));
        let rho_d = self.rho.at_real(t, f1).rows(0, 1).into_owned();
        Ok(ConverterTerms {
            acl,
            e_pi,
            e_k,
            g_x,
            g_v,
            g_k,
            rho_d,
        })
    }
}
