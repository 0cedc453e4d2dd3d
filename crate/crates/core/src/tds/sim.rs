use nalgebra::{DMatrix, DVector};

use crate::ltp::{HarmonicSet, SpectralVector};
use crate::study::StudyCase;
use crate::units::Bases;
use crate::{Error, Result};

use super::config::{Integrator, TdsConfig};
use super::dft::dft_spectrum;
use super::model::{source_value, ConverterReference, NodeVoltage, PeriodParams, TdsModel};

const DIVERGENCE_BOUND: f64 = 1e4;

/// Three phase waveforms sampled over the capture window.
pub type PhaseSeries = [Vec<f64>; 3];

/// Discrete power balance over the capture window, in p.u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAudit {
    /// Mean power injected by all sources and converters.
    pub injected: f64,
    /// Mean power dissipated in branches and loads.
    pub losses: f64,
    /// Mean rate of change of the energy stored in the network.
    pub stored_rate: f64,
}

impl EnergyAudit {
    pub fn imbalance(&self) -> f64 {
        (self.injected - self.losses - self.stored_rate).abs()
    }
}

/// Captured steady state of a simulation.
#[derive(Debug, Clone)]
pub struct TdsResult {
    pub harmonics: HarmonicSet,
    pub bases: Bases,
    pub samples_per_period: usize,
    pub periods_simulated: usize,
    pub settled: bool,
    /// Relative per-period RMS change at the end of settling.
    pub last_change: f64,
    pub nodes: Vec<String>,
    /// Phase voltages of every node.
    pub voltages: Vec<PhaseSeries>,
    /// Injected currents at every node hosting a source or converter.
    pub injections: Vec<(String, PhaseSeries)>,
    pub energy: EnergyAudit,
}

impl TdsResult {
    pub fn voltage_spectrum(&self, node: &str) -> Result<SpectralVector> {
        let k = self
            .nodes
            .iter()
            .position(|n| n == node)
            .ok_or_else(|| Error::Validation(format!("unknown node {node}")))?;
        dft_spectrum(&self.voltages[k], &self.harmonics, self.samples_per_period)
    }

    pub fn current_spectrum(&self, node: &str) -> Result<SpectralVector> {
        let (_, s) = self
            .injections
            .iter()
            .find(|(n, _)| n == node)
            .ok_or_else(|| Error::Validation(format!("no injection recorded at {node}")))?;
        dft_spectrum(s, &self.harmonics, self.samples_per_period)
    }
}

struct Stepper<'a> {
    model: &'a TdsModel,
    cfg: TdsConfig,
    h: f64,
    n_per: usize,
    m_inv: DMatrix<f64>,
    substeps: usize,
    cache: Option<(usize, DMatrix<f64>, DVector<f64>)>,
}

impl<'a> Stepper<'a> {
    fn time(&self, step: usize) -> f64 {
        step as f64 * self.h
    }

    fn system_at(&mut self, step: usize, params: &PeriodParams) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if let Some((s, a, b)) = &self.cache {
            if *s == step {
                return Ok((a.clone(), b.clone()));
            }
        }
        self.model.system(self.time(step), params, step % self.n_per)
    }

    /// Advances `z` from sample `step` to `step + 1`.
    fn advance(&mut self, z: &DVector<f64>, step: usize, params: &PeriodParams) -> Result<DVector<f64>> {
        match self.cfg.integrator {
            Integrator::Trapezoidal => {
                let (a0, b0) = self.system_at(step, params)?;
                let (a1, b1) = self.model.system(self.time(step + 1), params, (step + 1) % self.n_per)?;
                let hh = 0.5 * self.h;
                let lhs = &self.model.m - &a1 * hh;
                let rhs = (&self.model.m + &a0 * hh) * z + (b0 + &b1) * hh;
                let next = lhs
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Unstable {
                        period: step / self.n_per,
                        reason: "singular step matrix".into(),
                    })?;
                self.cache = Some((step + 1, a1, b1));
                Ok(next)
            }
            Integrator::Rk4 => {
                let dt = self.h / self.substeps as f64;
                let mut x = z.clone();
                let sample = step % self.n_per;
                for s in 0..self.substeps {
                    let t = self.time(step) + s as f64 * dt;
                    let f = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>> {
                        let (a, b) = self.model.system(t, params, sample)?;
                        Ok(&self.m_inv * (a * x + b))
                    };
                    let k1 = f(t, &x)?;
                    let k2 = f(t + dt / 2.0, &(&x + &k1 * (dt / 2.0)))?;
                    let k3 = f(t + dt / 2.0, &(&x + &k2 * (dt / 2.0)))?;
                    let k4 = f(t + dt, &(&x + &k3 * dt))?;
                    x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                }
                Ok(x)
            }
        }
    }
}

fn check_finite(z: &DVector<f64>, period: usize) -> Result<()> {
    let m = z.amax();
    if !m.is_finite() || m > DIVERGENCE_BOUND {
        return Err(Error::Unstable {
            period,
            reason: format!("state magnitude {m:e} p.u."),
        });
    }
    Ok(())
}

impl TdsModel {
    /// Direct-axis voltage seen by follower `fi` at time `t`.
    fn direct_voltage(&self, fi: usize, z: &DVector<f64>, t: f64) -> f64 {
        let c = &self.converters[self.followers[fi]];
        let v = self.node_voltage(z, c.node);
        (c.rho.at_real(t, self.f1).rows(0, 1) * v)[0]
    }

    /// Current injected at node `k` by its source or converter, from the element model.
    fn injection(
        &self,
        k: usize,
        z: &DVector<f64>,
        zdot: &DVector<f64>,
        t: f64,
        params: &PeriodParams,
        sample: usize,
    ) -> Result<DVector<f64>> {
        if let Some(s) = self.thevenin.iter().find(|s| s.node == k) {
            return Ok(z.rows(s.off, 3).into_owned());
        }
        if let Some(s) = self.norton.iter().find(|s| s.node == k) {
            let src = DVector::from_fn(3, |p, _| source_value(&s.table, p, t, self.f1));
            return Ok(src - z.rows(s.off, 3));
        }
        let ci = self
            .converters
            .iter()
            .position(|c| c.node == k)
            .ok_or_else(|| Error::Validation(format!("node {} has no active element", self.nodes[k])))?;
        let c = &self.converters[ci];
        match &c.reference {
            ConverterReference::Pq { p, q, .. } => {
                let tm = c.terms(t, self.f1)?;
                let fi = self.followers.iter().position(|&i| i == ci).expect("follower");
                let v = self.node_voltage(z, k);
                let v0 = params.v0[fi];
                let lag = params.lag[fi][sample % params.lag[fi].len()];
                let psi = (2.0 + lag) / v0 - (&tm.rho_d * &v)[0] / (v0 * v0);
                let u = DVector::from_vec(vec![*p, -*q]);
                Ok(&tm.g_x * z.rows(c.x_off, c.nx) + &tm.g_v * v + &tm.g_k * u * psi)
            }
            ConverterReference::Forming(_) => Ok(self.kcl_outflow(k, z, zdot)),
        }
    }

    /// `C v' + Σ outgoing branch currents + load currents` at node `k`.
    fn kcl_outflow(&self, k: usize, z: &DVector<f64>, zdot: &DVector<f64>) -> DVector<f64> {
        let vdot = match &self.voltage[k] {
            NodeVoltage::State(o) => zdot.rows(*o, 3).into_owned(),
            NodeVoltage::Converter { x_off, cv } => cv * zdot.rows(*x_off, cv.ncols()),
        };
        let mut out = &self.cap[k] * vdot;
        self.add_flows(k, z, &mut out);
        out
    }

    fn add_flows(&self, k: usize, z: &DVector<f64>, out: &mut DVector<f64>) {
        for b in &self.branches {
            if b.from == k {
                *out += z.rows(b.off, 3);
            }
            if b.to == k {
                *out -= z.rows(b.off, 3);
            }
        }
        let v = self.node_voltage(z, k);
        for l in self.loads.iter().filter(|l| l.node == k) {
            out[l.phase] += match l.off {
                Some(o) => z[o],
                None => v[l.phase] / l.r,
            };
        }
    }

    fn active_nodes(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self
            .thevenin
            .iter()
            .chain(&self.norton)
            .map(|s| s.node)
            .chain(self.converters.iter().map(|c| c.node))
            .collect();
        ks.sort_unstable();
        ks
    }

    fn losses(&self, z: &DVector<f64>) -> f64 {
        let mut p = 0.0;
        for b in &self.branches {
            let i = z.rows(b.off, 3);
            p += (i.transpose() * &b.r * i)[0];
        }
        for l in &self.loads {
            p += match l.off {
                Some(o) => l.r * z[o] * z[o],
                None => {
                    let v = self.node_voltage(z, l.node)[l.phase];
                    v * v / l.r
                }
            };
        }
        p
    }

    fn stored_energy(&self, z: &DVector<f64>) -> f64 {
        let mut e = 0.0;
        for k in 0..self.nodes.len() {
            let v = self.node_voltage(z, k);
            e += 0.5 * (v.transpose() * &self.cap[k] * &v)[0];
        }
        for b in &self.branches {
            let i = z.rows(b.off, 3);
            e += 0.5 * (i.transpose() * &b.l * i)[0];
        }
        for l in &self.loads {
            if let Some(o) = l.off {
                e += 0.5 * l.l * z[o] * z[o];
            }
        }
        e
    }
}

/// Fixed-step simulation from rest until the per-period RMS settles, then capture.
pub fn simulate(case: &StudyCase, cfg: &TdsConfig) -> Result<TdsResult> {
    cfg.validate()?;
    let model = TdsModel::build(case)?;
    simulate_model(&model, case, cfg)
}

pub(crate) fn simulate_model(model: &TdsModel, case: &StudyCase, cfg: &TdsConfig) -> Result<TdsResult> {
    let f1 = case.spectrum.f1;
    let n_per = cfg.samples_per_period;
    let h = cfg.step(f1);
    let m_inv = model
        .m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Config("descriptor matrix is singular".into()))?;
    let substeps = match cfg.integrator {
        Integrator::Trapezoidal => 1,
        Integrator::Rk4 => {
            let (a, _) = model.system(0.0, &PeriodParams::new(model.followers.len(), model.nominal_direct, n_per), 0)?;
            let stiff = (&m_inv * a).row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
            ((h * stiff / 2.0).ceil() as usize).max(1)
        }
    };
    let mut st = Stepper {
        model,
        cfg: *cfg,
        h,
        n_per,
        m_inv,
        substeps,
        cache: None,
    };
    let nf = model.followers.len();
    let mut params = PeriodParams::new(nf, model.nominal_direct, n_per);
    let mut z = DVector::zeros(model.dim());
    let mut step = 0usize;
    let mut prev_rms: Option<DVector<f64>> = None;
    let mut settled = false;
    let mut last_change = f64::INFINITY;
    let mut period = 0;
    let second: Vec<bool> = model
        .followers
        .iter()
        .map(|&i| {
            matches!(
                model.converters[i].reference,
                ConverterReference::Pq {
                    order: crate::cider::SeriesOrder::Second,
                    ..
                }
            )
        })
        .collect();

    while period < cfg.periods_settle {
        let mut sq = DVector::zeros(model.dim());
        let mut vd = vec![vec![0.0; n_per]; nf];
        for n in 0..n_per {
            let t = st.time(step);
            for (fi, series) in vd.iter_mut().enumerate() {
                series[n] = model.direct_voltage(fi, &z, t);
            }
            sq += z.component_mul(&z);
            z = st.advance(&z, step, &params)?;
            step += 1;
        }
        check_finite(&z, period)?;
        period += 1;
        let rms = (sq / n_per as f64).map(f64::sqrt);
        for fi in 0..nf {
            let v0 = vd[fi].iter().sum::<f64>() / n_per as f64;
            if v0.abs() > crate::cider::MIN_DIRECT_VOLTAGE {
                params.v0[fi] = v0;
                if second[fi] {
                    for (l, v) in params.lag[fi].iter_mut().zip(&vd[fi]) {
                        let xi = (v - v0) / v0;
                        *l = xi * xi;
                    }
                }
            }
        }
        st.cache = None;
        if let Some(p) = &prev_rms {
            let scale = rms.amax().max(f64::MIN_POSITIVE);
            last_change = (&rms - p).amax() / scale;
            if last_change < cfg.settle_tol {
                settled = true;
                break;
            }
        }
        prev_rms = Some(rms);
        if cfg.shooting && cfg.integrator == Integrator::Trapezoidal && period >= 2 && period % 2 == 0 {
            let (phi, psi) = model.period_map(cfg, &params)?;
            let n = model.dim();
            if let Some(orbit) = (DMatrix::identity(n, n) - phi).lu().solve(&psi) {
                z = orbit;
                check_finite(&z, period)?;
            }
        }
    }

    let active = model.active_nodes();
    let total = n_per * cfg.periods_capture;
    let mut voltages = vec![[vec![0.0; total], vec![0.0; total], vec![0.0; total]]; model.nodes.len()];
    let mut injections: Vec<(String, PhaseSeries)> = active
        .iter()
        .map(|&k| (model.nodes[k].clone(), [vec![0.0; total], vec![0.0; total], vec![0.0; total]]))
        .collect();
    let e_start = model.stored_energy(&z);
    let (mut injected, mut losses) = (0.0, 0.0);
    for n in 0..total {
        let t = st.time(step);
        let sample = step % n_per;
        let (a, b) = st.system_at(step, &params)?;
        let zdot = &st.m_inv * (a * &z + b);
        let inj: Vec<DVector<f64>> = active
            .iter()
            .map(|&k| model.injection(k, &z, &zdot, t, &params, sample))
            .collect::<Result<_>>()?;
        for k in 0..model.nodes.len() {
            let v = model.node_voltage(&z, k);
            for p in 0..3 {
                voltages[k][p][n] = v[p];
            }
        }
        for (j, i) in inj.iter().enumerate() {
            for p in 0..3 {
                injections[j].1[p][n] = i[p];
            }
        }
        let next = st.advance(&z, step, &params)?;
        // Midpoint balance: exact for the trapezoidal discretization of the passive network.
        let zm = (&z + &next) * 0.5;
        let (a1, b1) = st.system_at(step + 1, &params)?;
        let zdot1 = &st.m_inv * (a1 * &next + b1);
        for (j, &k) in active.iter().enumerate() {
            let vm = model.node_voltage(&zm, k);
            let i_avg = if matches!(model.voltage[k], NodeVoltage::Converter { .. }) {
                let dv = (model.node_voltage(&next, k) - model.node_voltage(&z, k)) / h;
                let mut out = &model.cap[k] * dv;
                model.add_flows(k, &zm, &mut out);
                out
            } else {
                let i1 = model.injection(k, &next, &zdot1, st.time(step + 1), &params, (step + 1) % n_per)?;
                (&inj[j] + i1) * 0.5
            };
            injected += vm.dot(&i_avg);
        }
        losses += model.losses_midpoint(&z, &next);
        z = next;
        step += 1;
    }
    check_finite(&z, period)?;
    let span = total as f64;
    let energy = EnergyAudit {
        injected: injected / span,
        losses: losses / span,
        stored_rate: (model.stored_energy(&z) - e_start) / (span * h),
    };
    Ok(TdsResult {
        harmonics: case.spectrum,
        bases: case.bases,
        samples_per_period: n_per,
        periods_simulated: period + cfg.periods_capture,
        settled,
        last_change,
        nodes: model.nodes.clone(),
        voltages,
        injections,
        energy,
    })
}

impl TdsModel {
    /// Dissipation with midpoint currents and voltages.
    fn losses_midpoint(&self, z0: &DVector<f64>, z1: &DVector<f64>) -> f64 {
        self.losses(&((z0 + z1) * 0.5))
    }
}

impl TdsModel {
    /// Affine one-period map `z(T) = Φ z(0) + ψ` of the trapezoidal discretization.
    pub(crate) fn period_map(&self, cfg: &TdsConfig, params: &PeriodParams) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let n_per = cfg.samples_per_period;
        let h = cfg.step(self.f1);
        let mut phi = DMatrix::identity(self.n, self.n);
        let mut psi = DVector::zeros(self.n);
        let (mut a0, mut b0) = self.system(0.0, params, 0)?;
        for s in 0..n_per {
            let (a1, b1) = self.system((s + 1) as f64 * h, params, (s + 1) % n_per)?;
            let lu = (&self.m - &a1 * (0.5 * h)).lu();
            let explicit = &self.m + &a0 * (0.5 * h);
            let singular = || Error::Unstable {
                period: 0,
                reason: "singular step matrix".into(),
            };
            phi = lu.solve(&(&explicit * &phi)).ok_or_else(singular)?;
            psi = lu.solve(&(&explicit * &psi + (&b0 + &b1) * (0.5 * h))).ok_or_else(singular)?;
            a0 = a1;
            b0 = b1;
        }
        Ok((phi, psi))
    }

    /// One-period transition matrix with the follower references frozen at
    /// direct-axis voltages `v0`; its eigenvalues are the discrete Floquet multipliers.
    pub fn monodromy(&self, cfg: &TdsConfig, v0: &[f64]) -> Result<DMatrix<f64>> {
        if v0.len() != self.followers.len() {
            return Err(Error::Shape(format!("{} direct voltages for {} followers", v0.len(), self.followers.len())));
        }
        let mut params = PeriodParams::new(self.followers.len(), self.nominal_direct, cfg.samples_per_period);
        params.v0 = v0.to_vec();
        Ok(self.period_map(cfg, &params)?.0)
    }
}
