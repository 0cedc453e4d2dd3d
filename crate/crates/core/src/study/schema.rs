use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cider::{Fd1Params, Fm1Params, SeriesOrder};
use crate::grid::{audit_hypotheses, GridTopology, LineType};
use crate::ltp::HarmonicSet;
use crate::solver::SolverConfig;
use crate::tds::TdsConfig;
use crate::units::Bases;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol_x: f64,
    pub tol_f: f64,
    pub max_iter: usize,
    /// Truncation order of the `1/v_D` series (1 or 2).
    pub order: u32,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol_x: 1e-8,
            tol_f: 1e-8,
            max_iter: 200,
            order: 1,
        }
    }
}

impl SolverSection {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            tol_x: self.tol_x,
            tol_f: self.tol_f,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        }
    }

    pub fn series_order(&self) -> Result<SeriesOrder> {
        SeriesOrder::from_int(self.order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub from: String,
    pub to: String,
    pub line: String,
    pub length_m: f64,
}

/// Source harmonic: order, RMS magnitude in p.u., phase in rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicEntry {
    pub order: u32,
    pub magnitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResourceSpec {
    /// Substation Thévenin equivalent (voltage behind `R + jhX`).
    TeSource {
        node: String,
        r_ohm: f64,
        x_ohm: f64,
        harmonics: Vec<HarmonicEntry>,
    },
    /// Norton equivalent: harmonic current source (p.u.) in parallel with `R + jhX`.
    NeSource {
        node: String,
        r_ohm: f64,
        x_ohm: f64,
        harmonics: Vec<HarmonicEntry>,
    },
    /// Grid-forming converter (FM-1).
    Forming {
        node: String,
        v_rms: f64,
        f_hz: f64,
        #[serde(default)]
        design: Fm1Params,
    },
    /// Grid-following converter (FD-1); setpoints are injections (negative absorbs).
    Following {
        node: String,
        p_w: f64,
        q_var: f64,
        #[serde(default)]
        design: Fd1Params,
    },
    /// Constant-impedance load, lagging power factor; `p_w < 0` is the
    /// consumption at nominal voltage, split over the phases by `weights`.
    ImpedanceLoad {
        node: String,
        p_w: f64,
        pf: f64,
        weights: [f64; 3],
    },
}

impl ResourceSpec {
    pub fn node(&self) -> &str {
        match self {
            Self::TeSource { node, .. }
            | Self::NeSource { node, .. }
            | Self::Forming { node, .. }
            | Self::Following { node, .. }
            | Self::ImpedanceLoad { node, .. } => node,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::TeSource { .. } => "te_source",
            Self::NeSource { .. } => "ne_source",
            Self::Forming { .. } => "forming",
            Self::Following { .. } => "following",
            Self::ImpedanceLoad { .. } => "impedance_load",
        }
    }

    pub fn is_forming(&self) -> bool {
        matches!(self, Self::TeSource { .. } | Self::Forming { .. })
    }

    pub fn is_following(&self) -> bool {
        matches!(self, Self::NeSource { .. } | Self::Following { .. })
    }
}

/// A complete study: spectrum, bases, numerics, network and resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyCase {
    pub name: String,
    pub spectrum: HarmonicSet,
    pub bases: Bases,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub tds: TdsConfig,
    pub nodes: Vec<String>,
    pub lines: Vec<LineType>,
    pub branches: Vec<BranchSpec>,
    pub resources: Vec<ResourceSpec>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl StudyCase {
    /// Parses and fully validates a case, including the grid hypothesis audit.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty study file".into(),
            });
        }
        let case: StudyCase = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })?;
        case.validate().map_err(|e| match e {
            Error::Validation(m) => Error::Parse {
                line: locate(text, &m),
                message: m,
            },
            other => other,
        })?;
        Ok(case)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn harmonics(&self) -> &HarmonicSet {
        &self.spectrum
    }

    pub fn forming(&self) -> impl Iterator<Item = &ResourceSpec> {
        self.resources.iter().filter(|r| r.is_forming())
    }

    pub fn following(&self) -> impl Iterator<Item = &ResourceSpec> {
        self.resources.iter().filter(|r| r.is_following())
    }

    pub fn validate(&self) -> Result<()> {
        HarmonicSet::new(self.spectrum.f1, self.spectrum.h_max)?;
        self.bases.validate()?;
        self.tds.validate()?;
        self.solver.config().validate()?;
        self.solver.series_order()?;
        for r in &self.resources {
            if !self.nodes.iter().any(|n| n == r.node()) {
                return Err(Error::Validation(format!(
                    "{} resource refers to unknown node {}",
                    r.kind_name(),
                    r.node()
                )));
            }
            match r {
                ResourceSpec::TeSource { r_ohm, x_ohm, .. } | ResourceSpec::NeSource { r_ohm, x_ohm, .. } => {
                    if *r_ohm < 0.0 || *x_ohm < 0.0 || (*r_ohm == 0.0 && *x_ohm == 0.0) {
                        return Err(Error::Validation(format!("source at {} needs a lossy impedance", r.node())));
                    }
                }
                ResourceSpec::Forming { v_rms, f_hz, design, .. } => {
                    design.validate()?;
                    if !(*v_rms > 0.0) {
                        return Err(Error::Validation(format!("forming voltage at {} must be positive", r.node())));
                    }
                    if (f_hz - self.spectrum.f1).abs() > 1e-9 * self.spectrum.f1 {
                        return Err(Error::Validation(format!(
                            "forming frequency at {} must equal the fundamental",
                            r.node()
                        )));
                    }
                }
                ResourceSpec::Following { p_w, q_var, design, .. } => {
                    design.validate()?;
                    if !(p_w.is_finite() && q_var.is_finite()) {
                        return Err(Error::Validation(format!("setpoint at {} is not finite", r.node())));
                    }
                }
                ResourceSpec::ImpedanceLoad { p_w, pf, weights, .. } => {
                    if !(*p_w < 0.0) {
                        return Err(Error::Validation(format!(
                            "impedance load at {} must consume (negative p_w)",
                            r.node()
                        )));
                    }
                    if !(*pf > 0.0 && *pf <= 1.0) {
                        return Err(Error::Validation(format!("power factor at {} outside (0, 1]", r.node())));
                    }
                    let s: f64 = weights.iter().sum();
                    if weights.iter().any(|w| *w <= 0.0) || (s - 1.0).abs() > 1e-9 {
                        return Err(Error::Validation(format!(
                            "phase weights at {} must be positive and sum to one",
                            r.node()
                        )));
                    }
                }
            }
        }
        let mut active = std::collections::BTreeSet::new();
        for r in self.resources.iter().filter(|r| r.is_forming() || r.is_following()) {
            if !active.insert(r.node()) {
                return Err(Error::Validation(format!("more than one source or converter at node {}", r.node())));
            }
        }
        let topo = self.topology()?;
        topo.validate()?;
        if let Some(bad) = audit_hypotheses(&topo, &self.spectrum).into_iter().find(|c| !c.passed()) {
            bad.into_result()?;
        }
        Ok(())
    }

    /// Node sets and passive elements; resources map to `S`/`R` membership.
    pub fn topology(&self) -> Result<GridTopology> {
        let mut loads = Vec::new();
        for r in &self.resources {
            if let ResourceSpec::ImpedanceLoad {
                node,
                p_w,
                pf,
                weights,
            } = r
            {
                loads.push(super::impedance_load(
                    node,
                    -p_w,
                    *pf,
                    weights,
                    self.bases.voltage,
                    self.spectrum.f1,
                ));
            }
        }
        Ok(GridTopology {
            nodes: self.nodes.clone(),
            line_types: self.lines.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| crate::grid::Branch {
                    from: b.from.clone(),
                    to: b.to.clone(),
                    line: b.line.clone(),
                    length_m: b.length_m,
                })
                .collect(),
            loads,
            forming: self.forming().map(|r| r.node().to_string()).collect(),
            following: self.following().map(|r| r.node().to_string()).collect(),
        })
    }

    /// Scales every grid-following setpoint by `k > 0`.
    pub fn apply_scale(&self, k: f64) -> Result<StudyCase> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Validation(format!("scale factor must be positive, got {k}")));
        }
        let mut out = self.clone();
        for r in &mut out.resources {
            if let ResourceSpec::Following { p_w, q_var, .. } = r {
                *p_w *= k;
                *q_var *= k;
            }
        }
        Ok(out)
    }
}

/// Best-effort line of the first quoted node name in a validation message.
fn locate(text: &str, message: &str) -> usize {
    message
        .split_whitespace()
        .rev()
        .find_map(|w| {
            let w = w.trim_matches(|c: char| !c.is_alphanumeric() && c != '_' && c != '-');
            (!w.is_empty())
                .then(|| text.find(&format!("\"{w}\"")))
                .flatten()
        })
        .map(|off| line_of(text, off))
        .unwrap_or(1)
}
