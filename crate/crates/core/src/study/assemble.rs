use crate::cider::{
    close_loop, forming_reference, grid_response, park::park_dq, series_rx, CiderGridResponse, HarmonicPhasor,
    HarmonicSourceEquivalent, PqReference, ResourceKind,
};
use crate::grid::{assemble_admittance, hybrid_partition, kron_reduce, lift_hybrid, GridTopology, HybridHarmonicMatrix};
use crate::linalg::invert;
use crate::ltp::{lift_ltp_matrix, HarmonicSet, SpectralVector};
use crate::solver::{build_reduced_system, FollowingResource, FormingResource, ReducedSystem, ReferenceMap};
use crate::tds::{LabeledSpectrum, Quantity};
use crate::{CMatrix, Error, Result, C64};

use super::schema::{HarmonicEntry, ResourceSpec, StudyCase};

/// Where a resource sits in the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceRole {
    Forming(usize),
    Following(usize),
}

/// A study case turned into matrices, ready for the fixed-point solver.
#[derive(Debug, Clone)]
pub struct AssembledStudy {
    pub topology: GridTopology,
    pub hybrid: HybridHarmonicMatrix,
    pub system: ReducedSystem,
    /// Retained node ids, `S` first then `R`.
    pub retained: Vec<String>,
}

fn phasors(table: &[HarmonicEntry]) -> Vec<HarmonicPhasor> {
    table
        .iter()
        .map(|e| HarmonicPhasor {
            order: e.order,
            magnitude: e.magnitude,
            phase: e.phase,
        })
        .collect()
}

fn resource_name(r: &ResourceSpec) -> String {
    format!("{}@{}", r.kind_name(), r.node())
}

/// Per-unit Kron-reduced admittance at every `h ≥ 0`, partitioned and lifted.
pub fn hybrid_matrix(topo: &GridTopology, hs: &HarmonicSet, z_base: f64) -> Result<HybridHarmonicMatrix> {
    let keep = topo.retained();
    let n_s = topo.forming.len();
    let mut positive = Vec::with_capacity(hs.h_max + 1);
    for h in 0..=hs.h_max_i() {
        let y = assemble_admittance(topo, hs.frequency(h))? * C64::new(z_base, 0.0);
        positive.push(hybrid_partition(&kron_reduce(&y, &keep)?, n_s)?);
    }
    let blocks: Vec<_> = hs
        .orders()
        .map(|h| {
            let b = &positive[h.unsigned_abs() as usize];
            if h < 0 {
                b.conj()
            } else {
                b.clone()
            }
        })
        .collect();
    lift_hybrid(&blocks, hs)
}

fn source_impedance(hs: &HarmonicSet, r: f64, x: f64, z_base: f64) -> Vec<CMatrix> {
    series_rx(hs, r / z_base, x / z_base)
}

/// Builds every resource response and the reduced system of a validated case.
pub fn assemble(case: &StudyCase) -> Result<AssembledStudy> {
    let hs = case.spectrum;
    let zb = case.bases.impedance();
    let order = case.solver.series_order()?;
    let topology = case.topology()?;
    let hybrid = hybrid_matrix(&topology, &hs, zb)?;

    let mut forming = Vec::new();
    for r in case.forming() {
        let name = resource_name(r);
        let (response, reference) = match r {
            ResourceSpec::TeSource {
                r_ohm, x_ohm, harmonics, ..
            } => HarmonicSourceEquivalent::Thevenin {
                z: source_impedance(&hs, *r_ohm, *x_ohm, zb),
                v: crate::cider::balanced_spectrum(&hs, &phasors(harmonics)),
            }
            .as_resource()?,
            ResourceSpec::Forming { v_rms, design, .. } => {
                let (sys, fb) = design.build(&case.bases)?;
                let gain = close_loop(&sys, &fb, &hs)?;
                (
                    grid_response(&gain, &fb, ResourceKind::Forming)?,
                    forming_reference(v_rms / case.bases.voltage, &hs, 3)?,
                )
            }
            _ => unreachable!("filtered to forming"),
        };
        forming.push(FormingResource {
            name,
            response,
            reference,
        });
    }

    let mut following = Vec::new();
    for r in case.following() {
        let name = resource_name(r);
        let (response, rho_transform, reference): (CiderGridResponse, CMatrix, ReferenceMap) = match r {
            ResourceSpec::NeSource {
                r_ohm, x_ohm, harmonics, ..
            } => {
                let y = source_impedance(&hs, *r_ohm, *x_ohm, zb)
                    .iter()
                    .map(|z| invert(z, "Z_NE", 1e-12).map(|i| i.matrix))
                    .collect::<Result<Vec<_>>>()?;
                let (resp, i) = HarmonicSourceEquivalent::Norton {
                    y,
                    i: crate::cider::balanced_spectrum(&hs, &phasors(harmonics)),
                }
                .as_resource()?;
                let n = 3 * hs.len();
                (resp, CMatrix::identity(n, n), ReferenceMap::Fixed(i))
            }
            ResourceSpec::Following { p_w, q_var, design, .. } => {
                let (sys, fb) = design.build(&case.bases)?;
                let gain = close_loop(&sys, &fb, &hs)?;
                let resp = grid_response(&gain, &fb, ResourceKind::Following)?;
                let rho = lift_ltp_matrix(&park_dq().product(&fb.t_pi_gamma)?, &hs)?.into_matrix();
                let pq = PqReference {
                    p: p_w / case.bases.power,
                    q: q_var / case.bases.power,
                    order,
                };
                (resp, rho, ReferenceMap::Pq(pq))
            }
            _ => unreachable!("filtered to following"),
        };
        following.push(FollowingResource {
            name,
            response,
            rho_transform,
            reference,
        });
    }
    if following.is_empty() {
        return Err(Error::Validation("the study has no grid-following resource".into()));
    }

    let system = build_reduced_system(&hybrid, &forming, &following)?;
    let retained = topology.retained().iter().map(|&i| topology.nodes[i].clone()).collect();
    Ok(AssembledStudy {
        topology,
        hybrid,
        system,
        retained,
    })
}

impl AssembledStudy {
    /// Resource index of a retained node.
    pub fn role_of(&self, node: &str) -> Option<ResourceRole> {
        let pos = self.retained.iter().position(|n| n == node)?;
        let n_s = self.topology.forming.len();
        Some(if pos < n_s {
            ResourceRole::Forming(pos)
        } else {
            ResourceRole::Following(pos - n_s)
        })
    }

    /// Voltage and injected-current spectra at every retained node.
    pub fn node_spectra(&self, w_rho: &crate::CVector) -> Result<Vec<LabeledSpectrum>> {
        let st = self.system.state(w_rho)?;
        let n_s = self.topology.forming.len();
        let mut out = Vec::new();
        for (pos, node) in self.retained.iter().enumerate() {
            let (v, i) = if pos < n_s {
                (&st.v_s, &st.i_s)
            } else {
                (&st.v_r, &st.i_r)
            };
            let k = if pos < n_s { pos } else { pos - n_s };
            for (quantity, x) in [(Quantity::Voltage, v), (Quantity::Current, i)] {
                out.push(LabeledSpectrum {
                    quantity,
                    node: node.clone(),
                    spectrum: self.system.node_spectrum(x, k)?,
                });
            }
        }
        Ok(out)
    }

    /// Phase-voltage spectrum at a retained node for a given solution `W̃_ρ`.
    pub fn node_voltage(&self, w_rho: &crate::CVector, node: &str) -> Result<SpectralVector> {
        let st = self.system.state(w_rho)?;
        match self.role_of(node) {
            Some(ResourceRole::Forming(k)) => self.system.node_spectrum(&st.v_s, k),
            Some(ResourceRole::Following(k)) => self.system.node_spectrum(&st.v_r, k),
            None => Err(Error::Validation(format!("node {node} is not retained"))),
        }
    }
}
