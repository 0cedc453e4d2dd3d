use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use crate::{CMatrix, Error, Result, C64};

use super::sequence::{sequence_to_phase, LineType};

/// A cable section between two three-phase buses.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: String,
    pub to: String,
    pub line: String,
    pub length_m: f64,
}

/// Grounded-star constant-impedance load: per-phase series R-L.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveLoad {
    pub node: String,
    pub r: [f64; 3],
    pub l: [f64; 3],
}

impl PassiveLoad {
    /// Phase impedance `Z_p(f)`.
    pub fn impedance(&self, f: f64) -> CMatrix {
        let w = 2.0 * PI * f;
        CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(self.r[i], w * self.l[i])
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Network graph with its forming (`S`) and following (`R`) node sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTopology {
    pub nodes: Vec<String>,
    pub line_types: Vec<LineType>,
    pub branches: Vec<Branch>,
    pub loads: Vec<PassiveLoad>,
    pub forming: Vec<String>,
    pub following: Vec<String>,
}

impl GridTopology {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn line_type(&self, id: &str) -> Option<&LineType> {
        self.line_types.iter().find(|l| l.id == id)
    }

    pub fn forming_indices(&self) -> Vec<usize> {
        self.forming.iter().filter_map(|n| self.node_index(n)).collect()
    }

    pub fn following_indices(&self) -> Vec<usize> {
        self.following.iter().filter_map(|n| self.node_index(n)).collect()
    }

    /// Structural checks: unique ids, known references, disjoint non-empty `S`,
    /// connected graph.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.as_str()) {
                return Err(Error::Validation(format!("duplicate node {n}")));
            }
        }
        for l in &self.line_types {
            l.validate()?;
        }
        let need = |id: &str, what: &str| -> Result<usize> {
            self.node_index(id)
                .ok_or_else(|| Error::Validation(format!("{what} refers to unknown node {id}")))
        };
        for b in &self.branches {
            need(&b.from, "branch")?;
            need(&b.to, "branch")?;
            if b.from == b.to {
                return Err(Error::Validation(format!("branch {}-{} is a self loop", b.from, b.to)));
            }
            if self.line_type(&b.line).is_none() {
                return Err(Error::Validation(format!("branch uses unknown line type {}", b.line)));
            }
            if !(b.length_m > 0.0) {
                return Err(Error::Validation(format!(
                    "branch {}-{} has nonpositive length",
                    b.from, b.to
                )));
            }
        }
        for l in &self.loads {
            need(&l.node, "load")?;
            if l.r.iter().chain(l.l.iter()).any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Validation(format!("load at {} has invalid R/L", l.node)));
            }
        }
        if self.forming.is_empty() {
            return Err(Error::Validation("at least one forming node is required".into()));
        }
        let mut roles = BTreeSet::new();
        for n in self.forming.iter().chain(self.following.iter()) {
            need(n, "resource")?;
            if !roles.insert(n.as_str()) {
                return Err(Error::Validation(format!("node {n} hosts more than one resource")));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let idx: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for b in &self.branches {
            let (i, j) = (idx[b.from.as_str()], idx[b.to.as_str()]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Validation(format!("node {} is disconnected", self.nodes[i]))),
            None => Ok(()),
        }
    }

    /// Series impedance and total shunt admittance of branch `k` at `f`.
    pub fn branch_elements(&self, k: usize, f: f64) -> Result<(CMatrix, CMatrix)> {
        let b = &self.branches[k];
        let line = self
            .line_type(&b.line)
            .ok_or_else(|| Error::Validation(format!("unknown line type {}", b.line)))?;
        sequence_to_phase(line, b.length_m, f)
    }

    /// Nodes kept after eliminating passive junctions: `S` then `R`, in declaration order.
    pub fn retained(&self) -> Vec<usize> {
        self.forming_indices()
            .into_iter()
            .chain(self.following_indices())
            .collect()
    }
}
