use std::f64::consts::PI;

use crate::cider::{Fd1Params, Fm1Params};
use crate::grid::LineType;
use crate::ltp::HarmonicSet;
use crate::tds::TdsConfig;
use crate::units::Bases;

use super::schema::{BranchSpec, HarmonicEntry, ResourceSpec, SolverSection, StudyCase};

/// Serialized [`build_cigre_lv`], as shipped in `cases/`.
pub const CIGRE_LV_TOML: &str = include_str!("../../cases/cigre_lv.toml");
/// Serialized [`build_desk`], as shipped in `cases/`.
pub const DESK_TOML: &str = include_str!("../../cases/desk.toml");

const PF: f64 = 0.95;

fn ug1() -> LineType {
    LineType {
        id: "UG1".into(),
        r_pos: 0.162,
        r_zero: 0.529,
        l_pos: 0.262e-3,
        l_zero: 1.185e-3,
        c_pos: 637e-9,
        c_zero: 388e-9,
    }
}

fn ug3() -> LineType {
    LineType {
        id: "UG3".into(),
        r_pos: 0.822,
        r_zero: 1.794,
        l_pos: 0.270e-3,
        l_zero: 3.895e-3,
        c_pos: 637e-9,
        c_zero: 388e-9,
    }
}

fn branch(from: &str, to: &str, line: &str, length_m: f64) -> BranchSpec {
    BranchSpec {
        from: from.into(),
        to: to.into(),
        line: line.into(),
        length_m,
    }
}

fn h(order: u32, percent: f64, phase: f64) -> HarmonicEntry {
    HarmonicEntry {
        order,
        magnitude: percent / 100.0,
        phase,
    }
}

/// Substation voltage: 1 p.u. fundamental plus the background distortion.
fn te_harmonics() -> Vec<HarmonicEntry> {
    vec![
        h(1, 100.0, 0.0),
        h(5, 6.0, PI / 8.0),
        h(7, 5.0, PI / 12.0),
        h(11, 3.5, PI / 16.0),
        h(13, 3.0, PI / 8.0),
        h(17, 2.0, PI / 12.0),
        h(19, 1.5, PI / 16.0),
        h(23, 1.5, PI / 16.0),
    ]
}

/// `|Z| = 13.7 mΩ`, `R/X = 0.271`.
fn te_source(node: &str, harmonics: Vec<HarmonicEntry>) -> ResourceSpec {
    let ratio: f64 = 0.271;
    let x = 13.7e-3 / (1.0 + ratio * ratio).sqrt();
    ResourceSpec::TeSource {
        node: node.into(),
        r_ohm: ratio * x,
        x_ohm: x,
        harmonics,
    }
}

/// Follower absorbing `p_abs` watts at a lagging power factor.
fn consumer(node: &str, p_abs: f64) -> ResourceSpec {
    let tan = (1.0 - PF * PF).sqrt() / PF;
    ResourceSpec::Following {
        node: node.into(),
        p_w: -p_abs,
        q_var: -p_abs * tan,
        design: Fd1Params::default(),
    }
}

fn z_load(node: &str, p_w: f64, weights: [f64; 3]) -> ResourceSpec {
    ResourceSpec::ImpedanceLoad {
        node: node.into(),
        p_w,
        pf: PF,
        weights,
    }
}

fn forming(node: &str) -> ResourceSpec {
    ResourceSpec::Forming {
        node: node.into(),
        v_rms: 230.0,
        f_hz: 50.0,
        design: Fm1Params::default(),
    }
}

/// Modified CIGRE low-voltage benchmark feeder (22 nodes, `h_max = 26`).
pub fn build_cigre_lv() -> StudyCase {
    let mut branches: Vec<BranchSpec> = (1..9)
        .map(|k| branch(&format!("N{k}"), &format!("N{}", k + 1), "UG1", 35.0))
        .collect();
    branches.push(branch("N10", "N9", "UG1", 35.0));
    for (a, b, len) in [
        ("N3", "N11", 30.0),
        ("N12", "N5", 35.0),
        ("N13", "N12", 35.0),
        ("N13", "N14", 35.0),
        ("N14", "N15", 30.0),
        ("N6", "N16", 30.0),
        ("N9", "N17", 30.0),
        ("N18", "N10", 30.0),
        ("N12", "N19", 30.0),
        ("N8", "N20", 30.0),
        ("N21", "N2", 30.0),
        ("N22", "N13", 30.0),
    ] {
        branches.push(branch(a, b, "UG3", len));
    }
    StudyCase {
        name: "cigre-lv".into(),
        spectrum: HarmonicSet { f1: 50.0, h_max: 26 },
        bases: Bases::default(),
        solver: SolverSection::default(),
        tds: TdsConfig::default(),
        nodes: (1..=22).map(|k| format!("N{k}")).collect(),
        lines: vec![ug1(), ug3()],
        branches,
        resources: vec![
            te_source("N1", te_harmonics()),
            forming("N18"),
            consumer("N11", 15e3),
            consumer("N15", 52e3),
            consumer("N16", 55e3),
            consumer("N17", 35e3),
            z_load("N19", -51.2e3, [0.31, 0.50, 0.19]),
            z_load("N20", -51.7e3, [0.45, 0.23, 0.32]),
            z_load("N21", -61.5e3, [0.24, 0.39, 0.37]),
            z_load("N22", -61.9e3, [0.31, 0.56, 0.13]),
        ],
    }
}

/// Six-node desk case: weak feeder with two followers, an unbalanced load
/// and a forming converter (`h_max = 13`).
pub fn build_desk() -> StudyCase {
    StudyCase {
        name: "desk".into(),
        spectrum: HarmonicSet { f1: 50.0, h_max: 13 },
        bases: Bases::default(),
        solver: SolverSection::default(),
        tds: TdsConfig::default(),
        nodes: (1..=6).map(|k| format!("N{k}")).collect(),
        lines: vec![ug3()],
        branches: vec![
            branch("N1", "N2", "UG3", 200.0),
            branch("N2", "N3", "UG3", 150.0),
            branch("N2", "N4", "UG3", 150.0),
            branch("N2", "N5", "UG3", 100.0),
            branch("N5", "N6", "UG3", 100.0),
        ],
        resources: vec![
            te_source("N1", te_harmonics()),
            forming("N6"),
            consumer("N3", 20e3),
            consumer("N4", 15e3),
            z_load("N5", -20e3, [0.31, 0.50, 0.19]),
        ],
    }
}
