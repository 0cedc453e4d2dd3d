//! Command-line driver: `solve`, `certify`, `validate`, `sweep` and `benchmark`.
//!
//! Every command writes columnar text tables plus a `summary.json` carrying
//! the run manifest into the output directory. Exit codes: 0 success,
//! 1 error, 2 non-convergence, 3 ex-ante condition failure, 4 oracle not comparable.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ltp::SpectralVector;
use crate::solver::{certify_uniqueness, solve, Certificate, FixedPointReport, Uniqueness};
use crate::study::{assemble, build_cigre_lv, build_desk, AssembledStudy, StudyCase};
use crate::tds::{compare, simulate, KpiResult, LabeledSpectrum, Quantity, TdsConfig};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CONDITION: i32 = 3;
pub const EXIT_NOT_COMPARABLE: i32 = 4;

/// Output directory used when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "HPF_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "hpf", version, about = "Fixed-point harmonic power flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the harmonic power flow and write phasors and residuals.
    Solve(CommonArgs),
    /// Solve and report the contraction certificate.
    Certify(CommonArgs),
    /// Solve, simulate in the time domain and compare the spectra.
    Validate(ValidateArgs),
    /// Solve over a list of power scale factors.
    Sweep(SweepArgs),
    /// Write a bundled study case as TOML.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Study case file (TOML).
    pub case: PathBuf,
    #[arg(long)]
    pub hmax: Option<usize>,
    #[arg(long = "tol-x")]
    pub tol_x: Option<f64>,
    #[arg(long = "tol-f")]
    pub tol_f: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Multiplies every grid-following setpoint.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Truncation order of the `1/v_D` series (1 or 2).
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "samples-per-period")]
    pub samples_per_period: Option<usize>,
    /// Per-unit voltage base assumed for the time-domain side (defaults to the case's).
    #[arg(long = "tds-voltage-base")]
    pub tds_voltage_base: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated positive factors.
    #[arg(long, value_delimiter = ',', required = true)]
    pub factors: Vec<f64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchmarkName {
    CigreLv,
    Desk,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(value_enum)]
    pub name: BenchmarkName,
    /// Destination file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance embedded in every summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub case_path: String,
    pub case_sha256: String,
    pub overrides: BTreeMap<String, String>,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl CommonArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("hmax", self.hmax.map(|v| v.to_string()));
        put("tol_x", self.tol_x.map(|v| v.to_string()));
        put("tol_f", self.tol_f.map(|v| v.to_string()));
        put("max_iter", self.max_iter.map(|v| v.to_string()));
        put("scale", self.scale.map(|v| v.to_string()));
        put("order", self.order.map(|v| v.to_string()));
        m
    }

    /// Loads the case and applies the overrides, re-validating the result.
    pub fn load(&self) -> Result<(StudyCase, String)> {
        let text = fs::read_to_string(&self.case)?;
        let mut case = StudyCase::parse(&text)?;
        if let Some(h) = self.hmax {
            case.spectrum.h_max = h;
        }
        if let Some(v) = self.tol_x {
            case.solver.tol_x = v;
        }
        if let Some(v) = self.tol_f {
            case.solver.tol_f = v;
        }
        if let Some(v) = self.max_iter {
            case.solver.max_iter = v;
        }
        if let Some(v) = self.order {
            case.solver.order = v;
        }
        if let Some(k) = self.scale {
            case = case.apply_scale(k)?;
        }
        case.validate()?;
        Ok((case, sha256_hex(text.as_bytes())))
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("hpf-out"))
    }

    fn manifest(&self, command: &str, sha: String) -> RunManifest {
        RunManifest {
            command: command.into(),
            case_path: self.case.display().to_string(),
            case_sha256: sha,
            overrides: self.overrides(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

/// Writes through a temporary sibling and renames, so readers never see partial files.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(path, &(text + "\n"))
}

/// Columnar phasor table: one row per node, quantity, phase and harmonic `h ≥ 0`.
///
/// Magnitudes are RMS p.u. (`√2 |X_h|` for `h > 0`), phases in rad.
pub fn phasor_table(spectra: &[LabeledSpectrum]) -> String {
    let mut out = String::from("node\tquantity\tphase\th\tmagnitude_pu\tphase_rad\n");
    for s in spectra {
        let q = match s.quantity {
            Quantity::Voltage => "V",
            Quantity::Current => "I",
        };
        append_phasors(&mut out, &s.node, q, &s.spectrum);
    }
    out
}

fn append_phasors(out: &mut String, node: &str, q: &str, x: &SpectralVector) {
    for p in 0..x.channels() {
        for h in 0..=x.harmonics().h_max_i() {
            let c = x.get(0, h, p);
            let mag = if h == 0 { c.norm() } else { c.norm() * 2f64.sqrt() };
            let _ = writeln!(out, "{node}\t{q}\t{}\t{h}\t{mag:.12e}\t{:.12e}", ["a", "b", "c"][p], c.arg());
        }
    }
}

pub fn residual_table(report: &FixedPointReport) -> String {
    let mut out = String::from("iteration\tdelta_x\tdelta_f\tjac_inf_norm\n");
    for (k, r) in report.history.iter().enumerate() {
        let jac = report
            .jacobian_history
            .get(k)
            .map(|j| format!("{j:.12e}"))
            .unwrap_or_else(|| "nan".into());
        let _ = writeln!(out, "{}\t{:.12e}\t{:.12e}\t{jac}", k + 1, r.dx, r.df);
    }
    out
}

#[derive(Debug, Serialize)]
struct SolveSummary<'a> {
    manifest: &'a RunManifest,
    case: &'a str,
    converged: bool,
    iterations: usize,
    final_residual: Option<crate::solver::Residual>,
    certificate: Option<Certificate>,
    verdict: Uniqueness,
    failure: Option<&'a str>,
    rcond_l: f64,
    rcond_k: f64,
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Condition { .. } => EXIT_CONDITION,
        _ => EXIT_ERROR,
    }
}

/// Result of a command: exit code and the files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
}

fn run_solver(case: &StudyCase, track: bool) -> Result<(AssembledStudy, FixedPointReport)> {
    let study = assemble(case)?;
    let mut cfg = case.solver.config();
    cfg.track_jacobian = track;
    let report = solve(&study.system, &cfg)?;
    Ok((study, report))
}

fn solve_outputs(
    command: &str,
    args: &CommonArgs,
    track: bool,
) -> Result<(StudyCase, AssembledStudy, FixedPointReport, RunManifest, PathBuf)> {
    let (case, sha) = args.load()?;
    let manifest = args.manifest(command, sha);
    let dir = args.out_dir();
    let (study, report) = run_solver(&case, track)?;
    Ok((case, study, report, manifest, dir))
}

fn summary<'a>(
    manifest: &'a RunManifest,
    case: &'a StudyCase,
    study: &AssembledStudy,
    report: &'a FixedPointReport,
) -> SolveSummary<'a> {
    SolveSummary {
        manifest,
        case: &case.name,
        converged: report.converged,
        iterations: report.iterations,
        final_residual: report.history.last().copied(),
        certificate: report.certificate,
        verdict: report.uniqueness(),
        failure: report.failure.as_deref(),
        rcond_l: study.system.rcond_l,
        rcond_k: study.system.rcond_k,
    }
}

pub fn cmd_solve(args: &CommonArgs) -> Result<Outcome> {
    let (case, study, report, manifest, dir) = solve_outputs("solve", args, false)?;
    let mut files = Vec::new();
    let residuals = dir.join("residuals.tsv");
    write_atomic(&residuals, &residual_table(&report))?;
    files.push(residuals);
    if report.converged {
        let phasors = dir.join("phasors.tsv");
        write_atomic(&phasors, &phasor_table(&study.node_spectra(&report.w_rho)?))?;
        files.push(phasors);
    }
    let path = dir.join("summary.json");
    write_json(&path, &summary(&manifest, &case, &study, &report))?;
    files.push(path);
    Ok(Outcome {
        code: if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED },
        files,
    })
}

pub fn cmd_certify(args: &CommonArgs) -> Result<Outcome> {
    let (case, study, report, manifest, dir) = solve_outputs("certify", args, true)?;
    let mut files = Vec::new();
    let series = dir.join("jacobian_norms.tsv");
    write_atomic(&series, &residual_table(&report))?;
    files.push(series);
    let path = dir.join("summary.json");
    write_json(&path, &summary(&manifest, &case, &study, &report))?;
    files.push(path);
    match certify_uniqueness(&report, &study.system.map) {
        Ok(_) => Ok(Outcome { code: EXIT_OK, files }),
        Err(Error::State(_)) => Ok(Outcome {
            code: EXIT_NOT_CONVERGED,
            files,
        }),
        Err(e) => Err(e),
    }
}

pub fn kpi_table(kpi: &KpiResult) -> String {
    let mut out = String::from("quantity\tnode\th\tmagnitude_pu\te_abs_pu\te_arg_rad\tphase_compared\n");
    for e in &kpi.entries {
        let q = match e.quantity {
            Quantity::Voltage => "V",
            Quantity::Current => "I",
        };
        let _ = writeln!(
            out,
            "{q}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}",
            e.node, e.order, e.magnitude, e.e_abs, e.e_arg, e.phase_compared
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct ValidateSummary<'a> {
    manifest: &'a RunManifest,
    comparable: bool,
    reason: Option<String>,
    max_e_abs: Option<f64>,
    max_e_arg: Option<f64>,
    periods_simulated: Option<usize>,
    settled: Option<bool>,
    energy_imbalance: Option<f64>,
}

/// Time-domain spectra matched to the harmonic-domain ones.
pub fn tds_spectra(hpf: &[LabeledSpectrum], tds: &crate::tds::TdsResult) -> Result<Vec<LabeledSpectrum>> {
    hpf.iter()
        .map(|l| {
            Ok(LabeledSpectrum {
                quantity: l.quantity,
                node: l.node.clone(),
                spectrum: match l.quantity {
                    Quantity::Voltage => tds.voltage_spectrum(&l.node)?,
                    Quantity::Current => tds.current_spectrum(&l.node)?,
                },
            })
        })
        .collect()
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<Outcome> {
    let (case, study, report, manifest, dir) = solve_outputs("validate", &args.common, false)?;
    if !report.converged {
        return Ok(Outcome {
            code: EXIT_NOT_CONVERGED,
            files: Vec::new(),
        });
    }
    let hpf = study.node_spectra(&report.w_rho)?;
    let cfg = TdsConfig {
        samples_per_period: args.samples_per_period.unwrap_or(case.tds.samples_per_period),
        ..case.tds
    };
    let mut tds_bases = case.bases;
    if let Some(v) = args.tds_voltage_base {
        tds_bases.voltage = v;
    }
    let mut files = Vec::new();
    let path = dir.join("summary.json");
    let mut sum = ValidateSummary {
        manifest: &manifest,
        comparable: false,
        reason: None,
        max_e_abs: None,
        max_e_arg: None,
        periods_simulated: None,
        settled: None,
        energy_imbalance: None,
    };
    let tds = match simulate(&case, &cfg) {
        Ok(t) => t,
        Err(Error::Unstable { period, reason }) => {
            sum.reason = Some(format!("time-domain simulation diverged in period {period}: {reason}"));
            write_json(&path, &sum)?;
            files.push(path);
            return Ok(Outcome {
                code: EXIT_NOT_COMPARABLE,
                files,
            });
        }
        Err(e) => return Err(e),
    };
    let kpi = compare(&hpf, &tds_spectra(&hpf, &tds)?, &case.bases, &tds_bases)?;
    let table = dir.join("kpi.tsv");
    write_atomic(&table, &kpi_table(&kpi))?;
    files.push(table);
    sum.comparable = tds.settled;
    if !tds.settled {
        sum.reason = Some("time-domain simulation did not settle".into());
    }
    sum.max_e_abs = Some(kpi.max_e_abs());
    sum.max_e_arg = Some(kpi.max_e_arg());
    sum.periods_simulated = Some(tds.periods_simulated);
    sum.settled = Some(tds.settled);
    sum.energy_imbalance = Some(tds.energy.imbalance());
    write_json(&path, &sum)?;
    files.push(path);
    Ok(Outcome {
        code: if tds.settled { EXIT_OK } else { EXIT_NOT_COMPARABLE },
        files,
    })
}

/// One row of a scale sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub factor: f64,
    pub converged: bool,
    pub iterations: usize,
    pub jac_inf_norm: Option<f64>,
    pub rho: Option<f64>,
    pub rho_log10: Option<f64>,
    pub verdict: Uniqueness,
    pub error: Option<String>,
}

/// Solves every scaled variant of `case`; failures are recorded in the row.
pub fn sweep_rows(case: &StudyCase, factors: &[f64]) -> Result<Vec<SweepRow>> {
    if factors.is_empty() {
        return Err(Error::Validation("the factor list is empty".into()));
    }
    if let Some(k) = factors.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::Validation(format!("scale factor must be positive, got {k}")));
    }
    Ok(factors
        .par_iter()
        .map(|&k| {
            let row = |report: Option<&FixedPointReport>, error: Option<String>| SweepRow {
                factor: k,
                converged: report.is_some_and(|r| r.converged),
                iterations: report.map_or(0, |r| r.iterations),
                jac_inf_norm: report.and_then(|r| r.certificate).map(|c| c.jac_inf_norm),
                rho: report.and_then(|r| r.certificate).map(|c| c.rho),
                rho_log10: report.and_then(|r| r.certificate).map(|c| c.rho_log10),
                verdict: report.map_or(Uniqueness::NotConverged, |r| r.uniqueness()),
                error,
            };
            match case.apply_scale(k).and_then(|c| run_solver(&c, false)) {
                Ok((_, r)) => row(Some(&r), None),
                Err(e) => row(None, Some(e.to_string())),
            }
        })
        .collect())
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from("factor\tconverged\titerations\tjac_inf_norm\trho\trho_log10\tverdict\n");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_else(|| "nan".into());
    for r in rows {
        let verdict = match r.verdict {
            Uniqueness::CertifiedUnique => "certified-unique",
            Uniqueness::Inconclusive => "inconclusive",
            Uniqueness::NotConverged => "not-converged",
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{verdict}",
            r.factor,
            r.converged,
            r.iterations,
            opt(r.jac_inf_norm),
            opt(r.rho),
            opt(r.rho_log10)
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    manifest: &'a RunManifest,
    rows: &'a [SweepRow],
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Outcome> {
    let (case, sha) = args.common.load()?;
    let manifest = args.common.manifest("sweep", sha);
    let dir = args.common.out_dir();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows = pool.install(|| sweep_rows(&case, &args.factors))?;
    let mut files = Vec::new();
    for r in &rows {
        let p = dir.join("factors").join(format!("factor_{}.json", r.factor));
        write_json(&p, r)?;
        files.push(p);
    }
    let table = dir.join("sweep.tsv");
    write_atomic(&table, &sweep_table(&rows))?;
    files.push(table);
    let path = dir.join("summary.json");
    write_json(
        &path,
        &SweepSummary {
            manifest: &manifest,
            rows: &rows,
        },
    )?;
    files.push(path);
    Ok(Outcome { code: EXIT_OK, files })
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<Outcome> {
    let case = match args.name {
        BenchmarkName::CigreLv => build_cigre_lv(),
        BenchmarkName::Desk => build_desk(),
    };
    let text = case.to_toml()?;
    match &args.out {
        Some(p) => {
            write_atomic(p, &text)?;
            Ok(Outcome {
                code: EXIT_OK,
                files: vec![p.clone()],
            })
        }
        None => {
            print!("{text}");
            Ok(Outcome {
                code: EXIT_OK,
                files: Vec::new(),
            })
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match result {
        Ok(o) => {
            for f in &o.files {
                println!("{}", f.display());
            }
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
