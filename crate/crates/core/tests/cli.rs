use std::fs;
use std::path::Path;

use hpf::cli::{run, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK};
use hpf::study::DESK_TOML;

fn write_case(dir: &Path) -> String {
    let p = dir.join("desk.toml");
    fs::write(&p, DESK_TOML).unwrap();
    p.display().to_string()
}

fn hpf(args: &[&str]) -> i32 {
    run(std::iter::once("hpf").chain(args.iter().copied()))
}

#[test]
fn solve_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let case = write_case(tmp.path());
    let out = tmp.path().join("out");
    assert_eq!(hpf(&["solve", &case, "--out-dir", out.to_str().unwrap()]), EXIT_OK);
    let phasors = fs::read_to_string(out.join("phasors.tsv")).unwrap();
    assert!(phasors.starts_with("node\tquantity\tphase\th\tmagnitude_pu\tphase_rad\n"));
    // 4 retained nodes, voltage and current, 3 phases, h = 0..=13
    assert_eq!(phasors.lines().count(), 1 + 4 * 2 * 3 * 14);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["verdict"], "certified-unique");
    assert_eq!(summary["manifest"]["case_sha256"].as_str().unwrap().len(), 64);
    assert!(fs::read_to_string(out.join("residuals.tsv")).unwrap().lines().count() > 2);
}

#[test]
fn overrides_are_recorded_and_applied() {
    let tmp = tempfile::tempdir().unwrap();
    let case = write_case(tmp.path());
    let out = tmp.path().join("o");
    let code = hpf(&["solve", &case, "--hmax", "7", "--order", "2", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["manifest"]["overrides"]["hmax"], "7");
    assert_eq!(summary["manifest"]["overrides"]["order"], "2");
    let phasors = fs::read_to_string(out.join("phasors.tsv")).unwrap();
    assert_eq!(phasors.lines().count(), 1 + 4 * 2 * 3 * 8);
}

#[test]
fn overload_exits_with_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let case = write_case(tmp.path());
    let out = tmp.path().join("o");
    assert_eq!(hpf(&["solve", &case, "--scale", "8", "--out-dir", out.to_str().unwrap()]), EXIT_NOT_CONVERGED);
    assert!(!out.join("phasors.tsv").exists());
    assert_eq!(hpf(&["certify", &case, "--scale", "8", "--out-dir", out.to_str().unwrap()]), EXIT_NOT_CONVERGED);
}

#[test]
fn bad_inputs_exit_with_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(hpf(&["solve", missing.to_str().unwrap()]), EXIT_ERROR);
    let empty = tmp.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    assert_eq!(hpf(&["solve", empty.to_str().unwrap()]), EXIT_ERROR);
    let case = write_case(tmp.path());
    assert_eq!(hpf(&["solve", &case, "--scale=-1"]), EXIT_ERROR);
    assert_eq!(hpf(&["sweep", &case, "--factors", "1,0"]), EXIT_ERROR);
    assert_eq!(hpf(&["frobnicate"]), EXIT_ERROR);
}

#[test]
fn sweep_writes_one_file_per_factor() {
    let tmp = tempfile::tempdir().unwrap();
    let case = write_case(tmp.path());
    let out = tmp.path().join("s");
    let code = hpf(&["sweep", &case, "--factors", "1,3,8", "--jobs", "2", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let table = fs::read_to_string(out.join("sweep.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].ends_with("certified-unique") && rows[2].ends_with("not-converged"));
    for f in ["1", "3", "8"] {
        assert!(out.join("factors").join(format!("factor_{f}.json")).exists());
    }
}

#[test]
fn benchmark_reproduces_bundled_file() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("d.toml");
    assert_eq!(hpf(&["benchmark", "desk", "--out", p.to_str().unwrap()]), EXIT_OK);
    assert_eq!(fs::read_to_string(p).unwrap(), DESK_TOML);
}
