use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn hypvol(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypvol"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Data rows of a CSV output, as `(header, rows)`.
fn csv_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (h, rows) = csv_table(path);
    let k = h.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn genus_two_group_is_adapted() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["group-validate", fixture("genus2.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("genus 2"));
    let s = json(&dir.path().join("group.json"));
    assert_eq!(s["summary"]["genus"], 2);
    assert!(s["summary"]["min_gap"].as_f64().unwrap() > 0.0);
    assert_eq!(s["summary"]["gaps"].as_array().unwrap().len(), 6);
}

#[test]
fn overlapping_circles_fail_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["group-validate", fixture("overlapping.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not adapted"), "{}", stderr(&o));
}

#[test]
fn malformed_spec_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["group-validate", fixture("malformed.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line "), "{}", stderr(&o));
}

#[test]
fn missing_spec_and_bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&hypvol(&["volr", missing.to_str().unwrap()], dir.path())), 2);
    assert_eq!(code(&hypvol(&["volr"], dir.path())), 2);
    let funnel = fixture("funnel.toml");
    assert_eq!(code(&hypvol(&["volr", funnel.to_str().unwrap(), "--tol", "-1"], dir.path())), 2);
    assert_eq!(code(&hypvol(&["volr", funnel.to_str().unwrap(), "--grid", "0.1,oops"], dir.path())), 2);
    // The section for another subcommand is missing.
    assert_eq!(code(&hypvol(&["sweep", funnel.to_str().unwrap()], dir.path())), 2);
    assert_eq!(code(&hypvol(&["model-check", "--criteria", "9"], dir.path())), 2);
}

#[test]
fn funnel_finite_part_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["volr", fixture("funnel.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(&dir.path().join("volr.json"));
    // ∫_ε^1 x⁻³(1 + x² + x⁴/4) dx = ε⁻²/2 - log ε - 3/8 - ε²/8.
    let a0 = s["summary"]["fit"]["a0"].as_f64().unwrap();
    assert!((a0 + 0.375).abs() < 1e-6, "{a0}");
    let (h, rows) = csv_table(&dir.path().join("volr.csv"));
    assert_eq!(h, ["eps", "volume", "fit"]);
    assert_eq!(rows.len(), 8);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&hypvol(&["volr", fixture("funnel.toml").to_str().unwrap()], d.path())), 0);
    }
    for f in ["volr.csv", "volr.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let text = std::fs::read_to_string(a.path().join("volr.csv")).unwrap();
    let hash = text.lines().find_map(|l| l.strip_prefix("# config-sha256: ")).unwrap();
    assert_eq!(hash.len(), 64);
    assert!(text.lines().any(|l| l.starts_with("# quantity: volume = ")));
}

#[test]
fn overrides_change_the_config_hash() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let f = fixture("slab.toml");
    assert_eq!(code(&hypvol(&["volr", f.to_str().unwrap()], a.path())), 0);
    assert_eq!(code(&hypvol(&["volr", f.to_str().unwrap(), "--eps0", "0.25"], b.path())), 0);
    let hash = |d: &Path| json(&d.join("volr.json"))["header"]["config_sha256"].as_str().unwrap().to_string();
    assert_ne!(hash(a.path()), hash(b.path()));
}

#[test]
fn two_point_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["sweep", fixture("cyclic.toml").to_str().unwrap(), "--grid", "0.1,0.05"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("at least 4"), "{}", stderr(&o));
}

#[test]
fn frozen_family_gives_a_flat_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["sweep", fixture("frozen.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let v = column(&dir.path().join("sweep_plot.csv"), "vol_r");
    assert_eq!(v.len(), 4);
    for x in &v {
        assert!((x - v[0]).abs() < 1e-12 * v[0].abs(), "{v:?}");
    }
}

#[test]
fn short_cyclic_sweep_fails_the_limit_check() {
    // Four points stop at ε = 0.0125, where the gap is still a few percent.
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["sweep", fixture("cyclic.toml").to_str().unwrap(), "--eps-min", "0.0125"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("limit check FAIL"));
    let s = json(&dir.path().join("sweep.json"));
    assert_eq!(s["summary"]["passed"], false);
    assert_eq!(s["summary"]["grid"].as_array().unwrap().len(), 4);
    // Loosening the tolerance lets the same run pass.
    let o = hypvol(&["sweep", fixture("cyclic.toml").to_str().unwrap(), "--eps-min", "0.0125", "--tol", "0.1"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn cyclic_family_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypvol(&["sweep", fixture("cyclic.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("final gap"));
    let gaps = column(&dir.path().join("sweep_plot.csv"), "gap");
    assert_eq!(gaps.len(), 8);
    assert!(gaps.windows(2).all(|p| p[1] < p[0]), "{gaps:?}");
    let s = json(&dir.path().join("sweep.json"));
    assert!(s["summary"]["final_gap_relative"].as_f64().unwrap() < 1e-2);
    assert!(s["summary"]["failures"].as_array().unwrap().is_empty());
    let (h, rows) = csv_table(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 9);
    let status = h.iter().position(|c| c == "status").unwrap();
    assert!(rows.iter().all(|r| r[status] == "ok"));
}

#[test]
fn uniformize_and_hj_solve_write_their_series() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("collar.toml");
    let o = hypvol(&["uniformize", spec.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv_table(&dir.path().join("uniformize.csv"));
    assert_eq!(h, ["chart", "v", "w", "phi"]);
    assert!(rows.iter().all(|r| r[0] == "neck"));
    let o = hypvol(&["uniformize", spec.to_str().unwrap(), "--grid", "-0.5,0.0,0.5"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_table(&dir.path().join("uniformize.csv")).1.len(), 3 * 16);

    let o = hypvol(&["hj-solve", spec.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(&dir.path().join("hj.json"));
    for c in s["summary"]["columns"].as_array().unwrap() {
        let a2 = c["a2"].as_f64().unwrap();
        let closed = c["a2_closed_form"].as_f64().unwrap();
        assert!((a2 - closed).abs() < 1e-5);
        assert!((c["a0"].as_f64().unwrap() - c["phi"].as_f64().unwrap()).abs() < 1e-9);
    }
}
