use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn coarse_grids() -> Value {
    json!({
        "sphere_level": 4,
        "plane_radial": 16,
        "plane_angular": 4,
        "volume_level": 8,
        "volume_radial": 8,
        "eval_level": 2,
        "eval_radii": 3
    })
}

fn bump() -> Value {
    json!({
        "kind": "annular_bump",
        "a": 0.5,
        "b": 2.0,
        "terms": [{"coef": 1.0, "powers": [0, 0, 0]}, {"coef": 0.5, "powers": [1, 1, 0]}]
    })
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn lightcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lightcone")).args(args).output().expect("binary runs")
}

fn run(dir: &TempDir, config: &Value, extra: &[&str]) -> (Output, PathBuf) {
    let path = write_config(dir.path(), "config.json", config);
    let out = dir.path().join("out");
    let mut args = vec!["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (lightcone(&args), out)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_field_isometry_exits_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"experiment": "isometry-u", "fields": [{"kind": "zero"}], "grids": coarse_grids()});
    let (o, out) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["passed"], json!(true));
    assert_eq!(r["results"]["identity"]["lhs"], json!(0.0));
    assert_eq!(r["results"]["identity"]["rhs"], json!(0.0));
    for file in ["report.txt", "points.csv", "plotdata.csv"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
}

#[test]
fn zero_inner_radius_names_the_field_block() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"experiment": "isometry-u", "fields": [{"kind": "annular_bump", "a": 0.0, "b": 2.0}]});
    let (o, _) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fields[0]"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"experiment": "isometry-u", "fields": [bump()], "grid": {}});
    let (o, _) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid"), "{}", stderr(&o));

    let cfg = json!({"experiment": "isometry-u", "fields": [bump()], "grids": {"sphere_lvl": 4}});
    let (o, _) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grids"), "{}", stderr(&o));
}

#[test]
fn malformed_sweep_levels_exit_two() {
    let dir = TempDir::new().unwrap();
    for levels in [json!([4, 8]), json!([4, 4, 8]), json!([8, 4, 2])] {
        let cfg = json!({
            "experiment": "sweep",
            "fields": [bump()],
            "sweep": {"base": "isometry-u", "levels": levels}
        });
        let path = write_config(dir.path(), "sweep.json", &cfg);
        let o = lightcone(&["sweep", path.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "levels {levels}");
        assert!(stderr(&o).contains("sweep"), "{}", stderr(&o));
    }
}

#[test]
fn missing_config_exits_two() {
    let o = lightcone(&["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn violated_tolerance_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "experiment": "route-xcheck",
        "fields": [bump()],
        "grids": coarse_grids(),
        "points": 4,
        "tolerances": {"u_agreement": 0.0}
    });
    let (o, out) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["passed"], json!(false));
}

#[test]
fn uncovered_support_exits_four() {
    let dir = TempDir::new().unwrap();
    let mut grids = coarse_grids();
    grids["radon_extent"] = json!(0.9);
    let cfg = json!({"experiment": "radon-selftest", "fields": [bump()], "grids": grids});
    let (o, _) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let cfg = json!({
        "experiment": "route-xcheck",
        "fields": [bump()],
        "grids": coarse_grids(),
        "points": 6,
        "tolerances": {"u_agreement": 0.5, "v_agreement": 0.5}
    });
    let mut reports = vec![];
    for threads in ["1", "3"] {
        let dir = TempDir::new().unwrap();
        let (o, out) = run(&dir, &cfg, &["--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("metadata");
        let points = std::fs::read(out.join("points.csv")).unwrap();
        reports.push((serde_json::to_string(&r).unwrap(), points));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn zero_field_sweep_is_all_zeros() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "experiment": "sweep",
        "fields": [{"kind": "zero"}],
        "grids": coarse_grids(),
        "sweep": {"base": "isometry-u", "levels": [2, 4, 8]}
    });
    let path = write_config(dir.path(), "sweep.json", &cfg);
    let out = dir.path().join("out");
    let o = lightcone(&["sweep", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("convergence.csv")).unwrap();
    let levels: Vec<(usize, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(levels, vec![(2, 0.0), (4, 0.0), (8, 0.0)]);
}
