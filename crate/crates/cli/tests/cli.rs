use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcl")).args(args).output().expect("fcl runs")
}

fn run(config: &str, command: &str, out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().expect("utf-8 path");
    let mut args = vec!["--config", config, "--command", command, "--out", out, "--quiet"];
    args.extend_from_slice(extra);
    fcl(&args)
}

fn field_value(csv: &str, x: f64, y: f64) -> f64 {
    csv.lines()
        .skip(1)
        .find_map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            let (px, py): (f64, f64) = (c[2].parse().ok()?, c[3].parse().ok()?);
            (px == x && py == y).then(|| c[4].parse().ok()).flatten()
        })
        .expect("node present")
}

#[test]
fn field_command_writes_distances() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("euclid-two-points", "field", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(csv.starts_with("i,j,x,y,d,multiplicity\n"));
    assert!((field_value(&csv, 0.0, 1.0) - 2f64.sqrt()).abs() < 1e-9);
    assert!(field_value(&csv, 1.0, 0.0).abs() < 1e-12);
    assert!(dir.path().join("field.bin").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "name = \"bad\"\nbogus = 1\n[domain]\nkind = \"plane\"\nmin = [-1.0, -1.0]\nmax = [1.0, 1.0]\n\
         [metric]\nkind = \"euclidean\"\n[set]\nprimitives = [{ kind = \"point\", at = [0.0, 0.0] }]\n",
    )
    .unwrap();
    let o = run(cfg.to_str().unwrap(), "field", &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn missing_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("/nonexistent/scenario.toml", "field", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_override_changes_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("euclid-two-points", "field", dir.path(), &["--grid-h", "0.125", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 49 * 49);
    let toml = fs::read_to_string(dir.path().join("scenario.toml")).unwrap();
    assert!(toml.contains("seed = 3"));
}

#[test]
fn verify_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run("euclid-three-points", "all", d.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = fs::read(a.path().join("report.json")).unwrap();
    let rb = fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"cut_point_matches"));
    assert!(names.contains(&"branch_node_count"));
    for f in ["cutgraph.json", "render.svg", "report.txt", "levels_0.25.json"] {
        assert!(a.path().join(f).exists(), "{f}");
    }
}
