use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scalecalc"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn grid(dir: &Path, side: &str, metric: &str, file: &str) {
    let o = run(dir, &["zoo", "generate", "--family", "grid", "--d", "2", "--L", side, "--metric", metric, "--out", file]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn zoo_generate_writes_a_loadable_space() {
    let dir = tempfile::tempdir().unwrap();
    grid(dir.path(), "8", "l1", "space.json");
    let space = scalecalc::MetricMeasureSpace::load(dir.path().join("space.json")).unwrap();
    assert_eq!(space.len(), 64);
}

#[test]
fn random_geometric_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["zoo", "generate", "--family", "random_geometric", "--count", "20"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--seed"));
    let o = run(dir.path(), &["zoo", "generate", "--family", "random_geometric", "--count", "20", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn viewpoint_gradient_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid(d, "6", "l1", "space.json");
    let o = run(d, &["viewpoint", "standard", "--h", "1.5", "--space", "space.json", "--out", "vp.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let field: Vec<f64> = (0..36).map(|i| (i % 6) as f64).collect();
    std::fs::write(d.join("f.json"), serde_json::to_string(&field).unwrap()).unwrap();
    let o = run(
        d,
        &["calc", "grad", "--kind", "viewpoint", "--p", "2", "--vp", "vp.json", "--space", "space.json", "--field", "f.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let grad: Vec<f64> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(grad.len(), 36);
    assert!(grad.iter().all(|g| g.is_finite() && *g >= 0.0));
}

#[test]
fn energy_and_coarea_commands_hold() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid(d, "6", "l1", "space.json");
    let o = run(d, &["viewpoint", "lazy", "--h", "1", "--space", "space.json", "--out", "lazy.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let field: Vec<f64> = (0..36).map(|i| ((i * 7) % 5) as f64).collect();
    std::fs::write(d.join("f.json"), serde_json::to_string(&field).unwrap()).unwrap();
    let o = run(d, &["calc", "energy", "--vp", "lazy.json", "--space", "space.json", "--field", "f.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(d, &["calc", "coarea", "--h", "1", "--space", "space.json", "--field", "f.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
}

#[test]
fn profile_jp_emits_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid(d, "8", "l1", "space.json");
    run(d, &["viewpoint", "lazy", "--h", "1", "--space", "space.json", "--out", "vp.json"]);
    let o = run(
        d,
        &["profile", "jp", "--p", "2", "--backend", "vp:vp.json", "--space", "space.json", "--volumes", "4,8,16", "--out", "jp"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("jp/profile.curve.csv")).unwrap();
    assert!(csv.starts_with("argument,value,mode,witness_id\n"));
    assert_eq!(csv.lines().count(), 4);
    let curve = read_json(&d.join("jp/profile.curve.json"));
    assert_eq!(curve["args"].as_array().unwrap().len(), 3);
    let manifest = read_json(&d.join("jp/manifest.json"));
    assert_eq!(manifest["passed"], true);
    assert!(manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|a| a["claim"].as_str().is_some_and(|c| !c.is_empty())));
}

#[test]
fn unknown_config_field_is_located_by_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"space": {"family": "grid", "d": 2, "side": 4, "metric": "l1"},
                 "operations": [{"op": "coarea", "params": {"h": 1, "bogus": 2}}],
                 "seed": 1, "output": "out"}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let o = run(dir.path(), &["run", "--config", "c.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("c.json#/operations/0/params/bogus"), "{}", stderr(&o));
}

#[test]
fn stochastic_operation_without_seed_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"space": {"family": "grid", "d": 2, "side": 4, "metric": "l1"},
                 "operations": [{"op": "coarea", "params": {"h": 1}}], "output": "out"}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let o = run(dir.path(), &["run", "--config", "c.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("#/seed"), "{}", stderr(&o));
    // The command-line seed satisfies it.
    let o = run(dir.path(), &["run", "--config", "c.json", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn bad_tolerance_override_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.json"), r#"{"identiy": 1e-8}"#).unwrap();
    let o = run(dir.path(), &["walk", "gamma", "--phi", "pow:0.5", "--tmax", "10", "--tol-overrides", "t.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("t.json#/identiy"), "{}", stderr(&o));
}

#[test]
fn bounded_rate_sobolev_on_the_plane_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"space": {"family": "grid", "d": 2, "side": 16, "metric": "l1"},
                 "operations": [{"op": "sobolev", "id": "bounded",
                                 "params": {"p": 1, "phi": "const:1", "backend": "sup:1",
                                            "max_volume": 64, "c_max": 2}}],
                 "output": "out"}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let o = run(dir.path(), &["run", "--config", "c.json"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let witness = read_json(&dir.path().join("out/bounded.witness.json"));
    assert_eq!(witness["field"].as_array().unwrap().len(), 256);
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["passed"], false);
    assert!(manifest["artifacts"].as_array().unwrap().iter().any(|a| a["role"] == "witness"));
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"space": {"family": "grid", "d": 2, "side": 10, "metric": "l1"},
                 "kernel": {"builder": "lazy", "h": 1},
                 "seed": 9,
                 "operations": [
                   {"op": "energy_identity", "params": {"fields": 4}},
                   {"op": "gradient_sandwich", "params": {"fields": 2}},
                   {"op": "nash", "params": {"phi": "pow:0.5", "fields": 4}},
                   {"op": "profile", "params": {"backend": "vp", "volumes": [2, 4, 8]}},
                   {"op": "decay", "params": {"n_max": 16}},
                   {"op": "discretize", "params": {"h": 2}}
                 ]}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["run", "--config", "c.json", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let names: Vec<_> = std::fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() > 6);
    for name in names {
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
}

#[test]
fn certify_identity_between_lattice_norms() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid(d, "8", "l1", "src.json");
    grid(d, "8", "linf", "dst.json");
    let map: Vec<usize> = (0..64).collect();
    std::fs::write(d.join("map.json"), serde_json::to_string(&map).unwrap()).unwrap();
    let o = run(d, &["coarse", "certify", "--src", "src.json", "--dst", "dst.json", "--map", "map.json", "--r", "2,4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cert: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cert["passes"], true);
}

#[test]
fn accept_emits_the_criteria_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["accept", "--only", "8", "--out", "acc"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = read_json(&dir.path().join("acc/acceptance.criteria.json"));
    let ids: Vec<&str> = table.as_array().unwrap().iter().map(|l| l["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["8a", "8b"]);
    assert!(table.as_array().unwrap().iter().all(|l| l["pass"] == true));
}
