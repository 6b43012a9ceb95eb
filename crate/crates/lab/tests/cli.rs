use std::process::Command;

use grw_lab::{list_scenarios, run_scenario, Report, ScenarioConfig};

fn grwlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_grwlab")).args(args).output().expect("binary runs")
}

#[test]
fn catalogue_has_the_named_scenarios() {
    let ids: Vec<&str> = list_scenarios().iter().map(|s| s.id).collect();
    assert!(ids.len() >= 9);
    for id in ["desitter-equator-unstable", "oscillation-bessel", "minkowski-slice-stable", "graph-identity-convergence"] {
        assert!(ids.contains(&id), "{id}");
    }
    assert!(list_scenarios().iter().all(|s| !s.anchor.is_empty() && !s.title.is_empty()));
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), ids.len());
}

#[test]
fn same_seed_gives_identical_metrics() {
    for id in ["symalg-identities", "schrodinger-toolkit"] {
        let cfg = ScenarioConfig::new(id).with_seed(42);
        let (a, b) = (run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
        assert_eq!(a.metric_block(), b.metric_block(), "{id}");
    }
    let a = run_scenario(&ScenarioConfig::new("symalg-identities").with_seed(1).with_res(50)).unwrap();
    let b = run_scenario(&ScenarioConfig::new("symalg-identities").with_seed(2).with_res(50)).unwrap();
    assert_ne!(a.metric_block(), b.metric_block());
}

#[test]
fn unknown_scenario_exits_with_usage_status() {
    let out = grwlab(&["--scenario", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(grwlab(&["--res"]).status.code(), Some(2));
    assert_eq!(grwlab(&[]).status.code(), Some(2));
    assert!(run_scenario(&ScenarioConfig::new("no-such-thing")).is_err());
}

#[test]
fn tolerance_scale_can_force_failure() {
    let mut cfg = ScenarioConfig::new("desitter-equator-unstable").with_res(2);
    cfg.tol_scale = 1e-30;
    let r = run_scenario(&cfg).unwrap();
    assert!(!r.passed());
    let dir = tempfile::tempdir().unwrap();
    let out = grwlab(&[
        "--scenario", "desitter-equator-unstable", "--res", "2", "--tol", "1e-30",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_writes_json_and_csv_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = grwlab(&[
        "--scenario", "desitter-equator-unstable", "--seed", "7", "--format", "both",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sub = dir.path().join("desitter-equator-unstable");
    let report = Report::from_json(&std::fs::read_to_string(sub.join("report.json")).unwrap()).unwrap();
    assert!(report.passed());
    assert_eq!(report.seed, 7);
    assert!(report.mesh.vertices > 0 && report.mesh.faces > 0);
    let lambda = report.metric("lambda1").unwrap();
    assert!((lambda.value + 2.0).abs() < 0.04);
    let csv = std::fs::read_to_string(sub.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.metrics.len() + 1);
    assert!(csv.starts_with("name,value,expected,tol,check,pass,provenance"));
}

#[test]
fn config_file_supplies_defaults_and_ambient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# refinement run\nscenario = minkowski-slice-stable\nres = 12\nformat = csv\n").unwrap();
    let out = grwlab(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("minkowski-slice-stable/metrics.csv").exists());
    assert!(!dir.path().join("minkowski-slice-stable/report.json").exists());

    let kv = grw_core::kv::KeyValues::parse("scenario = graph-identity-convergence\nmodel = anti-de-sitter\ndim = 2\nkappa = -1\n").unwrap();
    let parsed = ScenarioConfig::from_kv(&kv).unwrap();
    assert_eq!(parsed.scenario, "graph-identity-convergence");
    assert_eq!(parsed.params.get_str("model"), Some("anti-de-sitter"));
    assert!(parsed.params.get_str("scenario").is_none());
}

#[test]
fn convergence_tables_are_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let out = grwlab(&["--scenario", "gauss-bonnet", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("gauss-bonnet/torus_rescale.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("h,residual"));
    assert_eq!(table.lines().count(), 4);
}
