use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use orbitlab::experiments::{run, RunManifest, ScenarioConfig, SCENARIO_NAMES};
use orbitlab::Error;

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_stem().is_some_and(|s| s != "expected")
        })
        .collect();
    v.sort();
    v
}

fn torus_json() -> serde_json::Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/torus.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn shipped_configs_parse_and_cover_every_scenario() {
    let mut seen = BTreeSet::new();
    for p in configs() {
        let cfg = ScenarioConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        seen.insert(cfg.scenario.name());
    }
    for name in SCENARIO_NAMES {
        assert!(seen.contains(name), "no config for {name}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut top = torus_json();
    top["extra"] = serde_json::json!(true);
    assert!(matches!(
        ScenarioConfig::from_json(&top.to_string()),
        Err(Error::Config(_))
    ));
    let mut inner = torus_json();
    inner["scenario"]["max_weyl_typo"] = serde_json::json!(0.1);
    assert!(matches!(
        ScenarioConfig::from_json(&inner.to_string()),
        Err(Error::Config(_))
    ));
    let mut name = torus_json();
    name["scenario"]["name"] = serde_json::json!("tori");
    assert!(matches!(
        ScenarioConfig::from_json(&name.to_string()),
        Err(Error::Config(_))
    ));
}

#[test]
fn invalid_values_are_rejected() {
    let mut v = torus_json();
    v["schema_version"] = serde_json::json!(99);
    assert!(matches!(
        ScenarioConfig::from_json(&v.to_string()),
        Err(Error::Config(_))
    ));
    let mut v = torus_json();
    v["scenario"]["schedule"] = serde_json::json!([300.0, 100.0]);
    assert!(matches!(
        ScenarioConfig::from_json(&v.to_string()),
        Err(Error::Config(_))
    ));
    let mut v = torus_json();
    v["scenario"]["frequencies"] = serde_json::json!([[1, 0, 0]]);
    assert!(matches!(
        ScenarioConfig::from_json(&v.to_string()),
        Err(Error::Config(_))
    ));
}

#[test]
fn hash_tracks_effective_configuration() {
    let a = ScenarioConfig::from_json(&torus_json().to_string()).unwrap();
    let b = ScenarioConfig::from_json(&torus_json().to_string()).unwrap();
    assert_eq!(a.hash(), b.hash());
    let mut c = b.clone();
    c.seed += 1;
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn runs_are_reproducible_and_manifest_is_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::from_json(&torus_json().to_string()).unwrap();
    let m1 = run(&cfg, &tmp.path().join("a")).unwrap();
    let m2 = run(&cfg, &tmp.path().join("b")).unwrap();
    assert_eq!(m1.outputs, m2.outputs);
    assert_eq!(m1.checks, m2.checks);
    assert_eq!(m1.config_hash, cfg.hash());
    assert!(m1.outputs.iter().any(|o| o.name == "torus.csv"));
    assert!(m1.outputs.iter().any(|o| o.name == "plot.gp"));
    let on_disk: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk, m1);
    assert_eq!(m1.passed, m1.checks.iter().all(|c| c.passed));
}
