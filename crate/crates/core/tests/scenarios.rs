use std::path::PathBuf;

use bsymp::runner::{self, RunOptions, RunReport};
use bsymp::scenario::Scenario;
use bsymp::Error;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(name: &str) -> RunReport {
    let s = Scenario::load(&path(name)).unwrap();
    let report = runner::run(&s, &RunOptions::default());
    for t in report.tasks.iter().filter(|t| !t.passed) {
        eprintln!("{name}/{}: {:?}", t.task, t.residuals.iter().filter(|r| !r.passed).collect::<Vec<_>>());
    }
    report
}

fn value(report: &RunReport, task: &str, residual: &str) -> f64 {
    report.task(task).unwrap_or_else(|| panic!("no task {task}")).residual(residual).unwrap().value
}

#[test]
fn every_bundled_scenario_passes() {
    let dir = path("");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if name == "malformed.scn" {
            continue;
        }
        assert!(run(&name).passed, "{name}");
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn radko_sphere() {
    let r = run("radko.scn");
    assert_eq!(value(&r, "poisson", "schouten"), 0.0);
    assert!(r.task("equator").unwrap().passed);
    assert!(r.task("north_cap").unwrap().passed);
}

#[test]
fn normal_form_round_trip() {
    let r = run("normal_form.scn");
    assert!(value(&r, "b_collar", "round_trip") < 1e-8);
    assert!(value(&r, "reeb", "pointwise_solve_agreement") < 1e-10);
    assert_eq!(value(&r, "b_collar", "b_symplectic.nondegeneracy"), 2.0);
}

#[test]
fn doubles() {
    for name in ["trivial_cob.scn", "trivial_cob_inout.scn", "disk_double.scn"] {
        let r = run(name);
        assert!(value(&r, "double", "overlap.right") < 1e-6, "{name}");
    }
    assert!(value(&run("trivial_cob.scn"), "double", "seam_closedness") < 1e-6);
}

#[test]
fn inflation_constants() {
    let r = run("thurston.scn");
    let k = |t: &str| r.task(t).unwrap().provenance["k"].as_f64().unwrap();
    assert!((k("perturbed") - 3.01).abs() < 1e-9);
    assert!(k("literal") < 1e-6);
}

#[test]
fn mapping_tori_and_twists() {
    let r = run("torus_id.scn");
    for t in ["identity", "translation", "twist"] {
        assert_eq!(value(&r, t, "seam"), 0.0);
    }
    let r = run("dehn_t2s2.scn");
    assert!(value(&r, "analytic", "analytic.symplectic") < 1e-6);
    assert!(value(&r, "finite_differences", "fd.symplectic") < 1e-4);
    assert!(value(&r, "analytic", "flow") < 1e-6);
}

#[test]
fn chain_has_four_links() {
    let r = run("chain.scn");
    let links = r.tasks[0].provenance["chain"]["links"].as_array().unwrap();
    assert_eq!(links.len(), 4);
}

#[test]
fn reports_are_deterministic() {
    let a = run("dehn_t2s2.scn").to_json();
    let b = run("dehn_t2s2.scn").to_json();
    assert_eq!(a, b);
    let back: RunReport = serde_json::from_str(&a).unwrap();
    assert_eq!(back.to_json(), a);
}

#[test]
fn malformed_scenarios_are_rejected() {
    assert!(matches!(Scenario::load(&path("malformed.scn")), Err(Error::Parse(_) | Error::Scenario(_))));
    assert!(matches!(Scenario::load(&path("missing.scn")), Err(Error::Io(_))));
    let empty = Scenario::load(&path("empty.scn")).unwrap();
    let r = runner::verify_fields(&empty, &RunOptions::default());
    assert!(r.passed && r.tasks.is_empty());
}
