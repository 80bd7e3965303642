use harness::config::{Config, ExperimentId};
use harness::report::CSV_COLUMNS;
use harness::run_experiment;

#[test]
fn polylog_experiment_passes_and_is_deterministic() {
    let cfg = Config::default_for(ExperimentId::E3);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert!(a.pass());
    assert!(a.criteria[0].measured["max_gap"] < 1e-10);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.csv().unwrap(), b.csv().unwrap());
}

#[test]
fn csv_header_and_files() {
    let cfg = Config::default_for(ExperimentId::E3);
    let rep = run_experiment(&cfg).unwrap();
    let csv = rep.csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(csv.lines().count(), 1 + cfg.grid.s_values.len());
    let dir = tempfile::tempdir().unwrap();
    let files = rep.write(dir.path(), true).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert!(names.contains(&"E3.json".to_string()));
    assert!(names.contains(&"E3.csv".to_string()));
    assert!(names.contains(&"E3.runtimes.json".to_string()));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("E3.json")).unwrap()).unwrap();
    assert_eq!(json["experiment"], "E3");
    assert_eq!(json["criteria"][0]["id"], "A3");
    assert!(json.get("runtimes").is_none());
}

#[test]
fn ground_kernel_reduces_to_sine_kernel() {
    let mut cfg = Config::default_for(ExperimentId::E1);
    cfg.ensemble.s = "inf".into();
    cfg.grid.n = vec![16, 24, 32];
    let setup = harness::Setup::new(&cfg).unwrap();
    let mut out = harness::experiments::Outcome::default();
    let c = harness::run_criterion("A2", &setup, &mut out).unwrap();
    println!("{}", c.line());
    assert!(c.pass);
    assert!(c.measured["max_err_n32"] < 1e-2);
}

#[test]
fn malformed_config_gives_error_and_no_output() {
    let mut cfg = Config::default_for(ExperimentId::E3);
    cfg.ensemble.deformation = vec!["0".into(), "0".into(), "0".into()];
    let err = run_experiment(&cfg).unwrap_err();
    assert!(err.to_string().contains("t = Q''(0)/2 must be positive"), "{err}");
}
