use std::fs;

use adiabatic_qpt::experiment::{emit, refit_scaling_csv, run, Experiment, ExperimentConfig, Study, Table};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn emitted_tables_read_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run(&config(
        r#"{"experiment": {"kind": "ed", "model": "mixed_grover_ising", "n_list": [4, 6],
            "g": {"start": 0.0, "stop": 1.0, "points": 11}, "levels": 3}}"#,
    ))
    .unwrap();
    let files = emit(&bundle, dir.path()).unwrap();
    assert!(files.contains(&"ed.csv".to_string()) && files.contains(&"ed.json".to_string()));

    let back = Table::from_csv("ed", &fs::read(dir.path().join("ed.csv")).unwrap()).unwrap();
    let render = |t: &Table| -> Vec<Vec<String>> { t.rows.iter().map(|r| r.iter().map(|c| c.render()).collect()).collect() };
    assert_eq!(back.columns, bundle.tables[0].columns);
    assert_eq!(render(&back), render(&bundle.tables[0]));
    // the ends of the sweep have degenerate excited levels spanning both parity sectors
    assert_eq!(bundle.nonconverged(), 0, "{:?}", bundle.errors);

    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("ed.json")).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), back.rows.len());
    let energy = back.columns.iter().position(|c| c == "energy").unwrap();
    for (obj, row) in rows.iter().zip(&back.rows) {
        assert_eq!(obj["energy"].as_f64(), row[energy].as_f64());
    }
}

#[test]
fn scaling_fit_is_reproducible_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"experiment": {"kind": "scaling", "study": "ising_gap", "n_list": [16, 32, 64, 128, 256]}}"#);
    let bundle = run(&cfg).unwrap();
    emit(&bundle, dir.path()).unwrap();
    let Experiment::Scaling(study) = &cfg.experiment else { unreachable!() };
    let refit = refit_scaling_csv(study, &fs::read(dir.path().join("scaling.csv")).unwrap()).unwrap();
    let fit = &bundle.fits[0].fit;
    assert!((refit.exponent - fit.exponent).abs() < 1e-9);
    assert!((refit.prefactor / fit.prefactor - 1.0).abs() < 1e-9);
    assert!(matches!(study, Study::IsingGap { .. }));
}

#[test]
fn empty_bundle_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut bundle = run(&config(r#"{"experiment": {"kind": "spectrum", "n_list": [4], "g": [0.5]}}"#)).unwrap();
    bundle.tables.iter_mut().for_each(|t| t.rows.clear());
    assert!(emit(&bundle, dir.path()).is_err());
}
