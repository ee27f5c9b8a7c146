use std::io::Write;

use lrdbreak::pipeline::{load_series, write_series, InputError, Pipeline};
use lrdbreak::report::{run_segmentation, run_test, Report, RunError, TestOptions};
use lrdbreak::simulate::{simulate, ProcessSpec};

#[test]
fn simulated_series_survive_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("farima.txt");
    let x = simulate(&ProcessSpec::farima(0.3).into(), 2000, 4).unwrap();
    write_series(&path, &x).unwrap();
    let back = load_series(&path, &Pipeline::default()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&x));
}

fn price_file(dir: &tempfile::TempDir) -> std::path::PathBuf {
    let x = simulate(&ProcessSpec::dow_jones_garch().into(), 1500, 8).unwrap();
    let path = dir.path().join("prices.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "Date,Open,Close").unwrap();
    let mut p = 3300.0;
    for (i, r) in x.iter().enumerate() {
        p *= (r / 100.0).exp();
        writeln!(f, "day{i},0,{p:.6}").unwrap();
    }
    path
}

#[test]
fn report_from_price_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = price_file(&dir);
    let pipeline: Pipeline = "prices:log_returns_pct,demean,square".parse().unwrap();
    let pipeline = pipeline.with_column("Close".parse().unwrap());
    let report = run_test(&path, &pipeline, &TestOptions::default()).unwrap();
    assert_eq!(report.n, 1499);
    let input = report.input.as_ref().unwrap();
    assert!(input.chain.contains("log_returns_pct") && input.chain.find("demean") < input.chain.find("square"));

    let json_path = dir.path().join("report.json");
    std::fs::write(&json_path, report.to_json()).unwrap();
    let back: Report = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(back, report);

    let seg = run_segmentation(&path, &pipeline, &TestOptions::default(), 2).unwrap();
    assert!(seg.segmentation.unwrap().trace_is_consistent());
}

#[test]
fn transform_order_is_recorded_and_matters() {
    let dir = tempfile::tempdir().unwrap();
    let path = price_file(&dir);
    let a: Pipeline = "prices:log_returns_pct,demean,square".parse().unwrap();
    let b: Pipeline = "prices:log_returns_pct,square,demean".parse().unwrap();
    let xa = load_series(&path, &a.with_column("Close".parse().unwrap())).unwrap();
    let xb = load_series(&path, &b.with_column("Close".parse().unwrap())).unwrap();
    assert_ne!(xa.values(), xb.values());
}

#[test]
fn input_and_compute_errors_are_distinguished() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let err = run_test(&missing, &Pipeline::default(), &TestOptions::default()).unwrap_err();
    assert!(matches!(err, RunError::Input(InputError::Io { .. })));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1.0\n2.0\nabc\n").unwrap();
    let err = run_test(&bad, &Pipeline::default(), &TestOptions::default()).unwrap_err();
    assert!(matches!(err, RunError::Input(InputError::Parse { line: 3, .. })), "{err:?}");

    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "5\n".repeat(200)).unwrap();
    let err = run_test(&flat, &Pipeline::default(), &TestOptions::default()).unwrap_err();
    assert!(matches!(err, RunError::Compute(_)));
}
