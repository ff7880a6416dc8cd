mod common;

use std::path::Path;

use sg2::app::{self, sidecar, Overrides};
use sg2::config::RunConfig;
use sg2::efficiency::{EfficiencySettings, GridSpec};
use sg2::simulate::{ClickStream, Mode};
use sg2::{Error, TOOL_VERSION};

use common::reference_config;

fn small(pulses: u64) -> RunConfig {
    let mut cfg = reference_config();
    cfg.run.n_pulses = pulses;
    cfg
}

fn simulate(cfg: &RunConfig, dir: &Path, name: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    app::cmd_simulate(cfg, &out).unwrap();
    out
}

#[test]
fn vacuum_source_writes_an_empty_stream_with_a_valid_header() {
    let dir = tempfile::tempdir().unwrap();
    let text = common::REFERENCE_TOML
        .replace("p1 = 0.029", "p1 = 0.0")
        .replace("g2_target = 0.05", "p2 = 0.0");
    let mut cfg = RunConfig::from_toml_str(&text).unwrap();
    cfg.run.n_pulses = 5000;
    let out = dir.path().join("vac.sg2c");
    let summary = app::cmd_simulate(&cfg, &out).unwrap();
    assert_eq!(summary.records, 0);
    let s = ClickStream::load(&out).unwrap();
    assert!(s.is_empty());
    assert_eq!(s.n_pulses(), 5000);
    assert_eq!(s.config_hash_hex(), cfg.experiment().unwrap().hash_hex());
    assert_eq!(std::fs::metadata(&out).unwrap().len(), sg2::simulate::HEADER_LEN);
}

#[test]
fn repeated_runs_are_byte_identical_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(300_000);
    for ext in ["sg2c", "csv"] {
        let a = simulate(&cfg, dir.path(), &format!("a.{ext}"));
        let b = simulate(&cfg, dir.path(), &format!("b.{ext}"));
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{ext}");
        assert_eq!(std::fs::read(sidecar(&a, ".json")).unwrap(), std::fs::read(sidecar(&b, ".json")).unwrap());
    }
    let bin = ClickStream::load(dir.path().join("a.sg2c")).unwrap();
    let csv = ClickStream::load(dir.path().join("a.csv")).unwrap();
    assert_eq!(bin, csv);
}

#[test]
fn every_output_names_tool_version_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(400_000);
    let stream = simulate(&cfg, dir.path(), "run.csv");
    let hash = cfg.experiment().unwrap().hash_hex();
    let tool = TOOL_VERSION.replace(' ', "/");

    let first_line = |p: &Path| std::fs::read_to_string(p).unwrap().lines().next().unwrap().to_string();
    assert!(first_line(&stream).contains(&hash) && first_line(&stream).contains(&tool));
    let summary = std::fs::read_to_string(sidecar(&stream, ".json")).unwrap();
    assert!(summary.contains(&hash) && summary.contains(TOOL_VERSION));

    let report = dir.path().join("report.json");
    app::cmd_analyze(&stream, &cfg, None, &report).unwrap();
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains(&hash) && text.contains(TOOL_VERSION));
    let csv = first_line(&sidecar(&report, ".csv"));
    assert!(csv.contains(&hash) && csv.contains(TOOL_VERSION));

    let fit = dir.path().join("fit.json");
    app::cmd_fit(&report, None, &fit).unwrap();
    let text = std::fs::read_to_string(&fit).unwrap();
    assert!(text.contains(&hash) && text.contains(TOOL_VERSION));

    let map = dir.path().join("map.json");
    let settings = EfficiencySettings {
        n_pulses: 20_000,
        replications: 3,
        bootstrap_resamples: 20,
        include_hwp: false,
        ..EfficiencySettings::default()
    };
    let grid = GridSpec {
        resolution: 5,
        ..GridSpec::default()
    };
    let m = app::cmd_efficiency_map(&grid, &settings, &map).unwrap();
    let text = std::fs::read_to_string(&map).unwrap();
    assert!(text.contains(&m.config_hash) && text.contains(TOOL_VERSION));
    let csv = first_line(&sidecar(&map, ".csv"));
    assert!(csv.contains(&m.config_hash) && csv.contains(TOOL_VERSION));
}

#[test]
fn truncated_stream_reports_the_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(200_000);
    let out = simulate(&cfg, dir.path(), "run.sg2c");
    let bytes = std::fs::read(&out).unwrap();
    let cut = bytes.len() - 4;
    std::fs::write(&out, &bytes[..cut]).unwrap();
    let err = app::cmd_analyze(&out, &cfg, None, &dir.path().join("r.json")).unwrap_err();
    match &err {
        Error::Format { offset, .. } => {
            let header = sg2::simulate::HEADER_LEN;
            let record = sg2::simulate::RECORD_LEN;
            // The offset is the start of the incomplete record.
            assert_eq!(*offset, header + (cut as u64 - header) / record * record);
        }
        other => panic!("expected a format error, got {other:?}"),
    }
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn version_mismatch_names_both_versions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(10_000);
    let out = simulate(&cfg, dir.path(), "run.sg2c");
    let mut bytes = std::fs::read(&out).unwrap();
    bytes[4] = 7;
    std::fs::write(&out, &bytes).unwrap();
    let err = ClickStream::load(&out).unwrap_err();
    assert!(matches!(err, Error::Version { found: 7, expected: 1 }));
    let msg = err.to_string();
    assert!(msg.contains("v7") && msg.contains("v1"), "{msg}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn hbt_stream_is_refused_by_an_sg2_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let mut hbt = small(200_000);
    Overrides {
        mode: Some(Mode::Hbt),
        ..Overrides::default()
    }
    .apply(&mut hbt)
    .unwrap();
    let out = simulate(&hbt, dir.path(), "hbt.sg2c");
    let err = app::cmd_analyze(&out, &small(200_000), None, &dir.path().join("r.json")).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::ConfigMismatch(_)));
    assert!(msg.contains("hbt") && msg.contains("sg2"), "{msg}");
    assert_eq!(err.exit_code(), 2);
    // The matching configuration is accepted.
    app::cmd_analyze(&out, &hbt, None, &dir.path().join("r.json")).unwrap();
}

#[test]
fn missing_file_is_an_io_error() {
    let err = app::cmd_analyze(Path::new("/nonexistent/run.sg2c"), &small(1000), None, Path::new("/tmp/x.json"))
        .unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn alpha_outside_unit_interval_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(200_000);
    let out = simulate(&cfg, dir.path(), "run.sg2c");
    let err = app::cmd_analyze(&out, &cfg, Some(1.5), &dir.path().join("r.json")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn smaller_alpha_loosens_the_three_photon_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(300_000);
    let out = simulate(&cfg, dir.path(), "run.sg2c");
    let loose = app::cmd_analyze(&out, &cfg, Some(0.01), &dir.path().join("a.json")).unwrap();
    let tight = app::cmd_analyze(&out, &cfg, Some(0.32), &dir.path().join("b.json")).unwrap();
    assert!(loose.fock.p3_is_upper_bound && tight.fock.p3_is_upper_bound);
    let ratio = loose.fock.p[3] / tight.fock.p[3];
    let expected = (1.0f64 / 0.01).ln() / (1.0f64 / 0.32).ln();
    assert!((ratio - expected).abs() < 1e-9 * expected, "{ratio} vs {expected}");
}

#[test]
fn analysis_is_independent_of_thread_count() {
    let cfg = small(500_000);
    let exp = cfg.experiment().unwrap();
    let stream = sg2::simulate::run_experiment(&exp).unwrap();
    let opts = sg2::estimator::AnalysisOptions::from_config(&exp, cfg.run.max_lag);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sg2::estimator::analyze(&stream, &opts).unwrap().report.to_json().unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}
