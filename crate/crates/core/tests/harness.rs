mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::fig_config;
use hotune::harness::{
    compare, emit_plot_data, run_experiment, run_to_dir, ExperimentConfig, Quantity, RunArtifact, Scale, Thresholds,
};
use hotune::regress::{regressor_stream, write_regressor_csv, RegressorSample};
use hotune::Error;

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_path(&fig_config(name)).unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_byte_identical() {
    for name in ["fig1", "fig2"] {
        let config = load(name);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (_, da) = run_to_dir(&config, a.path()).unwrap();
        let (_, db) = run_to_dir(&config, b.path()).unwrap();
        let (fa, fb) = (dir_bytes(&da), dir_bytes(&db));
        assert_eq!(fa.len(), 7, "three csv traces, three json traces, one report");
        assert_eq!(fa, fb);
    }
}

#[test]
fn trace_rows_are_self_consistent() {
    for name in ["fig1", "fig2"] {
        let config = load(name);
        let art = run_experiment(&config).unwrap();
        let samples = regressor_stream(&config.source, &config.theta_star, config.horizon).unwrap();
        for (report, records) in art.runs() {
            assert_eq!(records.len(), config.horizon);
            for (r, s) in records.iter().zip(&samples) {
                assert_eq!(r.k, s.k);
                let e: f64 = s.phi.iter().zip(&r.theta).map(|(p, t)| p * t).sum::<f64>() - s.y;
                let err = r
                    .theta
                    .iter()
                    .zip(&config.theta_star)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    (e - r.e_y).abs() <= 1e-12 * e.abs().max(1.0),
                    "{} k={}",
                    report.label,
                    r.k
                );
                assert!((err - r.param_err).abs() <= 1e-12 * err.max(1.0));
            }
        }
    }
}

#[test]
fn persisted_artifacts_reload() {
    let config = load("fig2");
    let tmp = tempfile::tempdir().unwrap();
    let (art, dir) = run_to_dir(&config, tmp.path()).unwrap();
    assert_eq!(RunArtifact::load(&dir).unwrap(), art);
}

#[test]
fn fig1_compare_orders_the_tuners() {
    let art = run_experiment(&load("fig1")).unwrap();
    let rows = compare(
        &[art],
        Thresholds {
            eps_e: None,
            eps_theta: Some(1e-3),
        },
    )
    .unwrap();
    let at = |label: &str| {
        rows.iter()
            .find(|r| r.algorithm == label)
            .unwrap()
            .iterations_to_tolerance
            .unwrap()
    };
    assert!(at("hb") < at("ngd"));
    assert!(at("na") < at("ngd"));
    for r in rows.iter().filter(|r| r.algorithm != "ngd") {
        assert_eq!(r.envelope_holds, Some(true));
    }
}

#[test]
fn fig2_plot_files() {
    let art = run_experiment(&load("fig2")).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let files = emit_plot_data(&art, Quantity::OutputError, Scale::Log10Abs, tmp.path()).unwrap();
    assert_eq!(files.len(), 3);
    let text = fs::read_to_string(tmp.path().join("plot_hb_e_y.csv")).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert!(text.starts_with("k,e_y\n1,"));
    let err = emit_plot_data(&art, Quantity::Lyapunov, Scale::Linear, tmp.path()).unwrap_err();
    assert!(matches!(err, Error::UnavailableQuantity { ref algorithm, .. } if algorithm == "ngd"));
}

#[test]
fn file_sources_resolve_relative_to_config() {
    let tmp = tempfile::tempdir().unwrap();
    let samples: Vec<RegressorSample> = (1..=50)
        .map(|k| RegressorSample::from_theta(k, vec![1.0, (k as f64).sin()], &[2.0, -1.0]))
        .collect();
    write_regressor_csv(fs::File::create(tmp.path().join("phi.csv")).unwrap(), &samples).unwrap();
    let config_path = tmp.path().join("cfg.json");
    fs::write(
        &config_path,
        r#"{"name": "file", "algorithms": [{"algorithm": "ngd", "alpha": 1.0}],
            "source": {"kind": "file", "path": "phi.csv"}, "theta_star": [2, -1], "horizon": 50}"#,
    )
    .unwrap();
    let config = ExperimentConfig::from_path(&config_path).unwrap();
    let art = run_experiment(&config).unwrap();
    assert!(art.traces[0].last().unwrap().param_err < 1.0);
}

fn hotune(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hotune"))
        .args(args)
        .env("HOTUNE_OUT_DIR", out)
        .output()
        .unwrap()
}

#[test]
fn cli_subcommands_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let fig1 = fig_config("fig1");
    let run = hotune(&["run", "--config", fig1.to_str().unwrap()], out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let run_dir = out.join("fig1");
    assert!(run_dir.join("report.json").exists());

    let trace = run_dir.join("trace_hb.csv");
    let analyze = hotune(&["analyze", "--trace", trace.to_str().unwrap(), "--delta-t", "20"], out);
    assert_eq!(
        analyze.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&analyze.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&analyze.stdout).unwrap();
    assert_eq!(json["envelope"]["holds"], serde_json::Value::Bool(true));

    let cmp = hotune(&["compare", run_dir.to_str().unwrap(), "--eps-theta", "1e-3"], out);
    assert_eq!(cmp.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&cmp.stdout).starts_with("run,algorithm,iterations_to_tolerance"));

    let plot = hotune(
        &[
            "plot",
            "--trace",
            trace.to_str().unwrap(),
            "--quantity",
            "v",
            "--scale",
            "log10-abs",
        ],
        out,
    );
    assert_eq!(plot.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&plot.stdout).lines().count(), 2001);
    let ngd = run_dir.join("trace_ngd.csv");
    let plot = hotune(&["plot", "--trace", ngd.to_str().unwrap(), "--quantity", "v"], out);
    assert_eq!(plot.status.code(), Some(1));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"name": "x", "algorithms": [], "source": {"kind": "constant", "phi": [1]}, "theta_star": [1], "horizon": 1}"#).unwrap();
    let res = hotune(&["run", "--config", bad.to_str().unwrap()], out);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("algorithms"));

    let boom = tmp.path().join("boom.json");
    fs::write(
        &boom,
        r#"{"name": "boom", "algorithms": [{"algorithm": "hb-classical", "beta": 0.9, "gamma": 1e300}],
            "source": {"kind": "constant", "phi": [1e10]}, "theta_star": [1], "horizon": 20}"#,
    )
    .unwrap();
    let res = hotune(&["run", "--config", boom.to_str().unwrap()], out);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("hb-classical"));
}
