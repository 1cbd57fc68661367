//! Executes an experiment config and persists its artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_envelope, first_lyapunov_increase, lyapunov, parameter_error, pe_epsilon, rate_bound_hb, rate_bound_na,
    EnvelopeReport, PeReport, RateReport,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Format};
use crate::harness::trace::{read_trace_csv, write_trace_csv, TraceRecord};
use crate::regress::{regressor_stream, RegressorSample};
use crate::tuners::{step, validate_hyperparams, Algorithm, HyperParams, TunerState, Violation};

pub const REPORT_FILE: &str = "report.json";

/// Relative slack used when checking that `V` never increases.
pub const MONOTONE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub label: String,
    pub hyper: HyperParams,
    pub violations: Vec<Violation>,
    pub iterations: u64,
    /// Iterate after the last sample has been applied.
    pub final_theta: Vec<f64>,
    pub final_vartheta: Option<Vec<f64>>,
    pub final_v: Option<f64>,
    pub final_param_err: f64,
    /// Trace index of the first increase of `V`, if any.
    pub lyapunov_first_increase: Option<u64>,
    pub rate: Option<RateReport>,
    pub rate_error: Option<String>,
    pub envelope: Option<EnvelopeReport>,
}

impl AlgorithmReport {
    /// `V_1..V_horizon` followed by the final `V`.
    fn v_series(&self, records: &[TraceRecord]) -> Option<Vec<f64>> {
        let mut out = records.iter().map(|r| r.v).collect::<Option<Vec<f64>>>()?;
        out.push(self.final_v?);
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub theta_star: Vec<f64>,
    pub horizon: usize,
    pub dim: usize,
    pub pe: Option<PeReport>,
    pub pe_error: Option<String>,
    pub algorithms: Vec<AlgorithmReport>,
    pub config: ExperimentConfig,
}

/// A finished run: the report plus one trace per algorithm, in config order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifact {
    pub report: RunReport,
    pub traces: Vec<Vec<TraceRecord>>,
}

impl RunArtifact {
    pub fn runs(&self) -> impl Iterator<Item = (&AlgorithmReport, &[TraceRecord])> {
        self.report.algorithms.iter().zip(self.traces.iter().map(Vec::as_slice))
    }

    pub fn find(&self, label: &str) -> Option<(&AlgorithmReport, &[TraceRecord])> {
        self.runs().find(|(r, _)| r.label == label)
    }

    /// Writes `report.json` and one trace file per algorithm and format.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let formats = &self.report.config.output.formats;
        for (report, records) in self.runs() {
            if formats.contains(&Format::Csv) {
                let path = dir.join(format!("trace_{}.csv", report.label));
                let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_trace_csv(BufWriter::new(file), records, self.report.dim)?;
                written.push(path);
            }
            if formats.contains(&Format::Json) {
                let path = dir.join(format!("trace_{}.json", report.label));
                write_json(&path, &records)?;
                written.push(path);
            }
        }
        let path = dir.join(REPORT_FILE);
        write_json(&path, &self.report)?;
        written.push(path);
        Ok(written)
    }

    /// Loads a directory written by [`RunArtifact::write_to`].
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let report: RunReport = serde_json::from_str(&text)?;
        let traces = report
            .algorithms
            .iter()
            .map(|a| load_trace(dir, &a.label))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { report, traces })
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads `trace_<label>.csv`, falling back to `trace_<label>.json`.
pub fn load_trace(dir: &Path, label: &str) -> Result<Vec<TraceRecord>> {
    let csv_path = dir.join(format!("trace_{label}.csv"));
    if csv_path.exists() {
        return read_trace_file(&csv_path);
    }
    let json_path = dir.join(format!("trace_{label}.json"));
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_csv(std::io::BufReader::new(file))
}

/// Runs one estimator over the stream, logging the pre-update state at
/// every iteration.
pub fn run_algorithm(
    hp: &HyperParams,
    samples: &[RegressorSample],
    theta_star: &[f64],
    init: Vec<f64>,
) -> Result<(Vec<TraceRecord>, TunerState)> {
    let label = hp.algorithm.label();
    let with_v = hp.algorithm.has_vartheta() && hp.gamma > 0.0;
    let mut state = TunerState::new(init);
    let mut records = Vec::with_capacity(samples.len());
    for sample in samples {
        let v = if with_v {
            Some(lyapunov(&state.theta, &state.vartheta, theta_star, hp.gamma)?)
        } else {
            None
        };
        let (next, diag) = step(&state, sample, hp).map_err(|e| match e {
            Error::Divergence { iteration, .. } => Error::RunDivergence {
                algorithm: label.to_string(),
                iteration,
            },
            other => other,
        })?;
        records.push(TraceRecord {
            k: sample.k,
            algorithm: label.to_string(),
            e_y: diag.e_y,
            param_err: parameter_error(&state.theta, theta_star)?,
            v,
            theta: state.theta.clone(),
            vartheta: hp.algorithm.has_vartheta().then(|| state.vartheta.clone()),
        });
        state = next;
    }
    Ok((records, state))
}

/// Runs every configured algorithm and, if enabled, the excitation, rate and
/// envelope analysis. Nothing is written to disk.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact> {
    config.validate()?;
    let theta_star = &config.theta_star;
    let samples = regressor_stream(&config.source, theta_star, config.horizon)?;

    let (pe, pe_error) = if config.analysis.enabled {
        match pe_epsilon(&samples, config.analysis.delta_t) {
            Ok(pe) => (Some(pe), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };

    let mut algorithms = Vec::with_capacity(config.algorithms.len());
    let mut traces = Vec::with_capacity(config.algorithms.len());
    for entry in &config.algorithms {
        let hp = entry.hp;
        let (records, fin) = run_algorithm(&hp, &samples, theta_star, config.init_theta())?;
        let has_v = hp.algorithm.has_vartheta();
        let final_v = if has_v {
            Some(lyapunov(&fin.theta, &fin.vartheta, theta_star, hp.gamma)?)
        } else {
            None
        };
        let mut report = AlgorithmReport {
            label: entry.label().to_string(),
            hyper: hp,
            violations: validate_hyperparams(&hp, config.validation_mode),
            iterations: records.len() as u64,
            final_param_err: parameter_error(&fin.theta, theta_star)?,
            final_vartheta: has_v.then(|| fin.vartheta.clone()),
            final_theta: fin.theta,
            final_v,
            lyapunov_first_increase: None,
            rate: None,
            rate_error: None,
            envelope: None,
        };
        let v_series = report.v_series(&records);
        if let Some(v) = &v_series {
            report.lyapunov_first_increase = first_lyapunov_increase(v, MONOTONE_TOLERANCE).map(|i| i as u64);
        }
        if let Some(pe) = &pe {
            let rate = match hp.algorithm {
                Algorithm::Hb => Some(rate_bound_hb(pe, hp.beta, hp.gamma)),
                Algorithm::Na => Some(rate_bound_na(pe, hp.beta, hp.gamma, config.analysis.delta_t)),
                _ => None,
            };
            match rate {
                Some(Ok(rate)) => {
                    if let Some(v) = &v_series {
                        report.envelope = Some(check_envelope(
                            v,
                            rate.mu,
                            config.analysis.delta_t,
                            config.analysis.tolerance,
                        ));
                    }
                    report.rate = Some(rate);
                }
                Some(Err(e)) => report.rate_error = Some(e.to_string()),
                None => {}
            }
        }
        algorithms.push(report);
        traces.push(records);
    }

    Ok(RunArtifact {
        report: RunReport {
            name: config.name.clone(),
            theta_star: theta_star.clone(),
            horizon: config.horizon,
            dim: config.dim(),
            pe,
            pe_error,
            algorithms,
            config: config.clone(),
        },
        traces,
    })
}

/// Runs the config and writes its artifacts under `<root>/<name>/`.
pub fn run_to_dir(config: &ExperimentConfig, root: &Path) -> Result<(RunArtifact, PathBuf)> {
    let artifact = run_experiment(config)?;
    let dir = root.join(&config.name);
    artifact.write_to(&dir)?;
    Ok((artifact, dir))
}
