//! Side-by-side summary of finished runs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::harness::run::RunArtifact;
use crate::harness::trace::{format_float, TraceRecord};

pub const NOT_REACHED: &str = "not reached";

/// Stopping criteria for iterations-to-tolerance. A row qualifies when every
/// threshold that is set holds strictly.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Thresholds {
    pub eps_e: Option<f64>,
    pub eps_theta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub algorithm: String,
    #[serde(serialize_with = "ser_reach", deserialize_with = "de_reach")]
    pub iterations_to_tolerance: Option<u64>,
    pub final_abs_e_y: f64,
    pub final_param_err: f64,
    pub envelope_holds: Option<bool>,
    /// Differences against the same algorithm in the first run.
    pub delta_final_abs_e_y: Option<f64>,
    pub delta_final_param_err: Option<f64>,
}

fn ser_reach<S: Serializer>(v: &Option<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(k) => s.serialize_u64(*k),
        None => s.serialize_str(NOT_REACHED),
    }
}

fn de_reach<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Reach {
        At(u64),
        Text(String),
    }
    match Reach::deserialize(d)? {
        Reach::At(k) => Ok(Some(k)),
        Reach::Text(t) if t == NOT_REACHED => Ok(None),
        Reach::Text(t) => Err(serde::de::Error::custom(format!("unexpected `{t}`"))),
    }
}

/// First iteration whose row satisfies every set threshold.
pub fn iterations_to_tolerance(records: &[TraceRecord], thresholds: Thresholds) -> Option<u64> {
    records
        .iter()
        .find(|r| {
            thresholds.eps_e.is_none_or(|e| r.e_y.abs() < e) && thresholds.eps_theta.is_none_or(|t| r.param_err < t)
        })
        .map(|r| r.k)
}

pub fn compare(runs: &[RunArtifact], thresholds: Thresholds) -> Result<Vec<SummaryRow>> {
    let Some(first) = runs.first() else {
        return Err(Error::InvalidArgument("no runs to compare".into()));
    };
    for run in &runs[1..] {
        if run.report.theta_star != first.report.theta_star {
            return Err(Error::IncompatibleRuns(format!(
                "`{}` and `{}` have different theta_star",
                first.report.name, run.report.name
            )));
        }
        if run.report.horizon != first.report.horizon {
            return Err(Error::IncompatibleRuns(format!(
                "`{}` has horizon {} but `{}` has {}",
                first.report.name, first.report.horizon, run.report.name, run.report.horizon
            )));
        }
    }

    let last = |records: &[TraceRecord]| records.last().map(|r| (r.e_y.abs(), r.param_err));
    let mut rows = Vec::new();
    for run in runs {
        for (report, records) in run.runs() {
            let (e, p) = last(records).unwrap_or((f64::NAN, f64::NAN));
            let baseline = first.find(&report.label).and_then(|(_, r)| last(r));
            rows.push(SummaryRow {
                run: run.report.name.clone(),
                algorithm: report.label.clone(),
                iterations_to_tolerance: iterations_to_tolerance(records, thresholds),
                final_abs_e_y: e,
                final_param_err: p,
                envelope_holds: report.envelope.as_ref().map(|env| env.holds),
                delta_final_abs_e_y: baseline.map(|(be, _)| e - be),
                delta_final_param_err: baseline.map(|(_, bp)| p - bp),
            });
        }
    }
    Ok(rows)
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "run",
    "algorithm",
    "iterations_to_tolerance",
    "final_abs_e_y",
    "final_param_err",
    "envelope_holds",
    "delta_final_abs_e_y",
    "delta_final_param_err",
];

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.run.clone(),
            r.algorithm.clone(),
            r.iterations_to_tolerance
                .map_or_else(|| NOT_REACHED.to_string(), |k| k.to_string()),
            format_float(r.final_abs_e_y),
            format_float(r.final_param_err),
            r.envelope_holds.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.delta_final_abs_e_y),
            opt(r.delta_final_param_err),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<summary>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn summary_json(rows: &[SummaryRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}
