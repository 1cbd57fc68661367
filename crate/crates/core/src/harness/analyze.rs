//! Offline analysis of a recorded trace.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_envelope, first_lyapunov_increase, pe_epsilon, rate_bound_hb, rate_bound_na, EnvelopeReport, PeReport,
    RateReport,
};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::run::MONOTONE_TOLERANCE;
use crate::harness::trace::TraceRecord;
use crate::regress::regressor_stream;
use crate::tuners::Algorithm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceAnalysis {
    pub algorithm: String,
    pub delta_t: usize,
    pub pe: PeReport,
    pub rate: Option<RateReport>,
    pub envelope: Option<EnvelopeReport>,
    pub lyapunov_first_increase: Option<u64>,
}

/// Recomputes the excitation level of the config's regressor stream with
/// window `delta_t`, the rate bound of the trace's algorithm, and the
/// envelope verdict of the trace's `V` values (followed by `final_v` if
/// given).
pub fn analyze_trace(
    records: &[TraceRecord],
    config: &ExperimentConfig,
    delta_t: usize,
    tolerance: f64,
    final_v: Option<f64>,
) -> Result<TraceAnalysis> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidArgument("trace is empty".into()))?;
    let label = first.algorithm.clone();
    if records.iter().any(|r| r.algorithm != label) {
        return Err(Error::InvalidArgument("trace mixes several algorithms".into()));
    }
    let entry = config
        .algorithms
        .iter()
        .find(|a| a.label() == label)
        .ok_or_else(|| Error::InvalidArgument(format!("config has no algorithm `{label}`")))?;
    let hp = entry.hp;

    let samples = regressor_stream(&config.source, &config.theta_star, config.horizon)?;
    let pe = pe_epsilon(&samples, delta_t)?;
    let rate = match hp.algorithm {
        Algorithm::Hb => Some(rate_bound_hb(&pe, hp.beta, hp.gamma)?),
        Algorithm::Na => Some(rate_bound_na(&pe, hp.beta, hp.gamma, delta_t)?),
        _ => None,
    };

    let v_series = records.iter().map(|r| r.v).collect::<Option<Vec<f64>>>().map(|mut v| {
        v.extend(final_v);
        v
    });
    let envelope = match (&rate, &v_series) {
        (Some(rate), Some(v)) => Some(check_envelope(v, rate.mu, delta_t, tolerance)),
        _ => None,
    };
    let lyapunov_first_increase = v_series
        .as_deref()
        .and_then(|v| first_lyapunov_increase(v, MONOTONE_TOLERANCE))
        .map(|i| i as u64);

    Ok(TraceAnalysis {
        algorithm: label,
        delta_t,
        pe,
        rate,
        envelope,
        lyapunov_first_increase,
    })
}
