//! Per-iteration update laws.
//!
//! All laws minimize the instantaneous loss `L_k(θ) = ½(φ_kᵀθ - y_k)²` with
//! gradient steps divided by `N_k = 1 + ‖φ_k‖²`:
//!
//! | law            | update |
//! |----------------|--------|
//! | NGD            | `θ ← θ - α ∇L(θ)/N` |
//! | HB             | `θ' = θ - β(θ - ϑ)`, then `ϑ' = ϑ - γ ∇L(θ')/N` |
//! | NA             | `θ̄ = θ - γβ ∇L(θ)/N`, `θ' = θ̄ - β(θ̄ - ϑ)`, then `ϑ' = ϑ - γ ∇L(θ')/N` |
//! | HB-classical   | `θ' = θ - γ̄ ∇L(θ)/N + β̄(θ - θ_prev)` |
//! | NA-classical   | `θ' = θ - γ̄ ∇L(θ + β̄(θ - θ_prev))/N + β̄(θ - θ_prev)` |
//!
//! The two-iterate HB and NA forms are the stabilized tuners that admit a
//! Lyapunov certificate; the classical forms are baselines without one.
//! Steps are pure: they take a state by reference and return the next one.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, check_dim, dot, norm};
use crate::regress::RegressorSample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ngd,
    Hb,
    Na,
    HbClassical,
    NaClassical,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ngd,
        Algorithm::Hb,
        Algorithm::Na,
        Algorithm::HbClassical,
        Algorithm::NaClassical,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Ngd => "ngd",
            Algorithm::Hb => "hb",
            Algorithm::Na => "na",
            Algorithm::HbClassical => "hb-classical",
            Algorithm::NaClassical => "na-classical",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == label)
    }

    /// Whether the law carries the auxiliary iterate ϑ (and hence a
    /// Lyapunov value).
    pub fn has_vartheta(self) -> bool {
        matches!(self, Algorithm::Hb | Algorithm::Na)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Step sizes. For the classical forms `beta`/`gamma` hold β̄/γ̄.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl HyperParams {
    pub fn ngd(alpha: f64) -> Self {
        Self {
            algorithm: Algorithm::Ngd,
            alpha,
            beta: 0.0,
            gamma: 0.0,
        }
    }

    pub fn hb(beta: f64, gamma: f64) -> Self {
        Self::two(Algorithm::Hb, beta, gamma)
    }

    pub fn na(beta: f64, gamma: f64) -> Self {
        Self::two(Algorithm::Na, beta, gamma)
    }

    pub fn hb_classical(beta_bar: f64, gamma_bar: f64) -> Self {
        Self::two(Algorithm::HbClassical, beta_bar, gamma_bar)
    }

    pub fn na_classical(beta_bar: f64, gamma_bar: f64) -> Self {
        Self::two(Algorithm::NaClassical, beta_bar, gamma_bar)
    }

    fn two(algorithm: Algorithm, beta: f64, gamma: f64) -> Self {
        Self {
            algorithm,
            alpha: 0.0,
            beta,
            gamma,
        }
    }
}

/// Which γ bound to enforce for the stabilized tuners.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// `γ ≤ β(2-β)/8` (HB), `γ ≤ β(2-β)/(8+β²)` (NA).
    #[default]
    Theorem,
    /// `γ ≤ β(2-β)/16` (HB), `γ ≤ β(2-β)/(16+β²)` (NA).
    Strict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub parameter: String,
    pub constraint: String,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} violates {} (bound {})",
            self.parameter, self.value, self.constraint, self.bound
        )
    }
}

/// Upper bound on γ for the stabilized tuners, `None` for the other laws.
pub fn gamma_bound(algorithm: Algorithm, beta: f64, mode: ValidationMode) -> Option<f64> {
    let base = match mode {
        ValidationMode::Theorem => 8.0,
        ValidationMode::Strict => 16.0,
    };
    match algorithm {
        Algorithm::Hb => Some(beta * (2.0 - beta) / base),
        Algorithm::Na => Some(beta * (2.0 - beta) / (base + beta * beta)),
        _ => None,
    }
}

/// Returns every violated constraint; an empty list means the
/// hyperparameters are admissible.
pub fn validate_hyperparams(hp: &HyperParams, mode: ValidationMode) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, parameter: &str, constraint: &str, value: f64, bound: f64| {
        if !ok || !value.is_finite() {
            out.push(Violation {
                parameter: parameter.to_string(),
                constraint: constraint.to_string(),
                value,
                bound,
            });
        }
    };
    let (b, g) = (hp.beta, hp.gamma);
    match hp.algorithm {
        Algorithm::Ngd => {
            check(hp.alpha > 0.0, "alpha", "0 < alpha", hp.alpha, 0.0);
            check(hp.alpha < 2.0, "alpha", "alpha < 2", hp.alpha, 2.0);
        }
        Algorithm::Hb | Algorithm::Na => {
            let beta_max = if hp.algorithm == Algorithm::Hb { 2.0 } else { 1.0 };
            check(b > 0.0, "beta", "0 < beta", b, 0.0);
            check(b < beta_max, "beta", &format!("beta < {beta_max}"), b, beta_max);
            check(g > 0.0, "gamma", "0 < gamma", g, 0.0);
            let bound = gamma_bound(hp.algorithm, b, mode).unwrap_or(f64::NAN);
            let text = match (hp.algorithm, mode) {
                (Algorithm::Hb, ValidationMode::Theorem) => "gamma <= beta(2-beta)/8",
                (Algorithm::Hb, ValidationMode::Strict) => "gamma <= beta(2-beta)/16",
                (_, ValidationMode::Theorem) => "gamma <= beta(2-beta)/(8+beta^2)",
                (_, ValidationMode::Strict) => "gamma <= beta(2-beta)/(16+beta^2)",
            };
            check(g <= bound, "gamma", text, g, bound);
        }
        Algorithm::HbClassical | Algorithm::NaClassical => {
            check(b >= 0.0, "beta", "0 <= beta_bar", b, 0.0);
            check(b < 1.0, "beta", "beta_bar < 1", b, 1.0);
            check(g > 0.0, "gamma", "0 < gamma_bar", g, 0.0);
        }
    }
    out
}

/// Iterates of one estimator. Vectors the active law does not use are
/// carried along unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct TunerState {
    pub theta: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub theta_prev: Vec<f64>,
    pub theta_bar_last: Vec<f64>,
    /// Index of the iterate held in `theta`; the first sample is k = 1.
    pub k: u64,
}

impl TunerState {
    /// All iterates start at `init`, so the classical momentum term is zero
    /// on the first step.
    pub fn new(init: Vec<f64>) -> Self {
        Self {
            vartheta: init.clone(),
            theta_prev: init.clone(),
            theta_bar_last: init.clone(),
            theta: init,
            k: 1,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    /// Prediction error `φ_kᵀθ_k - y_k` at the pre-update iterate.
    pub e_y: f64,
    /// `e_y² / 2`.
    pub loss: f64,
    /// Norm of the gradient at the point the law evaluates it.
    pub grad_norm: f64,
}

fn residual(theta: &[f64], sample: &RegressorSample) -> f64 {
    dot(&sample.phi, theta) - sample.y
}

/// Loss `½(φᵀθ - y)²` and gradient `φ(φᵀθ - y)`.
pub fn loss_and_gradient(theta: &[f64], sample: &RegressorSample) -> Result<(f64, Vec<f64>)> {
    check_dim("loss_and_gradient", sample.dim(), theta.len())?;
    let e = residual(theta, sample);
    Ok((0.5 * e * e, sample.phi.iter().map(|p| p * e).collect()))
}

/// `x - step · φ e / N`.
fn normalized_descent(x: &[f64], sample: &RegressorSample, e: f64, step: f64) -> Vec<f64> {
    x.iter()
        .zip(&sample.phi)
        .map(|(xi, p)| xi - step * p * e / sample.n_k)
        .collect()
}

fn pre_step(state: &TunerState, sample: &RegressorSample, hp: &HyperParams, expected: Algorithm) -> Result<()> {
    if hp.algorithm != expected {
        return Err(Error::WrongAlgorithm {
            expected: expected.label(),
            found: hp.algorithm.label(),
        });
    }
    let d = sample.dim();
    check_dim("tuner state theta", d, state.theta.len())?;
    check_dim("tuner state vartheta", d, state.vartheta.len())?;
    check_dim("tuner state theta_prev", d, state.theta_prev.len())?;
    Ok(())
}

fn finite_or_diverge(v: &[f64], sample: &RegressorSample, what: &'static str) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::Divergence {
            iteration: sample.k,
            what,
        })
    }
}

fn diagnostics(e_y: f64, grad_norm: f64) -> StepDiagnostics {
    StepDiagnostics {
        e_y,
        loss: 0.5 * e_y * e_y,
        grad_norm,
    }
}

pub fn ngd_step(
    state: &TunerState,
    sample: &RegressorSample,
    hp: &HyperParams,
) -> Result<(TunerState, StepDiagnostics)> {
    pre_step(state, sample, hp, Algorithm::Ngd)?;
    let e = residual(&state.theta, sample);
    let theta = normalized_descent(&state.theta, sample, e, hp.alpha);
    finite_or_diverge(&theta, sample, "theta")?;
    let next = TunerState {
        theta,
        k: state.k + 1,
        ..state.clone()
    };
    Ok((next, diagnostics(e, e.abs() * sample.norm_sq.sqrt())))
}

pub fn hb_step(
    state: &TunerState,
    sample: &RegressorSample,
    hp: &HyperParams,
) -> Result<(TunerState, StepDiagnostics)> {
    pre_step(state, sample, hp, Algorithm::Hb)?;
    let e = residual(&state.theta, sample);
    let theta: Vec<f64> = state
        .theta
        .iter()
        .zip(&state.vartheta)
        .map(|(t, v)| t - hp.beta * (t - v))
        .collect();
    let e_next = residual(&theta, sample);
    let vartheta = normalized_descent(&state.vartheta, sample, e_next, hp.gamma);
    finite_or_diverge(&theta, sample, "theta")?;
    finite_or_diverge(&vartheta, sample, "vartheta")?;
    let next = TunerState {
        theta,
        vartheta,
        k: state.k + 1,
        ..state.clone()
    };
    Ok((next, diagnostics(e, e_next.abs() * sample.norm_sq.sqrt())))
}

pub fn na_step(
    state: &TunerState,
    sample: &RegressorSample,
    hp: &HyperParams,
) -> Result<(TunerState, StepDiagnostics)> {
    pre_step(state, sample, hp, Algorithm::Na)?;
    let e = residual(&state.theta, sample);
    let theta_bar = normalized_descent(&state.theta, sample, e, hp.gamma * hp.beta);
    let theta: Vec<f64> = theta_bar
        .iter()
        .zip(&state.vartheta)
        .map(|(tb, v)| tb - hp.beta * (tb - v))
        .collect();
    let e_next = residual(&theta, sample);
    let vartheta = normalized_descent(&state.vartheta, sample, e_next, hp.gamma);
    finite_or_diverge(&theta_bar, sample, "theta_bar")?;
    finite_or_diverge(&theta, sample, "theta")?;
    finite_or_diverge(&vartheta, sample, "vartheta")?;
    let next = TunerState {
        theta,
        vartheta,
        theta_bar_last: theta_bar,
        theta_prev: state.theta_prev.clone(),
        k: state.k + 1,
    };
    Ok((next, diagnostics(e, e_next.abs() * sample.norm_sq.sqrt())))
}

pub fn classical_hb_step(
    state: &TunerState,
    sample: &RegressorSample,
    hp: &HyperParams,
) -> Result<(TunerState, StepDiagnostics)> {
    pre_step(state, sample, hp, Algorithm::HbClassical)?;
    let e = residual(&state.theta, sample);
    let theta: Vec<f64> = normalized_descent(&state.theta, sample, e, hp.gamma)
        .into_iter()
        .zip(state.theta.iter().zip(&state.theta_prev))
        .map(|(d, (t, tp))| d + hp.beta * (t - tp))
        .collect();
    finite_or_diverge(&theta, sample, "theta")?;
    let next = TunerState {
        theta_prev: state.theta.clone(),
        theta,
        k: state.k + 1,
        ..state.clone()
    };
    Ok((next, diagnostics(e, e.abs() * sample.norm_sq.sqrt())))
}

pub fn classical_nesterov_step(
    state: &TunerState,
    sample: &RegressorSample,
    hp: &HyperParams,
) -> Result<(TunerState, StepDiagnostics)> {
    pre_step(state, sample, hp, Algorithm::NaClassical)?;
    let e = residual(&state.theta, sample);
    let momentum: Vec<f64> = state
        .theta
        .iter()
        .zip(&state.theta_prev)
        .map(|(t, tp)| hp.beta * (t - tp))
        .collect();
    let look_ahead: Vec<f64> = state.theta.iter().zip(&momentum).map(|(t, m)| t + m).collect();
    let e_look = residual(&look_ahead, sample);
    let theta: Vec<f64> = normalized_descent(&state.theta, sample, e_look, hp.gamma)
        .into_iter()
        .zip(&momentum)
        .map(|(d, m)| d + m)
        .collect();
    finite_or_diverge(&theta, sample, "theta")?;
    let next = TunerState {
        theta_prev: state.theta.clone(),
        theta,
        k: state.k + 1,
        ..state.clone()
    };
    Ok((next, diagnostics(e, e_look.abs() * norm(&sample.phi))))
}

/// Dispatches to the law named by `hp.algorithm`.
pub fn step(state: &TunerState, sample: &RegressorSample, hp: &HyperParams) -> Result<(TunerState, StepDiagnostics)> {
    match hp.algorithm {
        Algorithm::Ngd => ngd_step(state, sample, hp),
        Algorithm::Hb => hb_step(state, sample, hp),
        Algorithm::Na => na_step(state, sample, hp),
        Algorithm::HbClassical => classical_hb_step(state, sample, hp),
        Algorithm::NaClassical => classical_nesterov_step(state, sample, hp),
    }
}
