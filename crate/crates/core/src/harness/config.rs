//! Experiment configuration documents (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::RegressorSource;
use crate::tuners::{validate_hyperparams, Algorithm, HyperParams, ValidationMode};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HOTUNE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "runs";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    #[serde(flatten)]
    pub hp: HyperParams,
    /// Run even if the hyperparameters fail validation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_invalid: bool,
}

impl AlgorithmEntry {
    pub fn label(&self) -> &'static str {
        self.hp.algorithm.label()
    }
}

fn default_delta_t() -> usize {
    20
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_delta_t")]
    pub delta_t: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            delta_t: default_delta_t(),
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub algorithms: Vec<AlgorithmEntry>,
    pub source: RegressorSource,
    pub theta_star: Vec<f64>,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_theta: Option<Vec<f64>>,
    #[serde(default)]
    pub validation_mode: ValidationMode,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parses and validates a config file. Relative file-source paths are
    /// resolved against the config's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if let RegressorSource::File { path: src } = &mut config.source {
            if src.is_relative() {
                if let Some(dir) = path.parent() {
                    *src = dir.join(&*src);
                }
            }
        }
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| Error::config("$", format!("{e} (line {}, column {})", e.line(), e.column())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn init_theta(&self) -> Vec<f64> {
        self.init_theta.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    /// Output directory: explicit override, then the config, then the
    /// environment, then `runs/`.
    pub fn output_root(&self, explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| self.output.directory.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn validate(&self) -> Result<()> {
        let valid_name = !self.name.is_empty()
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        if !valid_name {
            return Err(Error::config("name", "must be non-empty and use only [A-Za-z0-9._-]"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.theta_star.is_empty() || !self.theta_star.iter().all(|x| x.is_finite()) {
            return Err(Error::config("theta_star", "must be non-empty and finite"));
        }
        self.source
            .validate()
            .map_err(|e| Error::config("source", e.to_string()))?;
        if let RegressorSource::Plant { plant, .. } = &self.source {
            if plant.theta_star() != self.theta_star {
                return Err(Error::config(
                    "theta_star",
                    format!("plant source implies theta_star = {:?}", plant.theta_star()),
                ));
            }
        } else if let Some(dim) = self.source.dimension() {
            if dim != self.dim() {
                return Err(Error::config(
                    "source",
                    format!(
                        "regressor dimension {dim} differs from theta_star dimension {}",
                        self.dim()
                    ),
                ));
            }
        }
        if let Some(init) = &self.init_theta {
            if init.len() != self.dim() || !init.iter().all(|x| x.is_finite()) {
                return Err(Error::config(
                    "init_theta",
                    format!("must be {} finite values", self.dim()),
                ));
            }
        }

        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm is required"));
        }
        let mut seen: Vec<Algorithm> = Vec::new();
        for (i, entry) in self.algorithms.iter().enumerate() {
            let path = format!("algorithms[{i}]");
            if seen.contains(&entry.hp.algorithm) {
                return Err(Error::config(path, format!("duplicate algorithm `{}`", entry.label())));
            }
            seen.push(entry.hp.algorithm);
            let hp = &entry.hp;
            if ![hp.alpha, hp.beta, hp.gamma].iter().all(|x| x.is_finite()) {
                return Err(Error::config(path, "hyperparameters must be finite"));
            }
            if hp.algorithm.has_vartheta() && !(hp.gamma > 0.0) {
                return Err(Error::config(format!("{path}.gamma"), "must be positive"));
            }
            let violations = validate_hyperparams(hp, self.validation_mode);
            if !violations.is_empty() && !entry.allow_invalid {
                let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
                return Err(Error::config(
                    format!("{path}.{}", violations[0].parameter),
                    format!("{} (set allow_invalid to run anyway)", list.join("; ")),
                ));
            }
        }

        let a = &self.analysis;
        if a.enabled {
            if a.delta_t == 0 || a.delta_t > self.horizon {
                return Err(Error::config("analysis.delta_t", "must be in [1, horizon]"));
            }
            if !(a.tolerance >= 0.0) || !a.tolerance.is_finite() {
                return Err(Error::config("analysis.tolerance", "must be finite and non-negative"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::config("output.formats", "at least one of csv, json"));
        }
        Ok(())
    }
}
