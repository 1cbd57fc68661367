//! Two-column series for external plotting tools.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::run::RunArtifact;
use crate::harness::trace::{format_float, TraceRecord};

/// Values below this magnitude are clamped before taking `log10`.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "e_y")]
    OutputError,
    #[serde(rename = "param_err")]
    ParamError,
    #[serde(rename = "v")]
    Lyapunov,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::OutputError => "e_y",
            Quantity::ParamError => "param_err",
            Quantity::Lyapunov => "v",
        }
    }

    fn of(self, r: &TraceRecord) -> Option<f64> {
        match self {
            Quantity::OutputError => Some(r.e_y),
            Quantity::ParamError => Some(r.param_err),
            Quantity::Lyapunov => r.v,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e_y" => Ok(Quantity::OutputError),
            "param_err" => Ok(Quantity::ParamError),
            "v" => Ok(Quantity::Lyapunov),
            _ => Err(Error::InvalidArgument(format!(
                "unknown quantity `{s}` (e_y, param_err, v)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    #[default]
    Linear,
    Log10Abs,
}

impl Scale {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Scale::Linear => x,
            Scale::Log10Abs => x.abs().max(LOG_FLOOR).log10(),
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Scale::Linear),
            "log10-abs" => Ok(Scale::Log10Abs),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scale `{s}` (linear, log10-abs)"
            ))),
        }
    }
}

pub fn plot_series(records: &[TraceRecord], quantity: Quantity, scale: Scale) -> Result<Vec<(u64, f64)>> {
    records
        .iter()
        .map(|r| {
            quantity
                .of(r)
                .map(|x| (r.k, scale.apply(x)))
                .ok_or_else(|| Error::UnavailableQuantity {
                    quantity: quantity.name().to_string(),
                    algorithm: r.algorithm.clone(),
                })
        })
        .collect()
}

pub fn write_plot_csv<W: Write>(writer: W, series: &[(u64, f64)], quantity: Quantity) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", quantity.name()])?;
    for (k, x) in series {
        w.write_record([k.to_string(), format_float(*x)])?;
    }
    w.flush().map_err(|e| Error::io("<plot writer>", e))?;
    Ok(())
}

/// Writes `plot_<algorithm>_<quantity>.csv` for every algorithm of the run.
/// Fails without writing anything if any algorithm lacks the quantity.
pub fn emit_plot_data(artifact: &RunArtifact, quantity: Quantity, scale: Scale, dir: &Path) -> Result<Vec<PathBuf>> {
    let series = artifact
        .runs()
        .map(|(report, records)| Ok((report.label.as_str(), plot_series(records, quantity, scale)?)))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (label, s) in series {
        let path = dir.join(format!("plot_{label}_{}.csv", quantity.name()));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_plot_csv(std::io::BufWriter::new(file), &s, quantity)?;
        written.push(path);
    }
    Ok(written)
}
