//! Per-iteration trace rows and their CSV encoding.
//!
//! Header: `k,algorithm,e_y,param_err,v,theta_1..theta_D,vartheta_1..vartheta_D`.
//! Floats are written with 17 significant digits so a parse recovers the
//! exact value; inapplicable cells are empty.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of one estimator at iteration `k`, before sample `k` is applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    pub algorithm: String,
    /// `φ_kᵀθ_k - y_k`.
    pub e_y: f64,
    /// `‖θ_k - θ*‖`.
    pub param_err: f64,
    pub v: Option<f64>,
    pub theta: Vec<f64>,
    pub vartheta: Option<Vec<f64>>,
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["k", "algorithm", "e_y", "param_err", "v"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=dim).map(|i| format!("theta_{i}")));
    h.extend((1..=dim).map(|i| format!("vartheta_{i}")));
    h
}

pub fn write_trace_csv<W: Write>(writer: W, records: &[TraceRecord], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trace_header(dim))?;
    for r in records {
        if r.theta.len() != dim || r.vartheta.as_ref().is_some_and(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "trace row",
                expected: dim,
                found: r.theta.len(),
            });
        }
        let mut row = vec![
            r.k.to_string(),
            r.algorithm.clone(),
            format_float(r.e_y),
            format_float(r.param_err),
            r.v.map(format_float).unwrap_or_default(),
        ];
        row.extend(r.theta.iter().copied().map(format_float));
        match &r.vartheta {
            Some(v) => row.extend(v.iter().copied().map(format_float)),
            None => row.extend(std::iter::repeat_n(String::new(), dim)),
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<trace writer>", e))?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols = header.len();
    if cols < 5 || (cols - 5) % 2 != 0 {
        return Err(Error::Parse {
            row: 0,
            message: format!("unexpected trace header with {cols} columns"),
        });
    }
    let dim = (cols - 5) / 2;
    if header.iter().map(str::to_string).collect::<Vec<_>>() != trace_header(dim) {
        return Err(Error::Parse {
            row: 0,
            message: "trace header does not match the expected schema".into(),
        });
    }

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("bad number `{s}`"),
            })
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let k = record[0].parse::<u64>().map_err(|_| Error::Parse {
            row,
            message: format!("bad iteration `{}`", &record[0]),
        })?;
        let theta = (0..dim).map(|j| num(&record[5 + j])).collect::<Result<Vec<_>>>()?;
        let vt = (0..dim)
            .map(|j| opt(&record[5 + dim + j]))
            .collect::<Result<Vec<_>>>()?;
        let vartheta = if vt.iter().all(Option::is_none) {
            None
        } else {
            Some(
                vt.into_iter()
                    .map(|x| {
                        x.ok_or_else(|| Error::Parse {
                            row,
                            message: "partially empty vartheta".into(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        out.push(TraceRecord {
            k,
            algorithm: record[1].to_string(),
            e_y: num(&record[2])?,
            param_err: num(&record[3])?,
            v: opt(&record[4])?,
            theta,
            vartheta,
        });
    }
    Ok(out)
}
