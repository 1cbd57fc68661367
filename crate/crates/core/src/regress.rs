//! Regressor and output streams.
//!
//! Every estimator consumes a stream of [`RegressorSample`]s `(φ_k, y_k, N_k)`
//! where `y_k = φ_kᵀθ*`. Streams come from closed-form signal families, from
//! a simulated plant of the form
//!
//! ```text
//! y_k = -Σ a_i y_{k-i} + Σ b_j u_{k-j-d} + Σ c_l f_l(y_{k-1..k-n}, u_{k-1-d..k-m-d})
//! ```
//!
//! or from a CSV file. Iterations are 1-based.
//!
//! Sign convention: the plant regressor is `φ_k = [z_{k-1}, v_{k-d-1}, f_1, …, f_p]`
//! with `z_{k-1} = [y_{k-1}, …, y_{k-n}]`, so the parameter vector that makes
//! `y_k = φ_kᵀθ*` hold is `θ* = [-a_1, …, -a_n, b_1, …, b_m, c_1, …, c_p]`.
//! [`PlantSpec::theta_star`] returns exactly that vector.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, dot, norm_sq};

/// One `(φ_k, y_k)` pair together with its normalizer `N_k = 1 + ‖φ_k‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressorSample {
    pub k: u64,
    pub phi: Vec<f64>,
    pub y: f64,
    pub norm_sq: f64,
    pub n_k: f64,
}

impl RegressorSample {
    pub fn new(k: u64, phi: Vec<f64>, y: f64) -> Self {
        let norm_sq = norm_sq(&phi);
        Self {
            k,
            phi,
            y,
            norm_sq,
            n_k: 1.0 + norm_sq,
        }
    }

    /// A sample whose output is synthesized from a known parameter vector.
    pub fn from_theta(k: u64, phi: Vec<f64>, theta_star: &[f64]) -> Self {
        let y = dot(&phi, theta_star);
        Self::new(k, phi, y)
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signal {
    Output,
    Input,
}

fn one_u32() -> u32 {
    1
}

fn one_f64() -> f64 {
    1.0
}

/// Reference to a lagged plant signal: `y_{k-lag}` or `u_{k-lag}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagRef {
    pub signal: Signal,
    pub lag: usize,
    #[serde(default = "one_u32")]
    pub exponent: u32,
}

impl LagRef {
    pub fn output(lag: usize, exponent: u32) -> Self {
        Self {
            signal: Signal::Output,
            lag,
            exponent,
        }
    }

    pub fn input(lag: usize, exponent: u32) -> Self {
        Self {
            signal: Signal::Input,
            lag,
            exponent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// `Π x_r^{e_r}`; the empty product is the constant 1.
    MonomialProduct,
    /// `sin(scale · x)` of a single lagged signal.
    SineOfLag,
    /// `clamp(scale · x, -1, 1)` of a single lagged signal.
    SaturationOfLag,
}

/// A nonlinear basis term `f_l` drawn from a closed registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisFn {
    pub kind: BasisKind,
    #[serde(default)]
    pub lag_refs: Vec<LagRef>,
    #[serde(default = "one_f64")]
    pub scale: f64,
}

impl BasisFn {
    pub fn constant() -> Self {
        Self::monomial(Vec::new())
    }

    pub fn monomial(lag_refs: Vec<LagRef>) -> Self {
        Self {
            kind: BasisKind::MonomialProduct,
            lag_refs,
            scale: 1.0,
        }
    }

    pub fn sine(lag: LagRef, scale: f64) -> Self {
        Self {
            kind: BasisKind::SineOfLag,
            lag_refs: vec![lag],
            scale,
        }
    }

    pub fn saturation(lag: LagRef, scale: f64) -> Self {
        Self {
            kind: BasisKind::SaturationOfLag,
            lag_refs: vec![lag],
            scale,
        }
    }

    /// Checks that every lag reference is reachable from output lags
    /// `[1, n]` and input lags `[1 + d, m + d]`.
    pub fn validate(&self, n: usize, m: usize, delay: usize) -> Result<()> {
        if !self.scale.is_finite() {
            return Err(Error::InvalidSpec("basis scale must be finite".into()));
        }
        match self.kind {
            BasisKind::MonomialProduct => {}
            BasisKind::SineOfLag | BasisKind::SaturationOfLag => {
                if self.lag_refs.len() != 1 {
                    return Err(Error::InvalidSpec(format!(
                        "{:?} basis needs exactly one lag reference, got {}",
                        self.kind,
                        self.lag_refs.len()
                    )));
                }
            }
        }
        for r in &self.lag_refs {
            let ok = match r.signal {
                Signal::Output => r.lag >= 1 && r.lag <= n,
                Signal::Input => r.lag > delay && r.lag <= m + delay,
            };
            if !ok {
                return Err(Error::InvalidSpec(format!(
                    "basis references {:?} lag {} outside the available range (n={n}, m={m}, d={delay})",
                    r.signal, r.lag
                )));
            }
            if r.exponent == 0 {
                return Err(Error::InvalidSpec("basis exponent must be positive".into()));
            }
        }
        Ok(())
    }

    fn lookup(r: &LagRef, z: &[f64], v: &[f64], delay: usize) -> f64 {
        match r.signal {
            Signal::Output => z[r.lag - 1],
            Signal::Input => v[r.lag - 1 - delay],
        }
    }

    /// Evaluates the term on lag vectors `z = [y_{k-1}, …]`, `v = [u_{k-1-d}, …]`.
    /// Call [`BasisFn::validate`] first.
    pub fn evaluate(&self, z: &[f64], v: &[f64], delay: usize) -> f64 {
        match self.kind {
            BasisKind::MonomialProduct => self
                .lag_refs
                .iter()
                .fold(1.0, |acc, r| acc * Self::lookup(r, z, v, delay).powi(r.exponent as i32)),
            BasisKind::SineOfLag => (self.scale * Self::lookup(&self.lag_refs[0], z, v, delay)).sin(),
            BasisKind::SaturationOfLag => (self.scale * Self::lookup(&self.lag_refs[0], z, v, delay)).clamp(-1.0, 1.0),
        }
    }
}

/// Assembles `φ = [z, v, f_1(z, v), …, f_p(z, v)]`.
pub fn build_regressor(z_lags: &[f64], v_lags: &[f64], basis: &[BasisFn], delay: usize) -> Result<Vec<f64>> {
    for f in basis {
        f.validate(z_lags.len(), v_lags.len(), delay)?;
    }
    let mut phi = Vec::with_capacity(z_lags.len() + v_lags.len() + basis.len());
    phi.extend_from_slice(z_lags);
    phi.extend_from_slice(v_lags);
    phi.extend(basis.iter().map(|f| f.evaluate(z_lags, v_lags, delay)));
    Ok(phi)
}

/// Coefficients of a discrete-time plant in the ARX-plus-basis form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    #[serde(default)]
    pub a_coeffs: Vec<f64>,
    #[serde(default)]
    pub b_coeffs: Vec<f64>,
    #[serde(default)]
    pub c_coeffs: Vec<f64>,
    #[serde(default, rename = "delay")]
    pub delay_d: usize,
    #[serde(default)]
    pub basis: Vec<BasisFn>,
    /// `[y_0, y_{-1}, …, y_{1-n}]`.
    #[serde(default)]
    pub initial_outputs: Vec<f64>,
}

impl PlantSpec {
    pub fn n(&self) -> usize {
        self.a_coeffs.len()
    }

    pub fn m(&self) -> usize {
        self.b_coeffs.len()
    }

    pub fn p(&self) -> usize {
        self.c_coeffs.len()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m() + self.p()
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_coeffs.len() != self.basis.len() {
            return Err(Error::InvalidSpec(format!(
                "{} c coefficients but {} basis functions",
                self.c_coeffs.len(),
                self.basis.len()
            )));
        }
        if self.initial_outputs.len() != self.n() {
            return Err(Error::InvalidSpec(format!(
                "{} initial outputs for an order-{} plant",
                self.initial_outputs.len(),
                self.n()
            )));
        }
        let coeffs = self.a_coeffs.iter().chain(&self.b_coeffs).chain(&self.c_coeffs);
        if !coeffs.chain(&self.initial_outputs).all(|x| x.is_finite()) {
            return Err(Error::InvalidSpec("plant coefficients must be finite".into()));
        }
        for f in &self.basis {
            f.validate(self.n(), self.m(), self.delay_d)?;
        }
        Ok(())
    }

    /// `[-a_1, …, -a_n, b_1, …, b_m, c_1, …, c_p]`.
    pub fn theta_star(&self) -> Vec<f64> {
        self.a_coeffs
            .iter()
            .map(|a| -a)
            .chain(self.b_coeffs.iter().copied())
            .chain(self.c_coeffs.iter().copied())
            .collect()
    }

    /// [`build_regressor`] with lag vectors checked against this plant's orders.
    pub fn regressor(&self, z_lags: &[f64], v_lags: &[f64]) -> Result<Vec<f64>> {
        if z_lags.len() != self.n() || v_lags.len() != self.m() {
            return Err(Error::InvalidSpec(format!(
                "lag vectors of length ({}, {}) for a plant with n={}, m={}",
                z_lags.len(),
                v_lags.len(),
                self.n(),
                self.m()
            )));
        }
        build_regressor(z_lags, v_lags, &self.basis, self.delay_d)
    }
}

/// Exogenous input `u_k` driving a simulated plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputSignal {
    Constant {
        value: f64,
    },
    /// `offset + amplitude · sin(omega · k + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Explicit samples; `values[i]` is `u_{start_k + i}`.
    Sequence {
        #[serde(default)]
        start_k: i64,
        values: Vec<f64>,
    },
}

impl InputSignal {
    pub fn at(&self, k: i64) -> Result<f64> {
        match self {
            InputSignal::Constant { value } => Ok(*value),
            InputSignal::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => Ok(offset + amplitude * (omega * k as f64 + phase).sin()),
            InputSignal::Sequence { start_k, values } => {
                let idx = k - start_k;
                usize::try_from(idx)
                    .ok()
                    .and_then(|i| values.get(i).copied())
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "input sequence has no sample for u_{k} (covers {start_k}..{})",
                            start_k + values.len() as i64
                        ))
                    })
            }
        }
    }
}

/// Runs the plant for `horizon` steps, emitting `(φ_k, y_k)` for `k = 1..=horizon`.
pub fn simulate_plant(spec: &PlantSpec, input: &InputSignal, horizon: usize) -> Result<Vec<RegressorSample>> {
    spec.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let (n, m, d) = (spec.n(), spec.m(), spec.delay_d as i64);
    let mut z = spec.initial_outputs.clone();
    let mut v = vec![0.0; m];
    let mut out = Vec::with_capacity(horizon);

    for k in 1..=horizon as i64 {
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = input.at(k - 1 - j as i64 - d)?;
        }
        let phi = spec.regressor(&z, &v)?;

        // One running sum in the order of the plant equation; this is the
        // same accumulation order as φᵀθ*.
        let mut y = 0.0;
        for (a, yl) in spec.a_coeffs.iter().zip(&z) {
            y += -a * yl;
        }
        for (b, ul) in spec.b_coeffs.iter().zip(&v) {
            y += b * ul;
        }
        for (c, f) in spec.c_coeffs.iter().zip(&phi[n + m..]) {
            y += c * f;
        }
        if !y.is_finite() || phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                iteration: k as u64,
                what: "plant output",
            });
        }
        if n > 0 {
            z.rotate_right(1);
            z[0] = y;
        }
        out.push(RegressorSample::new(k as u64, phi, y));
    }
    Ok(out)
}

/// One piece of a piecewise-constant regressor, active from `start_k` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_k: u64,
    pub phi: Vec<f64>,
}

/// One regressor component of a sinusoid bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Component {
    Constant {
        value: f64,
    },
    /// `amplitude · sin(omega · k + phase)`.
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Component {
    pub fn at(&self, k: f64) -> f64 {
        match self {
            Component::Constant { value } => *value,
            Component::Sine {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * k + phase).sin(),
        }
    }
}

/// Evaluates a sinusoid bank at iteration `k`.
pub fn sinusoid_phi(components: &[Component], k: f64) -> Vec<f64> {
    components.iter().map(|c| c.at(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegressorSource {
    Constant {
        phi: Vec<f64>,
    },
    PiecewiseConstant {
        segments: Vec<Segment>,
    },
    SinusoidBank {
        components: Vec<Component>,
    },
    Plant {
        plant: PlantSpec,
        input: InputSignal,
    },
    /// CSV with header `k,phi_1,…,phi_D[,y]`.
    File {
        path: PathBuf,
    },
}

impl RegressorSource {
    /// Regressor dimension, when known without touching the filesystem.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            RegressorSource::Constant { phi } => Some(phi.len()),
            RegressorSource::PiecewiseConstant { segments } => segments.first().map(|s| s.phi.len()),
            RegressorSource::SinusoidBank { components } => Some(components.len()),
            RegressorSource::Plant { plant, .. } => Some(plant.dim()),
            RegressorSource::File { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            RegressorSource::Constant { phi } => {
                if phi.is_empty() || !finite(phi) {
                    return Err(Error::InvalidSpec(
                        "constant regressor must be non-empty and finite".into(),
                    ));
                }
            }
            RegressorSource::PiecewiseConstant { segments } => {
                let first = segments
                    .first()
                    .ok_or_else(|| Error::InvalidSpec("piecewise source has no segments".into()))?;
                if first.start_k != 1 {
                    return Err(Error::InvalidSpec("first segment must start at k = 1".into()));
                }
                for w in segments.windows(2) {
                    if w[1].start_k <= w[0].start_k {
                        return Err(Error::InvalidSpec(format!(
                            "segment starts must be strictly increasing ({} then {})",
                            w[0].start_k, w[1].start_k
                        )));
                    }
                }
                let dim = first.phi.len();
                for s in segments {
                    if s.phi.len() != dim || dim == 0 || !finite(&s.phi) {
                        return Err(Error::InvalidSpec(format!(
                            "segment at k = {} has an invalid regressor",
                            s.start_k
                        )));
                    }
                }
            }
            RegressorSource::SinusoidBank { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidSpec("sinusoid bank has no components".into()));
                }
                let ok = components.iter().all(|c| match c {
                    Component::Constant { value } => value.is_finite(),
                    Component::Sine {
                        amplitude,
                        omega,
                        phase,
                    } => amplitude.is_finite() && omega.is_finite() && phase.is_finite(),
                });
                if !ok {
                    return Err(Error::InvalidSpec("sinusoid parameters must be finite".into()));
                }
            }
            RegressorSource::Plant { plant, .. } => plant.validate()?,
            RegressorSource::File { .. } => {}
        }
        Ok(())
    }
}

/// Generates `horizon` samples for `k = 1..=horizon`.
///
/// Closed-form sources synthesize `y_k = φ_kᵀθ*`. A plant source carries its
/// own parameters and ignores `theta_star`; a file source uses its `y`
/// column when present.
pub fn regressor_stream(source: &RegressorSource, theta_star: &[f64], horizon: usize) -> Result<Vec<RegressorSample>> {
    source.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if let Some(dim) = source.dimension() {
        if !matches!(source, RegressorSource::Plant { .. }) {
            check_dim("regressor source vs theta_star", theta_star.len(), dim)?;
        }
    }

    let ks = 1..=horizon as u64;
    match source {
        RegressorSource::Constant { phi } => Ok(ks
            .map(|k| RegressorSample::from_theta(k, phi.clone(), theta_star))
            .collect()),
        RegressorSource::PiecewiseConstant { segments } => Ok(ks
            .map(|k| {
                // Segments are validated to start at 1, so one always matches.
                let seg = segments.iter().rev().find(|s| s.start_k <= k).unwrap_or(&segments[0]);
                RegressorSample::from_theta(k, seg.phi.clone(), theta_star)
            })
            .collect()),
        RegressorSource::SinusoidBank { components } => Ok(ks
            .map(|k| RegressorSample::from_theta(k, sinusoid_phi(components, k as f64), theta_star))
            .collect()),
        RegressorSource::Plant { plant, input } => simulate_plant(plant, input, horizon),
        RegressorSource::File { path } => {
            let samples = read_regressor_csv(path, theta_star)?;
            if samples.len() < horizon {
                return Err(Error::InvalidArgument(format!(
                    "{} holds {} samples, horizon is {horizon}",
                    path.display(),
                    samples.len()
                )));
            }
            Ok(samples.into_iter().take(horizon).collect())
        }
    }
}

/// Reads a regressor CSV (`k,phi_1,…,phi_D[,y]`). Rows without a `y` column
/// get `y = φᵀθ*`. Row numbers in errors count data rows from 1.
pub fn read_regressor_csv(path: &Path, theta_star: &[f64]) -> Result<Vec<RegressorSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_regressor_csv_from(file, theta_star)
}

pub fn read_regressor_csv_from<R: std::io::Read>(reader: R, theta_star: &[f64]) -> Result<Vec<RegressorSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.first() != Some(&"k") {
        return Err(Error::Parse {
            row: 0,
            message: "header must start with `k`".into(),
        });
    }
    let has_y = names.last() == Some(&"y");
    let dim = names.len() - 1 - usize::from(has_y);
    for (i, name) in names[1..=dim].iter().enumerate() {
        if *name != format!("phi_{}", i + 1) {
            return Err(Error::Parse {
                row: 0,
                message: format!("expected column `phi_{}`, found `{name}`", i + 1),
            });
        }
    }
    if dim == 0 {
        return Err(Error::InvalidSpec("regressor file has no phi columns".into()));
    }
    if !has_y {
        check_dim("regressor file vs theta_star", theta_star.len(), dim)?;
    }

    let mut out = Vec::new();
    let mut last_k = 0u64;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != names.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        let k: u64 = record[0].parse().map_err(|_| Error::Parse {
            row,
            message: format!("bad iteration index `{}`", &record[0]),
        })?;
        if k <= last_k {
            return Err(Error::Parse {
                row,
                message: format!("iteration index {k} is not increasing"),
            });
        }
        last_k = k;
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("bad number `{s}`"),
                })
        };
        let phi = (1..=dim).map(|j| parse(&record[j])).collect::<Result<Vec<_>>>()?;
        let sample = if has_y {
            RegressorSample::new(k, phi, parse(&record[dim + 1])?)
        } else {
            RegressorSample::from_theta(k, phi, theta_star)
        };
        out.push(sample);
    }
    Ok(out)
}

/// Writes samples in the format read by [`read_regressor_csv`], including `y`.
pub fn write_regressor_csv<W: Write>(writer: W, samples: &[RegressorSample]) -> Result<()> {
    let dim = samples.first().map_or(0, RegressorSample::dim);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["k".to_string()];
    header.extend((1..=dim).map(|j| format!("phi_{j}")));
    header.push("y".into());
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.k.to_string()];
        row.extend(s.phi.iter().map(|x| format!("{x:.16e}")));
        row.push(format!("{:.16e}", s.y));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
