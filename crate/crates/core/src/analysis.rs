//! Excitation, Lyapunov and convergence-rate analysis.
//!
//! * [`lyapunov`] evaluates `V = (‖ϑ - θ*‖² + ‖θ - ϑ‖²) / γ`, the certificate
//!   shared by the HB and NA tuners.
//! * [`pe_epsilon`] measures the persistent-excitation level
//!   `ε = min_k min_{‖w‖=1} (1/ΔT) Σ_{i=k-ΔT}^{k-1} |φ_iᵀw|` over every window.
//! * [`rate_bound_hb`] / [`rate_bound_na`] turn `ε` into the decay constant
//!   `μ` of the envelope `V_k ≤ exp(-μ⌊k/ΔT⌋) V_0`, choosing the free
//!   constants `(λ, η, ζ)` by grid search to make `μ` as large as possible.
//! * [`check_envelope`] tests a recorded `V` trace against that envelope.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, dist_sq, dot, norm, normalize};
use crate::regress::RegressorSample;
use crate::tuners::Algorithm;

/// `c₁`, `c₂` of the HB rate.
pub const HB_C1: f64 = 11.0 / 8.0;
pub const HB_C2: f64 = 21.0 / 32.0;
/// `c₃`, `c₄` of the NA rate.
pub const NA_C3: f64 = 7.0 / 4.0;
pub const NA_C4: f64 = 9.0 / 16.0;

/// Upper end of the η search when `β = 1` leaves it unbounded (HB).
pub const ETA_CAP: f64 = 1e3;

pub const DEFAULT_GRID: usize = 200;

pub fn lyapunov(theta: &[f64], vartheta: &[f64], theta_star: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    check_dim("lyapunov vartheta", theta.len(), vartheta.len())?;
    check_dim("lyapunov theta_star", theta.len(), theta_star.len())?;
    Ok(dist_sq(vartheta, theta_star) / gamma + dist_sq(theta, vartheta) / gamma)
}

/// `‖θ - θ*‖`.
pub fn parameter_error(theta: &[f64], theta_star: &[f64]) -> Result<f64> {
    check_dim("parameter_error", theta_star.len(), theta.len())?;
    Ok(dist_sq(theta, theta_star).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeReport {
    pub delta_t: usize,
    /// Excitation level `ε` found by the sphere search.
    pub epsilon: f64,
    /// Certified lower bound `min_k λ_min(M_k) / (ΔT · max_i ‖φ_i‖)`.
    pub epsilon_lb: f64,
    pub max_sqrt_nk: f64,
    /// `ε / max_k √N_k` (the `ε₁` / `ε₂` of the rate bounds).
    pub epsilon_norm: f64,
    /// Iteration index of the first sample of the least excited window.
    pub worst_window_k: u64,
}

/// Tuning of the sphere minimization inside [`pe_epsilon_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeSearch {
    /// Windows with at most this many candidate vertices are solved exactly
    /// by enumeration; larger ones use the descent search.
    pub exact_budget: usize,
    pub random_restarts: usize,
    pub descent_iters: usize,
    pub seed: u64,
}

impl Default for PeSearch {
    fn default() -> Self {
        Self {
            exact_budget: 20_000,
            random_restarts: 64,
            descent_iters: 40,
            seed: 0x5eed_0f9e,
        }
    }
}

pub fn pe_epsilon(samples: &[RegressorSample], delta_t: usize) -> Result<PeReport> {
    pe_epsilon_with(samples, delta_t, &PeSearch::default())
}

/// Every window `[k-ΔT, k-1]` contained in `samples` is analyzed.
///
/// The inner problem `min_{‖w‖=1} Σ|φ_iᵀw|` is nonconvex on the sphere.
/// Its minimum sits at a direction orthogonal to `D-1` independent window
/// regressors. When there are at most `exact_budget` such candidate
/// directions they are all evaluated. Otherwise local descent starts from the
/// eigenvectors of `M = Σ φ_iφ_iᵀ` plus `random_restarts` random directions,
/// and each run finishes by snapping onto the nearest vertex. The reported
/// `epsilon` is always attained by a unit vector, so it never falls below the
/// true minimum, and `epsilon_lb` bounds that minimum from below.
pub fn pe_epsilon_with(samples: &[RegressorSample], delta_t: usize, search: &PeSearch) -> Result<PeReport> {
    if delta_t == 0 {
        return Err(Error::InvalidArgument("delta_t must be positive".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty regressor window".into()));
    }
    if samples.len() < delta_t {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot fill a window of {delta_t}",
            samples.len()
        )));
    }
    let dim = samples[0].dim();
    if dim == 0 {
        return Err(Error::InvalidSpec("zero-dimensional regressors".into()));
    }
    for s in samples {
        check_dim("pe_epsilon regressor", dim, s.dim())?;
    }

    let exact = binomial(delta_t, dim - 1) <= search.exact_budget;
    let mut epsilon = f64::INFINITY;
    let mut epsilon_lb = f64::INFINITY;
    let mut worst_window_k = samples[0].k;
    for (start, window) in samples.windows(delta_t).enumerate() {
        let phis: Vec<&[f64]> = window.iter().map(|s| s.phi.as_slice()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ (start as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (lambda_min, eigvecs) = information_spectrum(&phis);
        let max_norm = phis.iter().map(|p| norm(p)).fold(0.0, f64::max);
        let lb = if max_norm > 0.0 {
            lambda_min.max(0.0) / (delta_t as f64 * max_norm)
        } else {
            0.0
        };
        let enumerated = if exact { vertex_min_abs_sum(&phis) } else { None };
        let sum = match enumerated {
            Some((sum, _)) => sum,
            None => sphere_min_abs_sum(&phis, eigvecs, search, &mut rng).0,
        };
        let eps = sum / delta_t as f64;
        if eps < epsilon {
            epsilon = eps;
            worst_window_k = window[0].k;
        }
        epsilon_lb = epsilon_lb.min(lb);
    }

    let max_sqrt_nk = samples.iter().map(|s| s.n_k.sqrt()).fold(0.0, f64::max);
    // λ_min carries eigen-solver round-off; the bound cannot exceed the value
    // it bounds.
    let epsilon_lb = epsilon_lb.min(epsilon).max(0.0);
    Ok(PeReport {
        delta_t,
        epsilon,
        epsilon_lb,
        max_sqrt_nk,
        epsilon_norm: epsilon / max_sqrt_nk,
        worst_window_k,
    })
}

/// Smallest eigenvalue of `Σ φφᵀ` and all of its eigenvectors.
fn information_spectrum(phis: &[&[f64]]) -> (f64, Vec<Vec<f64>>) {
    let d = phis[0].len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for p in phis {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += p[i] * p[j];
            }
        }
    }
    let eig = SymmetricEigen::new(m);
    let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let vecs = (0..d)
        .map(|c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();
    (lambda_min, vecs)
}

fn abs_sum(phis: &[&[f64]], w: &[f64]) -> f64 {
    phis.iter().fold(0.0, |acc, p| acc + dot(p, w).abs())
}

/// `C(n, k)`, saturating.
fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return usize::MAX,
        };
    }
    acc
}

/// Unit vector orthogonal to `vs`, or `None` if `vs` are not `D-1`
/// independent directions.
fn orthogonal_complement(vs: &[&[f64]], d: usize) -> Option<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut q = v.to_vec();
        if !normalize(&mut q) {
            return None;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&q, b);
                q.iter_mut().zip(b).for_each(|(qi, bi)| *qi -= c * bi);
            }
        }
        if norm(&q) <= 1e-10 || !normalize(&mut q) {
            return None;
        }
        basis.push(q);
    }
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for j in 0..d {
        let mut u = vec![0.0; d];
        u[j] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&u, b);
                u.iter_mut().zip(b).for_each(|(ui, bi)| *ui -= c * bi);
            }
        }
        let n = norm(&u);
        if n > best_norm {
            best_norm = n;
            best = Some(u);
        }
    }
    let mut u = best?;
    normalize(&mut u).then_some(u)
}

/// Exact minimum of `Σ|φ_iᵀw|` by evaluating every direction orthogonal to
/// `D-1` independent window regressors. `None` when the window spans fewer
/// than `D-1` dimensions.
fn vertex_min_abs_sum(phis: &[&[f64]]) -> Option<(f64, Vec<f64>)> {
    let d = phis[0].len();
    if d == 1 {
        return Some((abs_sum(phis, &[1.0]), vec![1.0]));
    }
    let n = phis.len();
    let k = d - 1;
    if n < k {
        return None;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<&[f64]> = Vec::with_capacity(k);
    loop {
        subset.clear();
        subset.extend(idx.iter().map(|&i| phis[i]));
        if let Some(w) = orthogonal_complement(&subset, d) {
            let val = abs_sum(phis, &w);
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, w));
            }
        }
        // Advance to the next k-combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            break;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
    best
}

/// Minimizes `Σ|φ_iᵀw|` over unit `w`; returns the value and the minimizer.
fn sphere_min_abs_sum(
    phis: &[&[f64]],
    seeds: Vec<Vec<f64>>,
    search: &PeSearch,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>) {
    let d = phis[0].len();
    let randoms =
        (0..search.random_restarts).map(|_| (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect::<Vec<f64>>());
    let starts: Vec<Vec<f64>> = seeds.into_iter().chain(randoms).collect();

    let mut best = (f64::INFINITY, vec![0.0; d]);
    for mut w in starts {
        if !normalize(&mut w) {
            continue;
        }
        let candidate = local_descent(phis, w, search.descent_iters);
        if candidate.0 < best.0 {
            best = candidate;
        }
    }
    best
}

/// Projected subgradient descent followed by vertex snapping.
fn local_descent(phis: &[&[f64]], mut w: Vec<f64>, iters: usize) -> (f64, Vec<f64>) {
    let d = w.len();
    let scale: f64 = phis.iter().map(|p| norm(p)).sum();
    let mut best_val = abs_sum(phis, &w);
    let mut best_w = w.clone();

    for round in 0..2 {
        let step0 = if round == 0 { 0.5 } else { 0.05 };
        for j in 0..iters {
            let mut g = vec![0.0; d];
            for p in phis {
                let s = dot(p, &w);
                if s != 0.0 {
                    let sign = s.signum();
                    g.iter_mut().zip(p.iter()).for_each(|(gi, pi)| *gi += sign * pi);
                }
            }
            let gw = dot(&g, &w);
            let mut r: Vec<f64> = g.iter().zip(&w).map(|(gi, wi)| gi - gw * wi).collect();
            let rn = norm(&r);
            if !(rn > 1e-14 * scale) {
                break;
            }
            let t = step0 / ((j + 1) as f64).sqrt();
            r.iter_mut().for_each(|x| *x *= t / rn);
            let mut next: Vec<f64> = w.iter().zip(&r).map(|(wi, ri)| wi - ri).collect();
            if !normalize(&mut next) {
                break;
            }
            w = next;
            let val = abs_sum(phis, &w);
            if val < best_val {
                best_val = val;
                best_w = w.clone();
            }
        }
        if let Some(v) = snap_to_vertex(phis, &best_w) {
            let val = abs_sum(phis, &v);
            if val <= best_val {
                best_val = val;
                best_w = v;
            }
        }
        w = best_w.clone();
    }
    (best_val, best_w)
}

/// Projects `w` onto the orthogonal complement of the `D-1` regressors it is
/// most nearly orthogonal to (taken greedily while linearly independent).
fn snap_to_vertex(phis: &[&[f64]], w: &[f64]) -> Option<Vec<f64>> {
    let d = w.len();
    let mut order: Vec<(f64, usize)> = phis
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let n = norm(p);
            (n > 0.0).then(|| (dot(p, w).abs() / n, i))
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d.saturating_sub(1));
    for &(_, i) in &order {
        if basis.len() + 1 >= d {
            break;
        }
        let mut q: Vec<f64> = phis[i].to_vec();
        normalize(&mut q);
        for b in &basis {
            let c = dot(&q, b);
            q.iter_mut().zip(b).for_each(|(qi, bi)| *qi -= c * bi);
        }
        if norm(&q) > 1e-8 && normalize(&mut q) {
            basis.push(q);
        }
    }
    if basis.len() + 1 != d {
        return None;
    }
    let mut u = w.to_vec();
    // Two passes of Gram-Schmidt keep the projection orthogonal to working precision.
    for _ in 0..2 {
        for b in &basis {
            let c = dot(&u, b);
            u.iter_mut().zip(b).for_each(|(ui, bi)| *ui -= c * bi);
        }
    }
    normalize(&mut u).then_some(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub algorithm: Algorithm,
    pub delta_t: usize,
    pub epsilon_norm: f64,
    pub lambda: f64,
    pub eta: f64,
    pub zeta: Option<f64>,
    pub xi: Option<f64>,
    pub mu_terms: Vec<f64>,
    pub mu: f64,
    pub c_consts: Vec<f64>,
    /// `0 < μ < 1`.
    pub certifies: bool,
}

/// Interior grid point `i` of `n` on `(0, hi)`, half a step from either end.
fn grid_point(i: usize, n: usize, hi: f64) -> f64 {
    (i as f64 + 0.5) / n as f64 * hi
}

fn min_of(terms: &[f64]) -> f64 {
    terms.iter().copied().fold(f64::INFINITY, f64::min)
}

fn require_pe(pe: &PeReport) -> Result<f64> {
    let e = pe.epsilon_norm;
    if e > 0.0 && e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NotPersistentlyExciting(e))
    }
}

/// HB rate terms at `(λ, η)`: `[μ₁, μ₂, μ₃]`.
pub fn hb_mu_terms(eps1: f64, beta: f64, gamma: f64, delta_t: usize, lambda: f64, eta: f64) -> [f64; 3] {
    let dt = delta_t as f64;
    let slack = eps1 - gamma * eta * (1.0 - beta).abs();
    [
        HB_C1 * lambda * gamma * eta * eta / dt,
        HB_C2 * dt * slack * slack * lambda * gamma / ((1.0 + gamma * dt) * (1.0 + gamma * dt)),
        HB_C1 * (1.0 - lambda) * gamma / dt,
    ]
}

pub fn rate_bound_hb(pe: &PeReport, beta: f64, gamma: f64) -> Result<RateReport> {
    rate_bound_hb_with(pe, beta, gamma, DEFAULT_GRID)
}

/// Maximizes `μ = min{μ₁, μ₂, μ₃}` over an `n × n` grid of
/// `λ ∈ (0, 1)`, `η ∈ (0, ε₁/(γ|1-β|))`.
pub fn rate_bound_hb_with(pe: &PeReport, beta: f64, gamma: f64, n: usize) -> Result<RateReport> {
    let eps1 = require_pe(pe)?;
    if !(beta > 0.0 && beta < 2.0) || !(gamma > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "HB rate needs 0 < beta < 2, gamma > 0 (beta = {beta}, gamma = {gamma})"
        )));
    }
    let eta_max = (eps1 / (gamma * (1.0 - beta).abs())).min(ETA_CAP);

    let mut best: Option<(f64, f64, f64, [f64; 3])> = None;
    for i in 0..n {
        let lambda = grid_point(i, n, 1.0);
        for j in 0..n {
            let eta = grid_point(j, n, eta_max);
            let terms = hb_mu_terms(eps1, beta, gamma, pe.delta_t, lambda, eta);
            let mu = min_of(&terms);
            if best.as_ref().is_none_or(|b| mu > b.0) {
                best = Some((mu, lambda, eta, terms));
            }
        }
    }
    let (mu, lambda, eta, terms) = best.expect("grid is non-empty");
    Ok(RateReport {
        algorithm: Algorithm::Hb,
        delta_t: pe.delta_t,
        epsilon_norm: eps1,
        lambda,
        eta,
        zeta: None,
        xi: None,
        mu_terms: terms.to_vec(),
        mu,
        c_consts: vec![HB_C1, HB_C2],
        certifies: mu > 0.0 && mu < 1.0,
    })
}

/// `ξ(ζ)` of the NA rate; positive only for small enough `ζ`.
pub fn na_xi(beta: f64, gamma: f64, delta_t: usize, zeta: f64) -> f64 {
    let dt = delta_t as f64;
    let gb = gamma * beta;
    let coupling = zeta * gb * (1.0 + dt) / (1.0 - gb);
    (dt - gamma * zeta * dt - coupling) / (1.0 + gamma * (1.0 - beta) * dt + beta * dt + coupling)
}

/// NA rate terms at `(λ, η, ζ)`: `[μ₁, μ₂, μ₃, μ₄]`.
pub fn na_mu_terms(eps2: f64, beta: f64, gamma: f64, delta_t: usize, lambda: f64, eta: f64, zeta: f64) -> [f64; 4] {
    let dt = delta_t as f64;
    let slack = eps2 - gamma * eta * (1.0 - beta);
    let xi = na_xi(beta, gamma, delta_t, zeta);
    [
        NA_C3 * lambda * gamma * eta * eta / dt,
        NA_C4 * dt * slack * slack * lambda * gamma / ((1.0 + gamma * dt) * (1.0 + gamma * dt)),
        NA_C4 * gamma * zeta * zeta * (1.0 - lambda) / dt,
        NA_C3 * xi * xi * (1.0 - lambda) * gamma / dt,
    ]
}

pub fn rate_bound_na(pe: &PeReport, beta: f64, gamma: f64, delta_t: usize) -> Result<RateReport> {
    rate_bound_na_with(pe, beta, gamma, delta_t, DEFAULT_GRID)
}

/// Maximizes `μ = min{μ₁, μ₂, μ₃, μ₄}` over an `n³` grid of `(λ, η, ζ)`.
///
/// `μ₁, μ₂` depend on `(λ, η)` and `μ₃, μ₄` on `(λ, ζ)`, so for each `λ`
/// the best `η` and best `ζ` are found independently; this visits the same
/// optimum as the full three-dimensional scan. Grid points with `ξ ≤ 0`
/// are not admissible.
pub fn rate_bound_na_with(pe: &PeReport, beta: f64, gamma: f64, delta_t: usize, n: usize) -> Result<RateReport> {
    let eps2 = require_pe(pe)?;
    if delta_t != pe.delta_t {
        return Err(Error::InvalidArgument(format!(
            "rate window {delta_t} differs from the excitation window {}",
            pe.delta_t
        )));
    }
    if !(beta > 0.0 && beta < 1.0) || !(gamma > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "NA rate needs 0 < beta < 1, gamma > 0 (beta = {beta}, gamma = {gamma})"
        )));
    }
    if gamma * beta >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "gamma * beta = {} must be < 1",
            gamma * beta
        )));
    }
    let eta_max = eps2 / (gamma * (1.0 - beta));
    let zeta_max = (1.0 - gamma * beta) / (gamma * (1.0 + beta - gamma * beta));

    let mut best: Option<(f64, f64, f64, f64, [f64; 4])> = None;
    for i in 0..n {
        let lambda = grid_point(i, n, 1.0);
        let mut best_eta: Option<(f64, f64)> = None;
        for j in 0..n {
            let eta = grid_point(j, n, eta_max);
            let t = na_mu_terms(eps2, beta, gamma, delta_t, lambda, eta, 0.0);
            let v = t[0].min(t[1]);
            if best_eta.is_none_or(|b| v > b.0) {
                best_eta = Some((v, eta));
            }
        }
        let mut best_zeta: Option<(f64, f64)> = None;
        for j in 0..n {
            let zeta = grid_point(j, n, zeta_max);
            if na_xi(beta, gamma, delta_t, zeta) <= 0.0 {
                continue;
            }
            let t = na_mu_terms(eps2, beta, gamma, delta_t, lambda, 0.0, zeta);
            let v = t[2].min(t[3]);
            if best_zeta.is_none_or(|b| v > b.0) {
                best_zeta = Some((v, zeta));
            }
        }
        let (Some((_, eta)), Some((_, zeta))) = (best_eta, best_zeta) else {
            continue;
        };
        let terms = na_mu_terms(eps2, beta, gamma, delta_t, lambda, eta, zeta);
        let mu = min_of(&terms);
        if best.as_ref().is_none_or(|b| mu > b.0) {
            best = Some((mu, lambda, eta, zeta, terms));
        }
    }
    let (mu, lambda, eta, zeta, terms) =
        best.ok_or_else(|| Error::InvalidArgument("no grid point yields xi > 0".into()))?;
    Ok(RateReport {
        algorithm: Algorithm::Na,
        delta_t,
        epsilon_norm: eps2,
        lambda,
        eta,
        zeta: Some(zeta),
        xi: Some(na_xi(beta, gamma, delta_t, zeta)),
        mu_terms: terms.to_vec(),
        mu,
        c_consts: vec![NA_C3, NA_C4],
        certifies: mu > 0.0 && mu < 1.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub holds: bool,
    /// Trace index (`V_0` is index 0) of the first point above the envelope.
    pub first_violation_k: Option<u64>,
    /// `max_k V_k / (exp(-μ⌊k/ΔT⌋) V_0)`.
    pub max_ratio: f64,
    pub mu: f64,
    pub delta_t: usize,
    pub tolerance: f64,
}

/// Checks `V_k ≤ exp(-μ⌊k/ΔT⌋) V_0 (1 + tolerance)` for every entry of the
/// trace, with `v_trace[0]` taken as `V_0`.
pub fn check_envelope(v_trace: &[f64], mu: f64, delta_t: usize, tolerance: f64) -> EnvelopeReport {
    let dt = delta_t.max(1) as u64;
    let v0 = v_trace.first().copied().unwrap_or(0.0);
    let mut first_violation_k = None;
    let mut max_ratio: f64 = 0.0;
    for (k, &v) in v_trace.iter().enumerate() {
        let env = (-mu * (k as u64 / dt) as f64).exp() * v0;
        let ratio = if env > 0.0 {
            v / env
        } else if v == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
        if first_violation_k.is_none() && !(v <= env * (1.0 + tolerance)) {
            first_violation_k = Some(k as u64);
        }
    }
    EnvelopeReport {
        holds: first_violation_k.is_none(),
        first_violation_k,
        max_ratio,
        mu,
        delta_t,
        tolerance,
    }
}

/// First index `k` with `V_{k+1} > V_k + tolerance · max(1, V_0)`.
pub fn first_lyapunov_increase(v_trace: &[f64], tolerance: f64) -> Option<usize> {
    let slack = tolerance * v_trace.first().copied().unwrap_or(0.0).max(1.0);
    v_trace.windows(2).position(|w| !(w[1] <= w[0] + slack))
}
