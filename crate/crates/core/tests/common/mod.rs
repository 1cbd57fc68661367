//! Reference implementations used as oracles. Nothing here calls into the
//! library's numerics.
#![allow(dead_code)]

use hotune::{HyperParams, RegressorSample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fig_config(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.json"))
}

/// Straight-line reference steps.
pub mod reference {
    fn n_k(phi: &[f64]) -> f64 {
        let mut s = 1.0;
        for p in phi {
            s += p * p;
        }
        s
    }

    fn residual(phi: &[f64], theta: &[f64], y: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..phi.len() {
            s += phi[i] * theta[i];
        }
        s - y
    }

    pub fn ngd(theta: &[f64], phi: &[f64], y: f64, alpha: f64) -> Vec<f64> {
        let e = residual(phi, theta, y);
        let n = n_k(phi);
        (0..theta.len()).map(|i| theta[i] - alpha * phi[i] * e / n).collect()
    }

    pub fn hb(theta: &[f64], vt: &[f64], phi: &[f64], y: f64, beta: f64, gamma: f64) -> (Vec<f64>, Vec<f64>) {
        let n = n_k(phi);
        let t1: Vec<f64> = (0..theta.len()).map(|i| theta[i] - beta * (theta[i] - vt[i])).collect();
        let e1 = residual(phi, &t1, y);
        let v1 = (0..theta.len()).map(|i| vt[i] - gamma * phi[i] * e1 / n).collect();
        (t1, v1)
    }

    pub fn na(theta: &[f64], vt: &[f64], phi: &[f64], y: f64, beta: f64, gamma: f64) -> (Vec<f64>, Vec<f64>) {
        let n = n_k(phi);
        let e = residual(phi, theta, y);
        let bar: Vec<f64> = (0..theta.len())
            .map(|i| theta[i] - gamma * beta * phi[i] * e / n)
            .collect();
        let t1: Vec<f64> = (0..theta.len()).map(|i| bar[i] - beta * (bar[i] - vt[i])).collect();
        let e1 = residual(phi, &t1, y);
        let v1 = (0..theta.len()).map(|i| vt[i] - gamma * phi[i] * e1 / n).collect();
        (t1, v1)
    }

    pub fn classical_hb(theta: &[f64], prev: &[f64], phi: &[f64], y: f64, beta: f64, gamma: f64) -> Vec<f64> {
        let n = n_k(phi);
        let e = residual(phi, theta, y);
        (0..theta.len())
            .map(|i| theta[i] - gamma * phi[i] * e / n + beta * (theta[i] - prev[i]))
            .collect()
    }

    pub fn classical_na(theta: &[f64], prev: &[f64], phi: &[f64], y: f64, beta: f64, gamma: f64) -> Vec<f64> {
        let n = n_k(phi);
        let look: Vec<f64> = (0..theta.len())
            .map(|i| theta[i] + beta * (theta[i] - prev[i]))
            .collect();
        let e = residual(phi, &look, y);
        (0..theta.len())
            .map(|i| theta[i] - gamma * phi[i] * e / n + beta * (theta[i] - prev[i]))
            .collect()
    }

    pub fn lyapunov(theta: &[f64], vt: &[f64], star: &[f64], gamma: f64) -> f64 {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..theta.len() {
            a += (vt[i] - star[i]) * (vt[i] - star[i]);
            b += (theta[i] - vt[i]) * (theta[i] - vt[i]);
        }
        (a + b) / gamma
    }
}

pub fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Theorem-mode HB or NA hyperparameters, including the boundary value of
/// `γ` with some probability.
pub fn theorem_hyper(rng: &mut ChaCha8Rng, na: bool) -> HyperParams {
    let beta: f64 = if na {
        rng.random_range(0.01..0.99)
    } else {
        rng.random_range(0.01..1.99)
    };
    let bound = if na {
        beta * (2.0 - beta) / (8.0 + beta * beta)
    } else {
        beta * (2.0 - beta) / 8.0
    };
    let gamma = if rng.random_bool(0.2) {
        bound
    } else {
        bound * rng.random_range(0.01..1.0)
    };
    if na {
        HyperParams::na(beta, gamma)
    } else {
        HyperParams::hb(beta, gamma)
    }
}

/// A bounded but adversarial regressor sequence: random scales, sign
/// flips, repeated directions and occasional zeros.
pub fn adversarial_sequence(rng: &mut ChaCha8Rng, d: usize, len: usize, theta_star: &[f64]) -> Vec<RegressorSample> {
    let mut out = Vec::with_capacity(len);
    let mut held = random_vec(rng, d, 1.0);
    for k in 1..=len as u64 {
        let phi = match rng.random_range(0..5) {
            0 => held.clone(),
            1 => {
                held = random_vec(rng, d, 10.0);
                held.clone()
            }
            2 => vec![0.0; d],
            3 => held.iter().map(|x| -x).collect(),
            _ => {
                let s = 10f64.powf(rng.random_range(-3.0..2.0));
                random_vec(rng, d, s)
            }
        };
        let mut y = 0.0;
        for i in 0..d {
            y += phi[i] * theta_star[i];
        }
        out.push(RegressorSample::new(k, phi, y));
    }
    out
}

/// `Σ|φ_iᵀw|` for the oracles.
pub fn abs_sum(phis: &[Vec<f64>], w: &[f64]) -> f64 {
    phis.iter()
        .map(|p| p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs())
        .sum()
}

/// Minimum of `Σ|φ_iᵀw|` over `n` Fibonacci-lattice points of the unit
/// sphere in three dimensions.
pub fn fibonacci_sphere_min(phis: &[Vec<f64>], n: usize) -> f64 {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            abs_sum(phis, &[r * t.cos(), r * t.sin(), z])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exact minimum of `Σ|φ_iᵀw|` on the unit sphere in three dimensions,
/// enumerating normals of every pair of window regressors.
pub fn cross_product_min(phis: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..phis.len() {
        for j in i + 1..phis.len() {
            let (a, b) = (&phis[i], &phis[j]);
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            let an = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n <= 1e-9 * an * bn {
                continue;
            }
            best = best.min(abs_sum(phis, &[c[0] / n, c[1] / n, c[2] / n]));
        }
    }
    best
}

/// Checks shared by the focused test files and the acceptance target. Each
/// returns a short summary on success and a description of the first
/// failure otherwise.
pub mod checks {
    use super::*;
    use hotune::analysis::lyapunov;
    use hotune::tuners::{loss_and_gradient, step};
    use hotune::{Algorithm, TunerState};
    use rand::SeedableRng;

    pub fn gradient_vs_finite_differences(instances: usize, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for n in 0..instances {
            let d = rng.random_range(1..=8);
            let theta = random_vec(&mut rng, d, 2.0);
            let phi = random_vec(&mut rng, d, 2.0);
            let y = rng.random_range(-5.0..5.0);
            let sample = RegressorSample::new(1, phi, y);
            let (_, grad) = loss_and_gradient(&theta, &sample).map_err(|e| e.to_string())?;
            for i in 0..d {
                let mut plus = theta.clone();
                let mut minus = theta.clone();
                plus[i] += h;
                minus[i] -= h;
                let lp = loss_and_gradient(&plus, &sample).unwrap().0;
                let lm = loss_and_gradient(&minus, &sample).unwrap().0;
                let fd = (lp - lm) / (2.0 * h);
                let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1.0);
                worst = worst.max(rel);
                if rel > 1e-6 {
                    return Err(format!("instance {n}, component {i}: grad {} vs fd {fd}", grad[i]));
                }
            }
        }
        Ok(format!("worst relative error {worst:.2e}"))
    }

    fn hyper_for(alg: Algorithm, rng: &mut ChaCha8Rng) -> HyperParams {
        let beta = rng.random_range(0.05..0.95);
        let gamma = rng.random_range(0.01..1.5);
        match alg {
            Algorithm::Ngd => HyperParams::ngd(rng.random_range(0.01..1.99)),
            Algorithm::Hb => HyperParams::hb(beta, gamma),
            Algorithm::Na => HyperParams::na(beta, gamma),
            Algorithm::HbClassical => HyperParams::hb_classical(beta, gamma),
            Algorithm::NaClassical => HyperParams::na_classical(beta, gamma),
        }
    }

    pub fn oracle_equivalence(steps: usize, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for alg in Algorithm::ALL {
            for n in 0..steps {
                let d = rng.random_range(1..=8);
                let state = TunerState {
                    theta: random_vec(&mut rng, d, 10.0),
                    vartheta: random_vec(&mut rng, d, 10.0),
                    theta_prev: random_vec(&mut rng, d, 10.0),
                    theta_bar_last: vec![0.0; d],
                    k: 1,
                };
                let phi = random_vec(&mut rng, d, 5.0);
                let y = rng.random_range(-20.0..20.0);
                let hp = hyper_for(alg, &mut rng);
                let sample = RegressorSample::new(1, phi.clone(), y);
                let (next, _) = step(&state, &sample, &hp).map_err(|e| e.to_string())?;
                let (t, v, p) = match alg {
                    Algorithm::Ngd => (
                        reference::ngd(&state.theta, &phi, y, hp.alpha),
                        state.vartheta.clone(),
                        state.theta_prev.clone(),
                    ),
                    Algorithm::Hb => {
                        let (t, v) = reference::hb(&state.theta, &state.vartheta, &phi, y, hp.beta, hp.gamma);
                        (t, v, state.theta_prev.clone())
                    }
                    Algorithm::Na => {
                        let (t, v) = reference::na(&state.theta, &state.vartheta, &phi, y, hp.beta, hp.gamma);
                        (t, v, state.theta_prev.clone())
                    }
                    Algorithm::HbClassical => (
                        reference::classical_hb(&state.theta, &state.theta_prev, &phi, y, hp.beta, hp.gamma),
                        state.vartheta.clone(),
                        state.theta.clone(),
                    ),
                    Algorithm::NaClassical => (
                        reference::classical_na(&state.theta, &state.theta_prev, &phi, y, hp.beta, hp.gamma),
                        state.vartheta.clone(),
                        state.theta.clone(),
                    ),
                };
                let pairs = [(&next.theta, &t), (&next.vartheta, &v), (&next.theta_prev, &p)];
                for (got, want) in pairs {
                    for i in 0..d {
                        let diff = (got[i] - want[i]).abs();
                        worst = worst.max(diff);
                        if diff > 1e-12 {
                            return Err(format!("{alg} step {n}: component {i} differs by {diff:e}"));
                        }
                    }
                }
            }
        }
        Ok(format!("5 x {steps} steps, worst |diff| {worst:.2e}"))
    }

    pub fn fixed_point(trials: usize, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for alg in Algorithm::ALL {
            for n in 0..trials {
                let d = rng.random_range(1..=8);
                let star = random_vec(&mut rng, d, 30.0);
                let phi = random_vec(&mut rng, d, 5.0);
                let sample = RegressorSample::from_theta(1, phi, &star);
                let hp = hyper_for(alg, &mut rng);
                let mut state = TunerState::new(star.clone());
                for _ in 0..5 {
                    state = step(&state, &sample, &hp).map_err(|e| e.to_string())?.0;
                }
                for v in [&state.theta, &state.vartheta, &state.theta_prev] {
                    for i in 0..d {
                        if (v[i] - star[i]).abs() > 1e-15 * star[i].abs().max(1.0) {
                            return Err(format!("{alg} trial {n}: moved by {:e}", v[i] - star[i]));
                        }
                    }
                }
            }
        }
        Ok(format!("5 x {trials} states unchanged"))
    }

    /// `V_{k+1} ≤ V_k + 1e-10 max(1, V_0)` along random HB and NA runs.
    pub fn lyapunov_monotone(sequences: usize, len: usize, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut steps = 0usize;
        for n in 0..sequences {
            for na in [false, true] {
                let d = rng.random_range(1..=8);
                let star = random_vec(&mut rng, d, 20.0);
                let hp = theorem_hyper(&mut rng, na);
                let samples = adversarial_sequence(&mut rng, d, len, &star);
                let mut state = TunerState::new(random_vec(&mut rng, d, 20.0));
                state.vartheta = random_vec(&mut rng, d, 20.0);
                let v0 = lyapunov(&state.theta, &state.vartheta, &star, hp.gamma).unwrap();
                let slack = 1e-10 * v0.max(1.0);
                let mut v = v0;
                for s in &samples {
                    state = step(&state, s, &hp).map_err(|e| format!("sequence {n}: {e}"))?.0;
                    if !state.theta.iter().chain(&state.vartheta).all(|x| x.is_finite()) {
                        return Err(format!("sequence {n}: non-finite iterate at k = {}", s.k));
                    }
                    let next = lyapunov(&state.theta, &state.vartheta, &star, hp.gamma).unwrap();
                    if next > v + slack {
                        return Err(format!(
                            "{} sequence {n} (beta {}, gamma {}): V rose from {v} to {next} at k = {}",
                            hp.algorithm, hp.beta, hp.gamma, s.k
                        ));
                    }
                    v = next;
                    steps += 1;
                }
            }
        }
        Ok(format!("{steps} steps without an increase"))
    }
}
