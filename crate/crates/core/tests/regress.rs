mod common;

use common::random_vec;
use hotune::regress::{
    regressor_stream, simulate_plant, BasisFn, Component, InputSignal, LagRef, PlantSpec, RegressorSource, Segment,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stable_spec(rng: &mut ChaCha8Rng, with_basis: bool) -> PlantSpec {
    let n = rng.random_range(0..=3);
    let m = rng.random_range(if n == 0 { 1 } else { 0 }..=3);
    // Σ|a_i| < 1 keeps the linear part contractive.
    let a: Vec<f64> = random_vec(rng, n, 1.0)
        .into_iter()
        .map(|x| x * 0.9 / n.max(1) as f64)
        .collect();
    let mut spec = PlantSpec {
        a_coeffs: a,
        b_coeffs: random_vec(rng, m, 2.0),
        delay_d: rng.random_range(0..=2),
        initial_outputs: random_vec(rng, n, 1.0),
        ..PlantSpec::default()
    };
    if with_basis && n > 0 {
        spec.basis = vec![BasisFn::sine(LagRef::output(1, 1), 0.7), BasisFn::constant()];
        spec.c_coeffs = random_vec(rng, 2, 0.05);
    }
    spec
}

/// Direct recursion of the linear plant, written without the library.
fn oracle_outputs(spec: &PlantSpec, u: impl Fn(i64) -> f64, horizon: usize) -> Vec<f64> {
    let n = spec.a_coeffs.len();
    let mut y: Vec<f64> = spec.initial_outputs.iter().rev().copied().collect();
    for k in 1..=horizon as i64 {
        let mut acc = 0.0;
        for i in 1..=n {
            acc -= spec.a_coeffs[i - 1] * y[y.len() - i];
        }
        for j in 1..=spec.b_coeffs.len() as i64 {
            acc += spec.b_coeffs[j as usize - 1] * u(k - j - spec.delay_d as i64);
        }
        y.push(acc);
    }
    y.split_off(n)
}

#[test]
fn plant_outputs_satisfy_the_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..1000 {
        let spec = stable_spec(&mut rng, trial % 4 == 3);
        let star = spec.theta_star();
        let input = InputSignal::Sinusoid {
            amplitude: rng.random_range(0.1..3.0),
            omega: rng.random_range(0.05..2.0),
            phase: 0.3,
            offset: 0.1,
        };
        let samples = simulate_plant(&spec, &input, 100).unwrap();
        for s in &samples {
            let terms: Vec<f64> = s.phi.iter().zip(&star).map(|(p, t)| p * t).collect();
            let fitted: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|x| x.abs()).sum::<f64>().max(1e-300);
            assert!(
                (fitted - s.y).abs() <= 1e-14 * scale,
                "trial {trial} k {}: {fitted} vs {}",
                s.k,
                s.y
            );
            assert_eq!(s.n_k, 1.0 + s.phi.iter().map(|p| p * p).sum::<f64>());
        }
        if spec.basis.is_empty() {
            let u = |k: i64| input.at(k).unwrap();
            let want = oracle_outputs(&spec, u, 100);
            for (s, w) in samples.iter().zip(&want) {
                assert!(
                    (s.y - w).abs() <= 1e-12 * w.abs().max(1.0),
                    "trial {trial}: {} vs {w}",
                    s.y
                );
            }
        }
    }
}

#[test]
fn streams_are_pure() {
    let sources = [
        RegressorSource::SinusoidBank {
            components: vec![
                Component::Constant { value: 1.0 },
                Component::Sine {
                    amplitude: 2.0,
                    omega: 1.0,
                    phase: 0.0,
                },
                Component::Sine {
                    amplitude: 2.0,
                    omega: 2.0,
                    phase: 0.0,
                },
            ],
        },
        RegressorSource::PiecewiseConstant {
            segments: vec![
                Segment {
                    start_k: 1,
                    phi: vec![1.0, -2.0, 1.0],
                },
                Segment {
                    start_k: 251,
                    phi: vec![2.0, -1.0, -2.0],
                },
            ],
        },
    ];
    for source in &sources {
        let a = regressor_stream(source, &[20.0, -3.0, 1.0], 500).unwrap();
        let b = regressor_stream(source, &[20.0, -3.0, 1.0], 500).unwrap();
        assert_eq!(a.len(), 500);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.y.to_bits(), y.y.to_bits());
            assert!(x.phi.iter().zip(&y.phi).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn piecewise_changes_exactly_at_segment_starts() {
    let source = RegressorSource::PiecewiseConstant {
        segments: vec![
            Segment {
                start_k: 1,
                phi: vec![1.0, 0.0],
            },
            Segment {
                start_k: 7,
                phi: vec![0.0, 1.0],
            },
            Segment {
                start_k: 9,
                phi: vec![1.0, 1.0],
            },
        ],
    };
    let s = regressor_stream(&source, &[1.0, 2.0], 12).unwrap();
    let changes: Vec<u64> = s.windows(2).filter(|w| w[0].phi != w[1].phi).map(|w| w[1].k).collect();
    assert_eq!(changes, vec![7, 9]);
}
