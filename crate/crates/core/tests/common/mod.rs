#![allow(dead_code)]

use rand::Rng;

use cps_sentinel::model::{validate_model, CpsModel, InitialSpec, ModelSpec};
use cps_sentinel::numerics::{SimRng, SquareMatrix};

/// `M Mᵀ + shift·I` with entries of `M` uniform on [-1, 1].
pub fn random_spd_rows(rng: &mut SimRng, n: usize, shift: f64) -> Vec<Vec<f64>> {
    let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dot: f64 = (0..n).map(|k| m[i][k] * m[j][k]).sum();
                    dot + if i == j { shift } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// Dynamics scaled to spectral radius below one (row sums bounded by 0.9).
pub fn random_stable_rows(rng: &mut SimRng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let total: f64 = row.iter().map(|v| v.abs()).sum();
            row.iter().map(|v| 0.9 * v / total.max(1.0)).collect()
        })
        .collect()
}

/// Gain bounded away from zero with a random sign.
pub fn nonzero(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    let v = rng.random_range(lo..hi);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

pub fn build(
    dynamics: Vec<Vec<f64>>,
    gains: Vec<f64>,
    noise: Vec<Vec<f64>>,
    excitation: Vec<f64>,
    initial: InitialSpec,
) -> CpsModel {
    validate_model(&ModelSpec {
        n_agents: gains.len(),
        dynamics,
        actuator_gains: gains,
        process_noise: noise,
        excitation,
        initial,
    })
    .expect("valid model")
}

pub fn random_model(rng: &mut SimRng, n: usize) -> CpsModel {
    let dynamics = random_stable_rows(rng, n);
    let gains = (0..n).map(|_| nonzero(rng, 0.3, 1.5)).collect();
    let noise = random_spd_rows(rng, n, 0.2);
    let excitation = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    let initial = if rng.random::<bool>() {
        InitialSpec::Dirac((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    } else {
        InitialSpec::Gaussian {
            mean: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            cov: random_spd_rows(rng, n, 0.5),
        }
    };
    build(dynamics, gains, noise, excitation, initial)
}

pub fn random_gain(rng: &mut SimRng, n: usize) -> SquareMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-0.3..0.3)).collect()).collect();
    SquareMatrix::from_rows(&rows).unwrap()
}
