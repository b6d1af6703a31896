#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use transid::datamat::Snapshot;
use transid::engine::{Identifier, StepReport};
use transid::experiment::{generate, Experiment, ExperimentConfig};
use transid::subspace::{RankPolicy, Subspace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn random_subspace(ambient: usize, dim: usize, rng: &mut ChaCha8Rng) -> Subspace<f64> {
    Subspace::span(&gaussian(ambient, dim, rng), &RankPolicy::default())
}

/// Small random experiment: `n, m ∈ 1..=4`, `σ ∈ {0.05, 0.5}`.
pub fn small_config(seed: u64) -> ExperimentConfig {
    let n = 1 + (seed % 4) as usize;
    let m = 1 + ((seed / 4) % 4) as usize;
    let sigma = if (seed / 16).is_multiple_of(2) { 0.05 } else { 0.5 };
    let mut cfg = ExperimentConfig::new(n, m, sigma, 1000 + seed);
    cfg.length = 4 * (n + m) + 10;
    cfg
}

/// Pushes the true trajectory until completion, calling `visit` after every step.
pub fn replay(
    exp: &Experiment<f64>,
    mut visit: impl FnMut(&Identifier<f64>, &Snapshot<f64>, &StepReport<f64>),
) -> Identifier<f64> {
    let mut id = Identifier::new(&exp.similar_data, RankPolicy::default()).expect("informative similar data");
    for h in exp.truth_trajectory.snapshots() {
        if id.is_complete() {
            break;
        }
        let report = id.push(&h).expect("push");
        visit(&id, &h, &report);
    }
    id
}

pub fn small_experiment(seed: u64) -> Experiment<f64> {
    generate(&small_config(seed)).expect("experiment generation")
}
