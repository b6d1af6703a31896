//! Simulation-mode harness: random truth, perturbed similar system, and a
//! per-step trace of convergence and bound quantities.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::report_for;
use crate::control::{gaussian_matrix, perturb, random_model, simulate, uniform_inputs, PerturbationKind, PerturbationSpec};
use crate::datamat::{Snapshot, StackedData, Trajectory};
use crate::engine::{Identifier, LinearModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::subspace::{distance, RankPolicy, Subspace};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub distribution: PerturbationKind,
    pub seed: u64,
    /// Transitions of similar-system data, and the cap on true-system data.
    pub length: usize,
    /// Similar data is collected as independent episodes of this many steps.
    pub episode_len: usize,
    pub spectral_radius: f64,
}

impl ExperimentConfig {
    pub fn new(n: usize, m: usize, sigma: f64, seed: u64) -> Self {
        Self {
            n,
            m,
            sigma,
            distribution: PerturbationKind::Uniform,
            seed,
            length: 300,
            episode_len: 5,
            spectral_radius: 0.9,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("experiment needs n >= 1 and m >= 1".into()));
        }
        if self.length < self.n + self.m {
            return Err(Error::InvalidArgument(format!(
                "length {} is below n + m = {}",
                self.length,
                self.n + self.m
            )));
        }
        if self.episode_len == 0 {
            return Err(Error::InvalidArgument("episode length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Experiment<T: Scalar> {
    pub truth: LinearModel<T>,
    pub similar: LinearModel<T>,
    pub similar_data: StackedData<T>,
    pub truth_trajectory: Trajectory<T>,
}

fn random_state<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> DVector<T> {
    gaussian_matrix(n, 1, 1.0, rng).column(0).into_owned()
}

/// Draws the truth, its perturbation and both data sets from `config.seed`.
pub fn generate<T: Scalar>(config: &ExperimentConfig) -> Result<Experiment<T>> {
    config.validate()?;
    let (n, m) = (config.n, config.m);
    let truth = random_model(n, m, T::lit(config.spectral_radius), config.seed)?;
    let spec = PerturbationSpec::new(config.distribution, T::lit(config.sigma), config.seed.wrapping_add(1))?;
    let similar = perturb(&truth, &spec);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut snapshots = Vec::with_capacity(config.length);
    while snapshots.len() < config.length {
        let steps = config.episode_len.min(config.length - snapshots.len());
        let x0 = random_state(n, &mut rng);
        let episode = simulate(&similar, &x0, &uniform_inputs(m, steps, &mut rng))?;
        snapshots.extend(episode.snapshots());
    }
    let similar_data = StackedData::from_snapshots(n, m, &snapshots)?;

    let x0 = random_state(n, &mut rng);
    let truth_trajectory = simulate(&truth, &x0, &uniform_inputs(m, config.length, &mut rng))?;
    Ok(Experiment {
        truth,
        similar,
        similar_data,
        truth_trajectory,
    })
}

/// One row of the identification trace. Truth-dependent fields are `None`
/// when no truth model is available or the bound is undefined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub mu: usize,
    pub d_to_similar: f64,
    pub d_to_truth: Option<f64>,
    pub frob_err_truth: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub rhs_thm9: Option<f64>,
    pub rhs_thm10: Option<f64>,
    pub lhs_thm9: Option<f64>,
    pub lhs_thm10: Option<f64>,
    pub fresh_rank: usize,
    pub rank_increased: bool,
    pub complete: bool,
}

impl TraceRow {
    pub const COLUMNS: [&'static str; 9] = [
        "step",
        "mu",
        "d_to_similar",
        "d_to_truth",
        "frob_err_truth",
        "gamma",
        "beta",
        "rhs_thm9",
        "rhs_thm10",
    ];

    pub fn is_truth_column(name: &str) -> bool {
        !matches!(name, "step" | "mu" | "d_to_similar")
    }

    /// Column value formatted for CSV; `None` becomes an empty cell.
    pub fn cell(&self, name: &str) -> Option<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        Some(match name {
            "step" => self.step.to_string(),
            "mu" => self.mu.to_string(),
            "d_to_similar" => format!("{:.12e}", self.d_to_similar),
            "d_to_truth" => opt(self.d_to_truth),
            "frob_err_truth" => opt(self.frob_err_truth),
            "gamma" => opt(self.gamma),
            "beta" => opt(self.beta),
            "rhs_thm9" => opt(self.rhs_thm9),
            "rhs_thm10" => opt(self.rhs_thm10),
            _ => return None,
        })
    }
}

/// Truth-side reference for the trace.
pub struct TruthReference<'a, T: Scalar> {
    pub model: &'a LinearModel<T>,
    pub space: Subspace<T>,
}

impl<'a, T: Scalar> TruthReference<'a, T> {
    pub fn new(model: &'a LinearModel<T>, policy: &RankPolicy<T>) -> Self {
        Self {
            model,
            space: model.behavior_space(policy),
        }
    }
}

fn truth_row<T: Scalar>(identifier: &Identifier<T>, truth: &TruthReference<'_, T>, row: &mut TraceRow) -> Result<()> {
    row.d_to_truth = Some(distance(&truth.space, identifier.current_subspace())?.as_f64());
    row.frob_err_truth = Some(identifier.model().frobenius_distance(truth.model)?.as_f64());
    match report_for(identifier, truth.model, &truth.space) {
        Ok(report) => {
            row.gamma = Some(report.gamma().as_f64());
            row.beta = Some(report.beta().as_f64());
            row.rhs_thm9 = Some(report.rhs_thm9().as_f64());
            row.rhs_thm10 = Some(report.rhs_thm10().as_f64());
            row.lhs_thm9 = Some(report.lhs_thm9().as_f64());
            row.lhs_thm10 = Some(report.lhs_thm10().as_f64());
        }
        Err(Error::UndefinedBound(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Pushes snapshots until they run out or the identifier completes.
pub fn run_trace<T: Scalar>(
    identifier: &mut Identifier<T>,
    snapshots: impl IntoIterator<Item = Snapshot<T>>,
    truth: Option<&TruthReference<'_, T>>,
) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for h in snapshots {
        if identifier.is_complete() {
            break;
        }
        let report = if identifier.is_autonomous() {
            identifier.push_autonomous(&h)?
        } else {
            identifier.push(&h)?
        };
        let mut row = TraceRow {
            step: report.step,
            mu: report.remaining_rank,
            d_to_similar: report.d_to_similar.as_f64(),
            d_to_truth: None,
            frob_err_truth: None,
            gamma: None,
            beta: None,
            rhs_thm9: None,
            rhs_thm10: None,
            lhs_thm9: None,
            lhs_thm10: None,
            fresh_rank: report.fresh_rank,
            rank_increased: report.rank_increased,
            complete: report.complete,
        };
        if let Some(truth) = truth {
            truth_row(identifier, truth, &mut row)?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Result of a complete simulated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentRun<T: Scalar> {
    pub experiment: Experiment<T>,
    pub identifier: Identifier<T>,
    pub initial_d_to_truth: T,
    pub rows: Vec<TraceRow>,
}

pub fn run_experiment<T: Scalar>(config: &ExperimentConfig, policy: RankPolicy<T>) -> Result<ExperimentRun<T>> {
    let experiment = generate::<T>(config)?;
    let mut identifier = Identifier::new(&experiment.similar_data, policy)?;
    let truth = TruthReference::new(&experiment.truth, &policy);
    let initial_d_to_truth = distance(&truth.space, identifier.current_subspace())?;
    let rows = run_trace(&mut identifier, experiment.truth_trajectory.snapshots(), Some(&truth))?;
    Ok(ExperimentRun {
        experiment,
        identifier,
        initial_d_to_truth,
        rows,
    })
}

/// Violations of the monotonicity and dimension invariants in a trace.
/// `initial` is `(d_to_similar, d_to_truth)` before the first push.
pub fn check_trace(rows: &[TraceRow], initial: (f64, Option<f64>), slack: f64) -> Vec<String> {
    let mut problems = Vec::new();
    let (mut prev_s, mut prev_t) = initial;
    let mut prev_mu = None;
    for row in rows {
        if row.d_to_similar + slack < prev_s {
            problems.push(format!("step {}: d_to_similar decreased ({} < {})", row.step, row.d_to_similar, prev_s));
        }
        if let (Some(t), Some(p)) = (row.d_to_truth, prev_t) {
            if t > p + slack {
                problems.push(format!("step {}: d_to_truth increased ({} > {})", row.step, t, p));
            }
        }
        if let Some(p) = prev_mu {
            if row.mu > p {
                problems.push(format!("step {}: mu increased ({} > {})", row.step, row.mu, p));
            }
        }
        prev_s = row.d_to_similar;
        prev_t = row.d_to_truth.or(prev_t);
        prev_mu = Some(row.mu);
    }
    problems
}
