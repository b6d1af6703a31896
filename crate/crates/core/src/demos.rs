//! Built-in worked examples: a scalar walkthrough and a certainty-equivalence
//! pole-placement study on a 3-state plant.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::control::{closed_loop_eigs, pole_place, FeedbackGain};
use crate::datamat::{Snapshot, StackedData, Trajectory};
use crate::engine::{Identifier, LinearModel, Provenance};
use crate::error::Result;
use crate::subspace::RankPolicy;

/// Similar data `[[1, 0], [0, 1], [0.7, 0.7]]` for the scalar plant.
pub fn scalar_similar_data() -> StackedData<f64> {
    StackedData::from_matrix(1, 1, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.7, 0.7]))
        .expect("3x2 matrix for n = m = 1")
}

pub fn scalar_true_snapshot() -> Snapshot<f64> {
    Snapshot::new(&DVector::from_element(1, 1.0), &DVector::from_element(1, 1.0), &DVector::from_element(1, 1.0))
}

#[derive(Clone, Debug)]
pub struct ScalarDemo {
    pub initial: LinearModel<f64>,
    pub identified: LinearModel<f64>,
    pub d_to_similar: f64,
    pub complete: bool,
}

pub fn scalar_demo() -> Result<ScalarDemo> {
    let mut id = Identifier::new(&scalar_similar_data(), RankPolicy::default())?;
    let initial = id.model().clone();
    let report = id.push(&scalar_true_snapshot())?;
    Ok(ScalarDemo {
        initial,
        identified: report.model,
        d_to_similar: report.d_to_similar,
        complete: report.complete,
    })
}

impl fmt::Display for ScalarDemo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "similar data S = [[1, 0], [0, 1], [0.7, 0.7]]")?;
        writeln!(
            f,
            "step 0: (A, B) = ({:.4}, {:.4})",
            self.initial.a()[(0, 0)],
            self.initial.b()[(0, 0)]
        )?;
        writeln!(f, "observe h_1 = [1; 1; 1]")?;
        writeln!(
            f,
            "step 1: (A, B) = ({:.4}, {:.4}), d(S, H_1) = {:.6}, complete = {}",
            self.identified.a()[(0, 0)],
            self.identified.b()[(0, 0)],
            self.d_to_similar,
            self.complete
        )
    }
}

#[allow(clippy::approx_constant)]
pub mod plant3 {
    //! Data for the 3-state pole-placement study.

    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex;

    pub fn a_true() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.01, 0.01, 0.0, 0.01, 1.01, 0.01, 0.0, 0.01, 1.01])
    }

    pub fn b_true() -> DMatrix<f64> {
        DMatrix::identity(3, 3)
    }

    pub fn a_similar() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[0.0560, -0.2909, 0.1998, -1.0053, 0.2756, -0.4477, 0.1049, 0.3415, 1.5790],
        )
    }

    pub fn b_similar() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[0.6828, 0.1730, 0.1366, -0.0453, 1.6228, 0.0700, -0.1402, 0.1571, 0.6139],
        )
    }

    /// Published estimate after four snapshots.
    pub fn a_identified() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[0.7857, 0.1184, -0.5471, -0.3831, 1.0674, -1.0759, 0.0984, 0.3010, 1.5753],
        )
    }

    pub fn b_identified() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[1.1150, 0.1123, -0.4416, 0.0717, 1.0648, -0.7718, 0.2814, 0.2876, 1.1888],
        )
    }

    pub fn k_identified() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[0.3218, -0.0667, -0.1242, -0.3204, 1.4221, -0.4062, 0.0841, -0.0751, 0.8219],
        )
    }

    pub fn k_similar() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[-0.5301, -0.6005, 0.0865, -0.6435, 0.4480, -0.3363, 0.2145, 0.3045, 1.4562],
        )
    }

    pub fn states() -> Vec<DVector<f64>> {
        [
            [1.0, -1.0, -1.0],
            [2.0, -0.01, -0.02],
            [1.0199, 1.0097, -1.0203],
            [2.0402, 0.0198, -0.0204],
            [3.0608, -0.9598, -1.0204],
        ]
        .iter()
        .map(|x| DVector::from_row_slice(x))
        .collect()
    }

    /// The second input is `[-1, 1, -1]`: that is the value the recorded
    /// states were generated with.
    pub fn inputs() -> Vec<DVector<f64>> {
        [[1.0, 1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [1.0, -1.0, -1.0]]
            .iter()
            .map(|u| DVector::from_row_slice(u))
            .collect()
    }

    pub fn targets() -> Vec<Complex<f64>> {
        [-0.5, 0.5, 0.75].iter().map(|&r| Complex::new(r, 0.0)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PolePlaceDemo {
    pub truth: LinearModel<f64>,
    pub similar: LinearModel<f64>,
    pub identified: LinearModel<f64>,
    pub steps: usize,
    pub similar_gap: f64,
    pub identified_gap: f64,
    pub gain: FeedbackGain<f64>,
    pub truth_gain: FeedbackGain<f64>,
    pub gain_gap: f64,
    /// Eigenvalues of `A_i − B_i K` on the identified model.
    pub placed_eigs: Vec<Complex<f64>>,
    /// Eigenvalues of `A_T − B_T K` on the true plant.
    pub truth_eigs: Vec<Complex<f64>>,
    pub published_k_identified_eigs: Vec<Complex<f64>>,
    pub published_k_similar_eigs: Vec<Complex<f64>>,
    pub similar_gain_truth_eigs: Vec<Complex<f64>>,
}

pub fn poleplace_demo() -> Result<PolePlaceDemo> {
    let truth = LinearModel::new(plant3::a_true(), plant3::b_true(), Provenance::Truth)?;
    let similar = LinearModel::new(plant3::a_similar(), plant3::b_similar(), Provenance::Similar)?;
    let data = Trajectory::new(3, 3, plant3::states(), plant3::inputs())?;

    let mut id = Identifier::from_similar_model(&similar, RankPolicy::default())?;
    for h in data.snapshots() {
        id.push(&h)?;
    }
    let identified = id.model().clone();
    let targets = plant3::targets();

    let gain = pole_place(&identified, &targets)?;
    let truth_gain = pole_place(&truth, &targets)?;
    let similar_gain = pole_place(&similar, &targets)?;
    Ok(PolePlaceDemo {
        similar_gap: similar.frobenius_distance(&truth)?,
        identified_gap: identified.frobenius_distance(&truth)?,
        gain_gap: (gain.matrix() - truth_gain.matrix()).norm(),
        placed_eigs: closed_loop_eigs(&identified, &gain)?,
        truth_eigs: closed_loop_eigs(&truth, &gain)?,
        published_k_identified_eigs: closed_loop_eigs(&truth, &FeedbackGain::new(plant3::k_identified())?)?,
        published_k_similar_eigs: closed_loop_eigs(&truth, &FeedbackGain::new(plant3::k_similar())?)?,
        similar_gain_truth_eigs: closed_loop_eigs(&truth, &similar_gain)?,
        steps: id.step(),
        truth,
        similar,
        identified,
        gain,
        truth_gain,
    })
}

fn write_matrix(f: &mut fmt::Formatter<'_>, name: &str, m: &DMatrix<f64>) -> fmt::Result {
    writeln!(f, "{name} =")?;
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>9.4}")).collect();
        writeln!(f, "  [{}]", cells.join(" "))?;
    }
    Ok(())
}

fn fmt_eigs(eigs: &[Complex<f64>]) -> String {
    let parts: Vec<String> = eigs
        .iter()
        .map(|z| {
            if z.im.abs() < 1e-12 {
                format!("{:.4}", z.re)
            } else {
                format!("{:.4}{:+.4}i", z.re, z.im)
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn radius(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl fmt::Display for PolePlaceDemo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "||[A_S B_S] - [A_T B_T]||_F = {:.6}", self.similar_gap)?;
        writeln!(f, "identified after {} snapshots:", self.steps)?;
        write_matrix(f, "A_i", self.identified.a())?;
        write_matrix(f, "B_i", self.identified.b())?;
        writeln!(f, "||[A_i B_i] - [A_T B_T]||_F = {:.6}", self.identified_gap)?;
        write_matrix(f, "K (placed on identified model)", self.gain.matrix())?;
        writeln!(f, "eig(A_i - B_i K) = {}", fmt_eigs(&self.placed_eigs))?;
        writeln!(
            f,
            "eig(A_T - B_T K) = {}  spectral radius {:.4}",
            fmt_eigs(&self.truth_eigs),
            radius(&self.truth_eigs)
        )?;
        writeln!(f, "||K - K_T||_F = {:.4}", self.gain_gap)?;
        writeln!(
            f,
            "published K_i on true plant: {}  spectral radius {:.4}",
            fmt_eigs(&self.published_k_identified_eigs),
            radius(&self.published_k_identified_eigs)
        )?;
        writeln!(
            f,
            "published K_S on true plant: {}  spectral radius {:.4}",
            fmt_eigs(&self.published_k_similar_eigs),
            radius(&self.published_k_similar_eigs)
        )?;
        let unstable = radius(&self.similar_gain_truth_eigs) > 1.0;
        writeln!(
            f,
            "similar-model controller on true plant: {}  ({})",
            fmt_eigs(&self.similar_gain_truth_eigs),
            if unstable { "unstable" } else { "stable" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_walkthrough() {
        let d = scalar_demo().unwrap();
        assert!((d.initial.a()[(0, 0)] - 0.7).abs() < 1e-12);
        assert!((d.identified.a()[(0, 0)] - 0.5).abs() < 1e-9);
        assert!((d.identified.b()[(0, 0)] - 0.5).abs() < 1e-9);
        assert!(!d.complete);
    }

    #[test]
    fn recorded_states_follow_the_true_plant() {
        let truth = LinearModel::new(plant3::a_true(), plant3::b_true(), Provenance::Truth).unwrap();
        let xs = plant3::states();
        for (k, u) in plant3::inputs().iter().enumerate() {
            assert!((truth.step(&xs[k], u) - &xs[k + 1]).amax() < 1e-3);
        }
    }

    #[test]
    fn poleplace_report_matches_published_values() {
        let d = poleplace_demo().unwrap();
        assert!((d.similar_gap - 2.0006).abs() < 1e-3);
        assert!((d.identified_gap - 1.7708).abs() < 1e-3);
        assert!((d.identified.a() - plant3::a_identified()).amax() < 1e-3);
        assert!((d.identified.b() - plant3::b_identified()).amax() < 1e-3);
        assert!(radius(&d.published_k_similar_eigs) > 1.0);
        let text = d.to_string();
        assert!(text.contains("unstable"));
    }
}
