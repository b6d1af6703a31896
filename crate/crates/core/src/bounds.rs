//! Diagnostic error bounds for validation runs where the true (or similar)
//! system is known.
//!
//! Two subspaces of equal dimension `Λ` are compared through their
//! principal-vector bases `(T̂, Ĥ)`. The Frobenius gap between those bases is
//! bounded by `2√(Λ−r)·sin(d/2)` on the truth side and `2√r·sin(d/2)` on the
//! similar side, `r = dim T_i`. Feeding the row blocks of the aligned bases
//! through a linear-system perturbation argument gives relative bounds on the
//! parameter error of the identified model.
//!
//! None of this is used on the identification path.

use nalgebra::DMatrix;

use crate::datamat::Snapshot;
use crate::engine::LinearModel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::subspace::{aligned_bases, distance, Subspace};

/// Block norms of the aligned bases of `(reference, h_space)`.
#[derive(Clone, Copy, Debug)]
pub struct PartitionDeltas<T> {
    /// `‖[δX̂⁻; δÛ⁻]‖_F`.
    pub n1: T,
    /// `‖δX̂⁺‖_F`.
    pub n2: T,
    /// `‖[X̂_ref⁻; Û_ref⁻]‖_F`.
    pub nu1: T,
    /// `‖X̂_h⁺‖_F`.
    pub nu2: T,
    /// `‖Ĥ − T̂‖_F`.
    pub total: T,
    /// `κ₂([X̂_ref⁻; Û_ref⁻])`.
    pub kappa_reference: T,
}

pub fn aligned_partition_deltas<T: Scalar>(
    reference: &Subspace<T>,
    h_space: &Subspace<T>,
    n: usize,
    m: usize,
) -> Result<PartitionDeltas<T>> {
    let lambda = n + m;
    for s in [reference, h_space] {
        if s.ambient_dim() != 2 * n + m {
            return Err(Error::dims("bound subspace ambient dimension", 2 * n + m, s.ambient_dim()));
        }
        if s.dim() != lambda {
            return Err(Error::dims("bound subspace dimension", lambda, s.dim()));
        }
    }
    let (ref_hat, h_hat) = aligned_bases(reference, h_space)?;
    let delta: DMatrix<T> = &h_hat - &ref_hat;
    let ref_top = ref_hat.rows(0, lambda).into_owned();
    Ok(PartitionDeltas {
        n1: delta.rows(0, lambda).norm(),
        n2: delta.rows(lambda, n).norm(),
        nu1: ref_top.norm(),
        nu2: h_hat.rows(lambda, n).norm(),
        total: delta.norm(),
        kappa_reference: linalg::cond2(&ref_top),
    })
}

fn check_angle<T: Scalar>(d: T) -> Result<()> {
    if !(d >= T::zero() && d <= T::frac_pi_2()) {
        return Err(Error::InvalidArgument(format!("subspace distance {d} outside [0, π/2]")));
    }
    Ok(())
}

/// Truth-side bound `2√(Λ−i)·sin(d/2)` on the aligned-basis gap.
pub fn lemma6_bound<T: Scalar>(i: usize, lambda: usize, d: T) -> Result<T> {
    if i > lambda {
        return Err(Error::InvalidArgument(format!("step rank {i} exceeds Λ = {lambda}")));
    }
    check_angle(d)?;
    Ok(T::lit(2.0) * T::from_usize_lossy(lambda - i).sqrt() * (d / T::lit(2.0)).sin())
}

/// Similar-side bound `2√i·sin(d/2)`.
pub fn lemma6_bound_similar<T: Scalar>(i: usize, d: T) -> Result<T> {
    check_angle(d)?;
    Ok(T::lit(2.0) * T::from_usize_lossy(i).sqrt() * (d / T::lit(2.0)).sin())
}

/// `‖h_b‖₂`, the norm of the last `n` entries of `h₁/‖h₁‖`.
pub fn hb_norm<T: Scalar>(h1: &Snapshot<T>) -> Result<T> {
    let v = h1.as_vector();
    let norm = v.norm();
    if norm <= T::zero() {
        return Err(Error::UndefinedBound("first snapshot is zero".into()));
    }
    let hb = v.rows(v.len() - h1.n(), h1.n()).norm() / norm;
    if hb <= T::lit(T::DEFAULT_ORTHOGONALITY_TOL) {
        return Err(Error::UndefinedBound(
            "state part of the first snapshot is numerically zero".into(),
        ));
    }
    Ok(hb)
}

fn relative_gap<T: Scalar>(est: &LinearModel<T>, reference: &LinearModel<T>) -> Result<T> {
    let num = est.frobenius_distance(reference)?;
    let den = est.gain().norm();
    if den <= T::zero() {
        return Ok(if num <= T::zero() { T::zero() } else { T::lit(f64::INFINITY) });
    }
    Ok(num / den)
}

/// `coef · κ · (1/ν + 1/‖h_b‖ + coef/(ν‖h_b‖))`, zero when `coef` is zero.
fn perturbation_rhs<T: Scalar>(coef: T, kappa: T, nu: T, hb: Option<T>) -> Result<T> {
    if coef <= T::zero() {
        return Ok(T::zero());
    }
    let hb = hb.ok_or_else(|| Error::UndefinedBound("no snapshot observed yet".into()))?;
    Ok(coef * kappa * (T::one() / nu + T::one() / hb + coef / (nu * hb)))
}

/// Relative deviation of the estimate from the truth, with its bound.
#[derive(Clone, Copy, Debug)]
pub struct TruthBound<T> {
    pub gamma: T,
    pub d_to_truth: T,
    pub kappa_true: T,
    pub nu1: T,
    pub hb_norm: Option<T>,
    pub deltas: PartitionDeltas<T>,
    /// `‖[δA δB]‖_F / ‖[A_i B_i]‖_F`.
    pub lhs: T,
    pub rhs: T,
}

/// Relative deviation of the estimate from the similar model, with its bound.
#[derive(Clone, Copy, Debug)]
pub struct SimilarBound<T> {
    pub beta: T,
    pub d_to_similar: T,
    pub kappa_similar: T,
    /// `‖[X̃_S⁻; Ũ_S⁻]‖_F` of the similar-side aligned basis.
    pub m1: T,
    pub hb_norm: Option<T>,
    pub deltas: PartitionDeltas<T>,
    /// `‖[ΔA ΔB]‖_F / ‖[A_i B_i]‖_F`.
    pub lhs: T,
    pub rhs: T,
}

/// Truth-side report. `fresh_rank` is `dim T_i`; `h1` is the first observed
/// snapshot (may be `None` only when the bound coefficient vanishes).
pub fn theorem9_report<T: Scalar>(
    truth: &LinearModel<T>,
    est: &LinearModel<T>,
    truth_space: &Subspace<T>,
    h_space: &Subspace<T>,
    h1: Option<&Snapshot<T>>,
    fresh_rank: usize,
) -> Result<TruthBound<T>> {
    let (n, m) = (truth.n(), truth.m());
    let d = distance(truth_space, h_space)?;
    let gamma = lemma6_bound(fresh_rank, n + m, d)?;
    let deltas = aligned_partition_deltas(truth_space, h_space, n, m)?;
    let hb = h1.map(hb_norm).transpose()?;
    let rhs = perturbation_rhs(gamma, deltas.kappa_reference, deltas.nu1, hb)?;
    Ok(TruthBound {
        gamma,
        d_to_truth: d,
        kappa_true: deltas.kappa_reference,
        nu1: deltas.nu1,
        hb_norm: hb,
        deltas,
        lhs: relative_gap(est, truth)?,
        rhs,
    })
}

/// Similar-side report, mirroring [`theorem9_report`].
pub fn theorem10_report<T: Scalar>(
    similar: &LinearModel<T>,
    est: &LinearModel<T>,
    similar_space: &Subspace<T>,
    h_space: &Subspace<T>,
    h1: Option<&Snapshot<T>>,
    fresh_rank: usize,
) -> Result<SimilarBound<T>> {
    let (n, m) = (similar.n(), similar.m());
    let d = distance(similar_space, h_space)?;
    let beta = lemma6_bound_similar(fresh_rank, d)?;
    let deltas = aligned_partition_deltas(similar_space, h_space, n, m)?;
    let hb = h1.map(hb_norm).transpose()?;
    let rhs = perturbation_rhs(beta, deltas.kappa_reference, deltas.nu1, hb)?;
    Ok(SimilarBound {
        beta,
        d_to_similar: d,
        kappa_similar: deltas.kappa_reference,
        m1: deltas.nu1,
        hb_norm: hb,
        deltas,
        lhs: relative_gap(est, similar)?,
        rhs,
    })
}

/// Both reports for one identifier step.
#[derive(Clone, Copy, Debug)]
pub struct BoundReport<T> {
    pub step: usize,
    pub fresh_rank: usize,
    pub truth: TruthBound<T>,
    pub similar: SimilarBound<T>,
}

impl<T: Scalar> BoundReport<T> {
    pub fn gamma(&self) -> T {
        self.truth.gamma
    }

    pub fn beta(&self) -> T {
        self.similar.beta
    }

    pub fn rhs_thm9(&self) -> T {
        self.truth.rhs
    }

    pub fn rhs_thm10(&self) -> T {
        self.similar.rhs
    }

    pub fn lhs_thm9(&self) -> T {
        self.truth.lhs
    }

    pub fn lhs_thm10(&self) -> T {
        self.similar.lhs
    }
}

/// Evaluates both bounds against the identifier's current state.
pub fn report_for<T: Scalar>(
    identifier: &crate::engine::Identifier<T>,
    truth: &LinearModel<T>,
    truth_space: &Subspace<T>,
) -> Result<BoundReport<T>> {
    let h1 = identifier.data_log().iter().find(|h| h.as_vector().norm() > T::zero());
    let est = identifier.model();
    let r = identifier.fresh_rank();
    Ok(BoundReport {
        step: identifier.step(),
        fresh_rank: r,
        truth: theorem9_report(truth, est, truth_space, identifier.current_subspace(), h1, r)?,
        similar: theorem10_report(
            identifier.similar_model(),
            est,
            identifier.similar_space(),
            identifier.current_subspace(),
            h1,
            r,
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Provenance;
    use crate::subspace::RankPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn closed_forms() {
        assert_eq!(lemma6_bound(1, 4, 0.0).unwrap(), 0.0);
        assert_eq!(lemma6_bound(4, 4, 1.2).unwrap(), 0.0);
        assert_eq!(lemma6_bound_similar(0, 1.2).unwrap(), 0.0);
        let v = lemma6_bound(0, 4, 0.5).unwrap();
        assert!((v - 4.0 * 0.25f64.sin()).abs() < 1e-15);
        assert!(lemma6_bound(5, 4, 0.1).is_err());
        assert!(lemma6_bound(1, 4, -0.1).is_err());
        assert!(lemma6_bound_similar(1, 2.0).is_err());
    }

    #[test]
    fn identical_subspaces_have_zero_deltas() {
        let p = RankPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Subspace::span(&gaussian(5, 3, &mut rng), &p);
        let d = aligned_partition_deltas(&s, &s, 2, 1).unwrap();
        assert!(d.n1 < 1e-12 && d.n2 < 1e-12);
    }

    #[test]
    fn random_pairs_respect_block_bounds() {
        let p = RankPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (n, m) = (3, 2);
            let a = Subspace::span(&gaussian(2 * n + m, n + m, &mut rng), &p);
            let b = Subspace::span(&gaussian(2 * n + m, n + m, &mut rng), &p);
            let d = aligned_partition_deltas(&a, &b, n, m).unwrap();
            let dist = distance(&a, &b).unwrap();
            let bound = lemma6_bound(0, n + m, dist).unwrap();
            assert!(d.n1 <= d.total + 1e-12 && d.n2 <= d.total + 1e-12);
            assert!(d.total <= bound + 1e-12);
        }
    }

    #[test]
    fn mismatched_dimensions_error() {
        let p = RankPolicy::default();
        let a = Subspace::<f64>::full(5);
        let b = Subspace::span(&DMatrix::identity(5, 3), &p);
        assert!(aligned_partition_deltas(&a, &b, 2, 1).is_err());
        assert!(aligned_partition_deltas(&b, &b, 3, 1).is_err());
    }

    #[test]
    fn hb_norm_checks() {
        let h = Snapshot::from_vector(1, 1, nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0])).unwrap();
        assert!((hb_norm(&h).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let z = Snapshot::from_vector(1, 1, nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0])).unwrap();
        assert!(matches!(hb_norm(&z), Err(Error::UndefinedBound(_))));
    }

    #[test]
    fn exact_estimate_has_zero_lhs() {
        let p = RankPolicy::default();
        let truth = LinearModel::new(
            DMatrix::from_row_slice(1, 1, &[0.3]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            Provenance::Truth,
        )
        .unwrap();
        let space = truth.behavior_space(&p);
        let h1 = Snapshot::from_vector(1, 1, nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.3])).unwrap();
        let r = theorem9_report(&truth, &truth, &space, &space, Some(&h1), 2).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.gamma, 0.0);
        assert!(r.lhs <= r.rhs);
        let r = theorem10_report(&truth, &truth, &space, &space, None, 0).unwrap();
        assert_eq!((r.lhs, r.rhs, r.beta), (0.0, 0.0, 0.0));
    }
}
