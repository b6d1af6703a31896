//! Grassmannian geometry on orthonormal bases.
//!
//! A [`Subspace`] always stores an orthonormal basis (`QᵀQ = I`). Every
//! construction goes through an SVD whose numerical rank is decided by a
//! [`RankPolicy`], so dimension counts are reproducible across scalings of the
//! generating data.
//!
//! Principal angles follow the usual SVD characterisation: the cosines are the
//! singular values of `Q_aᵀ Q_b`, and the distance between two subspaces is the
//! largest of those angles.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Relative singular-value threshold used to decide numerical rank.
///
/// A singular value `σ` of a `rows × cols` matrix counts toward the rank iff
/// `σ > relative_tolerance · σ_max · max(rows, cols)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankPolicy<T> {
    relative_tolerance: T,
}

impl<T: Scalar> RankPolicy<T> {
    pub fn new(relative_tolerance: T) -> Result<Self> {
        if relative_tolerance.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
            return Err(Error::InvalidArgument(format!(
                "rank tolerance must be positive, got {relative_tolerance}"
            )));
        }
        Ok(Self { relative_tolerance })
    }

    pub fn relative_tolerance(&self) -> T {
        self.relative_tolerance
    }

    pub(crate) fn threshold(&self, sigma_max: T, rows: usize, cols: usize) -> T {
        self.relative_tolerance * sigma_max * T::from_usize_lossy(rows.max(cols))
    }
}

impl<T: Scalar> Default for RankPolicy<T> {
    fn default() -> Self {
        Self {
            relative_tolerance: T::lit(T::DEFAULT_RANK_TOL),
        }
    }
}

/// A linear subspace of `R^M` held as an `M × k` orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T: Scalar> {
    basis: DMatrix<T>,
}

impl<T: Scalar> Subspace<T> {
    /// Column space of `matrix`. A matrix with no columns spans `{0}`.
    pub fn span(matrix: &DMatrix<T>, policy: &RankPolicy<T>) -> Self {
        Self {
            basis: linalg::orth(matrix, policy),
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// Orthogonal projector `Q Qᵀ`.
    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.transpose()
    }

    /// Distance from `v` to this subspace, `‖v − QQᵀv‖₂`.
    pub fn residual(&self, v: &DVector<T>) -> T {
        let coeffs = self.basis.transpose() * v;
        (v - &self.basis * coeffs).norm()
    }

    /// Largest residual of the columns of `other` with respect to `self`.
    pub fn max_residual_of(&self, other: &Subspace<T>) -> T {
        other
            .basis
            .column_iter()
            .map(|c| self.residual(&c.into_owned()))
            .fold(T::zero(), |acc, r| acc.max(r))
    }

    /// Orthogonal complement (left kernel of the basis) in `R^M`.
    pub fn left_kernel(&self, policy: &RankPolicy<T>) -> Self {
        let m = self.ambient_dim();
        if self.dim() == 0 {
            return Self::full(m);
        }
        Self {
            basis: linalg::kernel(&self.basis.transpose(), policy),
        }
    }

    pub fn sum(&self, other: &Subspace<T>, policy: &RankPolicy<T>) -> Result<Self> {
        self.check_ambient(other, "subspace sum")?;
        let m = self.ambient_dim();
        let stacked = linalg::hcat(m, &[&self.basis, &other.basis]);
        Ok(Self::span(&stacked, policy))
    }

    /// `self ∩ other`, computed as the kernel of the stacked complement bases
    /// `[self⊥ᵀ; other⊥ᵀ]`.
    pub fn intersect(&self, other: &Subspace<T>, policy: &RankPolicy<T>) -> Result<Self> {
        self.check_ambient(other, "subspace intersection")?;
        let m = self.ambient_dim();
        let a_perp = self.left_kernel(policy);
        let b_perp = other.left_kernel(policy);
        let stacked = linalg::vcat(
            m,
            &[&a_perp.basis.transpose(), &b_perp.basis.transpose()],
        );
        Ok(Self {
            basis: linalg::kernel(&stacked, policy),
        })
    }

    fn check_ambient(&self, other: &Subspace<T>, context: &'static str) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::dims(context, self.ambient_dim(), other.ambient_dim()));
        }
        Ok(())
    }
}

/// Principal angles and vectors of a pair of subspaces.
#[derive(Clone, Debug)]
pub struct PrincipalDecomposition<T: Scalar> {
    /// Ascending angles in `[0, π/2]`, `q = min(dim a, dim b)` of them.
    pub angles: Vec<T>,
    /// Cosines of `angles` (descending singular values of `Q_aᵀQ_b`), clamped to `[0, 1]`.
    pub cosines: Vec<T>,
    /// `M × q` principal vectors in the first subspace.
    pub left_vectors: DMatrix<T>,
    /// `M × q` principal vectors in the second subspace.
    pub right_vectors: DMatrix<T>,
}

fn clamp_unit<T: Scalar>(c: T) -> T {
    let c = c.max(T::zero()).min(T::one());
    debug_assert!(c >= T::zero() && c <= T::one());
    c
}

pub fn principal_decomposition<T: Scalar>(
    a: &Subspace<T>,
    b: &Subspace<T>,
) -> Result<PrincipalDecomposition<T>> {
    a.check_ambient(b, "principal angles")?;
    if a.dim() == 0 || b.dim() == 0 {
        return Err(Error::ZeroDimensional {
            context: "principal angles",
        });
    }
    let q = a.dim().min(b.dim());
    let cross = a.basis.transpose() * &b.basis;
    let dec = linalg::svd(&cross);
    let cosines: Vec<T> = dec.singular_values[..q].iter().map(|&s| clamp_unit(s)).collect();
    let left_vectors = &a.basis * dec.u.columns(0, q);
    let right_vectors = &b.basis * dec.v.columns(0, q);
    // Sines come from the residual of each right principal vector against `a`;
    // atan2 keeps small angles accurate where acos(cos) loses half the digits.
    let angles = right_vectors
        .column_iter()
        .zip(&cosines)
        .map(|(y, &c)| a.residual(&y.into_owned()).min(T::one()).atan2(c))
        .scan(T::zero(), |floor, t: T| {
            *floor = floor.max(t);
            Some(*floor)
        })
        .collect();
    Ok(PrincipalDecomposition {
        angles,
        cosines,
        left_vectors,
        right_vectors,
    })
}

/// Maximal principal angle between `a` and `b`, taken over `min(dim a, dim b)` angles.
pub fn distance<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>) -> Result<T> {
    let dec = principal_decomposition(a, b)?;
    Ok(*dec.angles.last().expect("at least one angle"))
}

/// True iff `a ∩ b⊥ ≠ {0}` or `b ∩ a⊥ ≠ {0}`.
///
/// With equal dimensions this is the same as some principal angle having
/// cosine at most `tol`. With unequal dimensions the larger subspace always
/// meets the complement of the smaller one.
pub fn is_partially_orthogonal<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>, tol: T) -> Result<bool> {
    a.check_ambient(b, "partial orthogonality")?;
    if a.dim() != b.dim() {
        return Ok(true);
    }
    if a.dim() == 0 {
        return Ok(false);
    }
    let dec = principal_decomposition(a, b)?;
    Ok(dec.cosines.iter().any(|&c| c <= tol))
}

/// Principal-vector bases `(Q_a U, Q_b V)` of two equal-dimensional subspaces.
///
/// Column `j` of the two outputs form the `j`-th principal pair, with
/// nonnegative inner product.
pub fn aligned_bases<T: Scalar>(a: &Subspace<T>, b: &Subspace<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    a.check_ambient(b, "aligned bases")?;
    if a.dim() != b.dim() {
        return Err(Error::dims("aligned bases", a.dim(), b.dim()));
    }
    if a.dim() == 0 {
        return Err(Error::ZeroDimensional {
            context: "aligned bases",
        });
    }
    let dec = principal_decomposition(a, b)?;
    let mut left = dec.left_vectors;
    let right = dec.right_vectors;
    for j in 0..left.ncols() {
        if left.column(j).dot(&right.column(j)) < T::zero() {
            left.column_mut(j).neg_mut();
        }
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn p() -> RankPolicy<f64> {
        RankPolicy::default()
    }

    fn scalar_s() -> Subspace<f64> {
        Subspace::span(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.7, 0.7]), &p())
    }

    fn orthonormality_error(s: &Subspace<f64>) -> f64 {
        (s.basis().transpose() * s.basis() - DMatrix::identity(s.dim(), s.dim())).amax()
    }

    #[test]
    fn rank_policy_rejects_nonpositive() {
        assert!(RankPolicy::new(0.0).is_err());
        assert!(RankPolicy::new(-1e-3).is_err());
        assert!(RankPolicy::new(1e-12).is_ok());
    }

    #[test]
    fn span_identity_and_repeated_column() {
        let s = Subspace::span(&DMatrix::<f64>::identity(3, 3), &p());
        assert_eq!(s.dim(), 3);
        assert!(orthonormality_error(&s) < 1e-10);

        let s = Subspace::span(&mat(3, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]), &p());
        assert_eq!(s.dim(), 1);
        let v = s.basis().column(0);
        let expected = 1.0 / 3f64.sqrt();
        for k in 0..3 {
            assert!((v[k].abs() - expected).abs() < 1e-12);
        }
        assert!(v[0] * v[1] > 0.0 && v[1] * v[2] > 0.0);
    }

    #[test]
    fn span_of_empty_matrix_is_zero_space() {
        let s = Subspace::span(&DMatrix::<f64>::zeros(4, 0), &p());
        assert_eq!(s.dim(), 0);
        assert_eq!(s.ambient_dim(), 4);
    }

    #[test]
    fn scalar_similar_data_is_two_dimensional() {
        assert_eq!(scalar_s().dim(), 2);
    }

    #[test]
    fn left_kernel_examples() {
        assert_eq!(Subspace::<f64>::full(3).left_kernel(&p()).dim(), 0);

        let e1 = Subspace::span(&mat(3, 1, &[1.0, 0.0, 0.0]), &p());
        let k = e1.left_kernel(&p());
        assert_eq!(k.dim(), 2);
        assert!(k.basis().row(0).amax() < 1e-12);

        let s_raw = mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.7, 0.7]);
        let k = scalar_s().left_kernel(&p());
        assert_eq!(k.dim(), 1);
        let v = k.basis().column(0).into_owned();
        assert!((v.transpose() * &s_raw).amax() < 1e-10);
        let expected = DVector::from_vec(vec![-0.7, -0.7, 1.0]).normalize();
        assert!((v.dot(&expected).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sum_examples() {
        let e1 = Subspace::span(&mat(3, 1, &[1.0, 0.0, 0.0]), &p());
        let e2 = Subspace::span(&mat(3, 1, &[0.0, 1.0, 0.0]), &p());
        assert_eq!(e1.sum(&Subspace::zero(3), &p()).unwrap().dim(), 1);
        let both = e1.sum(&e2, &p()).unwrap();
        assert_eq!(both.dim(), 2);
        assert!(both.max_residual_of(&e1) < 1e-9 && both.max_residual_of(&e2) < 1e-9);

        let t1 = Subspace::span(&mat(3, 1, &[1.0, 1.0, 1.0]), &p());
        let perp_cap_s = t1.left_kernel(&p()).intersect(&scalar_s(), &p()).unwrap();
        let h1 = t1.sum(&perp_cap_s, &p()).unwrap();
        let expected = Subspace::span(&mat(3, 2, &[1.0, 1.0, 1.0, -1.0, 1.0, 0.0]), &p());
        assert_eq!(h1.dim(), 2);
        assert!(distance(&h1, &expected).unwrap() < 1e-9);
    }

    #[test]
    fn sum_rejects_ambient_mismatch() {
        let a = Subspace::<f64>::full(3);
        let b = Subspace::<f64>::full(4);
        assert!(matches!(a.sum(&b, &p()), Err(Error::DimensionMismatch { .. })));
        assert!(a.intersect(&b, &p()).is_err());
    }

    #[test]
    fn intersect_examples() {
        let s = scalar_s();
        let same = s.intersect(&s, &p()).unwrap();
        assert_eq!(same.dim(), 2);
        assert!(distance(&same, &s).unwrap() < 1e-9);

        let t1 = Subspace::span(&mat(3, 1, &[1.0, 1.0, 1.0]), &p());
        let cap = t1.left_kernel(&p()).intersect(&s, &p()).unwrap();
        assert_eq!(cap.dim(), 1);
        let v = cap.basis().column(0).into_owned();
        let expected = DVector::from_vec(vec![1.0, -1.0, 0.0]).normalize();
        assert!((v.dot(&expected).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_planes_in_r3_meet_in_a_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a_raw = gaussian(3, 2, &mut rng);
            let b_raw = gaussian(3, 2, &mut rng);
            let a = Subspace::span(&a_raw, &p());
            let b = Subspace::span(&b_raw, &p());
            let cap = a.intersect(&b, &p()).unwrap();
            assert_eq!(cap.dim(), 1);
            // least-squares membership of the direction in each generator
            let v = cap.basis().column(0).into_owned();
            for raw in [&a_raw, &b_raw] {
                let coeffs = raw.clone().svd(true, true).solve(&v, 1e-14).unwrap();
                assert!((raw * coeffs - &v).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn principal_angles_basic() {
        let s = scalar_s();
        let dec = principal_decomposition(&s, &s).unwrap();
        assert!(dec.angles.iter().all(|&t| t.abs() < 1e-12));

        let e1 = Subspace::span(&mat(3, 1, &[1.0, 0.0, 0.0]), &p());
        let e2 = Subspace::span(&mat(3, 1, &[0.0, 1.0, 0.0]), &p());
        let dec = principal_decomposition(&e1, &e2).unwrap();
        assert!((dec.angles[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(matches!(
            principal_decomposition(&e1, &Subspace::zero(3)),
            Err(Error::ZeroDimensional { .. })
        ));
        assert!(distance(&Subspace::zero(3), &e1).is_err());
    }

    #[test]
    fn principal_decomposition_invariants_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let a = Subspace::span(&gaussian(7, 3, &mut rng), &p());
            let b = Subspace::span(&gaussian(7, 4, &mut rng), &p());
            let dec = principal_decomposition(&a, &b).unwrap();
            assert_eq!(dec.angles.len(), 3);
            assert!(dec.angles.windows(2).all(|w| w[0] <= w[1]));
            let sv = (a.basis().transpose() * b.basis()).singular_values();
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
            for (c, s) in dec.cosines.iter().zip(&sv) {
                assert!((c - s).abs() < 1e-12);
            }
            let ident = DMatrix::<f64>::identity(3, 3);
            assert!((dec.left_vectors.transpose() * &dec.left_vectors - &ident).amax() < 1e-10);
            assert!((dec.right_vectors.transpose() * &dec.right_vectors - &ident).amax() < 1e-10);
            assert_eq!(distance(&a, &b).unwrap(), *dec.angles.last().unwrap());
        }
    }

    #[test]
    fn distance_examples_from_informative_scalar_data() {
        let d0 = Subspace::span(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]), &p());
        let d1 = Subspace::span(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0149, 1.0619]), &p());
        let d2 = Subspace::span(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0268, 1.0633]), &p());
        assert!(distance(&d0, &d0).unwrap() < 1e-12);
        let d01 = distance(&d0, &d1).unwrap();
        let d02 = distance(&d0, &d2).unwrap();
        assert!((d01 - 0.0257).abs() < 1e-3, "{d01}");
        assert!((d02 - 0.0252).abs() < 1e-3, "{d02}");
        assert!(d01 > d02);
    }

    #[test]
    fn partial_orthogonality_examples() {
        let tol = f64::DEFAULT_ORTHOGONALITY_TOL;
        let e1 = Subspace::span(&mat(3, 1, &[1.0, 0.0, 0.0]), &p());
        let e2 = Subspace::span(&mat(3, 1, &[0.0, 1.0, 0.0]), &p());
        assert!(is_partially_orthogonal(&e1, &e2, tol).unwrap());

        let s = Subspace::span(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]), &p());
        let t = Subspace::span(&mat(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0]), &p());
        assert!(is_partially_orthogonal(&s, &t, tol).unwrap());
        // equivalent characterisation via intersections
        assert!(s.intersect(&t.left_kernel(&p()), &p()).unwrap().dim() > 0);
    }

    #[test]
    fn random_equal_dim_pairs_are_not_partially_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = 0;
        for _ in 0..1000 {
            let a = Subspace::span(&gaussian(7, 4, &mut rng), &p());
            let b = Subspace::span(&gaussian(7, 4, &mut rng), &p());
            if is_partially_orthogonal(&a, &b, f64::DEFAULT_ORTHOGONALITY_TOL).unwrap() {
                hits += 1;
            }
        }
        assert_eq!(hits, 0);
    }

    #[test]
    fn aligned_bases_identity_and_half_angle_formula() {
        let s = scalar_s();
        let (x, y) = aligned_bases(&s, &s).unwrap();
        assert!((x - y).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let a = Subspace::span(&gaussian(8, 3, &mut rng), &p());
            let b = Subspace::span(&gaussian(8, 3, &mut rng), &p());
            let (x, y) = aligned_bases(&a, &b).unwrap();
            let dec = principal_decomposition(&a, &b).unwrap();
            let half: f64 = dec.angles.iter().map(|t| (t / 2.0).sin().powi(2)).sum();
            assert!(((&x - &y).norm() - 2.0 * half.sqrt()).abs() < 1e-10);
            let d = distance(&a, &b).unwrap();
            assert!((&x - &y).norm() <= 2.0 * 3f64.sqrt() * (d / 2.0).sin() + 1e-12);
            // columns span the original subspaces
            assert!(a.max_residual_of(&Subspace::span(&x, &p())) < 1e-10);
            assert!(b.max_residual_of(&Subspace::span(&y, &p())) < 1e-10);
        }
    }

    #[test]
    fn aligned_bases_reject_unequal_dims() {
        let a = Subspace::<f64>::full(3);
        let b = Subspace::span(&mat(3, 1, &[1.0, 0.0, 0.0]), &p());
        assert!(matches!(aligned_bases(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let p32 = RankPolicy::<f32>::default();
        let s = Subspace::span(
            &DMatrix::from_row_slice(3, 2, &[1.0f32, 0.0, 0.0, 1.0, 0.7, 0.7]),
            &p32,
        );
        assert_eq!(s.dim(), 2);
        assert_eq!(s.left_kernel(&p32).dim(), 1);
    }
}
