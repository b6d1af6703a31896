//! Dense SVD-based primitives: sorted thin SVD, numerical rank, orthonormal
//! range and kernel bases, pseudo-inverse and 2-norm condition number.

use nalgebra::{DMatrix, SVD};

use crate::scalar::Scalar;
use crate::subspace::RankPolicy;

/// Thin SVD with singular values sorted in descending order.
#[derive(Clone, Debug)]
pub struct SortedSvd<T: Scalar> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: DMatrix<T>,
}

pub fn svd<T: Scalar>(m: &DMatrix<T>) -> SortedSvd<T> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return SortedSvd {
            u: DMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        };
    }
    let (u, sv, v) = T::thin_svd(m).unwrap_or_else(|| {
        let dec = SVD::new(m.clone(), true, true);
        let v = dec.v_t.expect("v requested").transpose();
        (dec.u.expect("u requested"), dec.singular_values.iter().copied().collect(), v)
    });

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));

    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    let singular_values = order.iter().map(|&k| sv[k]).collect();
    SortedSvd {
        u,
        singular_values,
        v,
    }
}

/// Count of singular values above `tol * sigma_max * max(rows, cols)`.
pub fn rank_of<T: Scalar>(singular: &[T], rows: usize, cols: usize, policy: &RankPolicy<T>) -> usize {
    let Some(&sigma_max) = singular.first() else {
        return 0;
    };
    if sigma_max <= T::zero() {
        return 0;
    }
    let cutoff = policy.threshold(sigma_max, rows, cols);
    singular.iter().take_while(|&&s| s > cutoff).count()
}

pub fn rank<T: Scalar>(m: &DMatrix<T>, policy: &RankPolicy<T>) -> usize {
    let dec = svd(m);
    rank_of(&dec.singular_values, m.nrows(), m.ncols(), policy)
}

/// Orthonormal basis of the column space.
pub fn orth<T: Scalar>(m: &DMatrix<T>, policy: &RankPolicy<T>) -> DMatrix<T> {
    let dec = svd(m);
    let r = rank_of(&dec.singular_values, m.nrows(), m.ncols(), policy);
    dec.u.columns(0, r).into_owned()
}

/// Orthonormal basis of the right kernel `{v : m v = 0}`.
///
/// Wide inputs are padded with zero rows so that the SVD returns a complete
/// set of right singular vectors; the rank cutoff still uses the original shape.
pub fn kernel<T: Scalar>(m: &DMatrix<T>, policy: &RankPolicy<T>) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.rows_mut(0, rows).copy_from(m);
        p
    } else {
        m.clone()
    };
    let dec = svd(&padded);
    let r = rank_of(&dec.singular_values, rows, cols, policy);
    dec.v.columns(r, cols - r).into_owned()
}

/// Moore-Penrose pseudo-inverse, truncated at the policy's numerical rank.
pub fn pinv<T: Scalar>(m: &DMatrix<T>, policy: &RankPolicy<T>) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    let dec = svd(m);
    let r = rank_of(&dec.singular_values, rows, cols, policy);
    let mut out = DMatrix::zeros(cols, rows);
    for k in 0..r {
        let inv = T::one() / dec.singular_values[k];
        let vk = dec.v.column(k);
        let uk = dec.u.column(k);
        out += (vk * uk.transpose()) * inv;
    }
    out
}

/// 2-norm condition number; infinite for rank-deficient or empty input.
pub fn cond2<T: Scalar>(m: &DMatrix<T>) -> T {
    let s = svd(m).singular_values;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::lit(f64::INFINITY),
    }
}

/// Horizontal concatenation of matrices that share a row count.
pub fn hcat<T: Scalar>(rows: usize, blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation of matrices that share a column count.
pub fn vcat<T: Scalar>(cols: usize, blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.rows_mut(at, b.nrows()).copy_from(*b);
        at += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.25]);
        let dec = svd(&m);
        assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(dec.singular_values.clone()));
        let back = &dec.u * s * dec.v.transpose();
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let p = RankPolicy::default();
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let k = kernel(&m, &p);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-12);
        assert!((k.transpose() * &k - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn kernel_of_empty_rows_is_everything() {
        let p = RankPolicy::<f64>::default();
        assert_eq!(kernel(&DMatrix::zeros(0, 4), &p).ncols(), 4);
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let p = RankPolicy::default();
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let inv = pinv(&m, &p);
        assert!((&m * inv - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn cond_of_singular_is_huge() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cond2(&m) > 1e12);
    }
}
