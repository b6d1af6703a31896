//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the identification kernel is generic over.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale with the
/// precision of the type; `f64` is the reference configuration.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Send + Sync + 'static
{
    /// Default relative singular-value cutoff for numerical rank.
    const DEFAULT_RANK_TOL: f64;
    /// Default cosine threshold below which a principal angle counts as π/2.
    const DEFAULT_ORTHOGONALITY_TOL: f64;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits the scalar range")
    }

    /// Thin SVD `(U, σ, V)` of a nonempty matrix; `None` if the backend fails.
    fn thin_svd(m: &DMatrix<Self>) -> Option<(DMatrix<Self>, Vec<Self>, DMatrix<Self>)>;
}

macro_rules! faer_thin_svd {
    ($t:ty) => {
        fn thin_svd(m: &DMatrix<$t>) -> Option<(DMatrix<$t>, Vec<$t>, DMatrix<$t>)> {
            let (rows, cols) = m.shape();
            let fm = faer::Mat::<$t>::from_fn(rows, cols, |i, j| m[(i, j)]);
            let svd = fm.thin_svd().ok()?;
            let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
            let k = s.nrows();
            Some((
                DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
                (0..k).map(|i| s[i]).collect(),
                DMatrix::from_fn(cols, k, |i, j| v[(i, j)]),
            ))
        }
    };
}

impl Scalar for f64 {
    const DEFAULT_RANK_TOL: f64 = 1e-10;
    const DEFAULT_ORTHOGONALITY_TOL: f64 = 1e-8;
    faer_thin_svd!(f64);
}

impl Scalar for f32 {
    const DEFAULT_RANK_TOL: f64 = 1e-5;
    const DEFAULT_ORTHOGONALITY_TOL: f64 = 1e-4;
    faer_thin_svd!(f32);
}
