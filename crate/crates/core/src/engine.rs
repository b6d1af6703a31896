//! The incremental transfer identifier.
//!
//! State after `i` snapshots:
//!
//! * `T_i`: span of the true-system snapshots seen so far,
//! * `S_i`: a basis of `T_i⊥ ∩ S`, recomputed each step as the kernel of
//!   `[S⊥; T_iᵀ]`,
//! * `H_i = [T_i  S_i]`, whose row partition `[X⁻; U⁻; X⁺]` yields the unique
//!   consistent model `[A_i B_i] = X⁺ [X⁻; U⁻]†`.
//!
//! Identification is complete once `T_i⊥ ∩ S = {0}`, at which point `H_i`
//! coincides with the true behaviour and the model is exact.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::datamat::{Snapshot, StackedData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::subspace::{distance, RankPolicy, Subspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Similar,
    Step(usize),
    Truth,
    /// Extracted from an arbitrary data basis.
    Estimate,
}

/// A discrete-time pair `x(k+1) = A x(k) + B u(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    provenance: Provenance,
}

impl<T: Scalar> LinearModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, provenance: Provenance) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("square state matrix A", a.nrows(), a.ncols()));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::dims("rows of B", a.nrows(), b.nrows()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("model has non-finite entries".into()));
        }
        Ok(Self { a, b, provenance })
    }

    /// Autonomous model `x(k+1) = A x(k)` (empty `B`).
    pub fn autonomous(a: DMatrix<T>, provenance: Provenance) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::zeros(n, 0), provenance)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// `[A B]`, an `n × (n + m)` matrix.
    pub fn gain(&self) -> DMatrix<T> {
        linalg::hcat(self.n(), &[&self.a, &self.b])
    }

    /// `‖[A B] − [A' B']‖_F`.
    pub fn frobenius_distance(&self, other: &LinearModel<T>) -> Result<T> {
        if (self.n(), self.m()) != (other.n(), other.m()) {
            return Err(Error::dims("model comparison", self.n() + self.m(), other.n() + other.m()));
        }
        Ok((self.gain() - other.gain()).norm())
    }

    pub fn step(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.a * x + &self.b * u
    }

    /// `‖x⁺ − A x − B u‖₂` for one snapshot.
    pub fn snapshot_residual(&self, h: &Snapshot<T>) -> T {
        (h.x_next() - self.step(&h.x_prev(), &h.u_prev())).norm()
    }

    /// The behaviour subspace `Im [I; [A B]]` of dimension `n + m` in `R^{2n+m}`.
    pub fn behavior_space(&self, policy: &RankPolicy<T>) -> Subspace<T> {
        let lambda = self.n() + self.m();
        let graph = linalg::vcat(lambda, &[&DMatrix::identity(lambda, lambda), &self.gain()]);
        Subspace::span(&graph, policy)
    }
}

/// The unique model consistent with the row partition `[X⁻; U⁻; X⁺]` of `h`.
///
/// Requires `rank [X⁻; U⁻] = n + m`.
pub fn extract_model<T: Scalar>(h: &DMatrix<T>, n: usize, m: usize, policy: &RankPolicy<T>) -> Result<LinearModel<T>> {
    let lambda = n + m;
    if h.nrows() != 2 * n + m {
        return Err(Error::dims("basis rows (2n + m)", 2 * n + m, h.nrows()));
    }
    let regressor = h.rows(0, lambda).into_owned();
    let x_plus = h.rows(lambda, n).into_owned();
    let rank = linalg::rank(&regressor, policy);
    if rank != lambda {
        return Err(Error::RankDeficient {
            context: "regressor [X-; U-]",
            found: rank,
            required: lambda,
        });
    }
    let gain = &x_plus * linalg::pinv(&regressor, policy);
    let residual = (&x_plus - &gain * &regressor).norm();
    let scale = x_plus.norm();
    if residual > T::lit(T::DEFAULT_ORTHOGONALITY_TOL) * scale && residual > T::zero() {
        return Err(Error::Numerical(format!(
            "data basis is not consistent with any linear model (relative residual {:e})",
            (residual / scale).as_f64()
        )));
    }
    LinearModel::new(
        gain.columns(0, n).into_owned(),
        gain.columns(n, m).into_owned(),
        Provenance::Estimate,
    )
}

/// Telemetry for one pushed snapshot.
#[derive(Clone, Debug)]
pub struct StepReport<T: Scalar> {
    pub step: usize,
    pub model: LinearModel<T>,
    /// `μ = dim(T_i⊥ ∩ S)`.
    pub remaining_rank: usize,
    /// `dim T_i`.
    pub fresh_rank: usize,
    pub rank_increased: bool,
    pub d_to_similar: T,
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct Identifier<T: Scalar> {
    n: usize,
    m: usize,
    policy: RankPolicy<T>,
    similar: Subspace<T>,
    similar_perp: Subspace<T>,
    similar_model: LinearModel<T>,
    log: Vec<Snapshot<T>>,
    // unit-norm snapshots that increased dim T_i, in arrival order
    fresh: DMatrix<T>,
    fresh_span: Subspace<T>,
    complement: DMatrix<T>,
    current: Subspace<T>,
    model: LinearModel<T>,
}

impl<T: Scalar> Identifier<T> {
    /// Starts from informative similar-system data (`rank [X⁻; U⁻] = n + m`).
    /// With `m = 0` the identifier runs in autonomous mode.
    pub fn new(similar: &StackedData<T>, policy: RankPolicy<T>) -> Result<Self> {
        let (n, m) = (similar.n(), similar.m());
        let lambda = n + m;
        let reg_rank = linalg::rank(&similar.regressor(), &policy);
        if reg_rank != lambda {
            return Err(Error::Uninformative {
                found: reg_rank,
                required: lambda,
            });
        }
        let space = Subspace::span(similar.matrix(), &policy);
        if space.dim() != lambda {
            return Err(Error::dims("similar-system subspace dimension", lambda, space.dim()));
        }
        Self::from_similar_space(n, m, space, policy)
    }

    /// Starts from a known similar model, using its behaviour subspace directly.
    pub fn from_similar_model(model: &LinearModel<T>, policy: RankPolicy<T>) -> Result<Self> {
        let space = model.behavior_space(&policy);
        Self::from_similar_space(model.n(), model.m(), space, policy)
    }

    fn from_similar_space(n: usize, m: usize, similar: Subspace<T>, policy: RankPolicy<T>) -> Result<Self> {
        let ambient = 2 * n + m;
        let similar_perp = similar.left_kernel(&policy);
        let similar_model = extract_model(similar.basis(), n, m, &policy)?.with_provenance(Provenance::Similar);
        Ok(Self {
            n,
            m,
            policy,
            similar_perp,
            similar_model: similar_model.clone(),
            log: Vec::new(),
            fresh: DMatrix::zeros(ambient, 0),
            fresh_span: Subspace::zero(ambient),
            complement: similar.basis().clone(),
            current: similar.clone(),
            similar,
            model: similar_model,
        })
    }

    /// Appends one true-system snapshot and re-identifies.
    ///
    /// A snapshot already in `span T_i` is logged but leaves `H_i` and the
    /// model unchanged. On error the identifier state is left untouched.
    pub fn push(&mut self, h: &Snapshot<T>) -> Result<StepReport<T>> {
        if self.is_complete() {
            return Err(Error::AlreadyComplete { step: self.step() });
        }
        if h.len() != self.ambient_dim() || h.n() != self.n {
            return Err(Error::dims("snapshot length (2n + m)", self.ambient_dim(), h.len()));
        }
        let step = self.log.len() + 1;
        let lambda = self.lambda();
        let ambient = self.ambient_dim();
        let v = h.as_vector();
        let norm = v.norm();

        let mut grown = None;
        if norm > T::zero() {
            let candidate = linalg::hcat(ambient, &[&self.fresh, &DMatrix::from_column_slice(ambient, 1, (v / norm).as_slice())]);
            let span = Subspace::span(&candidate, &self.policy);
            if span.dim() > self.fresh_span.dim() {
                grown = Some((candidate, span));
            }
        }

        let rank_increased = grown.is_some();
        if let Some((fresh, fresh_span)) = grown {
            let stack = linalg::vcat(ambient, &[&self.similar_perp.basis().transpose(), &fresh.transpose()]);
            let complement = linalg::kernel(&stack, &self.policy);
            let basis = linalg::hcat(ambient, &[&fresh, &complement]);
            let current = Subspace::span(&basis, &self.policy);
            if fresh.ncols() + complement.ncols() != lambda || current.dim() != lambda {
                return Err(Error::DimensionNotPreserved {
                    step,
                    found: current.dim().max(fresh.ncols() + complement.ncols()),
                    expected: lambda,
                });
            }
            let model = match extract_model(&basis, self.n, self.m, &self.policy) {
                Ok(model) => model,
                Err(Error::RankDeficient { found, .. }) => {
                    return Err(Error::DimensionNotPreserved {
                        step,
                        found,
                        expected: lambda,
                    })
                }
                Err(e) => return Err(e),
            };
            self.fresh = fresh;
            self.fresh_span = fresh_span;
            self.complement = complement;
            self.current = current;
            self.model = model;
        }
        self.model = self.model.clone().with_provenance(Provenance::Step(step));
        self.log.push(h.clone());

        Ok(StepReport {
            step,
            model: self.model.clone(),
            remaining_rank: self.remaining_rank(),
            fresh_rank: self.fresh_rank(),
            rank_increased,
            d_to_similar: distance(&self.similar, &self.current)?,
            complete: self.is_complete(),
        })
    }

    /// Autonomous-mode push; `h = [x(i−1); x(i)]`.
    pub fn push_autonomous(&mut self, h: &Snapshot<T>) -> Result<StepReport<T>> {
        if self.m != 0 {
            return Err(Error::ModeMismatch(format!(
                "identifier was built for a driven system with {} inputs",
                self.m
            )));
        }
        self.push(h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_autonomous(&self) -> bool {
        self.m == 0
    }

    pub fn lambda(&self) -> usize {
        self.n + self.m
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.n + self.m
    }

    pub fn policy(&self) -> &RankPolicy<T> {
        &self.policy
    }

    /// Number of snapshots pushed so far (`i`).
    pub fn step(&self) -> usize {
        self.log.len()
    }

    pub fn model(&self) -> &LinearModel<T> {
        &self.model
    }

    pub fn similar_model(&self) -> &LinearModel<T> {
        &self.similar_model
    }

    /// `S`.
    pub fn similar_space(&self) -> &Subspace<T> {
        &self.similar
    }

    /// `S⊥`.
    pub fn similar_left_kernel(&self) -> &Subspace<T> {
        &self.similar_perp
    }

    /// `T_i`.
    pub fn true_data_space(&self) -> &Subspace<T> {
        &self.fresh_span
    }

    /// `H_i = T_i + (T_i⊥ ∩ S)`.
    pub fn current_subspace(&self) -> &Subspace<T> {
        &self.current
    }

    /// The (non-orthonormal) basis `[T_i  S_i]` with unit-norm data columns.
    pub fn current_basis(&self) -> DMatrix<T> {
        linalg::hcat(self.ambient_dim(), &[&self.fresh, &self.complement])
    }

    /// `S_i`, a basis of `T_i⊥ ∩ S`.
    pub fn complement_basis(&self) -> &DMatrix<T> {
        &self.complement
    }

    pub fn fresh_rank(&self) -> usize {
        self.fresh.ncols()
    }

    /// `μ = dim(T_i⊥ ∩ S)`.
    pub fn remaining_rank(&self) -> usize {
        self.complement.ncols()
    }

    pub fn is_complete(&self) -> bool {
        self.remaining_rank() == 0
    }

    pub fn data_log(&self) -> &[Snapshot<T>] {
        &self.log
    }
}
