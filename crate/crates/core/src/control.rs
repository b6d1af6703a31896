//! Simulation, model perturbation, excitation design and pole placement.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::datamat::{persistency_order, Trajectory};
use crate::engine::{LinearModel, Provenance};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::subspace::RankPolicy;

/// Propagates `x(k+1) = A x(k) + B u(k)` from `x0`.
pub fn simulate<T: Scalar>(model: &LinearModel<T>, x0: &DVector<T>, inputs: &[DVector<T>]) -> Result<Trajectory<T>> {
    if x0.len() != model.n() {
        return Err(Error::dims("initial state", model.n(), x0.len()));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for u in inputs {
        if u.len() != model.m() {
            return Err(Error::dims("input vector", model.m(), u.len()));
        }
        let next = model.step(states.last().expect("non-empty"), u);
        states.push(next);
    }
    Trajectory::new(model.n(), model.m(), states, inputs.to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationKind {
    /// Entries drawn from `U(0, σ)`.
    Uniform,
    /// Entries drawn from `N(0, σ²)`.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationSpec<T> {
    pub distribution: PerturbationKind,
    sigma: T,
    pub seed: u64,
}

impl<T: Scalar> PerturbationSpec<T> {
    pub fn new(distribution: PerturbationKind, sigma: T, seed: u64) -> Result<Self> {
        if sigma.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
            return Err(Error::InvalidArgument(format!("perturbation sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            distribution,
            sigma,
            seed,
        })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

/// Entrywise random perturbation of `[A B]`, deterministic under the seed.
pub fn perturb<T: Scalar>(model: &LinearModel<T>, spec: &PerturbationSpec<T>) -> LinearModel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = spec.sigma.as_f64();
    let mut draw = |_: usize, _: usize| -> T {
        let z = match spec.distribution {
            PerturbationKind::Uniform => rng.random::<f64>() * sigma,
            PerturbationKind::Gaussian => {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            },
        };
        T::lit(z)
    };
    let da = DMatrix::from_fn(model.n(), model.n(), &mut draw);
    let db = DMatrix::from_fn(model.n(), model.m(), &mut draw);
    LinearModel::new(model.a() + da, model.b() + db, Provenance::Similar).expect("finite perturbation of a valid model")
}

/// I.i.d. `U(−1, 1)` inputs certified persistently exciting of `order`.
///
/// Requires `length ≥ (m + 1) · order`. Redraws from the same seeded stream
/// until the certificate passes.
pub fn pe_inputs<T: Scalar>(
    m: usize,
    length: usize,
    order: usize,
    seed: u64,
    policy: &RankPolicy<T>,
) -> Result<Vec<DVector<T>>> {
    if m == 0 || order == 0 {
        return Err(Error::InvalidArgument("input dimension and order must be positive".into()));
    }
    if length < (m + 1) * order {
        return Err(Error::InvalidArgument(format!(
            "length {length} is below (m + 1)·order = {} needed for excitation of order {order}",
            (m + 1) * order
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let seq = uniform_inputs(m, length, &mut rng);
        if persistency_order(&seq, order, policy)? {
            return Ok(seq);
        }
    }
    Err(Error::Numerical(format!(
        "no persistently exciting sequence of order {order} found in 100 draws"
    )))
}

/// I.i.d. `U(−1, 1)` inputs without an excitation certificate.
pub fn random_inputs<T: Scalar>(m: usize, length: usize, seed: u64) -> Vec<DVector<T>> {
    uniform_inputs(m, length, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn uniform_inputs<T: Scalar>(m: usize, length: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<T>> {
    (0..length)
        .map(|_| DVector::from_fn(m, |_, _| T::lit(rng.random_range(-1.0..1.0))))
        .collect()
}

pub(crate) fn gaussian_matrix<T: Scalar>(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        T::lit(scale * z)
    })
}

/// Random `(A, B)` with `A` rescaled to the given spectral radius and the pair
/// controllable (for `m ≥ 1`).
pub fn random_model<T: Scalar>(n: usize, m: usize, spectral_radius: T, seed: u64) -> Result<LinearModel<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("state dimension must be at least 1".into()));
    }
    let policy = RankPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let a: DMatrix<T> = gaussian_matrix(n, n, 1.0 / (n as f64).sqrt(), &mut rng);
        let rho = spectral_radius_of(&a);
        if rho.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
            continue;
        }
        let a = a * (spectral_radius / rho);
        let b = gaussian_matrix(n, m, 1.0, &mut rng);
        if m == 0 || controllable_dim(&a, &b, &policy) == n {
            return LinearModel::new(a, b, Provenance::Truth);
        }
    }
    Err(Error::Numerical("failed to draw a controllable pair".into()))
}

/// Dimension of the controllable subspace `span[B, AB, …, A^{n−1}B]`,
/// built by repeated orthonormalisation.
pub fn controllable_dim<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, policy: &RankPolicy<T>) -> usize {
    let n = a.nrows();
    let mut basis = linalg::orth(b, policy);
    loop {
        let before = basis.ncols();
        if before == n || before == 0 {
            return before;
        }
        let next = a * &basis;
        basis = linalg::orth(&linalg::hcat(n, &[&basis, &next]), policy);
        if basis.ncols() == before {
            return before;
        }
    }
}

pub fn is_controllable<T: Scalar>(model: &LinearModel<T>, policy: &RankPolicy<T>) -> bool {
    controllable_dim(model.a(), model.b(), policy) == model.n()
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn eigenvalues<T: Scalar>(a: &DMatrix<T>) -> Vec<Complex<T>> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut eig: Vec<Complex<T>> = a.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal))
    });
    eig
}

/// `|z|` without requiring `num_traits::Float`.
pub fn modulus<T: Scalar>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

pub fn spectral_radius_of<T: Scalar>(a: &DMatrix<T>) -> T {
    eigenvalues(a).iter().map(|z| modulus(*z)).fold(T::zero(), |acc, r| acc.max(r))
}

/// State-feedback gain `K` for `u = −K x`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackGain<T: Scalar> {
    k: DMatrix<T>,
}

impl<T: Scalar> FeedbackGain<T> {
    pub fn new(k: DMatrix<T>) -> Result<Self> {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("feedback gain has non-finite entries".into()));
        }
        Ok(Self { k })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.k
    }
}

/// Eigenvalues of `A − B K`, sorted by real then imaginary part.
pub fn closed_loop_eigs<T: Scalar>(model: &LinearModel<T>, gain: &FeedbackGain<T>) -> Result<Vec<Complex<T>>> {
    let k = gain.matrix();
    if k.nrows() != model.m() || k.ncols() != model.n() {
        return Err(Error::dims("feedback gain shape (m x n)", model.m() * model.n(), k.nrows() * k.ncols()));
    }
    Ok(eigenvalues(&(model.a() - model.b() * k)))
}

fn conj_tol<T: Scalar>(z: &Complex<T>) -> T {
    T::lit(1e-9) * modulus(*z).max(T::one())
}

/// Checks that non-real targets come in conjugate pairs and returns the real
/// targets and one representative (positive imaginary part) per pair.
fn split_conjugate<T: Scalar>(targets: &[Complex<T>]) -> Result<(Vec<T>, Vec<Complex<T>>)> {
    let mut reals = Vec::new();
    let mut pairs = Vec::new();
    let mut used = vec![false; targets.len()];
    for i in 0..targets.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let t = targets[i];
        if t.im.abs() <= conj_tol(&t) {
            reals.push(t.re);
            continue;
        }
        let partner = (0..targets.len()).find(|&j| !used[j] && modulus(targets[j] - t.conj()) <= conj_tol(&t));
        match partner {
            Some(j) => {
                used[j] = true;
                pairs.push(if t.im > T::zero() { t } else { t.conj() });
            }
            None => return Err(Error::NotConjugateClosed),
        }
    }
    Ok((reals, pairs))
}

/// Real block-diagonal matrix with the given spectrum.
pub fn real_block_diagonal<T: Scalar>(targets: &[Complex<T>]) -> Result<DMatrix<T>> {
    let (reals, pairs) = split_conjugate(targets)?;
    let n = targets.len();
    let mut f = DMatrix::zeros(n, n);
    let mut at = 0;
    for r in reals {
        f[(at, at)] = r;
        at += 1;
    }
    for z in pairs {
        f[(at, at)] = z.re;
        f[(at, at + 1)] = z.im;
        f[(at + 1, at)] = -z.im;
        f[(at + 1, at + 1)] = z.re;
        at += 2;
    }
    Ok(f)
}

/// Real coefficients `c_0..c_n` (monic, `c_n = 1`) of `Π (s − t)`.
pub fn characteristic_coefficients<T: Scalar>(targets: &[Complex<T>]) -> Vec<T> {
    let mut coeffs = vec![Complex::new(T::one(), T::zero())];
    for &t in targets {
        let mut next = vec![Complex::new(T::zero(), T::zero()); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * t;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Ackermann's formula for a single-input pair.
fn ackermann<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, targets: &[Complex<T>]) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let mut ctrb = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for k in 0..n {
        ctrb.set_column(k, &col);
        col = a * &col;
    }
    let coeffs = characteristic_coefficients(targets);
    let mut p_of_a = DMatrix::zeros(n, n);
    let mut power = DMatrix::identity(n, n);
    for &c in &coeffs {
        p_of_a += &power * c;
        power = a * &power;
    }
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = T::one();
    let q = ctrb
        .transpose()
        .lu()
        .solve(&e_n)
        .ok_or(Error::Uncontrollable { rank: n - 1, n })?;
    Ok(DMatrix::from_row_slice(1, n, (q.transpose() * p_of_a).as_slice()))
}

/// Largest deviation between `eigs` and `targets` under the minimum-cost
/// one-to-one matching on `|λ − t|`.
pub fn match_deviation<T: Scalar>(eigs: &[Complex<T>], targets: &[Complex<T>]) -> Result<T> {
    if eigs.len() != targets.len() {
        return Err(Error::dims("eigenvalue matching", targets.len(), eigs.len()));
    }
    let cost: Vec<Vec<f64>> = eigs
        .iter()
        .map(|e| targets.iter().map(|t| modulus(*e - *t).as_f64()).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| modulus(eigs[i] - targets[j]))
        .fold(T::zero(), |acc, d| acc.max(d)))
}

/// Hungarian algorithm on a square cost matrix; returns the column assigned to each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// State-feedback gain placing the eigenvalues of `A − B K` at `targets`.
///
/// Square invertible `B` uses `K = B⁻¹(A − F)` with `F` real block diagonal;
/// single-input pairs use Ackermann's formula; other input counts are reduced
/// to a single input through a random precompensation `K₀ + v k`, retried up
/// to ten times.
pub fn pole_place<T: Scalar>(model: &LinearModel<T>, targets: &[Complex<T>]) -> Result<FeedbackGain<T>> {
    let (n, m) = (model.n(), model.m());
    if targets.len() != n {
        return Err(Error::dims("number of target poles", n, targets.len()));
    }
    split_conjugate(targets)?;
    let policy = RankPolicy::default();
    let rank = controllable_dim(model.a(), model.b(), &policy);
    if rank < n {
        return Err(Error::Uncontrollable { rank, n });
    }

    if m == n {
        let b = model.b();
        if linalg::cond2(b) < T::lit(1e10) {
            let f = real_block_diagonal(targets)?;
            if let Some(k) = b.clone().lu().solve(&(model.a() - f)) {
                return FeedbackGain::new(k);
            }
        }
    }
    if m == 1 {
        let b = model.b().column(0).into_owned();
        return FeedbackGain::new(ackermann(model.a(), &b, targets)?);
    }

    let tolerance = T::lit(1e-6) * (model.gain().norm() + T::one());
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_9a1e);
    for _ in 0..10 {
        let k0: DMatrix<T> = gaussian_matrix(m, n, 1.0, &mut rng);
        let v: DMatrix<T> = gaussian_matrix(m, 1, 1.0, &mut rng);
        let a0 = model.a() - model.b() * &k0;
        let bv = model.b() * &v;
        if controllable_dim(&a0, &bv, &policy) < n {
            continue;
        }
        let k1 = ackermann(&a0, &bv.column(0).into_owned(), targets)?;
        let gain = FeedbackGain::new(k0 + v * k1)?;
        let eigs = closed_loop_eigs(model, &gain)?;
        if match_deviation(&eigs, targets)? <= tolerance {
            return Ok(gain);
        }
    }
    Err(Error::Numerical("randomised single-input reduction failed after 10 attempts".into()))
}
