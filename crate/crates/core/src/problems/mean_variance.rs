//! Mean-variance portfolio objective written as a two-level composition.
//!
//! With reward vectors `r_1..r_n ∈ ℝᴺ`:
//!
//! ```text
//! G_j(x) = [x; ⟨r_j, x⟩]                      (ℝᴺ → ℝᴺ⁺¹)
//! F_i(y) = −⟨r_i, y₁⟩ + (⟨r_i, y₁⟩ − y₂)²      (y = [y₁; y₂])
//! ```
//!
//! so `(1/n) Σ F_i(G(x))` is the negated mean return plus the variance of the
//! return. The inner and outer index sets coincide (`m = n`).
//!
//! A `shift` σ moves `(σ/2)‖y₁‖²` out of every `F_i` and into the
//! regularizer. Since `y₁ = x` at `y = G(x)` the objective is unchanged, but
//! the dual-free solvers see a regularization weight of `λ + σ`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::oracle::{full_gradient, objective, CompositionProblem, Matrix, QueryCounter, Vector};
use crate::rng::PrngStream;

use super::Optimum;

#[derive(Debug)]
pub struct MeanVarianceProblem {
    rewards: Vec<Vector>,
    mean_reward: Vector,
    lambda: f64,
    shift: f64,
    covariance: Option<Matrix>,
    optimum: OnceLock<Optimum>,
}

impl Clone for MeanVarianceProblem {
    fn clone(&self) -> Self {
        let optimum = OnceLock::new();
        if let Some(o) = self.optimum.get() {
            let _ = optimum.set(o.clone());
        }
        Self {
            rewards: self.rewards.clone(),
            mean_reward: self.mean_reward.clone(),
            lambda: self.lambda,
            shift: self.shift,
            covariance: self.covariance.clone(),
            optimum,
        }
    }
}

impl MeanVarianceProblem {
    /// Builds a problem from an `n × N` reward matrix (one reward per row).
    pub fn from_rewards(rewards: Matrix, lambda: f64) -> Result<Self> {
        let rows = (0..rewards.nrows())
            .map(|i| rewards.row(i).transpose())
            .collect();
        Self::from_reward_rows(rows, lambda)
    }

    pub fn from_reward_rows(rewards: Vec<Vector>, lambda: f64) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one reward vector is required".into(),
            ));
        }
        let dim = rewards[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "rewards must have positive dimension".into(),
            ));
        }
        if let Some(bad) = rewards.iter().find(|r| r.len() != dim) {
            return Err(Error::dim("reward row", dim, bad.len()));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        let mut mean_reward = Vector::zeros(dim);
        for r in &rewards {
            mean_reward += r;
        }
        mean_reward /= rewards.len() as f64;
        Ok(Self {
            rewards,
            mean_reward,
            lambda,
            shift: 0.0,
            covariance: None,
            optimum: OnceLock::new(),
        })
    }

    /// Returns a copy whose `F_i` give up `(σ/2)‖y₁‖²` to the regularizer.
    pub fn with_shift(&self, shift: f64) -> Result<Self> {
        if !(shift >= 0.0) || !shift.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "shift must be finite and nonnegative, got {shift}"
            )));
        }
        let mut p = self.clone();
        p.shift = shift;
        Ok(p)
    }

    pub fn rewards(&self) -> &[Vector] {
        &self.rewards
    }

    pub fn reward_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rewards.len(), self.dim(), |i, k| self.rewards[i][k])
    }

    pub fn mean_reward(&self) -> &Vector {
        &self.mean_reward
    }

    pub fn dim(&self) -> usize {
        self.mean_reward.len()
    }

    /// Regularization weight of the objective itself (without the shift).
    pub fn base_lambda(&self) -> f64 {
        self.lambda
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Covariance the rewards were drawn from, when generated.
    pub fn true_covariance(&self) -> Option<&Matrix> {
        self.covariance.as_ref()
    }

    /// Direct evaluation `−mean⟨r_i,x⟩ + mean(⟨r_i,x⟩ − mean⟨r_j,x⟩)² + (λ/2)‖x‖²`.
    pub fn direct_objective(&self, x: &Vector) -> f64 {
        let n = self.rewards.len() as f64;
        let returns: Vec<f64> = self.rewards.iter().map(|r| r.dot(x)).collect();
        let mean = returns.iter().sum::<f64>() / n;
        let var = returns.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        -mean + var + 0.5 * self.lambda * x.norm_squared()
    }

    /// Hessian of the objective, `2·Cov + λI`, with `Cov` the (biased) sample
    /// covariance of the rewards. Independent of the shift.
    pub fn hessian(&self) -> Matrix {
        let dim = self.dim();
        let n = self.rewards.len() as f64;
        let mut h = Matrix::zeros(dim, dim);
        for r in &self.rewards {
            let u = r - &self.mean_reward;
            h.ger(2.0 / n, &u, &u, 1.0);
        }
        for k in 0..dim {
            h[(k, k)] += self.lambda;
        }
        h
    }

    /// Newton polish on the exact composed gradient until `‖∇P‖ ≤ 1e-12`.
    /// Cached per instance.
    pub fn optimum(&self) -> Result<Optimum> {
        if let Some(o) = self.optimum.get() {
            return Ok(o.clone());
        }
        let o = self.solve_optimum()?;
        let _ = self.optimum.set(o.clone());
        Ok(o)
    }

    fn solve_optimum(&self) -> Result<Optimum> {
        const TOL: f64 = 1e-12;
        const MAX_ITERS: usize = 1000;
        let hessian = self.hessian();
        let factor = hessian.clone().cholesky().ok_or_else(|| {
            Error::InvalidArgument("mean-variance Hessian is not positive definite".into())
        })?;
        let mut x = Vector::zeros(self.dim());
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERS {
            let g = full_gradient(self, &x, &mut QueryCounter::new())?;
            residual = g.norm();
            if residual <= TOL {
                let value = objective(self, &x, &mut QueryCounter::new())?;
                return Ok(Optimum { x, value });
            }
            x -= factor.solve(&g);
        }
        Err(Error::NonConvergence {
            iterations: MAX_ITERS,
            residual,
        })
    }

    fn check_index(&self, idx: usize) {
        debug_assert!(
            idx < self.rewards.len(),
            "component index {idx} out of range"
        );
    }
}

impl CompositionProblem for MeanVarianceProblem {
    fn n(&self) -> usize {
        self.rewards.len()
    }

    fn m(&self) -> usize {
        self.rewards.len()
    }

    fn dim_x(&self) -> usize {
        self.dim()
    }

    fn dim_y(&self) -> usize {
        self.dim() + 1
    }

    fn lambda(&self) -> f64 {
        self.lambda + self.shift
    }

    fn eval_g(&self, j: usize, x: &Vector) -> Vector {
        self.check_index(j);
        let mut y = Vector::zeros(self.dim() + 1);
        y.rows_mut(0, self.dim()).copy_from(x);
        y[self.dim()] = self.rewards[j].dot(x);
        y
    }

    fn jac_g(&self, j: usize, _x: &Vector) -> Matrix {
        self.check_index(j);
        let dim = self.dim();
        let mut jac = Matrix::zeros(dim + 1, dim);
        for k in 0..dim {
            jac[(k, k)] = 1.0;
            jac[(dim, k)] = self.rewards[j][k];
        }
        jac
    }

    fn eval_f(&self, i: usize, y: &Vector) -> f64 {
        self.check_index(i);
        let dim = self.dim();
        let y1 = y.rows(0, dim);
        let t = self.rewards[i].dot(&y1);
        let d = t - y[dim];
        -t + d * d - 0.5 * self.shift * y1.norm_squared()
    }

    fn grad_f(&self, i: usize, y: &Vector) -> Vector {
        self.check_index(i);
        let dim = self.dim();
        let r = &self.rewards[i];
        let y1 = y.rows(0, dim);
        let d = r.dot(&y1) - y[dim];
        let mut g = Vector::zeros(dim + 1);
        {
            let mut g1 = g.rows_mut(0, dim);
            g1.axpy(2.0 * d - 1.0, r, 0.0);
            g1.axpy(-self.shift, &y1, 1.0);
        }
        g[dim] = -2.0 * d;
        g
    }

    fn axpy_g(&self, j: usize, x: &Vector, scale: f64, out: &mut Vector) {
        self.check_index(j);
        let dim = self.dim();
        out.rows_mut(0, dim).axpy(scale, x, 1.0);
        out[dim] += scale * self.rewards[j].dot(x);
    }

    fn axpy_jac(&self, j: usize, _x: &Vector, scale: f64, out: &mut Matrix) {
        self.check_index(j);
        let dim = self.dim();
        let r = &self.rewards[j];
        for k in 0..dim {
            out[(k, k)] += scale;
            out[(dim, k)] += scale * r[k];
        }
    }
}

/// Orthogonal factor of the QR decomposition of a Gaussian matrix, with
/// column signs fixed so that `R` has a positive diagonal.
fn random_orthogonal(dim: usize, stream: &mut PrngStream) -> Matrix {
    let qr = stream.gaussian_matrix(dim, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Log-spaced spectrum `1 = s_0 < … < s_{N−1} = κ`.
pub fn log_spaced_spectrum(dim: usize, kappa: f64) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    let last = (dim - 1) as f64;
    (0..dim)
        .map(|k| {
            if k == dim - 1 {
                kappa
            } else {
                kappa.powf(k as f64 / last)
            }
        })
        .collect()
}

/// Draws `n` i.i.d. zero-mean Gaussian rewards in `ℝᴺ` whose covariance
/// `Q·diag(s)·Qᵀ` has a log-spaced spectrum `s` in `[1, κ]` and a seeded
/// random orthogonal `Q`.
pub fn generate_mean_variance(
    n: usize,
    dim: usize,
    kappa: f64,
    lambda: f64,
    seed: u64,
) -> Result<MeanVarianceProblem> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "n must be at least 2, got {n}"
        )));
    }
    if dim < 1 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "condition number must be finite and at least 1, got {kappa}"
        )));
    }
    let mut stream = PrngStream::new(seed, "mean-variance");
    let q = random_orthogonal(dim, &mut stream);
    let spectrum = log_spaced_spectrum(dim, kappa);
    let mut root = q.clone();
    for (c, s) in spectrum.iter().enumerate() {
        root.column_mut(c).scale_mut(s.sqrt());
    }
    let covariance = &root * root.transpose();
    let rewards = (0..n)
        .map(|_| &root * stream.gaussian_vector(dim))
        .collect();
    let mut problem = MeanVarianceProblem::from_reward_rows(rewards, lambda)?;
    problem.covariance = Some(covariance);
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{objective_unmetered, QueryCounter};

    fn toy() -> MeanVarianceProblem {
        MeanVarianceProblem::from_rewards(Matrix::from_row_slice(2, 1, &[1.0, 3.0]), 0.0).unwrap()
    }

    #[test]
    fn toy_optimum() {
        let o = toy().optimum().unwrap();
        assert!((o.x[0] - 1.0).abs() < 1e-12);
        assert!((o.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constructed_covariance_has_requested_condition_number() {
        let p = generate_mean_variance(200, 20, 30.0, 0.0, 7).unwrap();
        let eig = p.true_covariance().unwrap().clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        assert!((max / min - 30.0).abs() <= 1e-9, "cond = {}", max / min);
    }

    #[test]
    fn isotropic_when_kappa_is_one() {
        let p = generate_mean_variance(4000, 3, 1.0, 0.0, 2).unwrap();
        let cov = p.true_covariance().unwrap();
        assert!((cov - Matrix::identity(3, 3)).norm() < 1e-12);
        let h = p.hessian() / 2.0;
        let eig = h.symmetric_eigen().eigenvalues;
        assert!(eig.max() / eig.min() < 1.2);
    }

    #[test]
    fn generator_is_bitwise_reproducible() {
        let a = generate_mean_variance(50, 5, 10.0, 0.1, 9).unwrap();
        let b = generate_mean_variance(50, 5, 10.0, 0.1, 9).unwrap();
        assert_eq!(a.reward_matrix(), b.reward_matrix());
        let c = generate_mean_variance(50, 5, 10.0, 0.1, 10).unwrap();
        assert_ne!(a.reward_matrix(), c.reward_matrix());
    }

    #[test]
    fn generator_rejects_bad_arguments() {
        assert!(generate_mean_variance(10, 3, 0.5, 0.0, 1).is_err());
        assert!(generate_mean_variance(1, 3, 2.0, 0.0, 1).is_err());
        assert!(generate_mean_variance(10, 0, 2.0, 0.0, 1).is_err());
    }

    #[test]
    fn composition_matches_direct_formula() {
        let p = generate_mean_variance(60, 7, 10.0, 0.3, 4).unwrap();
        let mut s = PrngStream::new(1, "x");
        for _ in 0..20 {
            let x = s.gaussian_vector(7);
            let a = objective_unmetered(&p, &x).unwrap();
            let b = p.direct_objective(&x);
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn shift_preserves_objective_and_raises_lambda() {
        let p = generate_mean_variance(30, 4, 5.0, 0.1, 3).unwrap();
        let s = p.with_shift(2.5).unwrap();
        assert_eq!(s.lambda(), 2.6);
        assert_eq!(s.base_lambda(), 0.1);
        let mut st = PrngStream::new(3, "x");
        for _ in 0..10 {
            let x = st.gaussian_vector(4);
            let a = objective_unmetered(&p, &x).unwrap();
            let b = objective_unmetered(&s, &x).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            let mut q = QueryCounter::new();
            let ga = full_gradient(&p, &x, &mut q).unwrap();
            let gb = full_gradient(&s, &x, &mut q).unwrap();
            assert!((ga - gb).norm() <= 1e-11 * (1.0 + x.norm()));
        }
        assert!(p.with_shift(-1.0).is_err());
    }

    #[test]
    fn optimum_zeroes_the_gradient() {
        let p = generate_mean_variance(100, 8, 10.0, 0.1, 5).unwrap();
        let o = p.optimum().unwrap();
        let g = full_gradient(&p, &o.x, &mut QueryCounter::new()).unwrap();
        assert!(g.norm() <= 1e-12);
        // Second call is served from the cache.
        assert_eq!(p.optimum().unwrap().x, o.x);
    }

    #[test]
    fn huge_regularizer_pins_optimum_to_origin() {
        let p = generate_mean_variance(20, 3, 2.0, 1e12, 5).unwrap();
        assert!(p.optimum().unwrap().x.norm() < 1e-11);
    }

    #[test]
    fn spectrum_endpoints() {
        let s = log_spaced_spectrum(5, 16.0);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[4], 16.0);
        assert!((s[2] - 4.0).abs() < 1e-14);
    }
}
