//! Least-squares toy in the shape of a Bellman residual.
//!
//! `G_j(x) = B_j x − b_j` with Gaussian `B_j ∈ ℝ^{M×N}`, `b_j ∈ ℝᴹ`, and a
//! single outer component `F(y) = ‖y‖²`, so that
//! `P(x) = ‖B̄x − b̄‖² + (λ/2)‖x‖²` with `B̄`, `b̄` the exact averages.
//!
//! [`SplitBellmanProblem`] reuses the same inner maps but splits the outer
//! function into weighted copies `F_i(y) = w_i ‖y‖²` with `mean(w) = 1`.
//! Choosing some `w_i < 0` makes those components concave while leaving `P`
//! unchanged.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::oracle::{objective, CompositionProblem, Matrix, QueryCounter, Vector};
use crate::rng::PrngStream;

use super::Optimum;

#[derive(Debug, Clone)]
pub struct BellmanToyProblem {
    maps: Vec<Matrix>,
    offsets: Vec<Vector>,
    mean_map: Matrix,
    mean_offset: Vector,
    lambda: f64,
    optimum: OnceLock<Optimum>,
}

impl BellmanToyProblem {
    pub fn new(maps: Vec<Matrix>, offsets: Vec<Vector>, lambda: f64) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if maps.len() != offsets.len() {
            return Err(Error::dim("offset count", maps.len(), offsets.len()));
        }
        let (rows, cols) = maps[0].shape();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("maps must be non-empty".into()));
        }
        for (b, o) in maps.iter().zip(&offsets) {
            if b.shape() != (rows, cols) {
                return Err(Error::dim("map shape", rows * cols, b.nrows() * b.ncols()));
            }
            if o.len() != rows {
                return Err(Error::dim("offset", rows, o.len()));
            }
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        let m = maps.len() as f64;
        let mut mean_map = Matrix::zeros(rows, cols);
        let mut mean_offset = Vector::zeros(rows);
        for (b, o) in maps.iter().zip(&offsets) {
            mean_map += b;
            mean_offset += o;
        }
        mean_map /= m;
        mean_offset /= m;
        Ok(Self {
            maps,
            offsets,
            mean_map,
            mean_offset,
            lambda,
            optimum: OnceLock::new(),
        })
    }

    pub fn mean_map(&self) -> &Matrix {
        &self.mean_map
    }

    pub fn mean_offset(&self) -> &Vector {
        &self.mean_offset
    }

    pub fn maps(&self) -> &[Matrix] {
        &self.maps
    }

    pub fn offsets(&self) -> &[Vector] {
        &self.offsets
    }

    /// `‖B̄x − b̄‖² + (λ/2)‖x‖²` evaluated directly.
    pub fn direct_objective(&self, x: &Vector) -> f64 {
        (&self.mean_map * x - &self.mean_offset).norm_squared()
            + 0.5 * self.lambda * x.norm_squared()
    }

    /// Solves `(2B̄ᵀB̄ + λI) x = 2B̄ᵀb̄`. Cached per instance.
    pub fn optimum(&self) -> Result<Optimum> {
        if let Some(o) = self.optimum.get() {
            return Ok(o.clone());
        }
        let x = self.solve_normal_equations()?;
        let value = objective(self, &x, &mut QueryCounter::new())?;
        let o = Optimum { x, value };
        let _ = self.optimum.set(o.clone());
        Ok(o)
    }

    fn normal_system(&self) -> (Matrix, Vector) {
        let mut lhs = self.mean_map.tr_mul(&self.mean_map) * 2.0;
        for k in 0..lhs.nrows() {
            lhs[(k, k)] += self.lambda;
        }
        let rhs = self.mean_map.tr_mul(&self.mean_offset) * 2.0;
        (lhs, rhs)
    }

    /// `‖(2B̄ᵀB̄ + λI)x − 2B̄ᵀb̄‖`.
    pub fn normal_residual(&self, x: &Vector) -> f64 {
        let (lhs, rhs) = self.normal_system();
        (lhs * x - rhs).norm()
    }

    fn solve_normal_equations(&self) -> Result<Vector> {
        let (lhs, rhs) = self.normal_system();
        if let Some(ch) = lhs.clone().cholesky() {
            let mut x = ch.solve(&rhs);
            // One step of iterative refinement.
            let r = &rhs - &lhs * &x;
            x += ch.solve(&r);
            return Ok(x);
        }
        lhs.lu().solve(&rhs).ok_or_else(|| {
            Error::InvalidArgument("normal equations are singular; use λ > 0".into())
        })
    }
}

impl CompositionProblem for BellmanToyProblem {
    fn n(&self) -> usize {
        1
    }

    fn m(&self) -> usize {
        self.maps.len()
    }

    fn dim_x(&self) -> usize {
        self.mean_map.ncols()
    }

    fn dim_y(&self) -> usize {
        self.mean_map.nrows()
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn eval_g(&self, j: usize, x: &Vector) -> Vector {
        &self.maps[j] * x - &self.offsets[j]
    }

    fn jac_g(&self, j: usize, _x: &Vector) -> Matrix {
        self.maps[j].clone()
    }

    fn eval_f(&self, _i: usize, y: &Vector) -> f64 {
        y.norm_squared()
    }

    fn grad_f(&self, _i: usize, y: &Vector) -> Vector {
        y * 2.0
    }

    fn axpy_g(&self, j: usize, x: &Vector, scale: f64, out: &mut Vector) {
        out.gemv(scale, &self.maps[j], x, 1.0);
        out.axpy(-scale, &self.offsets[j], 1.0);
    }

    fn axpy_jac(&self, j: usize, _x: &Vector, scale: f64, out: &mut Matrix) {
        out.zip_apply(&self.maps[j], |o, b| *o += scale * b);
    }
}

/// Gaussian toy with `m` maps of shape `M × N`. Deterministic given `seed`.
pub fn generate_bellman_toy(
    m: usize,
    dim_y: usize,
    dim_x: usize,
    lambda: f64,
    seed: u64,
) -> Result<BellmanToyProblem> {
    if m < 1 || dim_y < 1 || dim_x < 1 {
        return Err(Error::InvalidArgument(format!(
            "m, M and N must be positive (got m={m}, M={dim_y}, N={dim_x})"
        )));
    }
    let mut stream = PrngStream::new(seed, "bellman");
    let mut maps = Vec::with_capacity(m);
    let mut offsets = Vec::with_capacity(m);
    for _ in 0..m {
        maps.push(stream.gaussian_matrix(dim_y, dim_x));
        offsets.push(stream.gaussian_vector(dim_y));
    }
    BellmanToyProblem::new(maps, offsets, lambda)
}

/// The Bellman toy with its outer function split as `F_i(y) = w_i‖y‖²`.
#[derive(Debug, Clone)]
pub struct SplitBellmanProblem {
    base: BellmanToyProblem,
    weights: Vec<f64>,
}

impl SplitBellmanProblem {
    /// `weights` must average to 1 (to 1e-12).
    pub fn new(base: BellmanToyProblem, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one outer weight is required".into(),
            ));
        }
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "outer weights must average to 1, got {mean}"
            )));
        }
        Ok(Self { base, weights })
    }

    /// Two outer components `(1 + c)‖y‖²` and `(1 − c)‖y‖²`; concave second
    /// component for `c > 1`.
    pub fn concave_pair(base: BellmanToyProblem, c: f64) -> Result<Self> {
        Self::new(base, vec![1.0 + c, 1.0 - c])
    }

    pub fn base(&self) -> &BellmanToyProblem {
        &self.base
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn optimum(&self) -> Result<Optimum> {
        let o = self.base.optimum()?;
        let value = objective(self, &o.x, &mut QueryCounter::new())?;
        Ok(Optimum { x: o.x, value })
    }
}

impl CompositionProblem for SplitBellmanProblem {
    fn n(&self) -> usize {
        self.weights.len()
    }
    fn m(&self) -> usize {
        self.base.m()
    }
    fn dim_x(&self) -> usize {
        self.base.dim_x()
    }
    fn dim_y(&self) -> usize {
        self.base.dim_y()
    }
    fn lambda(&self) -> f64 {
        self.base.lambda()
    }
    fn eval_g(&self, j: usize, x: &Vector) -> Vector {
        self.base.eval_g(j, x)
    }
    fn jac_g(&self, j: usize, x: &Vector) -> Matrix {
        self.base.jac_g(j, x)
    }
    fn eval_f(&self, i: usize, y: &Vector) -> f64 {
        self.weights[i] * y.norm_squared()
    }
    fn grad_f(&self, i: usize, y: &Vector) -> Vector {
        y * (2.0 * self.weights[i])
    }
    fn axpy_g(&self, j: usize, x: &Vector, scale: f64, out: &mut Vector) {
        self.base.axpy_g(j, x, scale, out)
    }
    fn axpy_jac(&self, j: usize, x: &Vector, scale: f64, out: &mut Matrix) {
        self.base.axpy_jac(j, x, scale, out)
    }
}
