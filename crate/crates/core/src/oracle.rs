//! Problem abstraction and exact full-batch oracles.
//!
//! A [`CompositionProblem`] exposes the per-index pieces `G_j`, `∂G_j`, `F_i`
//! and `∇F_i` together with the weight of the ℓ2 regularizer. The free
//! functions in this module assemble the exact averages from them and record
//! every per-index call in a [`QueryCounter`].

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A finite-sum composition objective
/// `P(x) = (1/n) Σ_i F_i(G(x)) + (λ/2)‖x‖²` with `G(x) = (1/m) Σ_j G_j(x)`.
///
/// Implementations must be deterministic pure functions of `(index, point)`.
/// Index and length preconditions are checked by the metered wrappers in
/// this module, not by implementations.
pub trait CompositionProblem: Send + Sync {
    /// Number of outer components `F_i`.
    fn n(&self) -> usize;
    /// Number of inner components `G_j`.
    fn m(&self) -> usize;
    /// Decision-variable dimension.
    fn dim_x(&self) -> usize;
    /// Output dimension of every `G_j`.
    fn dim_y(&self) -> usize;
    /// Weight `λ` of the regularizer `(λ/2)‖x‖²`.
    fn lambda(&self) -> f64;

    fn eval_g(&self, j: usize, x: &Vector) -> Vector;
    fn jac_g(&self, j: usize, x: &Vector) -> Matrix;
    fn eval_f(&self, i: usize, y: &Vector) -> f64;
    fn grad_f(&self, i: usize, y: &Vector) -> Vector;

    /// `out += scale · G_j(x)`. Override to avoid the temporary.
    fn axpy_g(&self, j: usize, x: &Vector, scale: f64, out: &mut Vector) {
        out.axpy(scale, &self.eval_g(j, x), 1.0);
    }

    /// `out += scale · ∂G_j(x)`. Override to avoid the temporary.
    fn axpy_jac(&self, j: usize, x: &Vector, scale: f64, out: &mut Matrix) {
        let jac = self.jac_g(j, x);
        *out += jac * scale;
    }
}

impl<P: CompositionProblem + ?Sized> CompositionProblem for &P {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn m(&self) -> usize {
        (**self).m()
    }
    fn dim_x(&self) -> usize {
        (**self).dim_x()
    }
    fn dim_y(&self) -> usize {
        (**self).dim_y()
    }
    fn lambda(&self) -> f64 {
        (**self).lambda()
    }
    fn eval_g(&self, j: usize, x: &Vector) -> Vector {
        (**self).eval_g(j, x)
    }
    fn jac_g(&self, j: usize, x: &Vector) -> Matrix {
        (**self).jac_g(j, x)
    }
    fn eval_f(&self, i: usize, y: &Vector) -> f64 {
        (**self).eval_f(i, y)
    }
    fn grad_f(&self, i: usize, y: &Vector) -> Vector {
        (**self).grad_f(i, y)
    }
    fn axpy_g(&self, j: usize, x: &Vector, scale: f64, out: &mut Vector) {
        (**self).axpy_g(j, x, scale, out)
    }
    fn axpy_jac(&self, j: usize, x: &Vector, scale: f64, out: &mut Matrix) {
        (**self).axpy_jac(j, x, scale, out)
    }
}

/// Per-kind oracle call counts for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct QueryCounter {
    pub g_evals: u64,
    pub g_jacs: u64,
    pub f_grads: u64,
    pub f_evals: u64,
}

impl QueryCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.g_evals + self.g_jacs + self.f_grads + self.f_evals
    }

    /// Inner-function queries (`G_j` values plus `∂G_j` Jacobians), the unit
    /// the query budgets and trace columns are expressed in.
    pub fn g_queries(&self) -> u64 {
        self.g_evals + self.g_jacs
    }
}

/// `G(x) = (1/m) Σ_j G_j(x)`. Meters `m` inner evaluations.
pub fn inner_value<P: CompositionProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    counter: &mut QueryCounter,
) -> Result<Vector> {
    ensure_dim("x", problem.dim_x(), x.len())?;
    let m = problem.m();
    let mut acc = Vector::zeros(problem.dim_y());
    for j in 0..m {
        problem.axpy_g(j, x, 1.0, &mut acc);
    }
    counter.g_evals += m as u64;
    acc /= m as f64;
    Ok(acc)
}

/// `∂G(x) = (1/m) Σ_j ∂G_j(x)`. Meters `m` Jacobian evaluations.
pub fn inner_jacobian<P: CompositionProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    counter: &mut QueryCounter,
) -> Result<Matrix> {
    ensure_dim("x", problem.dim_x(), x.len())?;
    let m = problem.m();
    let mut acc = Matrix::zeros(problem.dim_y(), problem.dim_x());
    for j in 0..m {
        problem.axpy_jac(j, x, 1.0, &mut acc);
    }
    counter.g_jacs += m as u64;
    acc /= m as f64;
    Ok(acc)
}

/// `(1/n) Σ_i ∇F_i(y)`. Meters `n` outer gradients.
pub fn outer_gradient<P: CompositionProblem + ?Sized>(
    problem: &P,
    y: &Vector,
    counter: &mut QueryCounter,
) -> Result<Vector> {
    ensure_dim("y", problem.dim_y(), y.len())?;
    let n = problem.n();
    let mut acc = Vector::zeros(problem.dim_y());
    for i in 0..n {
        acc += problem.grad_f(i, y);
    }
    counter.f_grads += n as u64;
    acc /= n as f64;
    Ok(acc)
}

/// `∇P(x) = ∂G(x)ᵀ ∇F(G(x)) + λx`, assembled from [`inner_jacobian`],
/// [`inner_value`] and [`outer_gradient`] in that order.
pub fn full_gradient<P: CompositionProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    counter: &mut QueryCounter,
) -> Result<Vector> {
    let jac = inner_jacobian(problem, x, counter)?;
    let y = inner_value(problem, x, counter)?;
    let outer = outer_gradient(problem, &y, counter)?;
    let mut g = jac.tr_mul(&outer);
    g.axpy(problem.lambda(), x, 1.0);
    Ok(g)
}

/// Gradient of the composition part only, `∂G(x)ᵀ ∇F(G(x))`.
pub fn composition_gradient<P: CompositionProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    counter: &mut QueryCounter,
) -> Result<Vector> {
    let jac = inner_jacobian(problem, x, counter)?;
    let y = inner_value(problem, x, counter)?;
    let outer = outer_gradient(problem, &y, counter)?;
    Ok(jac.tr_mul(&outer))
}

/// `P(x) = (1/n) Σ_i F_i(G(x)) + (λ/2)‖x‖²`.
pub fn objective<P: CompositionProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    counter: &mut QueryCounter,
) -> Result<f64> {
    let y = inner_value(problem, x, counter)?;
    let n = problem.n();
    let outer: f64 = (0..n).map(|i| problem.eval_f(i, &y)).sum::<f64>() / n as f64;
    counter.f_evals += n as u64;
    Ok(outer + 0.5 * problem.lambda() * x.norm_squared())
}

/// Objective without metering, for diagnostics that must not disturb a run's
/// query accounting.
pub fn objective_unmetered<P: CompositionProblem + ?Sized>(problem: &P, x: &Vector) -> Result<f64> {
    objective(problem, x, &mut QueryCounter::new())
}

/// `(∂G)ᵀ ∇F_i(y)` for a given Jacobian (exact or estimated). Meters one
/// outer gradient.
pub fn component_direction<P: CompositionProblem + ?Sized>(
    problem: &P,
    i: usize,
    y: &Vector,
    jac: &Matrix,
    counter: &mut QueryCounter,
) -> Vector {
    counter.f_grads += 1;
    jac.tr_mul(&problem.grad_f(i, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::MeanVarianceProblem;

    fn toy() -> MeanVarianceProblem {
        MeanVarianceProblem::from_rewards(Matrix::from_row_slice(2, 1, &[1.0, 3.0]), 0.0).unwrap()
    }

    #[test]
    fn inner_value_on_toy() {
        let p = toy();
        let mut q = QueryCounter::new();
        let g = inner_value(&p, &Vector::from_element(1, 2.0), &mut q).unwrap();
        assert_eq!(g.as_slice(), &[2.0, 4.0]);
        assert_eq!(q.g_evals, 2);
        let g0 = inner_value(&p, &Vector::zeros(1), &mut q).unwrap();
        assert_eq!(g0.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn single_component_average_is_the_component() {
        let rewards = Matrix::from_row_slice(1, 3, &[0.5, -1.0, 2.0]);
        let p = MeanVarianceProblem::from_rewards(rewards, 0.3).unwrap();
        let x = Vector::from_vec(vec![0.1, 0.2, -0.7]);
        let mut q = QueryCounter::new();
        assert_eq!(inner_value(&p, &x, &mut q).unwrap(), p.eval_g(0, &x));
        assert_eq!(inner_jacobian(&p, &x, &mut q).unwrap(), p.jac_g(0, &x));
    }

    #[test]
    fn inner_jacobian_on_toy_is_constant() {
        let p = toy();
        let mut q = QueryCounter::new();
        for x in [-3.0, 0.0, 2.5] {
            let j = inner_jacobian(&p, &Vector::from_element(1, x), &mut q).unwrap();
            assert_eq!(j, Matrix::from_row_slice(2, 1, &[1.0, 2.0]));
        }
        assert_eq!(q.g_jacs, 6);
    }

    #[test]
    fn toy_gradient_and_objective() {
        // P(x) = x² − 2x on the toy.
        let p = toy();
        let mut q = QueryCounter::new();
        let g0 = full_gradient(&p, &Vector::zeros(1), &mut q).unwrap();
        assert!((g0[0] + 2.0).abs() < 1e-15);
        let g1 = full_gradient(&p, &Vector::from_element(1, 1.0), &mut q).unwrap();
        assert!(g1[0].abs() < 1e-15);
        assert_eq!(q.g_evals, 4);
        assert_eq!(q.g_jacs, 4);
        assert_eq!(q.f_grads, 4);
        let p1 = objective(&p, &Vector::from_element(1, 1.0), &mut q).unwrap();
        assert!((p1 + 1.0).abs() < 1e-15);
        assert_eq!(objective(&p, &Vector::zeros(1), &mut q).unwrap(), 0.0);
    }

    #[test]
    fn regularizer_vanishes_at_origin() {
        let p = MeanVarianceProblem::from_rewards(Matrix::from_row_slice(2, 1, &[1.0, 3.0]), 5.0)
            .unwrap();
        assert_eq!(objective_unmetered(&p, &Vector::zeros(1)).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = toy();
        let mut q = QueryCounter::new();
        let bad = Vector::zeros(3);
        assert!(inner_value(&p, &bad, &mut q).is_err());
        assert!(inner_jacobian(&p, &bad, &mut q).is_err());
        assert!(full_gradient(&p, &bad, &mut q).is_err());
        assert!(objective(&p, &bad, &mut q).is_err());
        assert_eq!(q, QueryCounter::new());
    }

    #[test]
    fn full_gradient_matches_composed_calls_bitwise() {
        let p = crate::problems::generate_mean_variance(30, 5, 10.0, 0.2, 3).unwrap();
        let x = Vector::from_fn(5, |k, _| 0.1 * k as f64 - 0.2);
        let mut q = QueryCounter::new();
        let g = full_gradient(&p, &x, &mut q).unwrap();
        let jac = inner_jacobian(&p, &x, &mut q).unwrap();
        let y = inner_value(&p, &x, &mut q).unwrap();
        let mut s = Vector::zeros(p.dim_y());
        for i in 0..p.n() {
            s += p.grad_f(i, &y);
        }
        s /= p.n() as f64;
        let mut expected = jac.tr_mul(&s);
        expected.axpy(p.lambda(), &x, 1.0);
        assert_eq!(g, expected);
    }

    #[test]
    fn counter_totals() {
        let q = QueryCounter {
            g_evals: 3,
            g_jacs: 4,
            f_grads: 5,
            f_evals: 6,
        };
        assert_eq!(q.total(), 18);
        assert_eq!(q.g_queries(), 7);
    }
}
