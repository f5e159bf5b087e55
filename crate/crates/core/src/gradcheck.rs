//! Central-difference verification of a problem's derivative oracles.
//!
//! For each trial point `x`, every `∂G_j(x)` is compared column by column
//! against `(G_j(x + h e_k) − G_j(x − h e_k)) / 2h`, and every `∇F_i(y)` is
//! compared against the same stencil on `F_i` at `y = G(x)`. The step is
//! `h = 1e-6 · (1 + ‖point‖)`. The error of one comparison is
//! `‖fd − analytic‖_∞ / max(1, ‖analytic‖_∞)`.

use crate::error::{ensure_dim, Error, Result};
use crate::oracle::{inner_value, CompositionProblem, Matrix, QueryCounter, Vector};
use crate::par::Execution;

pub const DEFAULT_TOLERANCE: f64 = 1e-5;

fn step_for(point: &Vector) -> f64 {
    1e-6 * (1.0 + point.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    /// `∂G_j` against `G_j`.
    InnerJacobian,
    /// `∇F_i` against `F_i`.
    OuterGradient,
}

/// Worst comparison seen for one component index.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentError {
    pub oracle: Oracle,
    pub index: usize,
    pub max_rel_error: f64,
    /// Trial point (position in the input list) where the worst error occurred.
    pub worst_point: usize,
    /// Set when any evaluation returned NaN or ±∞.
    pub non_finite: bool,
}

impl ComponentError {
    fn new(oracle: Oracle, index: usize) -> Self {
        Self {
            oracle,
            index,
            max_rel_error: 0.0,
            worst_point: 0,
            non_finite: false,
        }
    }

    fn absorb(&mut self, err: f64, point: usize) {
        if !err.is_finite() {
            if !self.non_finite {
                self.worst_point = point;
            }
            self.non_finite = true;
        } else if err > self.max_rel_error {
            self.max_rel_error = err;
            if !self.non_finite {
                self.worst_point = point;
            }
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        !self.non_finite && self.max_rel_error <= tol
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub inner: Vec<ComponentError>,
    pub outer: Vec<ComponentError>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.components().all(|c| c.passes(self.tolerance))
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentError> {
        self.inner.iter().chain(self.outer.iter())
    }

    pub fn failures(&self) -> Vec<&ComponentError> {
        self.components()
            .filter(|c| !c.passes(self.tolerance))
            .collect()
    }

    /// Largest finite error over every component.
    pub fn max_error(&self) -> f64 {
        self.components()
            .map(|c| c.max_rel_error)
            .fold(0.0, f64::max)
    }
}

fn rel_error(fd: &[f64], analytic: &[f64]) -> f64 {
    let mut diff = 0.0_f64;
    let mut scale = 1.0_f64;
    for (a, b) in fd.iter().zip(analytic) {
        if !a.is_finite() || !b.is_finite() {
            return f64::NAN;
        }
        diff = diff.max((a - b).abs());
        scale = scale.max(b.abs());
    }
    diff / scale
}

fn jacobian_error<P: CompositionProblem + ?Sized>(problem: &P, j: usize, x: &Vector) -> f64 {
    let h = step_for(x);
    let analytic: Matrix = problem.jac_g(j, x);
    let mut fd = Matrix::zeros(problem.dim_y(), problem.dim_x());
    let mut probe = x.clone();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = problem.eval_g(j, &probe);
        probe[k] = x[k] - h;
        let down = problem.eval_g(j, &probe);
        probe[k] = x[k];
        fd.set_column(k, &((up - down) / (2.0 * h)));
    }
    rel_error(fd.as_slice(), analytic.as_slice())
}

fn gradient_error<P: CompositionProblem + ?Sized>(problem: &P, i: usize, y: &Vector) -> f64 {
    let h = step_for(y);
    let analytic = problem.grad_f(i, y);
    let mut fd = Vector::zeros(y.len());
    let mut probe = y.clone();
    for k in 0..y.len() {
        probe[k] = y[k] + h;
        let up = problem.eval_f(i, &probe);
        probe[k] = y[k] - h;
        let down = problem.eval_f(i, &probe);
        probe[k] = y[k];
        fd[k] = (up - down) / (2.0 * h);
    }
    rel_error(fd.as_slice(), analytic.as_slice())
}

/// Checks every `∂G_j` and `∇F_i` at each trial point. Non-finite values are
/// reported, not raised.
pub fn check_gradients<P: CompositionProblem + ?Sized>(
    problem: &P,
    trial_points: &[Vector],
    tol: f64,
) -> Result<GradCheckReport> {
    check_gradients_with(problem, trial_points, tol, Execution::Sequential)
}

/// [`check_gradients`] with the trial points spread according to `exec`.
pub fn check_gradients_with<P: CompositionProblem + ?Sized>(
    problem: &P,
    trial_points: &[Vector],
    tol: f64,
    exec: Execution,
) -> Result<GradCheckReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gradient-check tolerance must be positive, got {tol}"
        )));
    }
    for x in trial_points {
        ensure_dim("trial point", problem.dim_x(), x.len())?;
    }
    let (m, n) = (problem.m(), problem.n());

    // One row of errors per point: m inner errors followed by n outer errors.
    let rows: Vec<Vec<f64>> = exec.map(trial_points, |x| {
        let mut row = Vec::with_capacity(m + n);
        row.extend((0..m).map(|j| jacobian_error(problem, j, x)));
        let y =
            inner_value(problem, x, &mut QueryCounter::new()).expect("dimension already checked");
        row.extend((0..n).map(|i| gradient_error(problem, i, &y)));
        row
    });

    let mut inner: Vec<_> = (0..m)
        .map(|j| ComponentError::new(Oracle::InnerJacobian, j))
        .collect();
    let mut outer: Vec<_> = (0..n)
        .map(|i| ComponentError::new(Oracle::OuterGradient, i))
        .collect();
    for (p, row) in rows.iter().enumerate() {
        for (j, e) in row[..m].iter().enumerate() {
            inner[j].absorb(*e, p);
        }
        for (i, e) in row[m..].iter().enumerate() {
            outer[i].absorb(*e, p);
        }
    }
    Ok(GradCheckReport {
        tolerance: tol,
        inner,
        outer,
    })
}
