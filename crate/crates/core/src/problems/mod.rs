//! Built-in benchmark problems and their optimum oracles.

mod bellman;
mod mean_variance;
mod text;

pub use bellman::{generate_bellman_toy, BellmanToyProblem, SplitBellmanProblem};
pub use mean_variance::{generate_mean_variance, log_spaced_spectrum, MeanVarianceProblem};
pub use text::{read_mean_variance, write_mean_variance};

use crate::error::Result;
use crate::oracle::{CompositionProblem, Matrix, Vector};

/// Minimizer and minimum value of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vector,
    pub value: f64,
}

/// Any of the built-in problems, behind one concrete type so the harness can
/// hold heterogeneous cells.
#[derive(Debug, Clone)]
pub enum BuiltinProblem {
    MeanVariance(MeanVarianceProblem),
    Bellman(BellmanToyProblem),
    SplitBellman(SplitBellmanProblem),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            BuiltinProblem::MeanVariance($p) => $e,
            BuiltinProblem::Bellman($p) => $e,
            BuiltinProblem::SplitBellman($p) => $e,
        }
    };
}

impl BuiltinProblem {
    pub fn optimum(&self) -> Result<Optimum> {
        dispatch!(self, p => p.optimum())
    }

    pub fn family(&self) -> &'static str {
        match self {
            BuiltinProblem::MeanVariance(_) => "mean-variance",
            BuiltinProblem::Bellman(_) => "bellman",
            BuiltinProblem::SplitBellman(_) => "split-bellman",
        }
    }
}

impl From<MeanVarianceProblem> for BuiltinProblem {
    fn from(p: MeanVarianceProblem) -> Self {
        BuiltinProblem::MeanVariance(p)
    }
}

impl From<BellmanToyProblem> for BuiltinProblem {
    fn from(p: BellmanToyProblem) -> Self {
        BuiltinProblem::Bellman(p)
    }
}

impl From<SplitBellmanProblem> for BuiltinProblem {
    fn from(p: SplitBellmanProblem) -> Self {
        BuiltinProblem::SplitBellman(p)
    }
}

impl CompositionProblem for BuiltinProblem {
    fn n(&self) -> usize {
        dispatch!(self, p => p.n())
    }
    fn m(&self) -> usize {
        dispatch!(self, p => p.m())
    }
    fn dim_x(&self) -> usize {
        dispatch!(self, p => p.dim_x())
    }
    fn dim_y(&self) -> usize {
        dispatch!(self, p => p.dim_y())
    }
    fn lambda(&self) -> f64 {
        dispatch!(self, p => p.lambda())
    }
    fn eval_g(&self, j: usize, x: &Vector) -> Vector {
        dispatch!(self, p => p.eval_g(j, x))
    }
    fn jac_g(&self, j: usize, x: &Vector) -> Matrix {
        dispatch!(self, p => p.jac_g(j, x))
    }
    fn eval_f(&self, i: usize, y: &Vector) -> f64 {
        dispatch!(self, p => p.eval_f(i, y))
    }
    fn grad_f(&self, i: usize, y: &Vector) -> Vector {
        dispatch!(self, p => p.grad_f(i, y))
    }
    fn axpy_g(&self, j: usize, x: &Vector, scale: f64, out: &mut Vector) {
        dispatch!(self, p => p.axpy_g(j, x, scale, out))
    }
    fn axpy_jac(&self, j: usize, x: &Vector, scale: f64, out: &mut Matrix) {
        dispatch!(self, p => p.axpy_jac(j, x, scale, out))
    }
}
