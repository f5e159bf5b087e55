//! Comparison methods: plain SGD, SCGD and compositional SVRG.

use crate::error::{Error, Result};
use crate::estimators::{svrg_estimate, SvrgSnapshot};
use crate::oracle::{
    component_direction, inner_jacobian, inner_value, outer_gradient, CompositionProblem,
    QueryCounter, Vector,
};
use crate::trace::Trace;

use super::{check_start, Recorder, RunConfig, Sampler};

/// How SGD obtains the inner value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMode {
    /// One sampled `G_j`, `∂G_j` per step. Biased.
    SingleSample,
    /// Exact `G(x)`, `∂G(x)` per step.
    ExactInner,
}

/// Step-size schedules for SCGD, indexed from `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScgdSchedule {
    Constant {
        alpha: f64,
        beta: f64,
    },
    /// `α_k = a k^{-3/4}`, `β_k = b k^{-1/2}`.
    Polynomial {
        a: f64,
        b: f64,
    },
}

impl ScgdSchedule {
    pub fn validate(&self) -> Result<()> {
        let (step, weight) = match *self {
            ScgdSchedule::Constant { alpha, beta } => (alpha, beta),
            ScgdSchedule::Polynomial { a, b } => (a, b),
        };
        if !(step >= 0.0) || !step.is_finite() {
            return Err(Error::Config(format!(
                "SCGD step must be finite and nonnegative, got {step}"
            )));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::Config(format!(
                "SCGD averaging weight must lie in (0, 1], got {weight}"
            )));
        }
        Ok(())
    }

    /// `(α_k, β_k)` for `k ≥ 1`.
    pub fn at(&self, k: u64) -> (f64, f64) {
        match *self {
            ScgdSchedule::Constant { alpha, beta } => (alpha, beta),
            ScgdSchedule::Polynomial { a, b } => {
                let k = k as f64;
                (a * k.powf(-0.75), b / k.sqrt())
            }
        }
    }
}

/// Stochastic gradient descent on the composition, with either a single
/// sampled inner component or the exact inner map.
pub fn run_sgd<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &RunConfig,
    mode: InnerMode,
    p_star: Option<f64>,
) -> Result<Trace> {
    cfg.validate()?;
    check_start(problem, x0)?;
    let (n, m, lambda) = (problem.n(), problem.m(), problem.lambda());
    let mut sampler = Sampler::new(cfg.seed, cfg.batch_mode);
    let mut counter = QueryCounter::new();
    let mut rec = Recorder::new(problem, cfg, p_star);
    let mut x = x0.clone();
    rec.record(0, &x, &counter, f64::NAN)?;

    let step_cost = match mode {
        InnerMode::SingleSample => 2,
        InnerMode::ExactInner => 2 * m as u64,
    };
    let total = cfg.total_steps() as u64;
    let mut t = 0;
    while t < total && rec.affordable(&counter, step_cost) {
        let i = sampler.outer(n);
        let (y, jac) = match mode {
            InnerMode::SingleSample => {
                let j = sampler.inner(m);
                counter.g_evals += 1;
                counter.g_jacs += 1;
                (problem.eval_g(j, &x), problem.jac_g(j, &x))
            }
            InnerMode::ExactInner => (
                inner_value(problem, &x, &mut counter)?,
                inner_jacobian(problem, &x, &mut counter)?,
            ),
        };
        let mut d = component_direction(problem, i, &y, &jac, &mut counter);
        d.axpy(lambda, &x, 1.0);
        rec.direction(d.norm_squared());
        x.axpy(-cfg.eta, &d, 1.0);
        t += 1;
        rec.after_step(t, &x, &counter, || f64::NAN)?;
    }
    rec.finish(t, &x, &counter, f64::NAN)
}

/// Stochastic compositional gradient descent: a running estimate
/// `y ≈ G(x)` is updated by a convex combination with one sampled `G_j`,
/// and `x` moves along `∂G_jᵀ ∇F_i(y) + λx`.
pub fn run_scgd<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &RunConfig,
    schedule: ScgdSchedule,
    p_star: Option<f64>,
) -> Result<Trace> {
    cfg.validate()?;
    schedule.validate()?;
    check_start(problem, x0)?;
    let (n, m, lambda) = (problem.n(), problem.m(), problem.lambda());
    let mut sampler = Sampler::new(cfg.seed, cfg.batch_mode);
    let mut counter = QueryCounter::new();
    let mut rec = Recorder::new(problem, cfg, p_star);
    let mut x = x0.clone();
    rec.record(0, &x, &counter, f64::NAN)?;

    let total = cfg.total_steps() as u64;
    let mut t = 0;
    if rec.affordable(&counter, 1) {
        let j0 = sampler.inner(m);
        let mut y = problem.eval_g(j0, &x);
        counter.g_evals += 1;
        while t < total && rec.affordable(&counter, 2) {
            let (alpha, beta) = schedule.at(t + 1);
            let i = sampler.outer(n);
            let j = sampler.inner(m);
            let gj = problem.eval_g(j, &x);
            let jac = problem.jac_g(j, &x);
            counter.g_evals += 1;
            counter.g_jacs += 1;
            y *= 1.0 - beta;
            y.axpy(beta, &gj, 1.0);
            let mut d = component_direction(problem, i, &y, &jac, &mut counter);
            d.axpy(lambda, &x, 1.0);
            rec.direction(d.norm_squared());
            x.axpy(-alpha, &d, 1.0);
            t += 1;
            rec.after_step(t, &x, &counter, || f64::NAN)?;
        }
    }
    rec.finish(t, &x, &counter, f64::NAN)
}

/// Compositional SVRG. Each epoch takes a snapshot at the current iterate
/// (`m + m` inner queries and `n` outer gradients for `∇P_F(x̃)`), then runs
/// `K` steps along
///
/// ```text
/// (∂Ĝ)ᵀ∇F_i(Ĝ) − (∂G(x̃))ᵀ∇F_i(G(x̃)) + ∇P_F(x̃) + λx
/// ```
///
/// with `Ĝ`, `∂Ĝ` the SVRG estimates (`4A` inner queries, two outer
/// gradients per step).
pub fn run_compositional_svrg<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &RunConfig,
    p_star: Option<f64>,
) -> Result<Trace> {
    cfg.validate()?;
    check_start(problem, x0)?;
    let (n, m, lambda) = (problem.n(), problem.m(), problem.lambda());
    let a = cfg.effective_batch(m);
    let mut sampler = Sampler::new(cfg.seed, cfg.batch_mode);
    let mut counter = QueryCounter::new();
    let mut rec = Recorder::new(problem, cfg, p_star);
    let mut x = x0.clone();
    rec.record(0, &x, &counter, f64::NAN)?;

    let snapshot_cost = 2 * m as u64;
    let step_cost = 4 * a as u64;
    let mut t = 0;
    'epochs: for s in 0..cfg.epochs {
        // A snapshot is only worth taking if at least one step can follow.
        if cfg.inner == 0 || !rec.affordable(&counter, snapshot_cost + step_cost) {
            break;
        }
        let snapshot = SvrgSnapshot::new(problem, &x, s, &mut counter)?;
        let full =
            snapshot
                .jac_tilde
                .tr_mul(&outer_gradient(problem, &snapshot.g_tilde, &mut counter)?);
        for _ in 0..cfg.inner {
            if !rec.affordable(&counter, step_cost) {
                break 'epochs;
            }
            let i = sampler.outer(n);
            let batch = sampler.batch(m, a)?;
            let (g_hat, jac_hat) = svrg_estimate(&snapshot, problem, &x, &batch, &mut counter)?;
            let mut d = component_direction(problem, i, &g_hat, &jac_hat, &mut counter);
            d -= component_direction(
                problem,
                i,
                &snapshot.g_tilde,
                &snapshot.jac_tilde,
                &mut counter,
            );
            d += &full;
            d.axpy(lambda, &x, 1.0);
            rec.direction(d.norm_squared());
            x.axpy(-cfg.eta, &d, 1.0);
            t += 1;
            rec.after_step(t, &x, &counter, || f64::NAN)?;
        }
    }
    rec.finish(t, &x, &counter, f64::NAN)
}
