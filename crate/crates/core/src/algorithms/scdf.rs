//! Dual-free solvers.
//!
//! Each step picks an outer index `i`, forms a direction
//! `v = (∂G)ᵀ ∇F_i(G)` from exact or estimated inner quantities, and applies
//! the paired updates
//!
//! ```text
//! β_i ← β_i − λnη (v + β_i)
//! x   ← x   − η   (v + β_i)
//! ```
//!
//! Both use the same `v + β_i` (the value before the update), so
//! `λx = (1/n) Σ β_i` is preserved whenever it holds at the start. The duals
//! start at `β_i = λ x0`.

use crate::error::Result;
use crate::estimators::{saga_estimate, saga_update_table, svrg_estimate, SagaTable, SvrgSnapshot};
use crate::oracle::{
    component_direction, inner_jacobian, inner_value, CompositionProblem, QueryCounter, Vector,
};
use crate::trace::Trace;

use super::{check_start, require_positive_lambda, Recorder, RunConfig, Sampler};

/// The dual vectors `β_1..β_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub beta: Vec<Vector>,
}

impl DualState {
    /// `β_i = λ x0` for every `i`.
    pub fn coupled(n: usize, lambda: f64, x0: &Vector) -> Self {
        Self {
            beta: vec![x0 * lambda; n],
        }
    }

    pub fn mean(&self) -> Vector {
        let mut acc = Vector::zeros(self.beta[0].len());
        for b in &self.beta {
            acc += b;
        }
        acc / self.beta.len() as f64
    }

    /// `‖λx − mean(β)‖_∞ / max(‖λx‖_∞, ‖mean(β)‖_∞)`, zero when both vanish.
    pub fn coupling_violation(&self, lambda: f64, x: &Vector) -> f64 {
        let lx = x * lambda;
        let mean = self.mean();
        let scale = lx.amax().max(mean.amax());
        if scale == 0.0 {
            0.0
        } else {
            (lx - mean).amax() / scale
        }
    }

    /// Applies the paired update for component `i` with direction `v`,
    /// returning `‖v + β_i‖²`.
    fn step(&mut self, i: usize, v: &Vector, x: &mut Vector, lambda: f64, eta: f64) -> f64 {
        let n = self.beta.len() as f64;
        let mut d = v.clone();
        d += &self.beta[i];
        self.beta[i].axpy(-lambda * n * eta, &d, 1.0);
        x.axpy(-eta, &d, 1.0);
        d.norm_squared()
    }
}

/// Exact-inner dual-free solver: `G(x)` and `∂G(x)` are computed in full at
/// every step (`m + m` queries plus one outer gradient).
pub fn run_scdf<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &RunConfig,
    p_star: Option<f64>,
) -> Result<Trace> {
    cfg.validate()?;
    check_start(problem, x0)?;
    let lambda = require_positive_lambda(problem)?;
    let (n, m) = (problem.n(), problem.m());
    let mut sampler = Sampler::new(cfg.seed, cfg.batch_mode);
    let mut counter = QueryCounter::new();
    let mut rec = Recorder::new(problem, cfg, p_star);
    let mut x = x0.clone();
    let mut duals = DualState::coupled(n, lambda, x0);
    rec.record(0, &x, &counter, duals.coupling_violation(lambda, &x))?;

    let total = cfg.total_steps() as u64;
    let step_cost = 2 * m as u64;
    let mut t = 0;
    while t < total && rec.affordable(&counter, step_cost) {
        let i = sampler.outer(n);
        let y = inner_value(problem, &x, &mut counter)?;
        let jac = inner_jacobian(problem, &x, &mut counter)?;
        let v = component_direction(problem, i, &y, &jac, &mut counter);
        let sq = duals.step(i, &v, &mut x, lambda, cfg.eta);
        rec.direction(sq);
        t += 1;
        rec.after_step(t, &x, &counter, || duals.coupling_violation(lambda, &x))?;
    }
    let c = duals.coupling_violation(lambda, &x);
    rec.finish(t, &x, &counter, c)
}

/// SVRG-estimated dual-free solver.
///
/// Epoch `s` computes the snapshot at `x̃_s`, restarts the inner loop from
/// `(x̃_s, β̃_s)`, and ends with `x̃_{s+1}`, `β̃_{s+1}` set to the averages of
/// the `K` post-step iterates. The row recorded at an epoch boundary shows
/// the averaged point.
pub fn run_scdf_svrg<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &RunConfig,
    p_star: Option<f64>,
) -> Result<Trace> {
    cfg.validate()?;
    check_start(problem, x0)?;
    let lambda = require_positive_lambda(problem)?;
    let (n, m) = (problem.n(), problem.m());
    let a = cfg.effective_batch(m);
    let mut sampler = Sampler::new(cfg.seed, cfg.batch_mode);
    let mut counter = QueryCounter::new();
    let mut rec = Recorder::new(problem, cfg, p_star);

    let mut x_tilde = x0.clone();
    let mut beta_tilde = DualState::coupled(n, lambda, x0);
    rec.record(
        0,
        &x_tilde,
        &counter,
        beta_tilde.coupling_violation(lambda, &x_tilde),
    )?;

    let snapshot_cost = 2 * m as u64;
    let step_cost = 4 * a as u64;
    let mut t: u64 = 0;
    'epochs: for s in 0..cfg.epochs {
        // A snapshot is only worth taking if at least one step can follow.
        if cfg.inner == 0 || !rec.affordable(&counter, snapshot_cost + step_cost) {
            break;
        }
        let snapshot = SvrgSnapshot::new(problem, &x_tilde, s, &mut counter)?;
        let mut x = x_tilde.clone();
        let mut duals = beta_tilde.clone();
        let mut sum_x = Vector::zeros(x.len());
        let mut sum_beta = vec![Vector::zeros(x.len()); n];
        for k in 0..cfg.inner {
            if !rec.affordable(&counter, step_cost) {
                // Budget exhausted mid-epoch: the run ends at the current
                // iterate rather than a partial average.
                let c = duals.coupling_violation(lambda, &x);
                return rec.finish(t, &x, &counter, c);
            }
            let i = sampler.outer(n);
            let batch = sampler.batch(m, a)?;
            let (g_hat, jac_hat) = svrg_estimate(&snapshot, problem, &x, &batch, &mut counter)?;
            let v = component_direction(problem, i, &g_hat, &jac_hat, &mut counter);
            let sq = duals.step(i, &v, &mut x, lambda, cfg.eta);
            rec.direction(sq);
            sum_x += &x;
            for (acc, b) in sum_beta.iter_mut().zip(&duals.beta) {
                *acc += b;
            }
            t += 1;
            if k + 1 == cfg.inner {
                let inv = 1.0 / cfg.inner as f64;
                x_tilde = sum_x * inv;
                beta_tilde = DualState {
                    beta: sum_beta.into_iter().map(|b| b * inv).collect(),
                };
                rec.after_step(t, &x_tilde, &counter, || {
                    beta_tilde.coupling_violation(lambda, &x_tilde)
                })?;
                continue 'epochs;
            }
            rec.after_step(t, &x, &counter, || duals.coupling_violation(lambda, &x))?;
        }
    }
    let c = beta_tilde.coupling_violation(lambda, &x_tilde);
    rec.finish(t, &x_tilde, &counter, c)
}

/// SAGA-estimated dual-free solver. The table starts with every stored point
/// at `x0` (`m + m` queries); each step then costs `A + A` inner queries and
/// one outer gradient, and the batch entries of the table move to the
/// pre-step iterate.
pub fn run_scdf_saga<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    cfg: &RunConfig,
    p_star: Option<f64>,
) -> Result<Trace> {
    cfg.validate()?;
    check_start(problem, x0)?;
    let lambda = require_positive_lambda(problem)?;
    let (n, m) = (problem.n(), problem.m());
    let a = cfg.effective_batch(m);
    let mut sampler = Sampler::new(cfg.seed, cfg.batch_mode);
    let mut counter = QueryCounter::new();
    let mut rec = Recorder::new(problem, cfg, p_star);
    let mut x = x0.clone();
    let mut duals = DualState::coupled(n, lambda, x0);
    rec.record(0, &x, &counter, duals.coupling_violation(lambda, &x))?;

    let total = cfg.total_steps() as u64;
    let mut t = 0;
    let step_cost = 2 * a as u64;
    // Under a budget the table is only built if a step can follow it.
    let first = if total > 0 { step_cost } else { 0 };
    if rec.affordable(&counter, 2 * m as u64 + first) {
        let mut table = SagaTable::new(problem, x0, &mut counter)?;
        while t < total && rec.affordable(&counter, step_cost) {
            let i = sampler.outer(n);
            let batch = sampler.batch(m, a)?;
            let est = saga_estimate(&table, problem, &x, &batch, &mut counter)?;
            let v = component_direction(problem, i, &est.g_hat, &est.jac_hat, &mut counter);
            saga_update_table(&mut table, &x, &est)?;
            let sq = duals.step(i, &v, &mut x, lambda, cfg.eta);
            rec.direction(sq);
            t += 1;
            rec.after_step(t, &x, &counter, || duals.coupling_violation(lambda, &x))?;
        }
    }
    let c = duals.coupling_violation(lambda, &x);
    rec.finish(t, &x, &counter, c)
}
