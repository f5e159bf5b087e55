//! Optimizers and the shared run loop plumbing.
//!
//! Every solver takes a problem, a starting point, a [`RunConfig`] and an
//! optional optimal value `P*`, and returns a [`Trace`]. Oracle calls are
//! metered through the run's own [`QueryCounter`]; objective values written
//! to the trace are computed off the meter.
//!
//! Iterations are counted as individual stochastic steps. Solvers without an
//! epoch structure run `epochs × inner` steps.

mod baselines;
mod scdf;

use std::time::Instant;

pub use baselines::{run_compositional_svrg, run_scgd, run_sgd, InnerMode, ScgdSchedule};
pub use scdf::{run_scdf, run_scdf_saga, run_scdf_svrg, DualState};

use crate::error::{Error, Result};
use crate::estimators::MiniBatch;
use crate::oracle::{objective_unmetered, CompositionProblem, QueryCounter, Vector};
use crate::rng::PrngStream;
use crate::trace::{Trace, TraceRow};

/// Objective values above this are treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// How inner mini-batches are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    /// `A` i.i.d. uniform draws with replacement.
    #[default]
    Sample,
    /// Every inner index exactly once (`A = m`). A testing aid.
    FullEnumeration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Step size η (α for SCGD's constant schedule is configured separately).
    pub eta: f64,
    /// Number of epochs `S`.
    pub epochs: usize,
    /// Inner iterations per epoch `K`.
    pub inner: usize,
    /// Mini-batch size `A`.
    pub batch: usize,
    /// Record a trace row every this many steps.
    pub record_every: usize,
    pub seed: u64,
    /// Inner-query budget; a step that would exceed it is not taken.
    pub max_queries: Option<u64>,
    /// Fill the `ms` column with wall-clock time. Off gives reproducible
    /// files.
    pub timing: bool,
    pub batch_mode: BatchMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            epochs: 1,
            inner: 100,
            batch: 1,
            record_every: 1,
            seed: 0,
            max_queries: None,
            timing: false,
            batch_mode: BatchMode::Sample,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!(
                "eta must be finite and nonnegative, got {}",
                self.eta
            )));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Total number of steps for solvers without epochs.
    pub fn total_steps(&self) -> usize {
        self.epochs * self.inner
    }

    /// Mini-batch size actually used on a problem with `m` inner components.
    pub fn effective_batch(&self, m: usize) -> usize {
        match self.batch_mode {
            BatchMode::Sample => self.batch,
            BatchMode::FullEnumeration => m,
        }
    }
}

/// The solvers known to the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Scdf,
    ScdfSvrg,
    ScdfSaga,
    Sgd(InnerMode),
    Scgd(ScgdSchedule),
    CompositionalSvrg,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Scdf => "scdf",
            Algorithm::ScdfSvrg => "scdf-svrg",
            Algorithm::ScdfSaga => "scdf-saga",
            Algorithm::Sgd(InnerMode::SingleSample) => "sgd",
            Algorithm::Sgd(InnerMode::ExactInner) => "sgd-exact",
            Algorithm::Scgd(_) => "scgd",
            Algorithm::CompositionalSvrg => "c-svrg",
        }
    }

    /// Whether the solver is one of the dual-free family, which can use the
    /// shifted (explicitly strongly convex) problem form.
    pub fn is_dual_free(&self) -> bool {
        matches!(
            self,
            Algorithm::Scdf | Algorithm::ScdfSvrg | Algorithm::ScdfSaga
        )
    }

    pub fn run<P: CompositionProblem + ?Sized>(
        &self,
        problem: &P,
        x0: &Vector,
        cfg: &RunConfig,
        p_star: Option<f64>,
    ) -> Result<Trace> {
        match *self {
            Algorithm::Scdf => run_scdf(problem, x0, cfg, p_star),
            Algorithm::ScdfSvrg => run_scdf_svrg(problem, x0, cfg, p_star),
            Algorithm::ScdfSaga => run_scdf_saga(problem, x0, cfg, p_star),
            Algorithm::Sgd(mode) => run_sgd(problem, x0, cfg, mode, p_star),
            Algorithm::Scgd(schedule) => run_scgd(problem, x0, cfg, schedule, p_star),
            Algorithm::CompositionalSvrg => run_compositional_svrg(problem, x0, cfg, p_star),
        }
    }

    /// Oracle counts of a run that completes without hitting a budget.
    pub fn expected_counter(&self, n: usize, m: usize, cfg: &RunConfig) -> QueryCounter {
        let (n, m) = (n as u64, m as u64);
        let a = cfg.effective_batch(m as usize) as u64;
        let (s, k) = (cfg.epochs as u64, cfg.inner as u64);
        let t = s * k;
        let (g, f) = match self {
            Algorithm::Scdf => (m * t, t),
            // Epochs without inner steps take no snapshot.
            Algorithm::ScdfSvrg | Algorithm::CompositionalSvrg if k == 0 => (0, 0),
            Algorithm::ScdfSvrg => (s * (m + 2 * a * k), t),
            Algorithm::ScdfSaga => (m + a * t, t),
            Algorithm::Sgd(InnerMode::SingleSample) => (t, t),
            Algorithm::Sgd(InnerMode::ExactInner) => (m * t, t),
            Algorithm::Scgd(_) => {
                return QueryCounter {
                    g_evals: 1 + t,
                    g_jacs: t,
                    f_grads: t,
                    f_evals: 0,
                }
            }
            Algorithm::CompositionalSvrg => (s * (m + 2 * a * k), s * (n + 2 * k)),
        };
        QueryCounter {
            g_evals: g,
            g_jacs: g,
            f_grads: f,
            f_evals: 0,
        }
    }
}

/// Independent index streams for the outer component and the inner batch.
pub(crate) struct Sampler {
    outer: PrngStream,
    batch: PrngStream,
    mode: BatchMode,
}

impl Sampler {
    pub(crate) fn new(seed: u64, mode: BatchMode) -> Self {
        Self {
            outer: PrngStream::new(seed, "outer"),
            batch: PrngStream::new(seed, "batch"),
            mode,
        }
    }

    pub(crate) fn outer(&mut self, n: usize) -> usize {
        self.outer.index(n)
    }

    pub(crate) fn inner(&mut self, m: usize) -> usize {
        self.batch.index(m)
    }

    pub(crate) fn batch(&mut self, m: usize, a: usize) -> Result<MiniBatch> {
        match self.mode {
            BatchMode::Sample => MiniBatch::sample(&mut self.batch, m, a),
            BatchMode::FullEnumeration => Ok(MiniBatch::full(m)),
        }
    }
}

/// Collects trace rows and watches for divergence.
pub(crate) struct Recorder<'a, P: ?Sized> {
    problem: &'a P,
    p_star: Option<f64>,
    record_every: u64,
    budget: Option<u64>,
    start: Option<Instant>,
    trace: Trace,
    sq_sum: f64,
    sq_count: u64,
    last_recorded: Option<u64>,
}

impl<'a, P: CompositionProblem + ?Sized> Recorder<'a, P> {
    pub(crate) fn new(problem: &'a P, cfg: &RunConfig, p_star: Option<f64>) -> Self {
        Self {
            problem,
            p_star,
            record_every: cfg.record_every as u64,
            budget: cfg.max_queries,
            start: cfg.timing.then(Instant::now),
            trace: Trace::new(),
            sq_sum: 0.0,
            sq_count: 0,
            last_recorded: None,
        }
    }

    /// True when spending `cost` more inner queries stays within budget.
    pub(crate) fn affordable(&self, counter: &QueryCounter, cost: u64) -> bool {
        self.budget
            .is_none_or(|b| counter.g_queries().saturating_add(cost) <= b)
    }

    /// Registers the squared norm of a step direction.
    pub(crate) fn direction(&mut self, sq_norm: f64) {
        self.sq_sum += sq_norm;
        self.sq_count += 1;
    }

    /// Checks the iterate after step `t` and records a row when one is due.
    pub(crate) fn after_step(
        &mut self,
        t: u64,
        x: &Vector,
        counter: &QueryCounter,
        coupling: impl FnOnce() -> f64,
    ) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(self.diverged(t, x, counter, "non-finite iterate".into()));
        }
        if t.is_multiple_of(self.record_every) {
            self.record(t, x, counter, coupling())?;
        }
        Ok(())
    }

    pub(crate) fn record(
        &mut self,
        t: u64,
        x: &Vector,
        counter: &QueryCounter,
        coupling: f64,
    ) -> Result<()> {
        if self.last_recorded == Some(t) {
            return Ok(());
        }
        let objective = objective_unmetered(self.problem, x)?;
        if !objective.is_finite() || objective > DIVERGENCE_THRESHOLD {
            return Err(self.diverged(t, x, counter, format!("objective {objective:e}")));
        }
        let grad_est_sq = if self.sq_count == 0 {
            f64::NAN
        } else {
            self.sq_sum / self.sq_count as f64
        };
        self.sq_sum = 0.0;
        self.sq_count = 0;
        let ms = self.start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        self.trace.rows.push(TraceRow {
            iter: t,
            queries: counter.g_queries(),
            objective,
            gap: self.p_star.map_or(f64::NAN, |p| objective - p),
            grad_est_sq,
            ms,
            coupling,
        });
        self.last_recorded = Some(t);
        Ok(())
    }

    fn diverged(&mut self, t: u64, x: &Vector, counter: &QueryCounter, reason: String) -> Error {
        let mut trace = std::mem::take(&mut self.trace);
        trace.counter = *counter;
        trace.x = x.clone();
        Error::Divergence {
            iteration: t,
            reason,
            trace: Box::new(trace),
        }
    }

    /// Records the final row (if not already recorded) and returns the trace.
    pub(crate) fn finish(
        mut self,
        t: u64,
        x: &Vector,
        counter: &QueryCounter,
        coupling: f64,
    ) -> Result<Trace> {
        self.record(t, x, counter, coupling)?;
        self.trace.counter = *counter;
        self.trace.x = x.clone();
        Ok(self.trace)
    }
}

/// The monitored squared gradient-estimate norms of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMonitor {
    /// One value per recorded row after the first.
    pub series: Vec<f64>,
    pub initial: f64,
    pub last: f64,
    /// `last / initial`.
    pub ratio: f64,
    /// `last ≥ initial`: the estimates did not shrink over the run.
    pub non_decreasing: bool,
}

/// Extracts the series of mean squared step-direction norms recorded in
/// `trace`. Empty traces give an empty series with NaN summary values.
pub fn gradient_estimate_norm_monitor(trace: &Trace) -> GradientMonitor {
    let series: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| r.grad_est_sq)
        .filter(|v| !v.is_nan())
        .collect();
    let initial = series.first().copied().unwrap_or(f64::NAN);
    let last = series.last().copied().unwrap_or(f64::NAN);
    GradientMonitor {
        ratio: last / initial,
        non_decreasing: last >= initial,
        initial,
        last,
        series,
    }
}

pub(crate) fn require_positive_lambda<P: CompositionProblem + ?Sized>(problem: &P) -> Result<f64> {
    let lambda = problem.lambda();
    if lambda > 0.0 {
        Ok(lambda)
    } else {
        Err(Error::Config(format!(
            "dual-free solvers need λ > 0 (got {lambda})"
        )))
    }
}

pub(crate) fn check_start<P: CompositionProblem + ?Sized>(problem: &P, x0: &Vector) -> Result<()> {
    crate::error::ensure_dim("x0", problem.dim_x(), x0.len())
}
