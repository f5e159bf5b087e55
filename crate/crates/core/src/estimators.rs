//! Variance-reduced estimators of the inner map `G` and its Jacobian `∂G`.
//!
//! Both estimators correct a mini-batch average by a control variate whose
//! full average is known:
//!
//! ```text
//! SVRG:  Ĝ = G(x̃) + (1/A) Σ_{j∈𝒜} (G_j(x) − G_j(x̃))
//! SAGA:  Ĝ = G̃    + (1/A) Σ_{j∈𝒜} (G_j(x) − G_j(φ_j)),   G̃ = (1/m) Σ_j G_j(φ_j)
//! ```
//!
//! and identically for `∂Ĝ`. Mini-batches are drawn with replacement.

use crate::error::{ensure_dim, Error, Result};
use crate::oracle::{
    inner_jacobian, inner_value, CompositionProblem, Matrix, QueryCounter, Vector,
};
use crate::par::Execution;
use crate::rng::PrngStream;

/// Number of per-entry table updates between from-scratch recomputations of
/// the SAGA averages.
pub const SAGA_REFRESH_INTERVAL: u64 = 100_000;

/// `A` indices into `[m]`, duplicates allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatch {
    indices: Vec<usize>,
}

impl MiniBatch {
    /// Draws `a` indices i.i.d. uniformly from `[m]`.
    pub fn sample(stream: &mut PrngStream, m: usize, a: usize) -> Result<Self> {
        if m == 0 || a == 0 {
            return Err(Error::InvalidArgument(format!(
                "mini-batch needs m ≥ 1 and A ≥ 1 (got m={m}, A={a})"
            )));
        }
        Ok(Self {
            indices: (0..a).map(|_| stream.index(m)).collect(),
        })
    }

    pub fn from_indices(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument(
                "mini-batch must not be empty".into(),
            ));
        }
        if let Some(bad) = indices.iter().find(|&&j| j >= m) {
            return Err(Error::InvalidArgument(format!(
                "batch index {bad} out of range for m = {m}"
            )));
        }
        Ok(Self { indices })
    }

    /// Every index of `[m]` exactly once, in order.
    pub fn full(m: usize) -> Self {
        Self {
            indices: (0..m).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn check<P: CompositionProblem + ?Sized>(&self, problem: &P) -> Result<()> {
        let m = problem.m();
        match self.indices.iter().find(|&&j| j >= m) {
            Some(bad) => Err(Error::InvalidArgument(format!(
                "batch index {bad} out of range for m = {m}"
            ))),
            None => Ok(()),
        }
    }
}

/// Exact inner value and Jacobian frozen at a reference point.
#[derive(Debug, Clone)]
pub struct SvrgSnapshot {
    pub x_tilde: Vector,
    pub g_tilde: Vector,
    pub jac_tilde: Matrix,
    pub epoch: usize,
}

impl SvrgSnapshot {
    /// Computes `G(x̃)` and `∂G(x̃)`, metering `m + m` queries.
    pub fn new<P: CompositionProblem + ?Sized>(
        problem: &P,
        x_tilde: &Vector,
        epoch: usize,
        counter: &mut QueryCounter,
    ) -> Result<Self> {
        let g_tilde = inner_value(problem, x_tilde, counter)?;
        let jac_tilde = inner_jacobian(problem, x_tilde, counter)?;
        Ok(Self {
            x_tilde: x_tilde.clone(),
            g_tilde,
            jac_tilde,
            epoch,
        })
    }
}

/// SVRG estimate of `(G(x), ∂G(x))`. Meters `2A` value and `2A` Jacobian
/// queries.
pub fn svrg_estimate<P: CompositionProblem + ?Sized>(
    snapshot: &SvrgSnapshot,
    problem: &P,
    x: &Vector,
    batch: &MiniBatch,
    counter: &mut QueryCounter,
) -> Result<(Vector, Matrix)> {
    ensure_dim("x", problem.dim_x(), x.len())?;
    ensure_dim("snapshot", problem.dim_x(), snapshot.x_tilde.len())?;
    batch.check(problem)?;
    // Each pair is evaluated into its own buffers and differenced, and the
    // differences are summed before scaling, so x = x̃ cancels exactly.
    let (dy, dx) = (problem.dim_y(), problem.dim_x());
    let mut dg = Vector::zeros(dy);
    let mut djac = Matrix::zeros(dy, dx);
    let (mut g_new, mut g_old) = (Vector::zeros(dy), Vector::zeros(dy));
    let (mut j_new, mut j_old) = (Matrix::zeros(dy, dx), Matrix::zeros(dy, dx));
    for &j in batch.indices() {
        g_new.fill(0.0);
        g_old.fill(0.0);
        j_new.fill(0.0);
        j_old.fill(0.0);
        problem.axpy_g(j, x, 1.0, &mut g_new);
        problem.axpy_g(j, &snapshot.x_tilde, 1.0, &mut g_old);
        problem.axpy_jac(j, x, 1.0, &mut j_new);
        problem.axpy_jac(j, &snapshot.x_tilde, 1.0, &mut j_old);
        dg.zip_zip_apply(&g_new, &g_old, |d, a, b| *d += a - b);
        djac.zip_zip_apply(&j_new, &j_old, |d, a, b| *d += a - b);
    }
    let a = batch.len() as u64;
    counter.g_evals += 2 * a;
    counter.g_jacs += 2 * a;
    let inv = 1.0 / batch.len() as f64;
    let mut g_hat = snapshot.g_tilde.clone();
    g_hat.axpy(inv, &dg, 1.0);
    let mut jac_hat = snapshot.jac_tilde.clone();
    jac_hat.zip_apply(&djac, |o, d| *o += inv * d);
    Ok((g_hat, jac_hat))
}

/// Per-index stored points with cached values and maintained averages.
#[derive(Debug, Clone)]
pub struct SagaTable {
    phi: Vec<Vector>,
    g_cache: Vec<Vector>,
    jac_cache: Vec<Matrix>,
    g_avg: Vector,
    jac_avg: Matrix,
    updates: u64,
}

/// Output of [`saga_estimate`]: the estimate plus the fresh evaluations at
/// `x`, which [`saga_update_table`] writes into the table.
#[derive(Debug, Clone)]
pub struct SagaEstimate {
    pub g_hat: Vector,
    pub jac_hat: Matrix,
    fresh: Vec<(usize, Vector, Matrix)>,
}

impl SagaTable {
    /// Sets every `φ_j = x0`. Meters `m + m` queries.
    pub fn new<P: CompositionProblem + ?Sized>(
        problem: &P,
        x0: &Vector,
        counter: &mut QueryCounter,
    ) -> Result<Self> {
        ensure_dim("x0", problem.dim_x(), x0.len())?;
        let m = problem.m();
        let g_cache: Vec<Vector> = (0..m).map(|j| problem.eval_g(j, x0)).collect();
        let jac_cache: Vec<Matrix> = (0..m).map(|j| problem.jac_g(j, x0)).collect();
        counter.g_evals += m as u64;
        counter.g_jacs += m as u64;
        let mut table = Self {
            phi: vec![x0.clone(); m],
            g_cache,
            jac_cache,
            g_avg: Vector::zeros(problem.dim_y()),
            jac_avg: Matrix::zeros(problem.dim_y(), problem.dim_x()),
            updates: 0,
        };
        table.refresh_averages();
        Ok(table)
    }

    pub fn m(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self, j: usize) -> &Vector {
        &self.phi[j]
    }

    pub fn g_cache(&self, j: usize) -> &Vector {
        &self.g_cache[j]
    }

    pub fn jac_cache(&self, j: usize) -> &Matrix {
        &self.jac_cache[j]
    }

    /// Incrementally maintained `G̃`.
    pub fn g_avg(&self) -> &Vector {
        &self.g_avg
    }

    /// Incrementally maintained `∂G̃`.
    pub fn jac_avg(&self) -> &Matrix {
        &self.jac_avg
    }

    /// Per-entry updates applied so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Averages recomputed from the caches.
    pub fn averages_from_scratch(&self) -> (Vector, Matrix) {
        let m = self.m() as f64;
        let mut g = Vector::zeros(self.g_avg.len());
        let mut jac = Matrix::zeros(self.jac_avg.nrows(), self.jac_avg.ncols());
        for (gj, jj) in self.g_cache.iter().zip(&self.jac_cache) {
            g += gj;
            jac += jj;
        }
        (g / m, jac / m)
    }

    fn refresh_averages(&mut self) {
        let (g, jac) = self.averages_from_scratch();
        self.g_avg = g;
        self.jac_avg = jac;
    }

    /// Largest absolute entry difference between the maintained averages and
    /// a from-scratch recomputation.
    pub fn average_drift(&self) -> f64 {
        let (g, jac) = self.averages_from_scratch();
        let dg = (&g - &self.g_avg).amax();
        let dj = (&jac - &self.jac_avg).amax();
        dg.max(dj)
    }

    /// Largest deviation of any cache entry from a fresh evaluation at its
    /// stored point. Zero for a coherent table. Unmetered.
    pub fn cache_incoherence<P: CompositionProblem + ?Sized>(&self, problem: &P) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.m() {
            let g = problem.eval_g(j, &self.phi[j]);
            let jac = problem.jac_g(j, &self.phi[j]);
            worst = worst
                .max((&g - &self.g_cache[j]).amax())
                .max((&jac - &self.jac_cache[j]).amax());
        }
        worst
    }

    fn write_entry(&mut self, j: usize, x: &Vector, g: &Vector, jac: &Matrix) {
        let inv_m = 1.0 / self.m() as f64;
        self.g_avg
            .zip_zip_apply(g, &self.g_cache[j], |a, new, old| *a += inv_m * (new - old));
        let old = &self.jac_cache[j];
        self.jac_avg
            .zip_zip_apply(jac, old, |a, new, old| *a += inv_m * (new - old));
        self.phi[j].copy_from(x);
        self.g_cache[j].copy_from(g);
        self.jac_cache[j].copy_from(jac);
        self.updates += 1;
        if self.updates.is_multiple_of(SAGA_REFRESH_INTERVAL) {
            self.refresh_averages();
        }
    }
}

/// SAGA estimate of `(G(x), ∂G(x))` from the table's cached values. Meters
/// `A` value and `A` Jacobian queries.
pub fn saga_estimate<P: CompositionProblem + ?Sized>(
    table: &SagaTable,
    problem: &P,
    x: &Vector,
    batch: &MiniBatch,
    counter: &mut QueryCounter,
) -> Result<SagaEstimate> {
    ensure_dim("x", problem.dim_x(), x.len())?;
    ensure_dim("table size", problem.m(), table.m())?;
    batch.check(problem)?;
    let mut dg = Vector::zeros(problem.dim_y());
    let mut djac = Matrix::zeros(problem.dim_y(), problem.dim_x());
    let mut fresh = Vec::with_capacity(batch.len());
    for &j in batch.indices() {
        let g = problem.eval_g(j, x);
        let jac = problem.jac_g(j, x);
        dg.zip_zip_apply(&g, &table.g_cache[j], |d, a, b| *d += a - b);
        djac.zip_zip_apply(&jac, &table.jac_cache[j], |d, a, b| *d += a - b);
        fresh.push((j, g, jac));
    }
    let a = batch.len() as u64;
    counter.g_evals += a;
    counter.g_jacs += a;
    let inv = 1.0 / batch.len() as f64;
    let mut g_hat = table.g_avg.clone();
    g_hat.axpy(inv, &dg, 1.0);
    let mut jac_hat = table.jac_avg.clone();
    jac_hat.zip_apply(&djac, |o, d| *o += inv * d);
    Ok(SagaEstimate {
        g_hat,
        jac_hat,
        fresh,
    })
}

/// Sets `φ_j = x` for every batch index in order, reusing the evaluations
/// carried by `estimate`. No oracle queries are made.
pub fn saga_update_table(table: &mut SagaTable, x: &Vector, estimate: &SagaEstimate) -> Result<()> {
    if let Some((_, g, jac)) = estimate.fresh.first() {
        ensure_dim("x", table.phi[0].len(), x.len())?;
        ensure_dim("cached value", table.g_avg.len(), g.len())?;
        ensure_dim("cached Jacobian", table.jac_avg.len(), jac.len())?;
    }
    for (j, g, jac) in &estimate.fresh {
        if *j >= table.m() {
            return Err(Error::InvalidArgument(format!(
                "batch index {j} out of range for m = {}",
                table.m()
            )));
        }
        table.write_entry(*j, x, g, jac);
    }
    Ok(())
}

/// All `m^a` ordered batches of size `a`, in lexicographic order.
pub fn all_batches(m: usize, a: usize) -> Vec<MiniBatch> {
    let total = m.pow(a as u32);
    (0..total)
        .map(|mut code| {
            let mut indices = vec![0; a];
            for slot in indices.iter_mut().rev() {
                *slot = code % m;
                code /= m;
            }
            MiniBatch { indices }
        })
        .collect()
}

/// Averages an estimator over every ordered batch of size `a`. The
/// per-batch work is spread according to `exec`; the reduction is
/// sequential, so the result does not depend on the mode.
pub fn exhaustive_mean<F>(m: usize, a: usize, exec: Execution, estimate: F) -> (Vector, Matrix)
where
    F: Fn(&MiniBatch) -> (Vector, Matrix) + Sync + Send,
{
    let batches = all_batches(m, a);
    let parts = exec.map(&batches, estimate);
    let count = parts.len() as f64;
    let mut it = parts.into_iter();
    let (mut g, mut jac) = it.next().expect("at least one batch");
    for (gb, jb) in it {
        g += gb;
        jac += jb;
    }
    (g / count, jac / count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_bellman_toy, generate_mean_variance};
    use proptest::prelude::*;

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn sampling_is_in_range_and_reproducible() {
        let mut s1 = PrngStream::new(4, "batch");
        let mut s2 = PrngStream::new(4, "batch");
        let a = MiniBatch::sample(&mut s1, 7, 50).unwrap();
        let b = MiniBatch::sample(&mut s2, 7, 50).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.indices().iter().all(|&j| j < 7));
        assert!(MiniBatch::sample(&mut s1, 0, 3).is_err());
        assert!(MiniBatch::from_indices(vec![7], 7).is_err());
    }

    #[test]
    fn all_batches_enumerates_lexicographically() {
        let b = all_batches(3, 2);
        assert_eq!(b.len(), 9);
        assert_eq!(b[0].indices(), &[0, 0]);
        assert_eq!(b[5].indices(), &[1, 2]);
        assert_eq!(b[8].indices(), &[2, 2]);
    }

    #[test]
    fn svrg_at_snapshot_is_exact() {
        let p = generate_mean_variance(6, 3, 4.0, 0.1, 2).unwrap();
        let mut q = QueryCounter::new();
        let x = PrngStream::new(1, "x").gaussian_vector(3);
        let snap = SvrgSnapshot::new(&p, &x, 0, &mut q).unwrap();
        let batch = MiniBatch::from_indices(vec![1, 1, 4], 6).unwrap();
        let (g, jac) = svrg_estimate(&snap, &p, &x, &batch, &mut q).unwrap();
        assert_eq!(g, snap.g_tilde);
        assert_eq!(jac, snap.jac_tilde);
        assert_eq!(q.g_evals, 6 + 6);
        assert_eq!(q.g_jacs, 6 + 6);
    }

    #[test]
    fn svrg_full_batch_recovers_inner() {
        let p = generate_bellman_toy(5, 3, 4, 0.1, 3).unwrap();
        let mut s = PrngStream::new(2, "x");
        let (x, xt) = (s.gaussian_vector(4), s.gaussian_vector(4));
        let mut q = QueryCounter::new();
        let snap = SvrgSnapshot::new(&p, &xt, 0, &mut q).unwrap();
        let (g, jac) = svrg_estimate(&snap, &p, &x, &MiniBatch::full(5), &mut q).unwrap();
        let g_exact = inner_value(&p, &x, &mut q).unwrap();
        let j_exact = inner_jacobian(&p, &x, &mut q).unwrap();
        assert!(close(&g, &g_exact, 1e-12));
        assert!((jac - j_exact).amax() <= 1e-12);
    }

    #[test]
    fn saga_with_table_at_query_point_is_exact() {
        let p = generate_mean_variance(5, 2, 3.0, 0.1, 9).unwrap();
        let x = Vector::from_vec(vec![0.3, -1.2]);
        let mut q = QueryCounter::new();
        let table = SagaTable::new(&p, &x, &mut q).unwrap();
        let est = saga_estimate(
            &table,
            &p,
            &x,
            &MiniBatch::from_indices(vec![2, 0], 5).unwrap(),
            &mut q,
        )
        .unwrap();
        assert_eq!(&est.g_hat, table.g_avg());
        assert_eq!(&est.jac_hat, table.jac_avg());
        let g_exact = inner_value(&p, &x, &mut QueryCounter::new()).unwrap();
        assert!(close(&est.g_hat, &g_exact, 1e-14));
        assert_eq!(q.g_evals, 5 + 2);
    }

    #[test]
    fn saga_update_with_unchanged_points_keeps_table() {
        let p = generate_bellman_toy(4, 2, 3, 0.1, 5).unwrap();
        let x = Vector::from_vec(vec![1.0, 2.0, -1.0]);
        let mut q = QueryCounter::new();
        let mut table = SagaTable::new(&p, &x, &mut q).unwrap();
        let before = table.clone();
        let batch = MiniBatch::from_indices(vec![0, 3], 4).unwrap();
        let est = saga_estimate(&table, &p, &x, &batch, &mut q).unwrap();
        let counted = q;
        saga_update_table(&mut table, &x, &est).unwrap();
        assert_eq!(q, counted);
        assert_eq!(table.g_avg(), before.g_avg());
        assert_eq!(table.jac_avg(), before.jac_avg());
    }

    #[test]
    fn saga_single_update_matches_recomputation() {
        let p = generate_mean_variance(6, 3, 5.0, 0.1, 1).unwrap();
        let mut s = PrngStream::new(3, "x");
        let mut q = QueryCounter::new();
        let mut table = SagaTable::new(&p, &s.gaussian_vector(3), &mut q).unwrap();
        let x = s.gaussian_vector(3);
        let est = saga_estimate(
            &table,
            &p,
            &x,
            &MiniBatch::from_indices(vec![4, 1], 6).unwrap(),
            &mut q,
        )
        .unwrap();
        saga_update_table(&mut table, &x, &est).unwrap();
        assert!(table.average_drift() <= 1e-12);
        assert_eq!(table.phi(4), &x);
        assert_eq!(table.cache_incoherence(&p), 0.0);
    }

    #[test]
    fn duplicate_batch_entry_is_idempotent() {
        let p = generate_mean_variance(6, 3, 5.0, 0.1, 1).unwrap();
        let mut s = PrngStream::new(3, "x");
        let x0 = s.gaussian_vector(3);
        let x = s.gaussian_vector(3);
        let mut q = QueryCounter::new();
        let base = SagaTable::new(&p, &x0, &mut q).unwrap();

        let mut once = base.clone();
        let e1 = saga_estimate(
            &once,
            &p,
            &x,
            &MiniBatch::from_indices(vec![3], 6).unwrap(),
            &mut q,
        )
        .unwrap();
        saga_update_table(&mut once, &x, &e1).unwrap();

        let mut twice = base.clone();
        let e2 = saga_estimate(
            &twice,
            &p,
            &x,
            &MiniBatch::from_indices(vec![3, 3], 6).unwrap(),
            &mut q,
        )
        .unwrap();
        saga_update_table(&mut twice, &x, &e2).unwrap();

        assert_eq!(once.g_avg(), twice.g_avg());
        assert_eq!(once.jac_avg(), twice.jac_avg());
        assert_eq!(once.phi(3), twice.phi(3));
    }

    #[test]
    fn exhaustive_unbiasedness() {
        let p = generate_mean_variance(5, 2, 3.0, 0.1, 4).unwrap();
        let mut s = PrngStream::new(8, "x");
        let (x, xt) = (s.gaussian_vector(2), s.gaussian_vector(2));
        let mut q = QueryCounter::new();
        let g = inner_value(&p, &x, &mut q).unwrap();
        let jac = inner_jacobian(&p, &x, &mut q).unwrap();
        let snap = SvrgSnapshot::new(&p, &xt, 0, &mut q).unwrap();
        let mut table = SagaTable::new(&p, &xt, &mut q).unwrap();
        let est = saga_estimate(
            &table,
            &p,
            &s.gaussian_vector(2),
            &MiniBatch::from_indices(vec![0, 2], 5).unwrap(),
            &mut q,
        )
        .unwrap();
        let moved = s.gaussian_vector(2);
        saga_update_table(&mut table, &moved, &est).unwrap();
        for a in [1, 2] {
            let (gs, js) = exhaustive_mean(5, a, Execution::Sequential, |b| {
                svrg_estimate(&snap, &p, &x, b, &mut QueryCounter::new()).unwrap()
            });
            assert!(close(&gs, &g, 1e-12));
            assert!((js - &jac).amax() <= 1e-12);
            let (ga, ja) = exhaustive_mean(5, a, Execution::Parallel, |b| {
                let e = saga_estimate(&table, &p, &x, b, &mut QueryCounter::new()).unwrap();
                (e.g_hat, e.jac_hat)
            });
            assert!(close(&ga, &g, 1e-12));
            assert!((ja - &jac).amax() <= 1e-12);
        }
    }

    #[derive(Debug, Clone)]
    enum Op {
        Estimate(Vec<usize>),
        EstimateAndUpdate(Vec<usize>),
        Move,
    }

    fn op_strategy(m: usize) -> impl Strategy<Value = Op> {
        let batch = prop::collection::vec(0..m, 1..4);
        prop_oneof![
            batch.clone().prop_map(Op::Estimate),
            batch.prop_map(Op::EstimateAndUpdate),
            Just(Op::Move),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn saga_cache_stays_coherent(ops in prop::collection::vec(op_strategy(5), 1..60), seed in 0u64..1000) {
            let p = generate_mean_variance(5, 3, 4.0, 0.1, seed).unwrap();
            let mut s = PrngStream::new(seed, "moves");
            let mut x = s.gaussian_vector(3);
            let mut q = QueryCounter::new();
            let mut table = SagaTable::new(&p, &x, &mut q).unwrap();
            for op in ops {
                match op {
                    Op::Estimate(b) => {
                        let batch = MiniBatch::from_indices(b, 5).unwrap();
                        saga_estimate(&table, &p, &x, &batch, &mut q).unwrap();
                    }
                    Op::EstimateAndUpdate(b) => {
                        let batch = MiniBatch::from_indices(b, 5).unwrap();
                        let e = saga_estimate(&table, &p, &x, &batch, &mut q).unwrap();
                        saga_update_table(&mut table, &x, &e).unwrap();
                    }
                    Op::Move => x = s.gaussian_vector(3),
                }
                prop_assert_eq!(table.cache_incoherence(&p), 0.0);
                prop_assert!(table.average_drift() <= 1e-12);
            }
        }
    }
}
