//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use compopt::algorithms::{
    gradient_estimate_norm_monitor, Algorithm, InnerMode, RunConfig, ScgdSchedule,
};
use compopt::cli::{parse_config, run_experiment};
use compopt::estimators::{
    exhaustive_mean, saga_estimate, saga_update_table, svrg_estimate, MiniBatch, SagaTable,
    SvrgSnapshot,
};
use compopt::gradcheck::check_gradients;
use compopt::oracle::{inner_jacobian, inner_value};
use compopt::par::Execution;
use compopt::problems::{
    generate_bellman_toy, generate_mean_variance, BellmanToyProblem, MeanVarianceProblem,
    SplitBellmanProblem,
};
use compopt::rng::PrngStream;
use compopt::theory::{
    saga_bounds, svrg_contraction_factor, svrg_step_bound, Branch, ProblemConstants,
};
use compopt::{CompositionProblem, Matrix, QueryCounter, Trace, Vector};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn desk_problem() -> MeanVarianceProblem {
    generate_mean_variance(200, 20, 10.0, 0.1, 1).expect("desk instance")
}

/// Curvature moved from the outer functions into the regularizer for the
/// dual-free solvers on the mean-variance instance.
const DESK_SHIFT: f64 = 5.0;

fn bellman_toy() -> BellmanToyProblem {
    generate_bellman_toy(20, 10, 10, 0.1, 1).expect("toy instance")
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

fn criterion_1() -> Verdict {
    let mv = generate_mean_variance(50, 10, 10.0, 0.1, 3).unwrap();
    let toy = generate_bellman_toy(20, 8, 10, 0.1, 3).unwrap();
    let split = SplitBellmanProblem::concave_pair(toy.clone(), 2.0).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    let problems: [(&str, &dyn CompositionProblem); 3] = [
        ("mean-variance", &mv),
        ("bellman", &toy),
        ("split-bellman", &split),
    ];
    for (name, p) in problems {
        let mut s = PrngStream::new(11, name);
        let pts: Vec<Vector> = (0..20).map(|_| s.gaussian_vector(p.dim_x())).collect();
        let r = check_gradients(p, &pts, 1e-5).unwrap();
        pass &= r.passed();
        details.push(format!("{name} max rel err {:.1e}", r.max_error()));
    }
    verdict(pass, details.join(", "))
}

// ---------------------------------------------------------------------------
// 2. Exhaustive unbiasedness

fn max_diff(a: &(Vector, Matrix), b: &(Vector, Matrix)) -> f64 {
    (&a.0 - &b.0).amax().max((&a.1 - &b.1).amax())
}

fn criterion_2() -> Verdict {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for m in 1..=6 {
        let problems: Vec<Box<dyn CompositionProblem + Sync>> = {
            let mut v: Vec<Box<dyn CompositionProblem + Sync>> = vec![Box::new(
                generate_bellman_toy(m, 3, 4, 0.1, 40 + m as u64).unwrap(),
            )];
            if m >= 2 {
                v.push(Box::new(
                    generate_mean_variance(m, 3, 5.0, 0.1, 50 + m as u64).unwrap(),
                ));
            }
            v
        };
        for p in &problems {
            let p = p.as_ref();
            let mut s = PrngStream::new(m as u64, "unbiased");
            let x = s.gaussian_vector(p.dim_x());
            let x_tilde = s.gaussian_vector(p.dim_x());
            let phi0 = s.gaussian_vector(p.dim_x());
            let mut q = QueryCounter::new();
            let truth = (
                inner_value(p, &x, &mut q).unwrap(),
                inner_jacobian(p, &x, &mut q).unwrap(),
            );
            let snap = SvrgSnapshot::new(p, &x_tilde, 0, &mut q).unwrap();
            let mut table = SagaTable::new(p, &phi0, &mut q).unwrap();
            // Move a few entries so the table is not uniform.
            let y = s.gaussian_vector(p.dim_x());
            let e = saga_estimate(
                &table,
                p,
                &y,
                &MiniBatch::from_indices(vec![0], m).unwrap(),
                &mut q,
            )
            .unwrap();
            saga_update_table(&mut table, &y, &e).unwrap();
            for a in [1, 2] {
                let svrg = exhaustive_mean(m, a, Execution::available(), |b| {
                    svrg_estimate(&snap, p, &x, b, &mut QueryCounter::new()).unwrap()
                });
                let saga = exhaustive_mean(m, a, Execution::available(), |b| {
                    let e = saga_estimate(&table, p, &x, b, &mut QueryCounter::new()).unwrap();
                    (e.g_hat, e.jac_hat)
                });
                worst = worst
                    .max(max_diff(&svrg, &truth))
                    .max(max_diff(&saga, &truth));
                cases += 2;
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("{cases} estimator/batch cases, max deviation {worst:.2e}"),
    )
}

// ---------------------------------------------------------------------------
// 3. Dual-primal coupling

fn criterion_3() -> Verdict {
    let toy = bellman_toy();
    let x0 = Vector::from_element(10, 0.5);
    let cfg = RunConfig {
        eta: 0.02,
        epochs: 1,
        inner: 10_000,
        batch: 5,
        record_every: 1,
        seed: 5,
        ..RunConfig::default()
    };
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (alg, cfg) in [
        (Algorithm::Scdf, cfg.clone()),
        (
            Algorithm::ScdfSvrg,
            RunConfig {
                epochs: 50,
                inner: 200,
                ..cfg.clone()
            },
        ),
        (Algorithm::ScdfSaga, cfg.clone()),
    ] {
        let t = alg.run(&toy, &x0, &cfg, None).unwrap();
        let steps = t.last().unwrap().iter;
        let c = t.max_coupling();
        worst = worst.max(c);
        parts.push(format!("{} {c:.1e} over {steps} steps", alg.name()));
    }
    verdict(worst <= 1e-10, parts.join(", "))
}

// ---------------------------------------------------------------------------
// 4. SAGA table coherence

fn criterion_4() -> Verdict {
    let p = generate_bellman_toy(30, 6, 8, 0.1, 9).unwrap();
    let mut s = PrngStream::new(4, "coherence");
    let mut q = QueryCounter::new();
    let mut table = SagaTable::new(&p, &s.gaussian_vector(8), &mut q).unwrap();
    let mut batches = PrngStream::new(4, "batch");
    for _ in 0..10_000 {
        let x = s.gaussian_vector(8);
        let a = 1 + s.index(6);
        let b = MiniBatch::sample(&mut batches, 30, a).unwrap();
        let e = saga_estimate(&table, &p, &x, &b, &mut q).unwrap();
        saga_update_table(&mut table, &x, &e).unwrap();
    }
    let drift = table.average_drift();
    let cache = table.cache_incoherence(&p);
    verdict(
        drift <= 1e-8 && cache <= 1e-8,
        format!(
            "{} updates, average drift {drift:.1e}, cache incoherence {cache:.1e}",
            table.updates()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. Query accounting

fn criterion_5() -> Verdict {
    let mut s = PrngStream::new(2024, "query-configs");
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for c in 0..5 {
        let n = 2 + s.index(20);
        let m = n;
        let dim = 2 + s.index(6);
        let p = generate_mean_variance(n, dim, 4.0, 0.2, 100 + c).unwrap();
        let cfg = RunConfig {
            eta: 1e-4,
            epochs: 1 + s.index(4),
            inner: 1 + s.index(60),
            batch: 1 + s.index(2 * m),
            record_every: 1 + s.index(7),
            seed: c,
            ..RunConfig::default()
        };
        let algs = [
            Algorithm::Scdf,
            Algorithm::ScdfSvrg,
            Algorithm::ScdfSaga,
            Algorithm::Sgd(InnerMode::SingleSample),
            Algorithm::Sgd(InnerMode::ExactInner),
            Algorithm::Scgd(ScgdSchedule::Polynomial { a: 1e-3, b: 1.0 }),
            Algorithm::CompositionalSvrg,
        ];
        for alg in algs {
            let t = alg
                .run(&p, &Vector::zeros(dim), &cfg, None)
                .expect("small steps do not diverge");
            let want = alg.expected_counter(n, m, &cfg);
            if t.counter != want {
                mismatches.push(format!(
                    "{} config {c}: {:?} vs {:?}",
                    alg.name(),
                    t.counter,
                    want
                ));
            }
            checked += 1;
        }
    }
    if mismatches.is_empty() {
        verdict(
            true,
            format!("{checked} runs match the closed forms exactly"),
        )
    } else {
        verdict(false, mismatches.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 6 and 10. Geometric convergence and variance decay

/// Least-squares fit of log10(gap) against iteration over the rows from the
/// first with gap ≤ 1e-2 to the first with gap ≤ 1e-8. Returns the slope and
/// the largest absolute residual in decades.
fn log_linear_fit(t: &Trace) -> Option<(f64, f64)> {
    let start = t.rows.iter().position(|r| r.gap <= 1e-2)?;
    let end = t.rows.iter().position(|r| r.gap <= 1e-8)?;
    let pts: Vec<(f64, f64)> = t.rows[start..=end]
        .iter()
        .filter(|r| r.gap > 0.0)
        .map(|r| (r.iter as f64, r.gap.log10()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let resid = pts
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).abs())
        .fold(0.0, f64::max);
    Some((slope, resid))
}

struct ConvergenceRun {
    name: String,
    trace: Trace,
}

fn convergence_runs() -> Vec<ConvergenceRun> {
    let budget = Some(3_000_000);
    let toy = bellman_toy();
    let toy_star = toy.optimum().unwrap().value;
    let desk = desk_problem();
    let desk_star = desk.optimum().unwrap().value;
    let shifted = desk.with_shift(DESK_SHIFT).unwrap();

    let svrg = |eta: f64, inner: usize, record_every: usize| RunConfig {
        eta,
        epochs: 100_000,
        inner,
        batch: 50,
        record_every,
        seed: 7,
        max_queries: budget,
        ..RunConfig::default()
    };
    let saga = |eta: f64, record_every: usize| RunConfig {
        eta,
        epochs: 1,
        inner: 10_000_000,
        batch: 50,
        record_every,
        seed: 8,
        max_queries: budget,
        ..RunConfig::default()
    };
    let jobs: Vec<(String, Algorithm, RunConfig, bool)> = vec![
        (
            "bellman/scdf-svrg".into(),
            Algorithm::ScdfSvrg,
            svrg(0.03, 50, 20),
            false,
        ),
        (
            "bellman/scdf-saga".into(),
            Algorithm::ScdfSaga,
            saga(0.03, 20),
            false,
        ),
        (
            "desk/scdf-svrg".into(),
            Algorithm::ScdfSvrg,
            svrg(0.001, 200, 100),
            true,
        ),
        (
            "desk/scdf-saga".into(),
            Algorithm::ScdfSaga,
            saga(0.001, 100),
            true,
        ),
    ];
    Execution::available().map(&jobs, |(name, alg, cfg, on_desk)| {
        let trace = if *on_desk {
            alg.run(&shifted, &Vector::zeros(20), cfg, Some(desk_star))
        } else {
            alg.run(&toy, &Vector::zeros(10), cfg, Some(toy_star))
        }
        .unwrap_or_else(|e| panic!("{name}: {e}"));
        ConvergenceRun {
            name: name.clone(),
            trace,
        }
    })
}

fn criterion_6(runs: &[ConvergenceRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let reached = r.trace.rows.iter().find(|row| row.gap <= 1e-8);
        let fit = log_linear_fit(&r.trace);
        let ok = match (reached, fit) {
            (Some(_), Some((slope, resid))) => slope < 0.0 && resid <= 0.5,
            _ => false,
        };
        pass &= ok;
        parts.push(format!(
            "{} 1e-8 at {} queries, fit slope {:.2e} resid {:.2}",
            r.name,
            reached.map_or("never".into(), |row| row.queries.to_string()),
            fit.map_or(f64::NAN, |f| f.0),
            fit.map_or(f64::NAN, |f| f.1)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_10(runs: &[ConvergenceRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let m = gradient_estimate_norm_monitor(&r.trace);
        pass &= m.ratio <= 1e-10;
        parts.push(format!("{} ratio {:.1e}", r.name, m.ratio));
    }
    verdict(pass, parts.join(", "))
}

// ---------------------------------------------------------------------------
// 7 and 11. Rate separation and determinism on the acceptance config

fn run_acceptance_config(jobs: usize) -> (compopt::cli::ExperimentReport, tempfile::TempDir) {
    let text = std::fs::read_to_string(config_path("acceptance.cfg")).expect("acceptance config");
    let cfg = parse_config(&text).expect("acceptance config parses");
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&cfg, dir.path(), jobs).expect("experiment runs");
    (report, dir)
}

fn criterion_7(report: &compopt::cli::ExperimentReport) -> Verdict {
    let gap = |label: &str| {
        report
            .outcomes
            .iter()
            .find(|o| o.label == label)
            .and_then(|o| o.trace.as_ref())
            .map_or(f64::NAN, |t| t.final_gap())
    };
    let queries_ok = report.outcomes.iter().all(|o| {
        o.trace
            .as_ref()
            .is_some_and(|t| t.counter.g_queries() <= 1_000_000)
    });
    let vr = ["scdf-svrg", "scdf-saga", "c-svrg"].map(gap);
    let (scgd, sgd) = (gap("scgd"), gap("sgd"));
    let vr_worst = vr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = report.all_ok()
        && queries_ok
        && vr.iter().all(|g| g.is_finite())
        && vr_worst * 10.0 <= scgd
        && scgd * 10.0 <= sgd;
    verdict(
        pass,
        format!(
            "scdf-svrg {:.1e}, scdf-saga {:.1e}, c-svrg {:.1e} < scgd {scgd:.1e} < sgd {sgd:.1e}",
            vr[0], vr[1], vr[2]
        ),
    )
}

fn collect_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_11(first: &Path) -> Verdict {
    let (_, second) = run_acceptance_config(4);
    let a = collect_files(first);
    let b = collect_files(second.path());
    let identical = !a.is_empty() && a == b;
    verdict(
        identical,
        format!(
            "{} CSV files compared between a 1-thread and a 4-thread rerun",
            a.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Non-convex outer component

fn criterion_8() -> Verdict {
    let split = SplitBellmanProblem::concave_pair(bellman_toy(), 2.0).unwrap();
    let p_star = split.optimum().unwrap().value;
    let cfg = RunConfig {
        eta: 0.03,
        epochs: 100_000,
        inner: 50,
        batch: 50,
        record_every: 20,
        seed: 21,
        max_queries: Some(1_000_000),
        ..RunConfig::default()
    };
    let t = Algorithm::ScdfSvrg
        .run(&split, &Vector::zeros(10), &cfg, Some(p_star))
        .unwrap();
    let reached = t.rows.iter().find(|r| r.gap <= 1e-6);
    verdict(
        reached.is_some(),
        format!(
            "weights {:?}: gap 1e-6 at {} queries, final gap {:.1e} after {}",
            split.weights(),
            reached.map_or("never".into(), |r| r.queries.to_string()),
            t.final_gap(),
            t.counter.g_queries()
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Theory evaluators

fn criterion_9() -> Verdict {
    let one = ProblemConstants::uniform(1.0);
    let (lambda, n) = (1.0_f64, 10usize);
    let nf = n as f64;
    let mut errs = Vec::new();

    // Non-convex SVRG step: (λ²/2 − 4P/A) / (2(4Q/A + 4P/A)λ + λ³n/2 − 4λPn/A).
    let (p, q, a) = (1.0_f64, 1.0_f64, 100.0_f64);
    let eta1 = (0.5 * lambda * lambda - 4.0 * p / a)
        / (2.0 * (4.0 * q / a + 4.0 * p / a) * lambda + 0.5 * lambda.powi(3) * nf
            - 4.0 * lambda * p * nf / a);
    let b1 = svrg_step_bound(&one, lambda, n, a, Branch::NonConvex).unwrap();
    errs.push(("thm1 eta_max", (b1.eta_max - eta1).abs()));
    errs.push(("thm1 q", (b1.q.unwrap() - a * lambda / (4.0 * p)).abs()));

    // Convex SVRG step: (1 − d)/(2L_f + λn(1 − d)).
    let d = 0.5;
    let eta2 = (1.0 - d) / (2.0 + lambda * nf * (1.0 - d));
    let b2 = svrg_step_bound(&one, lambda, n, a, Branch::Convex { d }).unwrap();
    errs.push(("thm2 eta_max", (b2.eta_max - eta2).abs()));

    // SAGA batch size at η = 0.001 with R_x = 1.
    let t = 16.0 * (1.0 + 1.0);
    let l = lambda * 0.001 * nf;
    let a3 = (l + t) / 2.0 + (l * l + t * t).sqrt() / 2.0;
    let b3 = saga_bounds(&one, lambda, n, None, Some(0.001), Branch::NonConvex).unwrap();
    errs.push(("thm3 A_min", (b3.a_min - a3).abs()));

    // Convex SAGA step: 1/(2L_fλ/(1 − d) + λn).
    let eta4 = 1.0 / (2.0 * lambda / (1.0 - d) + lambda * nf);
    let b4 = saga_bounds(&one, lambda, n, Some(1e6), None, Branch::Convex { d }).unwrap();
    errs.push(("thm4 eta_max", (b4.eta_max - eta4).abs()));

    // Contraction factor at η_max/2, K = 1000, a/b at the interval midpoint.
    let eta = eta1 / 2.0;
    let qq = a * lambda / (4.0 * p);
    let lower = 2.0 * lambda * (4.0 * q / a + 4.0 * p / a) / (lambda - 1.0 / qq - 2.0 * qq * p / a);
    let upper = (1.0 - nf * lambda * eta) * lambda / eta;
    let ratio = 0.5 * (lower.max(0.0) + upper);
    let d2_over_a = 2.0 * (eta * qq * p / a + lambda * eta * (4.0 * q / a + 4.0 * p / a) / ratio)
        + lambda * eta * (4.0 * q + 4.0 * p) / ratio;
    let factor = 1.0 / (eta * lambda * 1000.0) + d2_over_a / (eta * lambda);
    let c = svrg_contraction_factor(&one, lambda, n, 1000, a, eta, Branch::NonConvex).unwrap();
    errs.push(("contraction", (c.factor - factor).abs()));

    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let mut monotone = true;
    for (c, branch) in [
        (ProblemConstants::uniform(1.0), Branch::NonConvex),
        (ProblemConstants::uniform(0.8), Branch::NonConvex),
        (ProblemConstants::uniform(1.0), Branch::Convex { d: 0.5 }),
    ] {
        let mut last = f64::NEG_INFINITY;
        for k in 1..=10 {
            let b = svrg_step_bound(&c, lambda, n, 20.0 * k as f64, branch).unwrap();
            let v = if b.eta_max.is_nan() {
                f64::NEG_INFINITY
            } else {
                b.eta_max
            };
            monotone &= v >= last;
            last = v;
        }
    }
    verdict(
        worst <= 1e-12 && monotone,
        format!(
            "max deviation {worst:.1e} over {} values; eta_max monotone in A: {monotone}; \
             contraction factor at eta_max/2 is {:.4} ({})",
            errs.len(),
            c.factor,
            if c.contractive {
                "contractive"
            } else {
                "not contractive"
            }
        ),
    )
}

// ---------------------------------------------------------------------------

fn timed(budget: Duration, f: impl FnOnce() -> Verdict) -> (Verdict, Duration, bool) {
    let start = Instant::now();
    let v = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            verdict(false, format!("panicked: {msg}"))
        }
    };
    let elapsed = start.elapsed();
    (v, elapsed, elapsed <= budget)
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut failed = 0;
    let mut print = |id: u32,
                     title: &str,
                     (v, elapsed, in_time): (Verdict, Duration, bool),
                     budget: Duration| {
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!(
                "{:.2}s, over the {}s budget",
                elapsed.as_secs_f64(),
                budget.as_secs()
            )
        };
        println!(
            "{} [{id:>2}] {title} ({timing}): {}",
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
    };

    print(
        1,
        "gradient correctness",
        timed(secs(5), criterion_1),
        secs(5),
    );
    print(
        2,
        "exhaustive estimator unbiasedness",
        timed(secs(1), criterion_2),
        secs(1),
    );
    print(
        3,
        "dual-primal coupling",
        timed(secs(10), criterion_3),
        secs(10),
    );
    print(
        4,
        "SAGA table coherence",
        timed(secs(10), criterion_4),
        secs(10),
    );
    print(
        5,
        "query accounting",
        timed(secs(60), criterion_5),
        secs(60),
    );

    let start = Instant::now();
    let runs = catch_unwind(convergence_runs);
    let run_time = start.elapsed();
    match &runs {
        Ok(runs) => {
            let (v, t, _) = timed(secs(120), || criterion_6(runs));
            let total = t + run_time;
            print(
                6,
                "geometric convergence",
                (v, total, total <= secs(120)),
                secs(120),
            );
        }
        Err(_) => print(
            6,
            "geometric convergence",
            (verdict(false, "runs panicked"), run_time, true),
            secs(120),
        ),
    }

    let acceptance = catch_unwind(|| {
        let start = Instant::now();
        let (report, dir) = run_acceptance_config(1);
        (report, dir, start.elapsed())
    });
    match &acceptance {
        Ok((report, _, t)) => {
            let (v, t2, _) = timed(secs(120), || criterion_7(report));
            let total = *t + t2;
            print(
                7,
                "rate separation at 1e6 queries",
                (v, total, total <= secs(120)),
                secs(120),
            );
        }
        Err(_) => print(
            7,
            "rate separation at 1e6 queries",
            (
                verdict(false, "acceptance config failed to run"),
                Duration::ZERO,
                true,
            ),
            secs(120),
        ),
    }

    print(
        8,
        "non-convex outer component",
        timed(secs(120), criterion_8),
        secs(120),
    );
    print(9, "theory evaluators", timed(secs(5), criterion_9), secs(5));

    match &runs {
        Ok(runs) => print(
            10,
            "variance decay",
            timed(secs(5), || criterion_10(runs)),
            secs(5),
        ),
        Err(_) => print(
            10,
            "variance decay",
            (
                verdict(false, "convergence runs panicked"),
                Duration::ZERO,
                true,
            ),
            secs(5),
        ),
    }
    match &acceptance {
        Ok((_, dir, _)) => print(
            11,
            "determinism",
            timed(secs(300), || criterion_11(dir.path())),
            secs(300),
        ),
        Err(_) => print(
            11,
            "determinism",
            (
                verdict(false, "acceptance config failed to run"),
                Duration::ZERO,
                true,
            ),
            secs(300),
        ),
    }

    if failed == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
