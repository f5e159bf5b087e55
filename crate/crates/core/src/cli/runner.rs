use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{Cell, ExperimentConfig, Family};
use super::plot::render_svg;
use crate::error::{Error, Result};
use crate::oracle::{CompositionProblem, QueryCounter, Vector};
use crate::par::with_jobs;
use crate::problems::{
    generate_bellman_toy, generate_mean_variance, BuiltinProblem, SplitBellmanProblem,
};
use crate::trace::{read_csv, Trace};

/// How a single run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { iteration: u64, reason: String },
    Failed(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "ok",
            RunStatus::Diverged { .. } => "diverged",
            RunStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub cell: String,
    pub label: String,
    pub algorithm: &'static str,
    pub status: RunStatus,
    /// Trace recorded up to the end of the run (or up to the divergence).
    pub trace: Option<Trace>,
    /// Closed-form oracle totals for a run that is not cut short.
    pub expected: QueryCounter,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub outcomes: Vec<RunOutcome>,
    pub summary: String,
    pub out_dir: PathBuf,
}

impl ExperimentReport {
    /// True when every run completed without divergence or error.
    pub fn all_ok(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| o.status == RunStatus::Completed)
    }
}

/// Problem instances of one cell: the base problem, the shifted variant
/// handed to the dual-free solvers, and the optimal value.
struct CellProblems {
    base: BuiltinProblem,
    shifted: Option<BuiltinProblem>,
    p_star: Option<f64>,
}

fn build_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellProblems> {
    let spec = &cfg.problem;
    let base: BuiltinProblem = match spec.family {
        Family::MeanVariance => {
            generate_mean_variance(spec.n, spec.dim, cell.kappa, cell.lambda, spec.seed)?.into()
        }
        Family::Bellman => {
            generate_bellman_toy(spec.m, spec.dim_y, spec.dim, cell.lambda, spec.seed)?.into()
        }
        Family::SplitBellman => {
            let toy = generate_bellman_toy(spec.m, spec.dim_y, spec.dim, cell.lambda, spec.seed)?;
            SplitBellmanProblem::new(toy, spec.weights.clone())?.into()
        }
    };
    let shifted = match (&base, spec.shift > 0.0) {
        (BuiltinProblem::MeanVariance(mv), true) => Some(mv.with_shift(spec.shift)?.into()),
        _ => None,
    };
    let p_star = base.optimum().ok().map(|o| o.value);
    Ok(CellProblems {
        base,
        shifted,
        p_star,
    })
}

/// Runs every (cell, algorithm) pair, writes one CSV per run, a plot per
/// cell and `summary.txt`, all below `out_dir`.
///
/// Runs are spread over `jobs` threads; each run stays on one thread. Output
/// is merged in configuration order, so files do not depend on `jobs`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<ExperimentReport> {
    std::fs::create_dir_all(out_dir)?;
    let cells = cfg.cells();
    let built: Vec<Result<CellProblems>> =
        with_jobs(jobs, |exec| exec.map(&cells, |c| build_cell(cfg, c)));
    let problems = built.into_iter().collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.algorithms.len()).map(move |a| (c, a)))
        .collect();
    let x0 = Vector::from_element(cfg.problem.dim, cfg.x0);
    let run_one = |&(c, a): &(usize, usize)| -> RunOutcome {
        let cell = &cells[c];
        let spec = &cfg.algorithms[a];
        let mut run = spec.run.clone();
        if !spec.fixed_batch {
            run.batch = cell.batch;
        }
        let cp = &problems[c];
        let problem = match (&cp.shifted, spec.algorithm.is_dual_free()) {
            (Some(shifted), true) => shifted,
            _ => &cp.base,
        };
        let expected = spec
            .algorithm
            .expected_counter(problem.n(), problem.m(), &run);
        let (status, trace) = match spec.algorithm.run(problem, &x0, &run, cp.p_star) {
            Ok(t) => (RunStatus::Completed, Some(t)),
            Err(Error::Divergence {
                iteration,
                reason,
                trace,
            }) => (RunStatus::Diverged { iteration, reason }, Some(*trace)),
            Err(e) => (RunStatus::Failed(e.to_string()), None),
        };
        RunOutcome {
            cell: cell.key.clone(),
            label: spec.label.clone(),
            algorithm: spec.algorithm.name(),
            status,
            trace,
            expected,
            csv: None,
        }
    };
    let mut outcomes: Vec<RunOutcome> = with_jobs(jobs, |exec| exec.map(&tasks, run_one));

    for o in &mut outcomes {
        if let Some(trace) = &o.trace {
            let dir = out_dir.join(&o.cell);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("{}.csv", o.label));
            trace.write_csv(&path)?;
            o.csv = Some(path);
        }
    }
    if cfg.plot {
        for cell in &cells {
            let csvs: Vec<(String, PathBuf)> = outcomes
                .iter()
                .filter(|o| o.cell == cell.key)
                .filter_map(|o| o.csv.clone().map(|p| (o.label.clone(), p)))
                .collect();
            replot(&cell.key, &csvs, &out_dir.join(&cell.key).join("gap.svg"))?;
        }
    }
    let summary = summarize(&outcomes);
    std::fs::write(out_dir.join("summary.txt"), &summary)?;
    Ok(ExperimentReport {
        outcomes,
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Rebuilds a plot from CSV files alone.
pub fn replot(title: &str, csvs: &[(String, PathBuf)], svg: &Path) -> Result<()> {
    if csvs.is_empty() {
        return Ok(());
    }
    let series = csvs
        .iter()
        .map(|(label, path)| Ok((label.clone(), read_csv(path)?)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = svg.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(svg, render_svg(title, &series))?;
    Ok(())
}

/// Fixed-width table of final objectives, gaps and query totals. Within each
/// cell runs are ranked by final gap, or by final objective when some gap is
/// unknown.
pub fn summarize(outcomes: &[RunOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<28} {:<14} {:<10} {:<9} {:>10} {:>12} {:>12} {:>24} {:>24} {:>5}",
        "cell",
        "label",
        "algorithm",
        "status",
        "iters",
        "g_queries",
        "expected",
        "objective",
        "gap",
        "rank"
    );
    let mut start = 0;
    while start < outcomes.len() {
        let cell = &outcomes[start].cell;
        let end = start
            + outcomes[start..]
                .iter()
                .take_while(|o| &o.cell == cell)
                .count();
        let group = &outcomes[start..end];
        let final_row = |o: &RunOutcome| o.trace.as_ref().and_then(|t| t.last().cloned());
        let use_gap = group
            .iter()
            .all(|o| final_row(o).is_some_and(|r| !r.gap.is_nan()));
        let key = |o: &RunOutcome| {
            final_row(o).map_or(f64::INFINITY, |r| if use_gap { r.gap } else { r.objective })
        };
        let mut order: Vec<usize> = (0..group.len()).collect();
        order.sort_by(|&a, &b| key(&group[a]).total_cmp(&key(&group[b])));
        let mut rank = vec![0; group.len()];
        for (r, &k) in order.iter().enumerate() {
            rank[k] = r + 1;
        }
        for (k, o) in group.iter().enumerate() {
            let row = final_row(o);
            let queries = o.trace.as_ref().map(|t| t.counter.g_queries());
            let expected = if o.status == RunStatus::Completed {
                o.expected.g_queries().to_string()
            } else {
                "-".into()
            };
            let _ = writeln!(
                s,
                "{:<28} {:<14} {:<10} {:<9} {:>10} {:>12} {:>12} {:>24} {:>24} {:>5}",
                o.cell,
                o.label,
                o.algorithm,
                o.status.label(),
                row.as_ref().map_or("-".into(), |r| r.iter.to_string()),
                queries.map_or("-".into(), |q| q.to_string()),
                expected,
                row.as_ref()
                    .map_or("-".into(), |r| format!("{:.16e}", r.objective)),
                row.as_ref()
                    .map_or("-".into(), |r| format!("{:.16e}", r.gap)),
                rank[k]
            );
        }
        start = end;
    }
    for o in outcomes {
        match &o.status {
            RunStatus::Diverged { iteration, reason } => {
                let _ = writeln!(
                    s,
                    "{}/{}: diverged at iteration {iteration}: {reason}",
                    o.cell, o.label
                );
            }
            RunStatus::Failed(msg) => {
                let _ = writeln!(s, "{}/{}: {msg}", o.cell, o.label);
            }
            RunStatus::Completed => {}
        }
    }
    s
}
