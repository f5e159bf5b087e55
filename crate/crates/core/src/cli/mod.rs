//! The `compopt` command-line harness.

pub mod config;
pub mod plot;
pub mod runner;

pub use config::{
    parse_config, AlgorithmSpec, Cell, ConfigErrors, ConfigIssue, ExperimentConfig, Family,
    ProblemSpec,
};
pub use plot::render_svg;
pub use runner::{replot, run_experiment, summarize, ExperimentReport, RunOutcome, RunStatus};

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::gradcheck::check_gradients;
use crate::oracle::{CompositionProblem, Vector};
use crate::problems::{
    generate_bellman_toy, generate_mean_variance, BuiltinProblem, SplitBellmanProblem,
};
use crate::rng::PrngStream;
use crate::theory::{
    estimate_constants, saga_bounds, svrg_contraction_factor, svrg_step_bound, Branch,
    ProblemConstants, DEFAULT_SAFETY_FACTOR,
};

macro_rules! outln {
    ($($arg:tt)*) => { writeln!(std::io::stdout().lock(), $($arg)*)? };
}

macro_rules! out {
    ($($arg:tt)*) => { write!(std::io::stdout().lock(), $($arg)*)? };
}

#[derive(Debug, Parser)]
#[command(
    name = "compopt",
    version,
    about = "Duality-free stochastic composition optimization"
)]
pub struct Cli {
    /// Worker threads for independent runs.
    #[arg(long, global = true, env = "COMPOPT_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace every seed in the config with this value.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    MeanVariance,
    Bellman,
    SplitBellman,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every algorithm on every cell of a config.
    Run { config: PathBuf },
    /// Validate a config and list its run matrix.
    Check { config: PathBuf },
    /// Finite-difference check of a built-in problem's derivatives.
    Gradcheck {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        dim_y: usize,
        #[arg(long, default_value_t = 10.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Estimate the smoothness constants of a built-in problem.
    Estimate {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        dim_y: usize,
        #[arg(long, default_value_t = 10.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        /// Multiplier applied to the sampled constants.
        #[arg(long, default_value_t = DEFAULT_SAFETY_FACTOR)]
        safety: f64,
    },
    /// Evaluate the step-size and batch-size conditions of a theorem.
    Bounds {
        /// 1: SVRG general F_i, 2: SVRG convex F_i, 3: SAGA general F_i,
        /// 4: SAGA convex F_i.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        theorem: u8,
        /// Constants file with `B_F L_F B_G L_G L_f R_x` entries.
        #[arg(long)]
        constants: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        /// Batch size A (required for theorems 1 and 2).
        #[arg(long)]
        batch: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Free parameter of the convex branch.
        #[arg(long, default_value_t = 0.5)]
        d: f64,
        /// Inner iterations K for the contraction factor (theorems 1 and 2).
        #[arg(long)]
        inner: Option<usize>,
    },
}

/// Parses the process arguments and runs the selected command.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        // A closed pipe (e.g. `| head`) is not an error.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &PathBuf, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed_override {
        cfg.override_seed(s);
    }
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
fn build_problem(
    kind: ProblemKind,
    seed: u64,
    n: usize,
    m: usize,
    dim: usize,
    dim_y: usize,
    kappa: f64,
    lambda: f64,
) -> Result<BuiltinProblem> {
    Ok(match kind {
        ProblemKind::MeanVariance => generate_mean_variance(n, dim, kappa, lambda, seed)?.into(),
        ProblemKind::Bellman => generate_bellman_toy(m, dim_y, dim, lambda, seed)?.into(),
        ProblemKind::SplitBellman => SplitBellmanProblem::concave_pair(
            generate_bellman_toy(m, dim_y, dim, lambda, seed)?,
            2.0,
        )?
        .into(),
    })
}

fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut stream = PrngStream::new(seed, "trial-points");
    (0..count).map(|_| stream.gaussian_vector(dim)).collect()
}

pub fn execute(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Check { config } => {
            let text = std::fs::read_to_string(config)?;
            match parse_config(&text) {
                Ok(mut cfg) => {
                    if let Some(s) = cli.seed_override {
                        cfg.override_seed(s);
                    }
                    let cells = cfg.cells();
                    outln!(
                        "{}: {} cells x {} algorithms = {} runs",
                        cfg.problem.family.name(),
                        cells.len(),
                        cfg.algorithms.len(),
                        cells.len() * cfg.algorithms.len()
                    );
                    for c in &cells {
                        outln!("  {}", c.key);
                    }
                    for a in &cfg.algorithms {
                        outln!("  [{}] {}", a.label, a.algorithm.name());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(errs) => {
                    eprintln!("{errs}");
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Run { config } => {
            let cfg = match load_config(config, cli.seed_override) {
                Ok(c) => c,
                Err(Error::Config(msg)) => {
                    eprintln!("{msg}");
                    return Ok(ExitCode::FAILURE);
                }
                Err(e) => return Err(e),
            };
            let out = cli
                .out
                .clone()
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let report = run_experiment(&cfg, &out, cli.jobs.max(1))?;
            out!("{}", report.summary);
            outln!("outputs in {}", out.display());
            Ok(if report.all_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Gradcheck {
            problem,
            seed,
            n,
            m,
            dim,
            dim_y,
            kappa,
            lambda,
            points,
            tol,
        } => {
            let seed = cli.seed_override.unwrap_or(*seed);
            let p = build_problem(*problem, seed, *n, *m, *dim, *dim_y, *kappa, *lambda)?;
            let pts = sample_points(p.dim_x(), *points, seed);
            let report = check_gradients(&p, &pts, *tol)?;
            outln!(
                "{}: {} components checked at {} points, max relative error {:.3e} (tol {:.1e})",
                p.family(),
                report.components().count(),
                pts.len(),
                report.max_error(),
                tol
            );
            for f in report.failures() {
                outln!("  FAIL {f:?}");
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Estimate {
            problem,
            seed,
            n,
            m,
            dim,
            dim_y,
            kappa,
            lambda,
            pairs,
            safety,
        } => {
            let seed = cli.seed_override.unwrap_or(*seed);
            let p = build_problem(*problem, seed, *n, *m, *dim, *dim_y, *kappa, *lambda)?;
            let mut pts = vec![Vector::zeros(p.dim_x())];
            pts.extend(sample_points(p.dim_x(), 16, seed));
            let c = estimate_constants(&p, &pts, *pairs, seed)?;
            if c.r_x_capped {
                outln!("# R_x reached the sweep cap");
            }
            out!("{}", c.inflated(*safety).to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds {
            theorem,
            constants,
            lambda,
            n,
            batch,
            eta,
            d,
            inner,
        } => {
            let c = ProblemConstants::parse(&std::fs::read_to_string(constants)?)?;
            let branch = if theorem % 2 == 1 {
                Branch::NonConvex
            } else {
                Branch::Convex { d: *d }
            };
            if *theorem <= 2 {
                let a = batch.ok_or_else(|| {
                    Error::InvalidArgument("theorems 1 and 2 need --batch".into())
                })?;
                let b = svrg_step_bound(&c, *lambda, *n, a, branch)?;
                outln!("theorem {theorem}: {:?}", b.status);
                outln!("eta_max = {:.16e}", b.eta_max);
                if let Some(q) = b.q {
                    outln!("q = {q:.16e}");
                }
                if let Some(a_min) = b.a_min {
                    outln!("A_min = {a_min:.16e}");
                }
                if let Some(d_max) = b.d_max {
                    outln!("d_max = {d_max:.16e}");
                }
                if let Some(k) = inner {
                    let step = eta.unwrap_or(b.eta_max * 0.5);
                    if step.is_finite() && step > 0.0 {
                        let f = svrg_contraction_factor(&c, *lambda, *n, *k, a, step, branch)?;
                        outln!(
                            "contraction at eta = {step:.6e}, K = {k}: {:.16e} ({})",
                            f.factor,
                            if f.contractive {
                                "contractive"
                            } else {
                                "not contractive"
                            }
                        );
                    }
                }
            } else {
                let s = saga_bounds(&c, *lambda, *n, *batch, *eta, branch)?;
                outln!("theorem {theorem}: {:?}", s.status);
                outln!("A_min = {:.16e}", s.a_min);
                outln!("eta_max = {:.16e}", s.eta_max);
                outln!("A = {:.16e}, eta = {:.16e}", s.a, s.eta);
                outln!("rate = {:.16e}", s.rate);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
