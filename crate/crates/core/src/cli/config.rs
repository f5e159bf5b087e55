//! Experiment configuration files.
//!
//! A flat `key = value` format with one optional `[label]` section per
//! algorithm. See the README for the full grammar. Parsing reports every
//! problem it finds, each with its line number.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::algorithms::{Algorithm, InnerMode, RunConfig, ScgdSchedule};

pub const ALGORITHM_NAMES: [&str; 7] = [
    "scdf",
    "scdf-svrg",
    "scdf-saga",
    "sgd",
    "sgd-exact",
    "scgd",
    "c-svrg",
];

const TOP_KEYS: [&str; 16] = [
    "family",
    "n",
    "m",
    "dim",
    "dim_y",
    "kappa",
    "lambda",
    "batch",
    "shift",
    "seed",
    "weights",
    "x0",
    "record_every",
    "plot",
    "timing",
    "output",
];

const SECTION_KEYS: [&str; 13] = [
    "algorithm",
    "eta",
    "epochs",
    "inner",
    "batch",
    "seed",
    "record_every",
    "max_queries",
    "schedule",
    "alpha",
    "beta",
    "a",
    "b",
];

/// One configuration problem, tied to a line (0 for whole-file issues).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for crate::Error {
    fn from(e: ConfigErrors) -> Self {
        crate::Error::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    MeanVariance,
    Bellman,
    SplitBellman,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::MeanVariance => "mean-variance",
            Family::Bellman => "bellman",
            Family::SplitBellman => "split-bellman",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub family: Family,
    pub n: usize,
    /// Inner component count (equal to `n` for mean-variance).
    pub m: usize,
    /// Decision dimension `N`.
    pub dim: usize,
    /// Inner output dimension `M` (Bellman families).
    pub dim_y: usize,
    pub kappas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub seed: u64,
    /// Curvature moved into the regularizer for the dual-free solvers.
    pub shift: f64,
    /// Outer weights of the split Bellman problem.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub label: String,
    pub algorithm: Algorithm,
    pub run: RunConfig,
    /// The section fixed its own batch size instead of taking the cell's.
    pub fixed_batch: bool,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub batches: Vec<usize>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub output: Option<PathBuf>,
    pub plot: bool,
    /// Constant fill value of the starting point.
    pub x0: f64,
}

/// One problem instance of the run matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub kappa: f64,
    pub lambda: f64,
    pub batch: usize,
    /// Directory-safe name, also the merge order of results.
    pub key: String,
}

impl ExperimentConfig {
    /// The run matrix `kappa × lambda × batch`, in file order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &kappa in &self.problem.kappas {
            for &lambda in &self.problem.lambdas {
                for &batch in &self.batches {
                    let key = match self.problem.family {
                        Family::MeanVariance => format!("kappa{kappa}_lambda{lambda}_A{batch}"),
                        _ => format!("lambda{lambda}_A{batch}"),
                    };
                    out.push(Cell {
                        kappa,
                        lambda,
                        batch,
                        key,
                    });
                }
            }
        }
        out
    }

    /// Replaces the problem seed and every algorithm seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.problem.seed = seed;
        for a in &mut self.algorithms {
            a.run.seed = seed;
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Section {
    label: String,
    line: usize,
    entries: HashMap<String, Entry>,
}

struct Parser {
    issues: Vec<ConfigIssue>,
}

impl Parser {
    fn issue(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn parse_one<T: std::str::FromStr>(&mut self, e: &Entry, key: &str, what: &str) -> Option<T> {
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issue(e.line, format!("{key}: expected {what}, got `{}`", e.value));
                None
            }
        }
    }

    fn parse_list<T: std::str::FromStr>(
        &mut self,
        e: &Entry,
        key: &str,
        what: &str,
    ) -> Option<Vec<T>> {
        let mut out = Vec::new();
        for part in e.value.split(',') {
            let part = part.trim();
            match part.parse::<T>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.issue(
                        e.line,
                        format!("{key}: expected a list of {what}, got `{part}`"),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn positive_real(&mut self, e: &Entry, key: &str, allow_zero: bool) -> Option<f64> {
        let v: f64 = self.parse_one(e, key, "a number")?;
        let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
        if !ok {
            let bound = if allow_zero {
                "nonnegative"
            } else {
                "positive"
            };
            self.issue(e.line, format!("{key} must be finite and {bound}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn positive_int(&mut self, e: &Entry, key: &str) -> Option<usize> {
        let v: usize = self.parse_one(e, key, "a positive integer")?;
        if v == 0 {
            self.issue(e.line, format!("{key} must be positive"));
            return None;
        }
        Some(v)
    }

    fn boolean(&mut self, e: &Entry, key: &str) -> Option<bool> {
        match e.value.as_str() {
            "true" | "yes" | "on" => Some(true),
            "false" | "no" | "off" => Some(false),
            other => {
                self.issue(
                    e.line,
                    format!("{key}: expected true or false, got `{other}`"),
                );
                None
            }
        }
    }
}

fn unquote(v: &str) -> String {
    let v = v.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        v[1..v.len() - 1].to_string()
    } else {
        v.to_string()
    }
}

/// Parses and validates a configuration. On failure every issue found is
/// returned.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut p = Parser { issues: Vec::new() };
    let mut top: HashMap<String, Entry> = HashMap::new();
    let mut sections: Vec<Section> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(label) = rest.strip_suffix(']') else {
                p.issue(line, "section header must look like `[label]`");
                continue;
            };
            let label = label.trim();
            let valid = !label.is_empty()
                && label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.');
            if !valid {
                p.issue(
                    line,
                    format!("invalid label `{label}` (use letters, digits, - _ .)"),
                );
                continue;
            }
            if let Some(prev) = sections.iter().find(|s| s.label == label) {
                let prev_line = prev.line;
                p.issue(
                    line,
                    format!("duplicate algorithm label `{label}` (lines {prev_line} and {line})"),
                );
                continue;
            }
            sections.push(Section {
                label: label.to_string(),
                line,
                entries: HashMap::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            p.issue(line, "expected `key = value`");
            continue;
        };
        let key = key.trim().to_string();
        let value = unquote(value);
        let (allowed, scope): (&[&str], &str) = if sections.is_empty() {
            (&TOP_KEYS, "top level")
        } else {
            (&SECTION_KEYS, "algorithm section")
        };
        if !allowed.contains(&key.as_str()) {
            p.issue(line, format!("unknown key `{key}` in {scope}"));
            continue;
        }
        let map = match sections.last_mut() {
            Some(s) => &mut s.entries,
            None => &mut top,
        };
        if let Some(prev) = map.get(&key) {
            let prev_line = prev.line;
            p.issue(
                line,
                format!("duplicate key `{key}` (first set on line {prev_line})"),
            );
            continue;
        }
        map.insert(key, Entry { line, value });
    }

    let problem = parse_problem(&mut p, &top);
    let batches = match top.get("batch") {
        Some(e) => p
            .parse_list::<usize>(e, "batch", "positive integers")
            .and_then(|v| {
                if v.contains(&0) {
                    p.issue(e.line, "batch sizes must be positive");
                    None
                } else {
                    Some(v)
                }
            }),
        None => Some(vec![1]),
    };
    let global_record = top
        .get("record_every")
        .and_then(|e| p.positive_int(e, "record_every"))
        .unwrap_or(1);
    let timing = top
        .get("timing")
        .and_then(|e| p.boolean(e, "timing"))
        .unwrap_or(false);
    let plot = top
        .get("plot")
        .and_then(|e| p.boolean(e, "plot"))
        .unwrap_or(true);
    let x0 = top
        .get("x0")
        .and_then(|e| {
            let v: f64 = p.parse_one(e, "x0", "a number")?;
            v.is_finite().then_some(v)
        })
        .unwrap_or(0.0);
    let output = top.get("output").map(|e| PathBuf::from(&e.value));

    if sections.is_empty() {
        p.issue(
            0,
            "no algorithms configured (add at least one `[label]` section)",
        );
    }
    let mut algorithms = Vec::new();
    for s in &sections {
        if let Some(a) = parse_section(&mut p, s, global_record, timing) {
            algorithms.push(a);
        }
    }

    if !p.issues.is_empty() {
        p.issues.sort_by_key(|i| i.line);
        return Err(ConfigErrors(p.issues));
    }
    Ok(ExperimentConfig {
        problem: problem.expect("no issues means the problem parsed"),
        batches: batches.expect("no issues means batches parsed"),
        algorithms,
        output,
        plot,
        x0,
    })
}

fn parse_problem(p: &mut Parser, top: &HashMap<String, Entry>) -> Option<ProblemSpec> {
    let family = match top.get("family") {
        None => Family::MeanVariance,
        Some(e) => match e.value.as_str() {
            "mean-variance" => Family::MeanVariance,
            "bellman" => Family::Bellman,
            "split-bellman" => Family::SplitBellman,
            other => {
                p.issue(
                    e.line,
                    format!("unknown family `{other}` (mean-variance, bellman, split-bellman)"),
                );
                return None;
            }
        },
    };
    let seed = match top.get("seed") {
        Some(e) => p.parse_one::<u64>(e, "seed", "an unsigned integer"),
        None => {
            p.issue(0, "missing problem `seed`");
            None
        }
    };
    let get_int = |p: &mut Parser, key: &str| top.get(key).and_then(|e| p.positive_int(e, key));
    let dim = get_int(p, "dim");
    if dim.is_none() && !top.contains_key("dim") {
        p.issue(0, "missing `dim`");
    }
    let n_opt = get_int(p, "n");
    let m_opt = get_int(p, "m");
    let dim_y = get_int(p, "dim_y");
    let lambdas = match top.get("lambda") {
        Some(e) => p.parse_list::<f64>(e, "lambda", "numbers").and_then(|v| {
            if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                p.issue(e.line, "lambda values must be finite and nonnegative");
                None
            } else {
                Some(v)
            }
        }),
        None => {
            p.issue(0, "missing `lambda`");
            None
        }
    };
    let shift = top
        .get("shift")
        .and_then(|e| p.positive_real(e, "shift", true))
        .unwrap_or(0.0);
    let mut kappas = vec![1.0];
    let mut weights = Vec::new();
    let (n, m) = match family {
        Family::MeanVariance => {
            if let Some(e) = top.get("kappa") {
                kappas = p
                    .parse_list::<f64>(e, "kappa", "numbers")
                    .unwrap_or_default();
                if kappas.iter().any(|k| !(k.is_finite() && *k >= 1.0)) {
                    p.issue(e.line, "kappa values must be at least 1");
                }
            }
            if let Some(e) = top.get("dim_y") {
                p.issue(e.line, "dim_y is fixed to dim + 1 for mean-variance");
            }
            if let Some(e) = top.get("weights") {
                p.issue(e.line, "weights apply to split-bellman only");
            }
            let n = n_opt;
            if n.is_none() && !top.contains_key("n") {
                p.issue(0, "missing `n`");
            }
            if let (Some(n), Some(m), Some(e)) = (n, m_opt, top.get("m")) {
                if n != m {
                    p.issue(
                        e.line,
                        format!("mean-variance shares its index set: m must equal n ({n})"),
                    );
                }
            }
            if n == Some(1) {
                p.issue(top["n"].line, "mean-variance needs n ≥ 2");
            }
            (n.unwrap_or(2), n.unwrap_or(2))
        }
        Family::Bellman | Family::SplitBellman => {
            for key in ["kappa", "n"] {
                if let Some(e) = top.get(key) {
                    p.issue(
                        e.line,
                        format!("`{key}` does not apply to {}", family.name()),
                    );
                }
            }
            if shift > 0.0 {
                p.issue(
                    top["shift"].line,
                    "shift is only supported for mean-variance",
                );
            }
            if dim_y.is_none() && !top.contains_key("dim_y") {
                p.issue(0, "missing `dim_y`");
            }
            if m_opt.is_none() && !top.contains_key("m") {
                p.issue(0, "missing `m`");
            }
            let n = if family == Family::SplitBellman {
                match top.get("weights") {
                    Some(e) => {
                        weights = p
                            .parse_list::<f64>(e, "weights", "numbers")
                            .unwrap_or_default();
                        let mean = weights.iter().sum::<f64>() / weights.len().max(1) as f64;
                        if weights.is_empty() || (mean - 1.0).abs() > 1e-12 {
                            p.issue(e.line, "weights must average to 1");
                        }
                    }
                    None => weights = vec![3.0, -1.0],
                }
                weights.len()
            } else {
                if let Some(e) = top.get("weights") {
                    p.issue(e.line, "weights apply to split-bellman only");
                }
                1
            };
            (n, m_opt.unwrap_or(1))
        }
    };
    Some(ProblemSpec {
        family,
        n,
        m,
        dim: dim?,
        dim_y: match family {
            Family::MeanVariance => dim? + 1,
            _ => dim_y?,
        },
        kappas,
        lambdas: lambdas?,
        seed: seed?,
        shift,
        weights,
    })
}

fn parse_section(
    p: &mut Parser,
    s: &Section,
    record_every: usize,
    timing: bool,
) -> Option<AlgorithmSpec> {
    let before = p.issues.len();
    let get = |key: &str| s.entries.get(key);
    let name = match get("algorithm") {
        Some(e) => {
            if ALGORITHM_NAMES.contains(&e.value.as_str()) {
                Some(e.value.clone())
            } else {
                p.issue(
                    e.line,
                    format!(
                        "invalid algorithm `{}` (expected one of {})",
                        e.value,
                        ALGORITHM_NAMES.join(", ")
                    ),
                );
                None
            }
        }
        None => {
            p.issue(s.line, format!("section `{}` has no `algorithm`", s.label));
            None
        }
    };
    let seed = match get("seed") {
        Some(e) => p.parse_one::<u64>(e, "seed", "an unsigned integer"),
        None => {
            p.issue(s.line, format!("section `{}` is missing `seed`", s.label));
            None
        }
    };
    let inner = match get("inner") {
        Some(e) => p.positive_int(e, "inner"),
        None => {
            p.issue(s.line, format!("section `{}` is missing `inner`", s.label));
            None
        }
    };
    let epochs =
        get("epochs")
            .and_then(|e| p.positive_int(e, "epochs"))
            .or(if get("epochs").is_some() {
                None
            } else {
                Some(1)
            });
    let batch = get("batch").and_then(|e| p.positive_int(e, "batch"));
    let record = get("record_every")
        .and_then(|e| p.positive_int(e, "record_every"))
        .unwrap_or(record_every);
    let max_queries = get("max_queries")
        .and_then(|e| p.parse_one::<u64>(e, "max_queries", "an unsigned integer"));

    let is_scgd = name.as_deref() == Some("scgd");
    let eta = match get("eta") {
        Some(e) if is_scgd => {
            p.issue(e.line, "scgd takes its steps from `schedule`, not `eta`");
            None
        }
        Some(e) => p.positive_real(e, "eta", true),
        None if is_scgd => Some(0.0),
        None => {
            p.issue(s.line, format!("section `{}` is missing `eta`", s.label));
            None
        }
    };
    let scgd_keys = ["schedule", "alpha", "beta", "a", "b"];
    let schedule = if is_scgd {
        let kind = get("schedule")
            .map(|e| (e.line, e.value.as_str()))
            .unwrap_or((s.line, "polynomial"));
        let real = |p: &mut Parser, key: &str| -> Option<f64> {
            match get(key) {
                Some(e) => p.positive_real(e, key, true),
                None => {
                    p.issue(
                        s.line,
                        format!("scgd section `{}` is missing `{key}`", s.label),
                    );
                    None
                }
            }
        };
        let sched = match kind.1 {
            "constant" => {
                for k in ["a", "b"] {
                    if let Some(e) = get(k) {
                        p.issue(e.line, format!("`{k}` belongs to the polynomial schedule"));
                    }
                }
                match (real(p, "alpha"), real(p, "beta")) {
                    (Some(alpha), Some(beta)) => Some(ScgdSchedule::Constant { alpha, beta }),
                    _ => None,
                }
            }
            "polynomial" => {
                for k in ["alpha", "beta"] {
                    if let Some(e) = get(k) {
                        p.issue(e.line, format!("`{k}` belongs to the constant schedule"));
                    }
                }
                match (real(p, "a"), real(p, "b")) {
                    (Some(a), Some(b)) => Some(ScgdSchedule::Polynomial { a, b }),
                    _ => None,
                }
            }
            other => {
                p.issue(
                    kind.0,
                    format!("unknown schedule `{other}` (constant, polynomial)"),
                );
                None
            }
        };
        if let Some(sc) = &sched {
            if let Err(e) = sc.validate() {
                p.issue(kind.0, e.to_string());
            }
        }
        sched
    } else {
        for k in scgd_keys {
            if let Some(e) = get(k) {
                p.issue(e.line, format!("`{k}` only applies to scgd"));
            }
        }
        None
    };

    if p.issues.len() > before {
        return None;
    }
    let algorithm = match name?.as_str() {
        "scdf" => Algorithm::Scdf,
        "scdf-svrg" => Algorithm::ScdfSvrg,
        "scdf-saga" => Algorithm::ScdfSaga,
        "sgd" => Algorithm::Sgd(InnerMode::SingleSample),
        "sgd-exact" => Algorithm::Sgd(InnerMode::ExactInner),
        "scgd" => Algorithm::Scgd(schedule?),
        "c-svrg" => Algorithm::CompositionalSvrg,
        _ => unreachable!("names were validated"),
    };
    Some(AlgorithmSpec {
        label: s.label.clone(),
        algorithm,
        run: RunConfig {
            eta: eta?,
            epochs: epochs?,
            inner: inner?,
            batch: batch.unwrap_or(1),
            record_every: record,
            seed: seed?,
            max_queries,
            timing,
            ..RunConfig::default()
        },
        fixed_batch: batch.is_some(),
        line: s.line,
    })
}
