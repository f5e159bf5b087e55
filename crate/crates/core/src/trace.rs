//! Per-run convergence records and their CSV form.
//!
//! The CSV schema is fixed:
//!
//! ```text
//! iter,queries,objective,gap,grad_est_sq,ms
//! ```
//!
//! `queries` counts inner-function oracle calls (`G_j` values plus `∂G_j`
//! Jacobians). Reals are printed in scientific notation with 17 significant
//! digits, which round-trips every `f64` exactly. A missing gap or gradient
//! estimate is written as `NaN`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle::{QueryCounter, Vector};

pub const CSV_HEADER: &str = "iter,queries,objective,gap,grad_est_sq,ms";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub queries: u64,
    pub objective: f64,
    /// `P(x) − P*`, or NaN when no optimum is known.
    pub gap: f64,
    /// Mean squared norm of the step directions taken since the previous row.
    /// NaN on the initial row.
    pub grad_est_sq: f64,
    pub ms: f64,
    /// Relative violation of `λx = mean(β)` for dual-free solvers; NaN
    /// otherwise. Kept in memory only.
    pub coupling: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// Oracle counts at the end of the run.
    pub counter: QueryCounter,
    /// Final iterate.
    pub x: Vector,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap)
    }

    pub fn final_objective(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.objective)
    }

    /// Largest coupling violation over all rows (NaN rows ignored).
    pub fn max_coupling(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.coupling)
            .filter(|c| !c.is_nan())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.iter, r.queries, r.objective, r.gap, r.grad_est_sq, r.ms
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Parses CSV text written by [`Trace::to_csv`]. Coupling is not stored in
/// the file and comes back as NaN.
pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| err(format!("bad integer `{s}`")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad number `{s}`")))
        };
        rows.push(TraceRow {
            iter: int(fields[0])?,
            queries: int(fields[1])?,
            objective: real(fields[2])?,
            gap: real(fields[3])?,
            grad_est_sq: real(fields[4])?,
            ms: real(fields[5])?,
            coupling: f64::NAN,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceRow>> {
    parse_csv(&std::fs::read_to_string(path)?)
}
