//! Plain-text persistence for mean-variance instances.
//!
//! The first non-blank line holds `n N lambda`; it is followed by `n` lines of
//! `N` whitespace-separated rewards. Lines starting with `#` are ignored.
//! Reals are written with 17 significant digits, so a write/read round trip
//! reproduces the instance bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::oracle::Vector;

use super::MeanVarianceProblem;

pub fn write_mean_variance(problem: &MeanVarianceProblem) -> String {
    let rewards = problem.rewards();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {:.16e}",
        rewards.len(),
        problem.dim(),
        problem.base_lambda()
    );
    for r in rewards {
        let row: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_mean_variance(text: &str) -> Result<MeanVarianceProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(hline, "header must be `n N lambda`"));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad n `{}`", fields[0])))?;
    let dim: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad N `{}`", fields[1])))?;
    let lambda: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad lambda `{}`", fields[2])))?;

    let mut rows = Vec::with_capacity(n);
    for (line, content) in lines {
        if rows.len() == n {
            return Err(parse_err(line, format!("more than {n} reward rows")));
        }
        let values = content
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(parse_err(
                line,
                format!("expected {dim} rewards, found {}", values.len()),
            ));
        }
        rows.push(Vector::from_vec(values));
    }
    if rows.len() != n {
        return Err(parse_err(
            text.lines().count().max(1),
            format!("expected {n} reward rows, found {}", rows.len()),
        ));
    }
    MeanVarianceProblem::from_reward_rows(rows, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::generate_mean_variance;

    #[test]
    fn round_trip_is_exact() {
        let p = generate_mean_variance(12, 4, 10.0, 0.1, 3).unwrap();
        let q = read_mean_variance(&write_mean_variance(&p)).unwrap();
        assert_eq!(p.rewards(), q.rewards());
        assert_eq!(p.base_lambda().to_bits(), q.base_lambda().to_bits());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# toy\n2 1 0\n\n1\n3\n";
        let p = read_mean_variance(text).unwrap();
        assert_eq!(p.rewards().len(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match read_mean_variance("2 2 0.1\n1 2\n3 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match read_mean_variance("2 2 0.1\n1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_mean_variance("2 2\n").is_err());
        assert!(read_mean_variance("2 1 0\n1\n").is_err());
    }
}
