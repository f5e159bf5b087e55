//! Smoothness and boundedness constants, and the step-size and batch-size
//! conditions built from them.
//!
//! The constants are estimated empirically by [`estimate_constants`]. Each
//! estimate is a maximum over finitely many samples of a quantity whose
//! supremum defines the constant, so it can only under-estimate; use
//! [`ProblemConstants::inflated`] before feeding estimates into the bounds.

mod bounds;
mod estimate;

pub use bounds::{
    saga_bounds, svrg_contraction_factor, svrg_lyapunov, svrg_step_bound, BoundStatus, Branch,
    SagaBounds, SvrgContraction, SvrgLyapunov, SvrgStepBound,
};
pub use estimate::{estimate_constants, estimate_constants_with, EstimateOptions};

use crate::error::{Error, Result};

/// Default multiplier applied to empirical constants before use.
pub const DEFAULT_SAFETY_FACTOR: f64 = 1.2;

/// Constants of the smoothness assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// `B_F`: bound on `‖∇F_i(y)‖`.
    pub bound_f: f64,
    /// `L_F`: Lipschitz constant of `∇F_i`.
    pub lip_f: f64,
    /// `B_G`: bound on `‖∂G_j(x)‖` (spectral norm).
    pub bound_g: f64,
    /// `L_G`: Lipschitz constant of `∂G_j`.
    pub lip_g: f64,
    /// `L_f`: smoothness of `x ↦ F_i(G(x))` in the co-coercivity sense.
    pub smooth_f: f64,
    /// `R_x`: level-set radius with `λR_x = max ‖x* − x‖²`.
    pub r_x: f64,
    /// Set when some level-set ray reached the sweep cap, so `r_x` is a cap
    /// rather than a measured boundary.
    pub r_x_capped: bool,
}

const KEYS: [&str; 6] = ["B_F", "L_F", "B_G", "L_G", "L_f", "R_x"];

impl ProblemConstants {
    /// All six constants equal to `v`.
    pub fn uniform(v: f64) -> Self {
        Self {
            bound_f: v,
            lip_f: v,
            bound_g: v,
            lip_g: v,
            smooth_f: v,
            r_x: v,
            r_x_capped: false,
        }
    }

    /// Every constant multiplied by `factor`.
    pub fn inflated(&self, factor: f64) -> Self {
        Self {
            bound_f: self.bound_f * factor,
            lip_f: self.lip_f * factor,
            bound_g: self.bound_g * factor,
            lip_g: self.lip_g * factor,
            smooth_f: self.smooth_f * factor,
            r_x: self.r_x * factor,
            r_x_capped: self.r_x_capped,
        }
    }

    /// `B_F² L_G²`.
    pub fn outer_term(&self) -> f64 {
        self.bound_f.powi(2) * self.lip_g.powi(2)
    }

    /// `B_G⁴ L_F²`.
    pub fn inner_term(&self) -> f64 {
        self.bound_g.powi(4) * self.lip_f.powi(2)
    }

    fn values(&self) -> [f64; 6] {
        [
            self.bound_f,
            self.lip_f,
            self.bound_g,
            self.lip_g,
            self.smooth_f,
            self.r_x,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in KEYS.iter().zip(self.values()) {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{k} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `key = value` lines with keys `B_F L_F B_G L_G L_f R_x`.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k} = {v:.16e}\n"))
            .collect()
    }

    /// Parses the [`to_text`](Self::to_text) format. Keys are case
    /// sensitive (`L_F` and `L_f` differ); `#` starts a comment. All six keys
    /// are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: [Option<f64>; 6] = [None; 6];
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: k + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let slot = KEYS
                .iter()
                .position(|&name| name == key)
                .ok_or_else(|| err(format!("unknown constant `{key}`")))?;
            if values[slot].is_some() {
                return Err(err(format!("duplicate constant `{key}`")));
            }
            values[slot] = Some(
                value
                    .parse()
                    .map_err(|_| err(format!("bad number `{value}`")))?,
            );
        }
        let missing: Vec<&str> = KEYS
            .iter()
            .zip(&values)
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| *k)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "missing constants: {}",
                missing.join(", ")
            )));
        }
        let v = values.map(|v| v.unwrap_or_default());
        let c = Self {
            bound_f: v[0],
            lip_f: v[1],
            bound_g: v[2],
            lip_g: v[3],
            smooth_f: v[4],
            r_x: v[5],
            r_x_capped: false,
        };
        c.validate()?;
        Ok(c)
    }
}
