//! Step-size and batch-size conditions of the linear-convergence theorems.
//!
//! Notation used throughout: `P = B_G⁴L_F²`, `Q = B_F²L_G²`, `λ` the
//! regularization weight, `n` the number of outer components, `A` the
//! mini-batch size.
//!
//! SVRG, non-convex outer components:
//!
//! ```text
//! η ≤ (λ²/2 − 4P/A) / (2λ(4Q/A + 4P/A) + λ³n/2 − 4λPn/A)
//! q = Aλ / (4P)
//! d₂ = 2(aηqP/A + bλη(4Q/A + 4P/A)) + bλη(4Q + 4P)
//! 2λ(4Q/A + 4P/A) / (λ − 1/q − 2qP/A) ≤ a/b ≤ (1 − nλη)λ/η
//! ```
//!
//! SVRG, convex outer components, with a free parameter `d ∈ (0, 1)`:
//!
//! ```text
//! A ≥ 2R_xP/d
//! η ≤ (1 − d) / (2L_f + λn(1 − d))
//! e₂ = 2aηλR_xP/A + 4bλη(Q + P)/A
//! (2(2Q + P)/A − L_fλ) / (d − 2R_xP/A) ≤ a/b ≤ (1 − nλη)λ/η
//! d ≤ ((2Q + P)/A + λL_F R_x P/A) / ((2Q + P)/A + λL_f)
//! ```
//!
//! The per-epoch contraction factor is `1/(ηλK) + d₂/(aηλ)` (or `e₂`), with
//! `a/b` at the midpoint of its admissible interval.
//!
//! SAGA, non-convex outer components, with `r = A/(A − ληn)`:
//!
//! ```text
//! A ≥ (ληn + 16R_x(Q + P))/2 + √(λ²η²n² + (16R_x(Q + P))²)/2
//! η ≤ λ / (2Y₂ + 2rY₃ + λ²n(1 − 8(1 + r)Y₁))
//! Y₁ = R_x(Q + P)/A,  Y₂ = Q/A + P,  Y₃ = Q/A
//! (2Y₂ + 2rY₃) / (1 − 8(1 + r)Y₁) ≤ a/b ≤ (1 − λnη)λ/η
//! ```
//!
//! SAGA, convex outer components, with `Y = (Q + P)/A`:
//!
//! ```text
//! A ≥ (2 + √2)(ληn + 16R_x(Q + P)/d)
//! η ≤ 1 / (2L_fλ/(1 − d) + λn)
//! 2L_fλ/(1 − d) ≤ a/b ≤ (1 − λnη)λ/η
//! d ≤ ((4Y + 4Yr − 2L_fλ) + 16(1 + r)R_xYL_fλ) / (4Y + 4Yr)
//! ```
//!
//! The SAGA rate is `1 − λη` per step.

use crate::error::{Error, Result};

use super::ProblemConstants;

/// Which theorem family applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// Individual `F_i` may be non-convex.
    NonConvex,
    /// Individual `F_i` convex, with the free parameter `d ∈ (0, 1)`.
    Convex { d: f64 },
}

impl Branch {
    fn check(&self) -> Result<()> {
        match *self {
            Branch::NonConvex => Ok(()),
            Branch::Convex { d } if d > 0.0 && d < 1.0 => Ok(()),
            Branch::Convex { d } => Err(Error::Config(format!(
                "convex branch needs d in (0, 1), got {d}"
            ))),
        }
    }
}

/// Outcome of evaluating a bound.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundStatus {
    /// The bound is a usable positive number.
    Valid,
    /// The expression has a non-positive numerator or denominator: no step
    /// size satisfies it for these constants.
    Vacuous(String),
    /// The coupled conditions have no solution in the admissible range.
    Infeasible(String),
}

impl BoundStatus {
    pub fn is_valid(&self) -> bool {
        matches!(self, BoundStatus::Valid)
    }
}

fn check_common(c: &ProblemConstants, lambda: f64, n: usize, a: f64) -> Result<()> {
    c.validate()?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("λ must be positive, got {lambda}")));
    }
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Config(format!("A must be positive, got {a}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrgStepBound {
    /// The step-size display. In the non-convex branch it is NaN unless
    /// `status` is valid; in the convex branch it does not depend on `A` and
    /// is always reported, with `status` telling whether the side conditions
    /// on `A` and `d` hold.
    pub eta_max: f64,
    pub status: BoundStatus,
    /// `q = Aλ/(4P)` (non-convex branch).
    pub q: Option<f64>,
    /// `2R_xP/d` (convex branch).
    pub a_min: Option<f64>,
    /// Upper bound on `d` (convex branch).
    pub d_max: Option<f64>,
    /// Lyapunov quantities at `η = eta_max`, when valid.
    pub at_eta_max: Option<SvrgLyapunov>,
}

/// The a/b interval and the `d₂` (or `e₂`) term at a given step size.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrgLyapunov {
    pub ab_lower: f64,
    pub ab_upper: f64,
    /// Midpoint of the interval, the ratio used for diagnostics.
    pub ab: f64,
    /// `d₂` (or `e₂`) with `b = 1`, `a = ab`.
    pub d2: f64,
    /// `d₂/(aηλ)`, the limit of the contraction factor as `K → ∞`.
    pub limit: f64,
    /// False when the interval is empty or the lower end has a
    /// non-positive denominator.
    pub feasible: bool,
}

/// Maximal step size for SCDF-SVRG and the auxiliary quantities.
pub fn svrg_step_bound(
    c: &ProblemConstants,
    lambda: f64,
    n: usize,
    a: f64,
    branch: Branch,
) -> Result<SvrgStepBound> {
    check_common(c, lambda, n, a)?;
    branch.check()?;
    let (p, q_term) = (c.inner_term(), c.outer_term());
    let nf = n as f64;
    let mut out = match branch {
        Branch::NonConvex => {
            let num = 0.5 * lambda * lambda - 4.0 * p / a;
            let den = 2.0 * (4.0 * q_term / a + 4.0 * p / a) * lambda + 0.5 * lambda.powi(3) * nf
                - 4.0 * lambda * p * nf / a;
            let q = if p > 0.0 {
                a * lambda / (4.0 * p)
            } else {
                f64::INFINITY
            };
            let (eta_max, status) = if num <= 0.0 {
                (
                    f64::NAN,
                    BoundStatus::Vacuous(format!(
                        "numerator λ²/2 − 4B_G⁴L_F²/A = {num:e} ≤ 0; need A > {}",
                        8.0 * p / (lambda * lambda)
                    )),
                )
            } else if den <= 0.0 {
                (
                    f64::NAN,
                    BoundStatus::Vacuous(format!("denominator {den:e} ≤ 0")),
                )
            } else {
                (num / den, BoundStatus::Valid)
            };
            SvrgStepBound {
                eta_max,
                status,
                q: Some(q),
                a_min: None,
                d_max: None,
                at_eta_max: None,
            }
        }
        Branch::Convex { d } => {
            let a_min = 2.0 * c.r_x * p / d;
            let s = (2.0 * q_term + p) / a;
            let d_max = (s + lambda * c.lip_f * c.r_x * p / a) / (s + lambda * c.smooth_f);
            let eta = (1.0 - d) / (2.0 * c.smooth_f + lambda * nf * (1.0 - d));
            let status = if a < a_min {
                BoundStatus::Infeasible(format!("A = {a} is below 2R_xB_G⁴L_F²/d = {a_min}"))
            } else if d > d_max {
                BoundStatus::Infeasible(format!("d = {d} exceeds its bound {d_max}"))
            } else {
                BoundStatus::Valid
            };
            SvrgStepBound {
                eta_max: eta,
                status,
                q: None,
                a_min: Some(a_min),
                d_max: Some(d_max),
                at_eta_max: None,
            }
        }
    };
    if out.status.is_valid() {
        out.at_eta_max = Some(svrg_lyapunov(c, lambda, n, a, out.eta_max, branch)?);
    }
    Ok(out)
}

/// The a/b interval and `d₂`/`e₂` term at step size `eta`.
pub fn svrg_lyapunov(
    c: &ProblemConstants,
    lambda: f64,
    n: usize,
    a: f64,
    eta: f64,
    branch: Branch,
) -> Result<SvrgLyapunov> {
    check_common(c, lambda, n, a)?;
    branch.check()?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Config(format!("η must be positive, got {eta}")));
    }
    let (p, q_term) = (c.inner_term(), c.outer_term());
    let nf = n as f64;
    let ab_upper = (1.0 - nf * lambda * eta) * lambda / eta;
    // q·B_G⁴L_F²/A, which equals λ/4; evaluated directly when q is finite.
    let qp_over_a = if p > 0.0 {
        (a * lambda / (4.0 * p)) * p / a
    } else {
        lambda / 4.0
    };
    let (lower_num, lower_den) = match branch {
        Branch::NonConvex => {
            let inv_q = 4.0 * p / (a * lambda);
            (
                2.0 * lambda * (4.0 * q_term / a + 4.0 * p / a),
                lambda - inv_q - 2.0 * qp_over_a,
            )
        }
        Branch::Convex { d } => (
            2.0 * (2.0 * q_term + p) / a - c.smooth_f * lambda,
            d - 2.0 * c.r_x * p / a,
        ),
    };
    let ab_lower = lower_num / lower_den;
    // A non-positive lower end (with a positive denominator) leaves the
    // constraint inactive.
    let lower = ab_lower.max(0.0);
    let feasible = lower_den > 0.0 && ab_upper > 0.0 && lower <= ab_upper;
    let ab = 0.5 * (lower + ab_upper);
    let d2 = match branch {
        Branch::NonConvex => {
            2.0 * (ab * eta * qp_over_a + lambda * eta * (4.0 * q_term / a + 4.0 * p / a))
                + lambda * eta * (4.0 * q_term + 4.0 * p)
        }
        Branch::Convex { .. } => {
            2.0 * ab * eta * lambda * c.r_x * p / a + 4.0 * lambda * eta * (q_term + p) / a
        }
    };
    Ok(SvrgLyapunov {
        ab_lower,
        ab_upper,
        ab,
        d2,
        limit: d2 / (ab * eta * lambda),
        feasible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrgContraction {
    /// `1/(ηλK) + d₂/(aηλ)`; NaN when infeasible.
    pub factor: f64,
    /// `factor < 1`.
    pub contractive: bool,
    pub status: BoundStatus,
    pub lyapunov: SvrgLyapunov,
}

/// Per-epoch contraction factor of SCDF-SVRG.
#[allow(clippy::too_many_arguments)]
pub fn svrg_contraction_factor(
    c: &ProblemConstants,
    lambda: f64,
    n: usize,
    k: usize,
    a: f64,
    eta: f64,
    branch: Branch,
) -> Result<SvrgContraction> {
    if k == 0 {
        return Err(Error::Config("K must be positive".into()));
    }
    let ly = svrg_lyapunov(c, lambda, n, a, eta, branch)?;
    if !ly.feasible {
        return Ok(SvrgContraction {
            factor: f64::NAN,
            contractive: false,
            status: BoundStatus::Infeasible(format!(
                "empty a/b interval [{:e}, {:e}]",
                ly.ab_lower, ly.ab_upper
            )),
            lyapunov: ly,
        });
    }
    let factor = 1.0 / (eta * lambda * k as f64) + ly.limit;
    Ok(SvrgContraction {
        factor,
        contractive: factor > 0.0 && factor < 1.0,
        status: BoundStatus::Valid,
        lyapunov: ly,
    })
}

/// Resolved SAGA conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct SagaBounds {
    /// Smallest admissible batch size at `eta`.
    pub a_min: f64,
    /// Largest admissible step at `a`.
    pub eta_max: f64,
    /// Resolved batch size. When left free: the smallest integer above
    /// `a_min` (non-convex, where `a_min` is a strict bound) or `a_min`
    /// itself (convex).
    pub a: f64,
    /// Resolved step (given, or `eta_max` when left free).
    pub eta: f64,
    /// `Y₁, Y₂, Y₃` (non-convex) or `Y` in the first slot (convex).
    pub y: [f64; 3],
    /// Upper bound on `d` (convex branch).
    pub d_max: Option<f64>,
    pub ab_lower: f64,
    pub ab_upper: f64,
    /// Per-step rate `1 − λη`.
    pub rate: f64,
    /// Fixed-point iterations used (0 when none was needed).
    pub iterations: usize,
    /// All conditions hold at `(a, eta)`.
    pub feasible: bool,
    pub status: BoundStatus,
}

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITERS: usize = 1000;

fn saga_a_min_nonconvex(c: &ProblemConstants, lambda: f64, nf: f64, eta: f64) -> f64 {
    let t = 16.0 * c.r_x * (c.outer_term() + c.inner_term());
    let l = lambda * eta * nf;
    (l + t) / 2.0 + (l * l + t * t).sqrt() / 2.0
}

fn saga_a_min_convex(c: &ProblemConstants, lambda: f64, nf: f64, eta: f64, d: f64) -> f64 {
    (2.0 + 2.0_f64.sqrt())
        * (lambda * eta * nf + 16.0 * c.r_x * (c.outer_term() + c.inner_term()) / d)
}

fn saga_ys(c: &ProblemConstants, a: f64) -> [f64; 3] {
    let (p, q) = (c.inner_term(), c.outer_term());
    [c.r_x * (q + p) / a, q / a + p, q / a]
}

/// Right-hand side of the non-convex SAGA step condition, or `None` where
/// it is undefined or non-positive.
fn saga_eta_rhs(c: &ProblemConstants, lambda: f64, nf: f64, a: f64, eta: f64) -> Option<f64> {
    let gap = a - lambda * eta * nf;
    if gap <= 0.0 {
        return None;
    }
    let r = a / gap;
    let [y1, y2, y3] = saga_ys(c, a);
    let den = 2.0 * y2 + r * 2.0 * y3 + lambda * lambda * nf * (1.0 - 8.0 * (1.0 + r) * y1);
    (den > 0.0).then(|| lambda / den)
}

/// Solves the coupled SAGA conditions. Exactly one of `a` and `eta` may be
/// `None`; the free one is resolved from the other. When both are given
/// they are checked as-is.
pub fn saga_bounds(
    c: &ProblemConstants,
    lambda: f64,
    n: usize,
    a: Option<f64>,
    eta: Option<f64>,
    branch: Branch,
) -> Result<SagaBounds> {
    branch.check()?;
    check_common(c, lambda, n, a.unwrap_or(1.0))?;
    if let Some(e) = eta {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Config(format!("η must be positive, got {e}")));
        }
    }
    if a.is_none() && eta.is_none() {
        return Err(Error::Config(
            "at most one of the batch size and the step may be left free".into(),
        ));
    }
    let nf = n as f64;
    let eta_cap = 1.0 / (lambda * nf);
    match branch {
        Branch::NonConvex => {
            let (eta, eta_max, iterations, mut status) = match (a, eta) {
                (Some(a_val), None) => {
                    let mut e = 0.0;
                    let mut iters = 0;
                    let mut status = BoundStatus::Valid;
                    loop {
                        iters += 1;
                        match saga_eta_rhs(c, lambda, nf, a_val, e) {
                            None => {
                                status = BoundStatus::Infeasible(format!(
                                    "step condition undefined at η = {e:e}"
                                ));
                                break;
                            }
                            Some(next) => {
                                let done = (next - e).abs() <= FIXED_POINT_TOL * next.max(1.0);
                                e = next;
                                if done {
                                    break;
                                }
                            }
                        }
                        if iters == FIXED_POINT_MAX_ITERS {
                            status = BoundStatus::Infeasible(format!(
                                "fixed point did not settle in {FIXED_POINT_MAX_ITERS} iterations (last η = {e:e})"
                            ));
                            break;
                        }
                    }
                    if status.is_valid() && !(e > 0.0 && e < eta_cap) {
                        status = BoundStatus::Infeasible(format!(
                            "fixed point η = {e:e} outside (0, 1/(λn)) = (0, {eta_cap:e})"
                        ));
                    }
                    let e_out = if status.is_valid() { e } else { f64::NAN };
                    (e_out, e_out, iters, status)
                }
                (_, Some(e)) => {
                    let a_res =
                        a.unwrap_or_else(|| saga_a_min_nonconvex(c, lambda, nf, e).floor() + 1.0);
                    let rhs = saga_eta_rhs(c, lambda, nf, a_res, e);
                    let status = match rhs {
                        None => BoundStatus::Vacuous(format!(
                            "step condition undefined or non-positive at A = {a_res}, η = {e:e}"
                        )),
                        Some(_) => BoundStatus::Valid,
                    };
                    (e, rhs.unwrap_or(f64::NAN), 0, status)
                }
                (None, None) => unreachable!(),
            };
            let a_min = if eta.is_nan() {
                f64::NAN
            } else {
                saga_a_min_nonconvex(c, lambda, nf, eta)
            };
            let a_res = a.unwrap_or(a_min.floor() + 1.0);
            let y = saga_ys(c, a_res);
            let r = a_res / (a_res - lambda * eta * nf);
            let ab_lower = (2.0 * y[1] + r * 2.0 * y[2]) / (1.0 - 8.0 * (1.0 + r) * y[0]);
            let ab_upper = (1.0 - lambda * nf * eta) * lambda / eta;
            let conditions = status.is_valid()
                && a_res >= a_min
                && eta <= eta_max
                && eta < eta_cap
                && ab_lower > 0.0
                && ab_lower <= ab_upper;
            if status.is_valid() && !conditions {
                status = BoundStatus::Infeasible(format!(
                    "conditions fail at A = {a_res}, η = {eta:e} (A_min = {a_min}, η_max = {eta_max:e}, a/b ∈ [{ab_lower:e}, {ab_upper:e}])"
                ));
            }
            Ok(SagaBounds {
                a_min,
                eta_max,
                a: a_res,
                eta,
                y,
                d_max: None,
                ab_lower,
                ab_upper,
                rate: 1.0 - lambda * eta,
                iterations,
                feasible: conditions,
                status,
            })
        }
        Branch::Convex { d } => {
            let eta_max = 1.0 / (2.0 * c.smooth_f * lambda / (1.0 - d) + lambda * nf);
            let eta_res = eta.unwrap_or(eta_max);
            let a_min = saga_a_min_convex(c, lambda, nf, eta_res, d);
            let a_res = a.unwrap_or(a_min);
            let y = (c.outer_term() + c.inner_term()) / a_res;
            let gap = a_res - lambda * eta_res * nf;
            let r = a_res / gap;
            let d_max = ((4.0 * y + 4.0 * y * r - 2.0 * c.smooth_f * lambda)
                + 16.0 * (1.0 + r) * c.r_x * y * c.smooth_f * lambda)
                / (4.0 * y + r * 4.0 * y);
            let ab_lower = 2.0 * c.smooth_f * lambda / (1.0 - d);
            let ab_upper = (1.0 - lambda * nf * eta_res) * lambda / eta_res;
            let feasible = gap > 0.0
                && a_res >= a_min
                && eta_res <= eta_max
                && d <= d_max
                && ab_lower <= ab_upper;
            let status = if feasible {
                BoundStatus::Valid
            } else {
                BoundStatus::Infeasible(format!(
                    "conditions fail at A = {a_res}, η = {eta_res:e} (A_min = {a_min}, η_max = {eta_max:e}, d_max = {d_max:e})"
                ))
            };
            Ok(SagaBounds {
                a_min,
                eta_max,
                a: a_res,
                eta: eta_res,
                y: [y, f64::NAN, f64::NAN],
                d_max: Some(d_max),
                ab_lower,
                ab_upper,
                rate: 1.0 - lambda * eta_res,
                iterations: 0,
                feasible,
                status,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones() -> ProblemConstants {
        ProblemConstants::uniform(1.0)
    }

    #[test]
    fn nonconvex_svrg_example() {
        let b = svrg_step_bound(&ones(), 1.0, 10, 100.0, Branch::NonConvex).unwrap();
        assert!(b.status.is_valid());
        let expected = (0.5 - 4.0 / 100.0) / (2.0 * (0.04 + 0.04) + 5.0 - 0.4);
        assert!((b.eta_max - expected).abs() <= 1e-12);
        assert!((b.eta_max - 0.09664).abs() < 1e-5);
        assert_eq!(b.q, Some(25.0));
    }

    #[test]
    fn small_batch_makes_bound_vacuous() {
        // 8B_G⁴L_F²/λ² = 8.
        let b = svrg_step_bound(&ones(), 1.0, 10, 8.0, Branch::NonConvex).unwrap();
        assert!(matches!(b.status, BoundStatus::Vacuous(_)));
        assert!(b.eta_max.is_nan());
    }

    #[test]
    fn convex_svrg_example() {
        let mut c = ones();
        c.r_x = 0.0;
        let b = svrg_step_bound(&c, 1.0, 10, 100.0, Branch::Convex { d: 0.5 }).unwrap();
        assert!((b.eta_max - 1.0 / 14.0).abs() <= 1e-12);
        // The side condition on d is far stricter than 0.5 for unit constants.
        assert!(b.d_max.unwrap() < 0.5);
        assert!(matches!(b.status, BoundStatus::Infeasible(_)));
        assert!(svrg_step_bound(&c, 1.0, 10, 100.0, Branch::Convex { d: 1.5 }).is_err());
    }

    #[test]
    fn svrg_bound_grows_with_batch() {
        let c = ProblemConstants::uniform(1.3);
        let mut last = 0.0;
        for a in (1..=10).map(|k| 50.0 * k as f64) {
            let b = svrg_step_bound(&c, 1.0, 10, a, Branch::NonConvex).unwrap();
            assert!(b.eta_max >= last);
            last = b.eta_max;
        }
    }

    #[test]
    fn contraction_limits_and_flags() {
        let c = ones();
        let f1 =
            svrg_contraction_factor(&c, 1.0, 10, 1000, 100.0, 0.01, Branch::NonConvex).unwrap();
        assert!(f1.contractive, "factor {}", f1.factor);
        let big =
            svrg_contraction_factor(&c, 1.0, 10, 1 << 40, 100.0, 0.01, Branch::NonConvex).unwrap();
        assert!((big.factor - big.lyapunov.limit).abs() < 1e-9);
        // η ≥ 1/(λn) empties the interval.
        let bad =
            svrg_contraction_factor(&c, 1.0, 10, 1000, 100.0, 0.2, Branch::NonConvex).unwrap();
        assert!(matches!(bad.status, BoundStatus::Infeasible(_)));
    }

    #[test]
    fn saga_examples() {
        let c = ones();
        let b = saga_bounds(&c, 1.0, 10, None, Some(0.001), Branch::NonConvex).unwrap();
        let t: f64 = 32.0;
        let l: f64 = 0.01;
        let expected = (l + t) / 2.0 + (l * l + t * t).sqrt() / 2.0;
        assert!((b.a_min - expected).abs() <= 1e-12);
        assert!(b.a_min >= 16.0);

        let mut c0 = c;
        c0.r_x = 0.0;
        let b0 = saga_bounds(&c0, 1.0, 10, None, Some(0.001), Branch::NonConvex).unwrap();
        assert!((b0.a_min - 0.01).abs() <= 1e-15);

        // A free batch resolves strictly above its bound.
        let small = ProblemConstants::uniform(0.01);
        let bs = saga_bounds(&small, 1.0, 10, None, Some(1e-3), Branch::NonConvex).unwrap();
        assert_eq!(bs.a, bs.a_min.floor() + 1.0);
        assert!(bs.feasible, "{:?}", bs.status);

        let cv = saga_bounds(&c, 1.0, 10, Some(1e6), None, Branch::Convex { d: 0.5 }).unwrap();
        assert!((cv.eta_max - 1.0 / 14.0).abs() <= 1e-12);
    }

    #[test]
    fn saga_fixed_point_for_step() {
        let c = ProblemConstants::uniform(0.1);
        let b = saga_bounds(&c, 1.0, 10, Some(50.0), None, Branch::NonConvex).unwrap();
        assert!(b.iterations > 0);
        if b.status.is_valid() {
            let rhs = saga_eta_rhs(&c, 1.0, 10.0, 50.0, b.eta).unwrap();
            assert!((rhs - b.eta).abs() <= 1e-11);
        }
        assert!(saga_bounds(&c, 1.0, 10, None, None, Branch::NonConvex).is_err());
    }

    #[test]
    fn saga_fixed_point_outside_range_is_infeasible() {
        // With unit constants the fixed point lands far above 1/(λn).
        let b = saga_bounds(&ones(), 1.0, 10, Some(1e4), None, Branch::NonConvex).unwrap();
        assert!(matches!(b.status, BoundStatus::Infeasible(_)));
        assert!(!b.feasible);
    }

    #[test]
    fn evaluators_are_pure() {
        let c = ProblemConstants::uniform(0.7);
        let a = svrg_step_bound(&c, 0.5, 20, 300.0, Branch::NonConvex).unwrap();
        let b = svrg_step_bound(&c, 0.5, 20, 300.0, Branch::NonConvex).unwrap();
        assert_eq!(a.eta_max.to_bits(), b.eta_max.to_bits());
    }
}
