//! Sampling estimators of the problem constants.

use crate::error::{Error, Result};
use crate::oracle::{
    inner_jacobian, inner_value, CompositionProblem, Matrix, QueryCounter, Vector,
};
use crate::par::Execution;
use crate::rng::PrngStream;

use super::ProblemConstants;

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    /// Number of sampled pairs for each Lipschitz-type ratio.
    pub pairs: usize,
    pub seed: u64,
    /// Power iterations per spectral-norm estimate.
    pub power_iters: usize,
    /// Rays in the level-set sweep.
    pub directions: usize,
    /// Point the level-set distance is measured from; `x0` when `None`.
    pub reference: Option<Vector>,
    /// Start of the level set; the first sample point when `None`.
    pub x0: Option<Vector>,
    /// Rays longer than `radius_cap · (1 + ‖x0‖)` are cut off and flagged.
    pub radius_cap: f64,
    pub exec: Execution,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            pairs: 200,
            seed: 0,
            power_iters: 50,
            directions: 16,
            reference: None,
            x0: None,
            radius_cap: 1e6,
            exec: Execution::Sequential,
        }
    }
}

/// Estimates the constants from `sample_points` with `pairs` sampled pairs
/// per ratio. The level set starts at the first sample point.
pub fn estimate_constants<P: CompositionProblem + ?Sized>(
    problem: &P,
    sample_points: &[Vector],
    pairs: usize,
    seed: u64,
) -> Result<ProblemConstants> {
    estimate_constants_with(
        problem,
        sample_points,
        &EstimateOptions {
            pairs,
            seed,
            ..EstimateOptions::default()
        },
    )
}

/// Largest singular value by power iteration on `MᵀM`.
fn spectral_norm(m: &Matrix, iters: usize, stream: &mut PrngStream) -> f64 {
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let mut v = stream.gaussian_vector(m.ncols());
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= nv;
    for _ in 0..iters {
        let w = m.tr_mul(&(m * &v));
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        v = w / nw;
    }
    (m * &v).norm()
}

fn unit_direction(stream: &mut PrngStream, dim: usize) -> Vector {
    loop {
        let u = stream.gaussian_vector(dim);
        let n = u.norm();
        if n > 0.0 {
            return u / n;
        }
    }
}

/// Second point of a sampled pair: another sample point on even pairs,
/// a random perturbation on odd ones.
fn partner(points: &[Vector], a: usize, k: usize, stream: &mut PrngStream) -> Vector {
    if k.is_multiple_of(2) && points.len() > 1 {
        let mut b = stream.index(points.len() - 1);
        if b >= a {
            b += 1;
        }
        points[b].clone()
    } else {
        let x = &points[a];
        x + unit_direction(stream, x.len()) * (0.1 * (1.0 + x.norm()))
    }
}

fn fmax(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

pub fn estimate_constants_with<P: CompositionProblem + ?Sized>(
    problem: &P,
    sample_points: &[Vector],
    opts: &EstimateOptions,
) -> Result<ProblemConstants> {
    if sample_points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sample points, got {}",
            sample_points.len()
        )));
    }
    for x in sample_points {
        crate::error::ensure_dim("sample point", problem.dim_x(), x.len())?;
    }
    let (n, m) = (problem.n(), problem.m());
    let exec = opts.exec;
    let mut q = QueryCounter::new();
    let ys: Vec<Vector> = sample_points
        .iter()
        .map(|x| inner_value(problem, x, &mut q))
        .collect::<Result<_>>()?;

    // B_F and B_G over every (component, point).
    let bound_f = fmax(exec.map(&ys, |y| fmax((0..n).map(|i| problem.grad_f(i, y).norm()))));
    let bound_g = fmax(exec.map_range(sample_points.len(), |p| {
        let mut s = PrngStream::new(opts.seed ^ p as u64, "power");
        fmax((0..m).map(|j| {
            spectral_norm(
                &problem.jac_g(j, &sample_points[p]),
                opts.power_iters,
                &mut s,
            )
        }))
    }));

    // Pairs are drawn up front so the parallel evaluation is deterministic.
    let mut stream = PrngStream::new(opts.seed, "constants");
    let x_pairs: Vec<(Vector, Vector)> = (0..opts.pairs)
        .map(|k| {
            let a = stream.index(sample_points.len());
            let b = partner(sample_points, a, k, &mut stream);
            (sample_points[a].clone(), b)
        })
        .collect();
    let y_pairs: Vec<(Vector, Vector)> = (0..opts.pairs)
        .map(|k| {
            let a = stream.index(ys.len());
            let b = partner(&ys, a, k, &mut stream);
            (ys[a].clone(), b)
        })
        .collect();

    let lip_f = fmax(exec.map(&y_pairs, |(y, z)| {
        let dist = (y - z).norm();
        if dist == 0.0 {
            return 0.0;
        }
        fmax((0..n).map(|i| (problem.grad_f(i, y) - problem.grad_f(i, z)).norm() / dist))
    }));

    let lip_g = fmax(exec.map_range(x_pairs.len(), |k| {
        let (x, z) = &x_pairs[k];
        let dist = (x - z).norm();
        if dist == 0.0 {
            return 0.0;
        }
        let mut s = PrngStream::new(opts.seed ^ k as u64, "power-diff");
        fmax((0..m).map(|j| {
            spectral_norm(
                &(problem.jac_g(j, x) - problem.jac_g(j, z)),
                opts.power_iters,
                &mut s,
            ) / dist
        }))
    }));

    let smooth_f = fmax(exec.map(&x_pairs, |(x, z)| smoothness_ratio(problem, x, z)));

    let x0 = opts.x0.clone().unwrap_or_else(|| sample_points[0].clone());
    let reference = opts.reference.clone().unwrap_or_else(|| x0.clone());
    let (dist_sq, capped) = level_set_sweep(problem, &x0, &reference, opts)?;
    let lambda = problem.lambda();
    let r_x = if lambda > 0.0 {
        dist_sq / lambda
    } else {
        f64::INFINITY
    };

    Ok(ProblemConstants {
        bound_f,
        lip_f,
        bound_g,
        lip_g,
        smooth_f,
        r_x,
        r_x_capped: capped || lambda == 0.0,
    })
}

/// Largest `‖g_i(x) − g_i(z)‖² / (2 D_i(x, z))` over `i`, with
/// `g_i = ∂Gᵀ∇F_i(G)` and `D_i` the Bregman gap of `F_i∘G`. Pairs with a
/// non-positive (or round-off sized) gap are skipped.
fn smoothness_ratio<P: CompositionProblem + ?Sized>(problem: &P, x: &Vector, z: &Vector) -> f64 {
    if x == z {
        return 0.0;
    }
    let mut q = QueryCounter::new();
    let (Ok(gx), Ok(gz), Ok(jx), Ok(jz)) = (
        inner_value(problem, x, &mut q),
        inner_value(problem, z, &mut q),
        inner_jacobian(problem, x, &mut q),
        inner_jacobian(problem, z, &mut q),
    ) else {
        return 0.0;
    };
    let diff = x - z;
    fmax((0..problem.n()).map(|i| {
        let fx = problem.eval_f(i, &gx);
        let fz = problem.eval_f(i, &gz);
        let dx = jx.tr_mul(&problem.grad_f(i, &gx));
        let dz = jz.tr_mul(&problem.grad_f(i, &gz));
        let gap = fx - fz - dz.dot(&diff);
        let noise = 1e-12 * (1.0 + fx.abs() + fz.abs());
        if gap > noise {
            (dx - dz).norm_squared() / (2.0 * gap)
        } else {
            0.0
        }
    }))
}

fn composition_value<P: CompositionProblem + ?Sized>(problem: &P, x: &Vector) -> Result<f64> {
    let y = inner_value(problem, x, &mut QueryCounter::new())?;
    Ok((0..problem.n()).map(|i| problem.eval_f(i, &y)).sum::<f64>() / problem.n() as f64)
}

/// Largest `‖reference − x‖²` over boundary points of
/// `{x : F(G(x)) ≤ F(G(x0))}` found along random rays from `x0`.
fn level_set_sweep<P: CompositionProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    reference: &Vector,
    opts: &EstimateOptions,
) -> Result<(f64, bool)> {
    let level = composition_value(problem, x0)?;
    let tol = 1e-12 * (1.0 + level.abs());
    let scale = 1.0 + x0.norm();
    let cap = opts.radius_cap * scale;
    let mut stream = PrngStream::new(opts.seed, "level-set");
    let dirs: Vec<Vector> = (0..opts.directions)
        .map(|_| unit_direction(&mut stream, x0.len()))
        .collect();
    let inside = |x: &Vector| composition_value(problem, x).map(|v| v <= level + tol);
    let rays = opts.exec.map(&dirs, |u| -> Result<(f64, bool)> {
        let mut lo = 0.0;
        let mut hi = scale;
        let mut capped = false;
        while inside(&(x0 + u * hi))? {
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                capped = true;
                break;
            }
        }
        if !capped {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(&(x0 + u * mid))? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        Ok(((reference - (x0 + u * lo)).norm_squared(), capped))
    });
    let mut best = (reference - x0).norm_squared();
    let mut any_capped = false;
    for r in rays {
        let (d, c) = r?;
        best = best.max(d);
        any_capped |= c;
    }
    Ok((best, any_capped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_bellman_toy, generate_mean_variance, MeanVarianceProblem};

    fn points(dim: usize, count: usize) -> Vec<Vector> {
        let mut s = PrngStream::new(1, "points");
        (0..count).map(|_| s.gaussian_vector(dim)).collect()
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let mut s = PrngStream::new(3, "m");
        let m = s.gaussian_matrix(5, 4);
        let est = spectral_norm(&m, 50, &mut s);
        let exact = m.clone().svd(false, false).singular_values.max();
        assert!(est <= exact * (1.0 + 1e-12));
        assert!(est >= 0.99 * exact);
    }

    #[test]
    fn mean_variance_structure() {
        let p = generate_mean_variance(30, 4, 10.0, 0.1, 2).unwrap();
        let c = estimate_constants(&p, &points(4, 6), 50, 7).unwrap();
        assert!(c.bound_g >= 1.0);
        assert_eq!(c.lip_g, 0.0);
        assert!(c.bound_f > 0.0 && c.lip_f > 0.0 && c.smooth_f > 0.0);
        assert!(c.r_x > 0.0 && !c.r_x_capped);
    }

    #[test]
    fn toy_outer_lipschitz_matches_hessian_norm() {
        // F_i has Hessian 2[r_i; −1][r_i; −1]ᵀ with norm 2(1 + r_i²), largest
        // for r = 3.
        let p = MeanVarianceProblem::from_rewards(Matrix::from_row_slice(2, 1, &[1.0, 3.0]), 0.1)
            .unwrap();
        let c = estimate_constants(&p, &points(1, 8), 400, 5).unwrap();
        let exact = 2.0 * (1.0 + 9.0);
        assert!(c.lip_f <= exact * (1.0 + 1e-9));
        assert!(c.lip_f >= 0.95 * exact, "L_F = {}", c.lip_f);
    }

    #[test]
    fn affine_inner_map_has_zero_jacobian_lipschitz() {
        let p = generate_bellman_toy(4, 3, 3, 0.1, 1).unwrap();
        let c = estimate_constants(&p, &points(3, 4), 20, 1).unwrap();
        assert_eq!(c.lip_g, 0.0);
    }

    #[test]
    fn deterministic_and_mode_independent() {
        let p = generate_mean_variance(20, 3, 5.0, 0.1, 4).unwrap();
        let pts = points(3, 5);
        let a = estimate_constants(&p, &pts, 40, 9).unwrap();
        let b = estimate_constants_with(
            &p,
            &pts,
            &EstimateOptions {
                pairs: 40,
                seed: 9,
                exec: Execution::Parallel,
                ..EstimateOptions::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(estimate_constants(&p, &pts[..1], 10, 1).is_err());
    }
}
