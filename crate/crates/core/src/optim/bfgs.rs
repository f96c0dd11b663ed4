use super::gradient::numeric_gradient_auto;
use super::simplex::{minimize_simplex_with, SimplexOptions};
use super::{eval, OptimResult, Termination, DEFAULT_F_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Converged when the gradient infinity-norm drops below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: super::DEFAULT_GRAD_TOL,
            max_iter: 500,
            armijo: 1e-4,
            max_backtracks: 50,
        }
    }
}

/// Quasi-Newton descent on central-difference gradients.
pub fn minimize_bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], tol: f64, max_iter: usize) -> OptimResult {
    minimize_bfgs_with(
        f,
        x0,
        &BfgsOptions {
            grad_tol: tol,
            max_iter,
            ..BfgsOptions::default()
        },
    )
}

pub fn minimize_bfgs_with<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &BfgsOptions) -> OptimResult {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut fx = eval(f, &x);
    let mut hinv = identity(d);
    let mut iterations = 0;

    let finish = |x: Vec<f64>, fx: f64, iterations: usize, termination: Termination| OptimResult {
        x_star: x,
        f_star: fx,
        iterations,
        converged: termination == Termination::Converged,
        termination,
    };

    if !fx.is_finite() {
        return finish(x, fx, 0, Termination::GradientFailed);
    }

    let mut g = match numeric_gradient_auto(f, &x) {
        Ok(g) => g,
        Err(_) => return finish(x, fx, 0, Termination::GradientFailed),
    };

    let mut fresh = true;
    loop {
        if inf_norm(&g) < opts.grad_tol {
            return finish(x, fx, iterations, Termination::Converged);
        }
        if iterations >= opts.max_iter {
            return finish(x, fx, iterations, Termination::IterationLimit);
        }
        iterations += 1;

        let mut dir = mat_vec_neg(&hinv, &g);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hinv = identity(d);
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            fresh = true;
        }

        match backtrack(f, &x, fx, &dir, slope, opts) {
            Some((x_new, f_new)) => {
                let g_new = match numeric_gradient_auto(f, &x_new) {
                    Ok(g) => g,
                    Err(_) => {
                        // Accept the better point but stop: the gradient is unusable here.
                        return finish(x_new, f_new, iterations, Termination::GradientFailed);
                    }
                };
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * norm(&s) * norm(&y) {
                    if fresh {
                        // Scale the initial inverse Hessian to the observed curvature.
                        let scale = sy / dot(&y, &y);
                        hinv.iter_mut().flatten().for_each(|v| *v *= scale);
                        fresh = false;
                    }
                    bfgs_update(&mut hinv, &s, &y, sy);
                }
                x = x_new;
                fx = f_new;
                g = g_new;
            }
            None if !fresh => {
                hinv = identity(d);
                fresh = true;
            }
            None => {
                // Steepest descent failed too; let a short simplex run try.
                let polish = minimize_simplex_with(
                    f,
                    &x,
                    &SimplexOptions {
                        f_tol: DEFAULT_F_TOL,
                        x_tol: 1e-10,
                        max_iter: 200 * d,
                        initial_step: Some(1e-4),
                        restarts: 0,
                    },
                );
                if polish.f_star < fx {
                    x = polish.x_star;
                    fx = polish.f_star;
                    match numeric_gradient_auto(f, &x) {
                        Ok(gn) => g = gn,
                        Err(_) => return finish(x, fx, iterations, Termination::GradientFailed),
                    }
                    hinv = identity(d);
                    fresh = true;
                } else {
                    return finish(x, fx, iterations, Termination::LineSearchFailed);
                }
            }
        }
    }
}

fn backtrack<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    fx: f64,
    dir: &[f64],
    slope: f64,
    opts: &BfgsOptions,
) -> Option<(Vec<f64>, f64)> {
    let mut alpha = 1.0;
    let mut trial = vec![0.0; x.len()];
    for _ in 0..opts.max_backtracks {
        for i in 0..x.len() {
            trial[i] = x[i] + alpha * dir[i];
        }
        let ft = eval(f, &trial);
        if ft <= fx + opts.armijo * alpha * slope && ft < fx {
            return Some((trial, ft));
        }
        alpha *= 0.5;
    }
    None
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    // H+ = (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
    let d = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..d).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..d {
        for j in 0..d {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec_neg(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| -dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_definite_quadratic() {
        // xᵀAx with A = [[3, 1, 0], [1, 2, 0.5], [0, 0.5, 1]]
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2] + 2.0 * x[0] * x[1] + x[1] * x[2];
        let r = minimize_bfgs(&f, &[1.0, -2.0, 0.5], 1e-9, 200);
        assert!(r.converged, "{r:?}");
        assert!(r.x_star.iter().all(|v| v.abs() < 1e-8), "{r:?}");
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = minimize_bfgs(&f, &[-1.2, 1.0], 1e-6, 500);
        assert!(r.f_star < 1e-8, "{r:?}");
    }

    #[test]
    fn non_smooth_optimum_still_terminates() {
        let r = minimize_bfgs(&|x: &[f64]| x[0].abs(), &[1.3], 1e-6, 200);
        assert!(r.f_star < 1e-4, "{r:?}");
        assert!(r.f_star <= 1.3);
        assert!(r.iterations <= 200);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(4) + (x[1] + 2.0).powi(2);
        let x0 = [5.0, 5.0];
        let r = minimize_bfgs(&f, &x0, 1e-8, 3);
        assert!(r.f_star <= f(&x0));
        assert_eq!(r.f_star, f(&r.x_star));
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) * (1.0 + x[1] * x[1]) + x[1].cosh();
        let a = minimize_bfgs(&f, &[2.0, 1.0], 1e-7, 300);
        let b = minimize_bfgs(&f, &[2.0, 1.0], 1e-7, 300);
        assert_eq!(a, b);
    }
}
