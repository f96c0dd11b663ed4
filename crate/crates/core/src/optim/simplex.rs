use super::{eval, OptimResult, Termination, DEFAULT_F_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Converged once the spread of function values over the simplex is below this.
    pub f_tol: f64,
    /// ...and every vertex lies within this distance (per coordinate) of the best.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Initial edge length; defaults to 5% of |x0_i| (0.00025 for zeros).
    pub initial_step: Option<f64>,
    /// Restarts from the best vertex after convergence. A collapsed simplex
    /// can stall away from the optimum; a fresh one detects that.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_tol: DEFAULT_F_TOL,
            x_tol: 1e-8,
            max_iter: 10_000,
            initial_step: None,
            restarts: 2,
        }
    }
}

/// Nelder-Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2).
pub fn minimize_simplex<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], tol: f64, max_iter: usize) -> OptimResult {
    minimize_simplex_with(
        f,
        x0,
        &SimplexOptions {
            f_tol: tol,
            x_tol: tol,
            max_iter,
            ..SimplexOptions::default()
        },
    )
}

pub fn minimize_simplex_with<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &SimplexOptions) -> OptimResult {
    assert!(!x0.is_empty(), "simplex needs at least one dimension");
    assert!(opts.f_tol > 0.0, "tolerance must be positive");

    let f0 = eval(f, x0);
    let mut best_x = x0.to_vec();
    let mut best_f = f0;
    let mut used = 0;
    let mut converged = false;

    for round in 0..=opts.restarts {
        if used >= opts.max_iter {
            break;
        }
        let run = nelder_mead(f, &best_x, best_f, opts, opts.max_iter - used);
        used += run.iterations;
        let improvement = best_f - run.f_star;
        if run.f_star < best_f {
            best_f = run.f_star;
            best_x = run.x_star;
        }
        converged = run.converged;
        if !converged || (round > 0 && improvement.abs() < opts.f_tol) {
            break;
        }
    }

    OptimResult {
        x_star: best_x,
        f_star: best_f,
        iterations: used,
        converged,
        termination: if converged {
            Termination::Converged
        } else {
            Termination::IterationLimit
        },
    }
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    f0: f64,
    opts: &SimplexOptions,
    max_iter: usize,
) -> OptimResult {
    let d = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    vals.push(f0);
    for i in 0..d {
        let mut p = x0.to_vec();
        let step = opts
            .initial_step
            .unwrap_or(if p[i] != 0.0 { 0.05 * p[i].abs() } else { 0.00025 });
        p[i] += step;
        let mut v = eval(f, &p);
        if !v.is_finite() {
            // Infeasible vertex: try the other direction.
            p[i] = x0[i] - step;
            v = eval(f, &p);
        }
        pts.push(p);
        vals.push(v);
    }

    let mut order: Vec<usize> = (0..=d).collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];

    let point = |c: &[f64], worst: &[f64], t: f64, out: &mut Vec<f64>| {
        for j in 0..c.len() {
            out[j] = c[j] + t * (worst[j] - c[j]);
        }
    };

    while iterations < max_iter {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[d], order[d - 1]);
        let spread = vals[worst] - vals[best];
        let size = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread < opts.f_tol && size < opts.x_tol.max(opts.f_tol) {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..d] {
            for j in 0..d {
                centroid[j] += pts[i][j] / d as f64;
            }
        }

        point(&centroid, &pts[worst], -1.0, &mut trial);
        let fr = eval(f, &trial);
        if fr < vals[best] {
            let reflected = trial.clone();
            point(&centroid, &pts[worst], -2.0, &mut trial);
            let fe = eval(f, &trial);
            if fe < fr {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = fe;
            } else {
                pts[worst] = reflected;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }
        // Contraction: outside if the reflection improved on the worst.
        let t = if fr < vals[worst] { -0.5 } else { 0.5 };
        let bound = fr.min(vals[worst]);
        point(&centroid, &pts[worst], t, &mut trial);
        let fc = eval(f, &trial);
        if fc < bound {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for j in 0..d {
                pts[i][j] = anchor[j] + 0.5 * (pts[i][j] - anchor[j]);
            }
            vals[i] = eval(f, &pts[i]);
        }
    }

    let best = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (x_star, f_star) = if vals[best] <= f0 {
        (pts[best].clone(), vals[best])
    } else {
        (x0.to_vec(), f0)
    };
    OptimResult {
        x_star,
        f_star,
        iterations,
        converged,
        termination: if converged {
            Termination::Converged
        } else {
            Termination::IterationLimit
        },
    }
}
