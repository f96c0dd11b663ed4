use crate::error::{Error, Result};

/// Finite-difference step for a coordinate of magnitude `|x|`.
pub fn default_step(x: f64) -> f64 {
    (1e-7 * x.abs()).max(1e-6)
}

/// Central-difference gradient with a common step `h`.
pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::Argument(format!("finite-difference step {h} must be > 0")));
    }
    central(f, x, |_| h)
}

/// Central-difference gradient with per-coordinate steps from [`default_step`].
pub fn numeric_gradient_auto<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<Vec<f64>> {
    central(f, x, default_step)
}

fn central<F, S>(f: &F, x: &[f64], step: S) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
    S: Fn(f64) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step(x[i]);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            let g = (up - down) / (2.0 * h);
            if g.is_finite() {
                Ok(g)
            } else {
                Err(Error::Gradient { component: i })
            }
        })
        .collect()
}

/// Central-difference Hessian, symmetric by construction. Steps scale
/// with the coordinate as `1e-4 · max(1, |x_i|)`.
pub fn numeric_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let f0 = f(x);
    let mut probe = x.to_vec();
    let at = |probe: &mut Vec<f64>, di: usize, si: f64, dj: usize, sj: f64| {
        probe[di] += si * h[di];
        probe[dj] += sj * h[dj];
        let v = f(probe);
        probe[di] = x[di];
        probe[dj] = x[dj];
        v
    };
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        let up = at(&mut probe, i, 1.0, i, 0.0);
        let down = at(&mut probe, i, -1.0, i, 0.0);
        hess[i][i] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let pp = at(&mut probe, i, 1.0, j, 1.0);
            let pm = at(&mut probe, i, 1.0, j, -1.0);
            let mp = at(&mut probe, i, -1.0, j, 1.0);
            let mm = at(&mut probe, i, -1.0, j, -1.0);
            let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    if hess.iter().flatten().all(|v| v.is_finite()) {
        Ok(hess)
    } else {
        Err(Error::Numeric("Hessian has non-finite entries".into()))
    }
}
