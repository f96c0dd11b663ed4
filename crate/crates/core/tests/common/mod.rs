#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use agrivol::pricing::norm_cdf;
use agrivol::series::MonthStamp;

pub fn month(y: i32, m: u32) -> MonthStamp {
    MonthStamp::new(y, m).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Durbin-Levinson map from partial autocorrelations to `1 - c1 L - ...`
/// coefficients, written out independently of the library.
pub fn pacf_to_coeffs(r: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = Vec::new();
    for (k, &rk) in r.iter().enumerate() {
        let prev = c.clone();
        c.push(rk);
        for j in 0..k {
            c[j] = prev[j] - rk * prev[k - 1 - j];
        }
    }
    c
}

/// Random stationary AR and invertible MA coefficients in the
/// `1 - c1 L - c2 L^2` convention.
pub fn random_arma(rng: &mut ChaCha8Rng, p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let ar: Vec<f64> = (0..p).map(|_| rng.random_range(-0.9..0.9)).collect();
    let ma: Vec<f64> = (0..q).map(|_| rng.random_range(-0.9..0.9)).collect();
    (pacf_to_coeffs(&ar), pacf_to_coeffs(&ma))
}

/// MA(inf) weights of `(1 - sum a_i L^i) w = (1 - sum b_j L^j) e`.
pub fn psi_weights(ar: &[f64], ma: &[f64], n: usize) -> Vec<f64> {
    let mut psi = vec![0.0; n];
    for j in 0..n {
        let mut v = if j == 0 {
            1.0
        } else if j <= ma.len() {
            -ma[j - 1]
        } else {
            0.0
        };
        for (i, a) in ar.iter().enumerate() {
            if j > i {
                v += a * psi[j - i - 1];
            }
        }
        psi[j] = v;
    }
    psi
}

pub fn autocovariance(ar: &[f64], ma: &[f64], sigma2: f64, lags: usize) -> Vec<f64> {
    let psi = psi_weights(ar, ma, 6000);
    (0..lags)
        .map(|h| sigma2 * psi.iter().zip(&psi[h..]).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Log-density of `w` under a zero-mean Gaussian with the ARMA's
/// Toeplitz covariance, by Cholesky.
pub fn dense_gaussian_loglik(ar: &[f64], ma: &[f64], sigma2: f64, w: &[f64]) -> f64 {
    let n = w.len();
    let acov = autocovariance(ar, ma, sigma2, n);
    let cov = DMatrix::from_fn(n, n, |i, j| acov[i.abs_diff(j)]);
    let chol = cov.cholesky().expect("autocovariance matrix is positive definite");
    let l = chol.l();
    let log_det: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let x = chol.solve(&DVector::from_column_slice(w));
    let quad = DVector::from_column_slice(w).dot(&x);
    -0.5 * (n as f64 * (2.0 * PI).ln() + log_det + quad)
}

pub struct BruteMk {
    pub s: i64,
    pub var: f64,
    pub z: f64,
    pub p: f64,
}

/// Mann-Kendall by enumerating every pair.
pub fn brute_mann_kendall(x: &[f64]) -> BruteMk {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if x[j] > x[i] {
                s += 1;
            } else if x[j] < x[i] {
                s -= 1;
            }
        }
    }
    let mut ties: BTreeMap<u64, i128> = BTreeMap::new();
    for v in x {
        *ties.entry(v.to_bits()).or_default() += 1;
    }
    let nn = n as i128;
    let mut num = nn * (nn - 1) * (2 * nn + 5);
    for t in ties.values() {
        num -= t * (t - 1) * (2 * t + 5);
    }
    let var = num as f64 / 18.0;
    let z = match s.signum() {
        1 => (s - 1) as f64 / var.sqrt(),
        -1 => (s + 1) as f64 / var.sqrt(),
        _ => 0.0,
    };
    let p = (2.0 * norm_cdf(-z.abs())).min(1.0);
    BruteMk { s, var, z, p }
}

/// Ljung-Box Q at `lags` and its chi-square survival probability.
pub fn ljung_box(x: &[f64], lags: usize) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let mut q = 0.0;
    for k in 1..=lags {
        let ck: f64 = x.iter().zip(&x[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum();
        let r = ck / c0;
        q += r * r / (n - k as f64);
    }
    q *= n * (n + 2.0);
    (q, chi2_sf_even(q, lags))
}

/// Chi-square survival function for even degrees of freedom (closed form).
pub fn chi2_sf_even(x: f64, df: usize) -> f64 {
    assert!(df % 2 == 0);
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..df / 2 {
        term *= h / k as f64;
        sum += term;
    }
    (-h).exp() * sum
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        let _ = f;
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(f, a, m, fa, flm, fm);
        let right = simpson(f, m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(f, a, b, fa, fm, fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Standard normal density written out directly.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn pass_line(id: usize, name: &str, ok: bool, detail: &str) {
    println!("{} criterion {id} ({name}): {detail}", if ok { "PASS" } else { "FAIL" });
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, rng)
}
