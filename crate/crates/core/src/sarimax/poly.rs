use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MonthlySeries;

use super::{SarimaxOrders, SarimaxParams};

/// `1 - c₁L - c₂L² - …`; `coefficients` holds `c₁, c₂, …`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LagPolynomial {
    pub coefficients: Vec<f64>,
}

impl LagPolynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn one() -> Self {
        Self::default()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    /// Full weight vector `[1, -c₁, -c₂, …]`.
    pub fn weights(&self) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.coefficients.iter().map(|c| -c))
            .collect()
    }

    /// Inverse of [`weights`](Self::weights). Trailing zeros are kept so the
    /// degree stays `weights.len() - 1`.
    pub fn from_weights(weights: &[f64]) -> Self {
        assert!(weights.first() == Some(&1.0), "lag polynomial must be monic");
        Self::new(weights[1..].iter().map(|w| -w).collect())
    }

    /// Same polynomial in `L^s`.
    pub fn seasonal(&self, s: usize) -> Self {
        let mut c = vec![0.0; self.degree() * s];
        for (i, v) in self.coefficients.iter().enumerate() {
            c[(i + 1) * s - 1] = *v;
        }
        Self::new(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.weights(), other.weights());
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Self::from_weights(&out)
    }

    /// True when every root lies strictly outside the unit circle.
    pub fn is_stable(&self) -> bool {
        pacf_from_coefficients(&self.coefficients).is_some_and(|r| r.iter().all(|v| v.abs() < 1.0))
    }
}

/// `(1 - L)^m (1 - L^s)^M`.
pub fn differencing_polynomial(m: usize, big_m: usize, s: usize) -> LagPolynomial {
    let mut p = LagPolynomial::one();
    for _ in 0..m {
        p = p.mul(&LagPolynomial::new(vec![1.0]));
    }
    let seasonal = LagPolynomial::new(vec![1.0]).seasonal(s);
    for _ in 0..big_m {
        p = p.mul(&seasonal);
    }
    p
}

/// Reduced-form AR and MA polynomials `a(L)·A(Lˢ)` and `b(L)·B(Lˢ)`.
pub fn expand_polynomials(orders: &SarimaxOrders, params: &SarimaxParams) -> (LagPolynomial, LagPolynomial) {
    let ar = LagPolynomial::new(params.ar.clone()).mul(&LagPolynomial::new(params.sar.clone()).seasonal(orders.s));
    let ma = LagPolynomial::new(params.ma.clone()).mul(&LagPolynomial::new(params.sma.clone()).seasonal(orders.s));
    (ar, ma)
}

/// Applies `(1 - L)` `m` times, then `(1 - Lˢ)` `big_m` times.
pub fn difference(y: &MonthlySeries, m: usize, big_m: usize, s: usize) -> Result<MonthlySeries> {
    let lost = m + big_m * s;
    if y.len() <= lost {
        return Err(Error::InsufficientData {
            needed: lost + 1,
            got: y.len(),
        });
    }
    let mut v = y.values().to_vec();
    for _ in 0..m {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    for _ in 0..big_m {
        v = (s..v.len()).map(|t| v[t] - v[t - s]).collect();
    }
    MonthlySeries::new(y.start().add_months(lost as i64), v, y.unit())
}

pub(crate) fn difference_values(v: &[f64], m: usize, big_m: usize, s: usize) -> Vec<f64> {
    let mut v = v.to_vec();
    for _ in 0..m {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    for _ in 0..big_m {
        v = (s..v.len()).map(|t| v[t] - v[t - s]).collect();
    }
    v
}

/// Maps partial autocorrelations in (-1, 1) to the coefficients of a stable
/// `1 - c₁L - … - c_kL^k` (Durbin-Levinson).
pub fn coefficients_from_pacf(r: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = c.clone();
        for j in 0..k {
            c[j] = prev[j] - rk * prev[k - 1 - j];
        }
        c.push(rk);
    }
    c
}

/// Inverse of [`coefficients_from_pacf`]; `None` when a step hits `|r| = 1`.
pub fn pacf_from_coefficients(c: &[f64]) -> Option<Vec<f64>> {
    let mut c = c.to_vec();
    let mut r = vec![0.0; c.len()];
    for k in (0..c.len()).rev() {
        let rk = c[k];
        r[k] = rk;
        let denom = 1.0 - rk * rk;
        if !(denom > 0.0) {
            return None;
        }
        let prev: Vec<f64> = (0..k).map(|j| (c[j] + rk * c[k - 1 - j]) / denom).collect();
        c.truncate(k);
        c.copy_from_slice(&prev);
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MonthStamp;
    use proptest::prelude::*;

    fn series(v: Vec<f64>) -> MonthlySeries {
        MonthlySeries::new(MonthStamp::new(2000, 1).unwrap(), v, "x").unwrap()
    }

    #[test]
    fn seasonal_product() {
        let orders = SarimaxOrders::new(1, 0, 0, 1, 0, 0, 12).unwrap();
        let params = SarimaxParams {
            ar: vec![0.5],
            sar: vec![0.3],
            ..SarimaxParams::default()
        };
        let (ar, ma) = expand_polynomials(&orders, &params);
        assert_eq!(ar.degree(), 13);
        assert_eq!(ar.coefficients[0], 0.5);
        assert_eq!(ar.coefficients[11], 0.3);
        assert!((ar.coefficients[12] + 0.15).abs() < 1e-15);
        assert!(ar.coefficients[1..11].iter().all(|&c| c == 0.0));
        assert_eq!(ma, LagPolynomial::one());
    }

    #[test]
    fn differences() {
        let d = difference(&series(vec![1.0, 3.0, 6.0]), 1, 0, 12).unwrap();
        assert_eq!(d.values(), &[2.0, 3.0]);
        assert_eq!(d.start(), MonthStamp::new(2000, 2).unwrap());
        let same = difference(&series(vec![1.0, 3.0, 6.0]), 0, 0, 12).unwrap();
        assert_eq!(same.values(), &[1.0, 3.0, 6.0]);

        let seasonal = [0.0, 1.0, 4.0, -2.0, 3.0, 3.0, 7.0, -1.0, 0.5, 2.0, 9.0, -4.0];
        let x: Vec<f64> = (0..60).map(|t| t as f64 + seasonal[t % 12]).collect();
        let d = difference(&series(x), 1, 1, 12).unwrap();
        assert_eq!(d.len(), 60 - 13);
        assert!(d.values().iter().all(|v| v.abs() < 1e-12));

        assert!(difference(&series(vec![1.0; 12]), 0, 1, 12).is_err());
    }

    #[test]
    fn differencing_polynomial_matches_difference() {
        let p = differencing_polynomial(1, 1, 4);
        assert_eq!(p.weights(), vec![1.0, -1.0, 0.0, 0.0, -1.0, 1.0]);
        let x: Vec<f64> = (0..20).map(|t| ((t * t) % 7) as f64).collect();
        let direct = difference_values(&x, 1, 1, 4);
        let w = p.weights();
        for (i, d) in direct.iter().enumerate() {
            let t = i + 5;
            let v: f64 = (0..w.len()).map(|j| w[j] * x[t - j]).sum();
            assert!((v - d).abs() < 1e-12);
        }
    }

    #[test]
    fn stability() {
        assert!(LagPolynomial::new(vec![0.5]).is_stable());
        assert!(!LagPolynomial::new(vec![1.0]).is_stable());
        assert!(!LagPolynomial::new(vec![1.2]).is_stable());
        // 1 - 1.5L + 0.56L² = (1 - 0.7L)(1 - 0.8L)
        assert!(LagPolynomial::new(vec![1.5, -0.56]).is_stable());
        // (1 - 0.5L)(1 - 1.25L)
        assert!(!LagPolynomial::new(vec![1.75, -0.625]).is_stable());
        assert!(LagPolynomial::one().is_stable());
    }

    proptest! {
        #[test]
        fn convolution_matches_brute_force(
            a in proptest::collection::vec(-1.0f64..1.0, 0..4),
            b in proptest::collection::vec(-1.0f64..1.0, 0..3),
            s in 1usize..13,
        ) {
            let pa = LagPolynomial::new(a.clone());
            let pb = LagPolynomial::new(b.clone());
            let prod = pa.mul(&pb.seasonal(s));
            // Evaluate both sides at a few points: polynomial identity.
            for z in [-0.9, -0.3, 0.2, 0.7, 1.1] {
                let eval = |p: &LagPolynomial| -> f64 {
                    p.weights().iter().enumerate().map(|(i, w)| w * f64::powi(z, i as i32)).sum()
                };
                let lhs = eval(&prod);
                let rhs = eval(&pa) * eval(&pb.seasonal(s));
                prop_assert!((lhs - rhs).abs() < 1e-10);
            }
            prop_assert_eq!(prod.degree(), a.len() + s * b.len());
        }

        #[test]
        fn pacf_round_trip(r in proptest::collection::vec(-0.95f64..0.95, 1..5)) {
            let c = coefficients_from_pacf(&r);
            prop_assert!(LagPolynomial::new(c.clone()).is_stable());
            let back = pacf_from_coefficients(&c).unwrap();
            for (x, y) in back.iter().zip(&r) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
