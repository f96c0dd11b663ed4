use serde::{Deserialize, Serialize};

use super::{mean_var, MonthlySeries};
use crate::error::{Error, Result};

/// Default centered window for smoothed trend lines, in months.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 25;

/// Monthly log-returns `ln p_t - ln p_{t-1}`; the output starts one month later.
pub fn log_returns(prices: &MonthlySeries) -> Result<MonthlySeries> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some((month, p)) = prices.iter().find(|&(_, p)| !(p > 0.0 && p.is_finite())) {
        return Err(Error::Domain {
            month,
            message: format!("price {p} is not strictly positive"),
        });
    }
    let v = prices.values();
    let returns = v.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    MonthlySeries::new(prices.start().succ(), returns, "log-return")
}

/// Trailing rolling mean and sample standard deviation. Output month `i`
/// summarises input months `i - window + 1 ..= i`.
pub fn rolling_mean_std(series: &MonthlySeries, window: usize) -> Result<(MonthlySeries, MonthlySeries)> {
    let (means, stds) = rolling_raw(series.values(), window)?;
    let start = series.month_at(window - 1);
    Ok((
        MonthlySeries::new(start, means, series.unit())?,
        MonthlySeries::new(start, stds, series.unit())?,
    ))
}

fn rolling_raw(values: &[f64], window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if window < 2 {
        return Err(Error::Argument(format!("rolling window {window} < 2")));
    }
    if values.len() < window {
        return Err(Error::InsufficientData {
            needed: window,
            got: values.len(),
        });
    }
    Ok(values
        .windows(window)
        .map(|w| {
            let (m, v) = mean_var(w);
            (m, v.sqrt())
        })
        .unzip())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthRule {
    /// `mean ± k·std`
    KSigma,
    /// `mean · exp(±k·std(ln x))`
    LogSigmaFactor,
}

/// Which month a rolling window is stamped with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowAlignment {
    /// Last month of the window (market convention).
    Trailing,
    /// Month `window / 2` of the window.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub window: usize,
    pub rule: WidthRule,
    pub k: f64,
    pub alignment: WindowAlignment,
}

impl BandSpec {
    /// 20-month trailing moving average ± 2 standard deviations.
    pub fn bollinger() -> Self {
        Self {
            window: 20,
            rule: WidthRule::KSigma,
            k: 2.0,
            alignment: WindowAlignment::Trailing,
        }
    }

    /// 12-month centered moving average ± 1 standard deviation.
    pub fn climate_sigma() -> Self {
        Self {
            window: 12,
            rule: WidthRule::KSigma,
            k: 1.0,
            alignment: WindowAlignment::Centered,
        }
    }

    /// 12-month centered moving average scaled by exp(± std of the log).
    pub fn climate_log_factor() -> Self {
        Self {
            window: 12,
            rule: WidthRule::LogSigmaFactor,
            k: 1.0,
            alignment: WindowAlignment::Centered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSeries {
    pub center: MonthlySeries,
    pub lower: MonthlySeries,
    pub upper: MonthlySeries,
    /// Rolling window length; `None` for bands built from standard errors.
    pub window: Option<usize>,
    pub width_rule: WidthRule,
}

/// Rolling envelope around the moving average.
pub fn band(series: &MonthlySeries, spec: BandSpec) -> Result<BandSeries> {
    if !(spec.k > 0.0 && spec.k.is_finite()) {
        return Err(Error::Argument(format!("band multiplier k = {} must be > 0", spec.k)));
    }
    let (center, width): (Vec<f64>, Vec<f64>) = match spec.rule {
        WidthRule::KSigma => rolling_raw(series.values(), spec.window)?,
        WidthRule::LogSigmaFactor => {
            if let Some((month, v)) = series.iter().find(|&(_, v)| !(v > 0.0)) {
                return Err(Error::Domain {
                    month,
                    message: format!("value {v} must be positive for a log-scale band"),
                });
            }
            let logs: Vec<f64> = series.values().iter().map(|v| v.ln()).collect();
            let (means, _) = rolling_raw(series.values(), spec.window)?;
            let (_, log_stds) = rolling_raw(&logs, spec.window)?;
            (means, log_stds)
        }
    };
    let (lower, upper): (Vec<f64>, Vec<f64>) = center
        .iter()
        .zip(&width)
        .map(|(&c, &w)| match spec.rule {
            WidthRule::KSigma => (c - spec.k * w, c + spec.k * w),
            WidthRule::LogSigmaFactor => (c * (-spec.k * w).exp(), c * (spec.k * w).exp()),
        })
        .unzip();
    let offset = match spec.alignment {
        WindowAlignment::Trailing => spec.window - 1,
        WindowAlignment::Centered => spec.window / 2,
    };
    let start = series.month_at(offset);
    let unit = series.unit();
    Ok(BandSeries {
        center: MonthlySeries::new(start, center, unit)?,
        lower: MonthlySeries::new(start, lower, unit)?,
        upper: MonthlySeries::new(start, upper, unit)?,
        window: Some(spec.window),
        width_rule: spec.rule,
    })
}

/// Least-squares line through `(t, x_t)` with `t = 0..n`; returns
/// `(slope per month, intercept)`.
pub fn ols_trend(series: &MonthlySeries) -> Result<(f64, f64)> {
    let x = series.values();
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, &v) in x.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (v - x_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    Ok((slope, x_mean - slope * t_mean))
}

/// Centered moving average. Near the edges the window shrinks
/// symmetrically, so the output has the input's length.
pub fn smooth(series: &MonthlySeries, window: usize) -> Result<MonthlySeries> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::Argument(format!(
            "smoothing window must be odd and positive, got {window}"
        )));
    }
    let v = series.values();
    let n = v.len();
    let h = window / 2;
    let out = (0..n)
        .map(|i| {
            let half = h.min(i).min(n - 1 - i);
            let w = &v[i - half..=i + half];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    MonthlySeries::new(series.start(), out, series.unit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MonthStamp;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(values: &[f64]) -> MonthlySeries {
        MonthlySeries::new(MonthStamp::new(2001, 10).unwrap(), values.to_vec(), "u").unwrap()
    }

    #[test]
    fn log_returns_examples() {
        let r = log_returns(&s(&[100.0, 100.0, 100.0])).unwrap();
        assert_eq!(r.values(), &[0.0, 0.0]);
        assert_eq!(r.start(), MonthStamp::new(2001, 11).unwrap());

        let r = log_returns(&s(&[100.0, 110.0])).unwrap();
        assert!((r.values()[0] - 1.1f64.ln()).abs() < 1e-15);
        assert!((r.values()[0] - 0.095310).abs() < 1e-6);
    }

    #[test]
    fn log_returns_rejects_zero_price_naming_month() {
        let err = log_returns(&s(&[100.0, 0.0, 50.0])).unwrap_err();
        match err {
            Error::Domain { month, .. } => assert_eq!(month, MonthStamp::new(2001, 11).unwrap()),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(log_returns(&s(&[100.0])), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn rolling_examples() {
        let (m, sd) = rolling_mean_std(&s(&[1.0, 2.0, 3.0, 4.0]), 3).unwrap();
        assert_eq!(m.values(), &[2.0, 3.0]);
        assert_eq!(sd.values(), &[1.0, 1.0]);
        assert_eq!(m.start(), MonthStamp::new(2001, 12).unwrap());

        let (_, sd) = rolling_mean_std(&s(&[4.2; 30]), 7).unwrap();
        assert!(sd.values().iter().all(|&v| v == 0.0));

        assert!(matches!(
            rolling_mean_std(&s(&[1.0, 2.0]), 3),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn rolling_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..200).map(|_| rng.random_range(-50.0..50.0)).collect();
        let window = 20;
        let (m, sd) = rolling_mean_std(&s(&x), window).unwrap();
        for i in 0..x.len() - window + 1 {
            let w = &x[i..i + window];
            let mean = w.iter().sum::<f64>() / window as f64;
            let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (window - 1) as f64;
            assert!((m.values()[i] - mean).abs() < 1e-12);
            assert!((sd.values()[i] - var.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn bands_collapse_on_constant_series() {
        let c = s(&[7.5; 40]);
        let b = band(&c, BandSpec::bollinger()).unwrap();
        for i in 0..b.center.len() {
            assert_eq!(b.lower.values()[i], 7.5);
            assert_eq!(b.upper.values()[i], 7.5);
            assert_eq!(b.center.values()[i], 7.5);
        }
        let b = band(&c, BandSpec::climate_log_factor()).unwrap();
        assert!(b.lower.values().iter().all(|&v| (v - 7.5).abs() < 1e-12));
        assert!(b.upper.values().iter().all(|&v| (v - 7.5).abs() < 1e-12));
    }

    #[test]
    fn lognormal_band_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..120)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                (3.0 + 0.4 * z).exp()
            })
            .collect();
        let spec = BandSpec::climate_log_factor();
        let b = band(&s(&x), spec).unwrap();
        assert_eq!(b.center.len(), x.len() - 11);
        assert_eq!(b.center.start(), s(&x).month_at(6));
        for i in 0..b.center.len() {
            let w = &x[i..i + 12];
            let mean = w.iter().sum::<f64>() / 12.0;
            let lw: Vec<f64> = w.iter().map(|v| v.ln()).collect();
            let lm = lw.iter().sum::<f64>() / 12.0;
            let lsd = (lw.iter().map(|v| (v - lm).powi(2)).sum::<f64>() / 11.0).sqrt();
            assert!((b.lower.values()[i] - mean * (-lsd).exp()).abs() < 1e-10);
            assert!((b.upper.values()[i] - mean * lsd.exp()).abs() < 1e-10);
            assert!((b.lower.values()[i] * b.upper.values()[i] - mean * mean).abs() < 1e-9 * mean * mean);
        }
    }

    #[test]
    fn log_band_rejects_non_positive() {
        let err = band(
            &s(&[1.0, 2.0, 0.0, 4.0]),
            BandSpec {
                window: 2,
                ..BandSpec::climate_log_factor()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        assert!(band(
            &s(&[1.0; 5]),
            BandSpec {
                k: 0.0,
                ..BandSpec::bollinger()
            }
        )
        .is_err());
    }

    #[test]
    fn ols_examples() {
        let x: Vec<f64> = (0..10).map(|t| 2.0 * t as f64 + 1.0).collect();
        let (b, a) = ols_trend(&s(&x)).unwrap();
        assert!((b - 2.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
        let (b, a) = ols_trend(&s(&[3.0; 8])).unwrap();
        assert!(b.abs() < 1e-15 && (a - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ols_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..150)
            .map(|t| 0.3 * t as f64 - 4.0 + rng.random_range(-2.0..2.0))
            .collect();
        // [n  St ; St Stt] [a b]' = [Sx Stx]'
        let n = x.len() as f64;
        let st: f64 = (0..x.len()).map(|t| t as f64).sum();
        let stt: f64 = (0..x.len()).map(|t| (t * t) as f64).sum();
        let sx: f64 = x.iter().sum();
        let stx: f64 = x.iter().enumerate().map(|(t, v)| t as f64 * v).sum();
        let det = n * stt - st * st;
        let a = (sx * stt - st * stx) / det;
        let b = (n * stx - st * sx) / det;
        let (slope, intercept) = ols_trend(&s(&x)).unwrap();
        assert!((slope - b).abs() < 1e-10);
        assert!((intercept - a).abs() < 1e-10);
    }

    #[test]
    fn smooth_examples() {
        let out = smooth(&s(&[0.0, 0.0, 1.0, 0.0, 0.0]), 3).unwrap();
        let third = 1.0 / 3.0;
        let expect = [0.0, third, third, third, 0.0];
        for (a, b) in out.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let lin: Vec<f64> = (0..30).map(|t| 0.5 * t as f64 - 2.0).collect();
        let out = smooth(&s(&lin), 7).unwrap();
        for (a, b) in out.values().iter().zip(&lin) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(smooth(&s(&[2.0; 9]), 5).unwrap().values(), &[2.0; 9]);
        assert!(smooth(&s(&[1.0; 9]), 4).is_err());
        assert_eq!(smooth(&s(&lin), 1).unwrap().values(), lin.as_slice());
    }

    proptest! {
        #[test]
        fn log_returns_scale_invariant(
            prices in proptest::collection::vec(0.1f64..1e4, 2..60),
            c in 0.01f64..100.0,
        ) {
            let a = log_returns(&s(&prices)).unwrap();
            let scaled: Vec<f64> = prices.iter().map(|p| p * c).collect();
            let b = log_returns(&s(&scaled)).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn k_sigma_band_symmetric_and_ordered(
            x in proptest::collection::vec(-100.0f64..100.0, 12..80),
            k in 0.1f64..4.0,
        ) {
            let b = band(&s(&x), BandSpec { window: 6, rule: WidthRule::KSigma, k, alignment: WindowAlignment::Trailing }).unwrap();
            for i in 0..b.center.len() {
                let (l, c, u) = (b.lower.values()[i], b.center.values()[i], b.upper.values()[i]);
                prop_assert!(l <= c && c <= u);
                prop_assert!(((c - l) - (u - c)).abs() < 1e-9);
            }
        }

        #[test]
        fn smoothing_keeps_interior_mean(x in proptest::collection::vec(-10.0f64..10.0, 40..120)) {
            // Away from the edges every value enters exactly `window` averages.
            let out = smooth(&s(&x), 5).unwrap();
            let n = x.len();
            let inner: f64 = out.values()[2..n - 2].iter().sum();
            let mut weights = vec![0.0; n];
            for i in 2..n - 2 {
                for w in weights.iter_mut().take(i + 3).skip(i - 2) {
                    *w += 0.2;
                }
            }
            let direct: f64 = x.iter().zip(&weights).map(|(v, w)| v * w).sum();
            prop_assert!((inner - direct).abs() < 1e-9);
        }
    }
}
