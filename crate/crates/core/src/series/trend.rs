use serde::{Deserialize, Serialize};

use super::MonthlySeries;
use crate::error::{Error, Result};
use crate::pricing::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendDirection {
    Increasing,
    Decreasing,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub s_statistic: i64,
    pub variance_s: f64,
    pub z_score: f64,
    pub p_value: f64,
    pub direction: TrendDirection,
}

/// Mann-Kendall monotone trend test with the tie-corrected variance and a
/// continuity-corrected, two-sided normal p-value.
pub fn mann_kendall(series: &MonthlySeries, alpha: f64) -> Result<TrendResult> {
    let x = series.values();
    let n = x.len();
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::DomainValue("Mann-Kendall input contains NaN".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("significance level {alpha} outside (0, 1)")));
    }

    // Dense ranks so that equal values share a rank.
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut distinct = sorted.clone();
    distinct.dedup();
    let rank = |v: f64| distinct.partition_point(|&d| d < v);

    // S = #{i<j: x_j > x_i} - #{i<j: x_j < x_i}, counted with a Fenwick tree
    // over ranks of the elements seen so far.
    let mut tree = vec![0i64; distinct.len() + 1];
    let mut s: i64 = 0;
    for (seen, &v) in x.iter().enumerate() {
        let r = rank(v);
        let below = prefix_sum(&tree, r);
        let at_or_below = prefix_sum(&tree, r + 1);
        let above = seen as i64 - at_or_below;
        s += below - above;
        let mut i = r + 1;
        while i < tree.len() {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    let n_i = n as i128;
    let mut numer = n_i * (n_i - 1) * (2 * n_i + 5);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as i128;
        numer -= t * (t - 1) * (2 * t + 5);
    }
    let variance_s = numer as f64 / 18.0;

    let z_score = if variance_s <= 0.0 || s == 0 {
        0.0
    } else if s > 0 {
        (s - 1) as f64 / variance_s.sqrt()
    } else {
        (s + 1) as f64 / variance_s.sqrt()
    };
    let p_value = (2.0 * norm_cdf(-z_score.abs())).min(1.0);
    let direction = if p_value >= alpha {
        TrendDirection::None
    } else if s > 0 {
        TrendDirection::Increasing
    } else {
        TrendDirection::Decreasing
    };
    Ok(TrendResult {
        s_statistic: s,
        variance_s,
        z_score,
        p_value,
        direction,
    })
}

fn prefix_sum(tree: &[i64], mut i: usize) -> i64 {
    let mut acc = 0;
    while i > 0 {
        acc += tree[i];
        i -= i & i.wrapping_neg();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MonthStamp;
    use proptest::prelude::*;

    fn s(values: &[f64]) -> MonthlySeries {
        MonthlySeries::new(MonthStamp::new(1970, 1).unwrap(), values.to_vec(), "u").unwrap()
    }

    #[test]
    fn strictly_increasing() {
        let r = mann_kendall(&s(&[1.0, 2.0, 3.0, 4.0, 5.0]), 0.05).unwrap();
        assert_eq!(r.s_statistic, 10);
        assert_eq!(r.variance_s, 5.0 * 4.0 * 15.0 / 18.0);
        assert!((r.z_score - 9.0 / r.variance_s.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_series_has_no_trend() {
        let r = mann_kendall(&s(&[7.0; 5]), 0.05).unwrap();
        assert_eq!(r.s_statistic, 0);
        assert_eq!(r.direction, TrendDirection::None);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            mann_kendall(&s(&[1.0, 2.0, 3.0]), 0.05),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn strong_trend_detected() {
        let x: Vec<f64> = (0..60).map(|t| t as f64 + ((t * 7) % 5) as f64).collect();
        let r = mann_kendall(&s(&x), 0.05).unwrap();
        assert_eq!(r.direction, TrendDirection::Increasing);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(
            mann_kendall(&s(&y), 0.05).unwrap().direction,
            TrendDirection::Decreasing
        );
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_transform(x in proptest::collection::vec(-5i32..5, 4..80)) {
            let a: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let b: Vec<f64> = a.iter().map(|v| (v * 0.7).exp() + 3.0).collect();
            let ra = mann_kendall(&s(&a), 0.05).unwrap();
            let rb = mann_kendall(&s(&b), 0.05).unwrap();
            prop_assert_eq!(ra, rb);
            let bound = (a.len() * (a.len() - 1) / 2) as i64;
            prop_assert!(ra.s_statistic.abs() <= bound);
            prop_assert!((0.0..=1.0).contains(&ra.p_value));
        }
    }
}
