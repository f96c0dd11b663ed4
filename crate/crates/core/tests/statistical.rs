//! Seeded Monte Carlo studies of the estimators' statistical behaviour.

mod common;

use std::collections::BTreeMap;

use agrivol::egarch::{egarch_simulate, select_orders_with, EgarchOrders, EgarchParams};
use agrivol::par::Execution;
use agrivol::sarimax::{
    sarimax_fit, sarimax_simulate, select_sarimax_orders_with, ExogMatrix, OrderGrid, SarimaxOrders, SarimaxParams,
};
use agrivol::series::MonthlySeries;

use common::{gauss, ljung_box, month, rng};

fn noise_regressor(n: usize, seed: u64) -> MonthlySeries {
    let mut g = rng(seed);
    let x = (0..n)
        .map(|t| 25.0 + 4.0 * (2.0 * std::f64::consts::PI * t as f64 / 12.0).cos() + gauss(&mut g))
        .collect();
    MonthlySeries::new(month(1900, 1), x, "degC").unwrap()
}

/// On pure noise every extra term clears the AIC penalty with probability
/// about 0.16, so the minimal order wins only about half the time. It should
/// still be the most frequent choice.
fn assert_modal<K: Ord + std::fmt::Debug>(choices: &BTreeMap<K, usize>, minimal: K) {
    let top = choices.values().max().copied().unwrap_or(0);
    assert_eq!(choices.get(&minimal).copied().unwrap_or(0), top, "{choices:?}");
}

#[test]
fn one_step_errors_are_white_for_the_true_model() {
    let orders = SarimaxOrders::new(1, 0, 1, 1, 0, 0, 12).unwrap();
    let truth = SarimaxParams {
        ar: vec![0.5],
        ma: vec![0.4],
        sar: vec![0.3],
        gamma: vec![0.2],
        intercept: 1.0,
        sigma2_eps: 1.0,
        ..SarimaxParams::default()
    };
    let reps = 20;
    let mut white = 0;
    for seed in 0..reps {
        let n = 400;
        let exog = ExogMatrix::single("t", noise_regressor(n, 100 + seed));
        let y = sarimax_simulate(&orders, &truth, &exog, month(1900, 1), n, 200 + seed).unwrap();
        let m = sarimax_fit(&y, &exog, orders).unwrap();
        let std_err: Vec<f64> = y
            .values()
            .iter()
            .zip(m.fitted.mean.values())
            .zip(m.fitted.se.values())
            .map(|((y, mu), se)| (y - mu) / se)
            .collect();
        let (_, p) = ljung_box(&std_err, 12);
        if p > 0.01 {
            white += 1;
        }
    }
    assert!(white as f64 >= 0.9 * reps as f64, "{white}/{reps}");
}

#[test]
fn irrelevant_regressor_is_insignificant() {
    let orders = SarimaxOrders::arma(1, 0);
    let truth = SarimaxParams {
        ar: vec![0.6],
        gamma: vec![0.0],
        intercept: 0.5,
        sigma2_eps: 1.0,
        ..SarimaxParams::default()
    };
    let reps = 20;
    let mut covered = 0;
    for seed in 0..reps {
        let n = 500;
        let exog = ExogMatrix::single("pr", noise_regressor(n, 300 + seed));
        let y = sarimax_simulate(&orders, &truth, &exog, month(1900, 1), n, 400 + seed).unwrap();
        let m = sarimax_fit(&y, &exog, orders).unwrap();
        let se = m.std_errors.gamma[0].expect("standard error available");
        if m.params.gamma[0].abs() < 2.0 * se {
            covered += 1;
        }
    }
    assert!(covered as f64 >= 0.9 * reps as f64, "{covered}/{reps}");
}

#[test]
fn sarimax_selection_prefers_true_orders() {
    let truth_orders = SarimaxOrders::new(1, 0, 0, 1, 0, 0, 12).unwrap();
    let truth = SarimaxParams {
        ar: vec![0.6],
        sar: vec![0.5],
        intercept: 2.0,
        sigma2_eps: 1.0,
        ..SarimaxParams::default()
    };
    // Seasonal MA terms are left out to keep the study fast.
    let grid = OrderGrid {
        sq: (0, 0),
        ..OrderGrid::default()
    };
    let reps = 10;
    let mut hits = 0;
    let mut noise_choices = BTreeMap::new();
    for seed in 0..reps {
        let n = 360;
        let y = sarimax_simulate(
            &truth_orders,
            &truth,
            &ExogMatrix::none(),
            month(1900, 1),
            n,
            500 + seed,
        )
        .unwrap();
        let (best, table) = select_sarimax_orders_with(&y, &ExogMatrix::none(), &grid, Execution::Parallel).unwrap();
        assert_eq!(table.len(), grid.candidates().len());
        // The truth must beat every model that omits one of its terms.
        let aic = |o: SarimaxOrders| table.iter().find(|(c, _)| *c == o).and_then(|(_, a)| *a).unwrap();
        assert!(aic(truth_orders) < aic(SarimaxOrders::arma(0, 0)));
        if best == truth_orders {
            hits += 1;
        }

        let mut g = rng(600 + seed);
        let noise = MonthlySeries::new(month(1900, 1), (0..n).map(|_| gauss(&mut g)).collect(), "x").unwrap();
        let (best, _) = select_sarimax_orders_with(&noise, &ExogMatrix::none(), &grid, Execution::Parallel).unwrap();
        *noise_choices.entry(best).or_insert(0) += 1;
    }
    assert!(2 * hits > reps, "true orders chosen {hits}/{reps}");
    assert_modal(&noise_choices, SarimaxOrders::arma(0, 0));
}

#[test]
fn egarch_selection_prefers_true_orders() {
    let truth = EgarchParams::one_one_one(-0.1, 0.2, -0.05, 0.9);
    let one = EgarchOrders::default();
    let reps = 20;
    let mut hits = 0;
    let mut noise_choices = BTreeMap::new();
    for seed in 0..reps {
        let r = egarch_simulate(&truth, one, 1500, 700 + seed, month(1900, 1)).unwrap();
        let (best, table) = select_orders_with(&r, 2, Execution::Parallel).unwrap();
        assert_eq!(table.len(), 8);
        if best == one {
            hits += 1;
        }
        let mut g = rng(800 + seed);
        let noise = MonthlySeries::new(month(1900, 1), (0..1500).map(|_| 0.05 * gauss(&mut g)).collect(), "x").unwrap();
        let (best, _) = select_orders_with(&noise, 2, Execution::Parallel).unwrap();
        *noise_choices.entry(best).or_insert(0) += 1;
    }
    assert!(2 * hits > reps, "true orders chosen {hits}/{reps}");
    assert_modal(&noise_choices, one);
}
