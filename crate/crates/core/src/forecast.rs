//! One-step conditional-quantile forecasts and Value-at-Risk backtests.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::asymtest::TestOutcome;
use crate::error::{AldarError, Result};
use crate::estimation::{fit_qmle, FitOptions, FitResult};
use crate::linalg::spd_quad_form;
use crate::model::{cond_mean_scale, SeriesSample};
use crate::params::ParamBounds;
use crate::stats::{chi2_sf, quantile_sorted};

const MIN_RESIDUALS: usize = 20;
const MIN_CC_LEN: usize = 50;
const MIN_DQ_LEN: usize = 60;
const DQ_LAGS: usize = 4;

/// Forecast quantiles, the realized values and the hit indicators `y < q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarForecastSeries {
    pub tau: f64,
    /// Index in the input series of each forecast target.
    pub times: Vec<usize>,
    pub q_forecast: Vec<f64>,
    pub realized: Vec<f64>,
    pub hits: Vec<bool>,
}

impl VarForecastSeries {
    pub fn new(tau: f64, times: Vec<usize>, q_forecast: Vec<f64>, realized: Vec<f64>) -> Result<Self> {
        check_tau(tau)?;
        if times.len() != q_forecast.len() || q_forecast.len() != realized.len() {
            return Err(AldarError::InvalidArgument("forecast vectors differ in length".into()));
        }
        let hits = realized.iter().zip(&q_forecast).map(|(y, q)| y < q).collect();
        Ok(Self { tau, times, q_forecast, realized, hits })
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub tau: f64,
    pub n_forecasts: usize,
    pub n_gaps: usize,
    pub ecr: f64,
    /// `None` when the hit sequence is degenerate.
    pub cc_stat: Option<f64>,
    pub cc_pvalue: Option<f64>,
    pub dq_stat: Option<f64>,
    pub dq_pvalue: Option<f64>,
}

impl BacktestReport {
    pub fn evaluate(series: &VarForecastSeries, n_gaps: usize) -> Result<Self> {
        let ecr = ecr(series)?;
        let cc = cc_test(&series.hits, series.tau).ok();
        let dq = dq_test(series).ok();
        Ok(Self {
            tau: series.tau,
            n_forecasts: series.len(),
            n_gaps,
            ecr,
            cc_stat: cc.map(|t| t.statistic),
            cc_pvalue: cc.map(|t| t.p_value),
            dq_stat: dq.map(|t| t.statistic),
            dq_pvalue: dq.map(|t| t.p_value),
        })
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(AldarError::InvalidArgument(format!("quantile level must lie in (0, 1), got {tau}")))
    }
}

fn sorted_residuals(fit: &FitResult) -> Result<Vec<f64>> {
    if fit.residuals.len() < MIN_RESIDUALS {
        return Err(AldarError::SeriesTooShort { needed: MIN_RESIDUALS, got: fit.residuals.len() });
    }
    let mut r = fit.residuals.clone();
    r.sort_by(f64::total_cmp);
    Ok(r)
}

fn quantile_from_sorted(fit: &FitResult, sorted: &[f64], recent_lags: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if recent_lags.len() != fit.order() {
        return Err(AldarError::InvalidArgument(format!(
            "expected {} recent lags, got {}",
            fit.order(),
            recent_lags.len()
        )));
    }
    let (mu, sigma) = cond_mean_scale(&fit.theta_hat, recent_lags);
    Ok(mu + sigma * quantile_sorted(sorted, tau))
}

/// `μ̂ + σ̂·b̂_τ`, with `b̂_τ` the type-7 quantile of the fit's residuals.
/// `recent_lags` is ordered most recent first.
pub fn forecast_quantile(fit: &FitResult, recent_lags: &[f64], tau: f64) -> Result<f64> {
    quantile_from_sorted(fit, &sorted_residuals(fit)?, recent_lags, tau)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingBacktest {
    /// One series per requested level, in input order.
    pub forecasts: Vec<VarForecastSeries>,
    /// Target indices where no fit was available.
    pub gaps: Vec<usize>,
    pub refits: usize,
}

impl RollingBacktest {
    pub fn reports(&self) -> Result<Vec<BacktestReport>> {
        self.forecasts.iter().map(|f| BacktestReport::evaluate(f, self.gaps.len())).collect()
    }
}

fn fit_window(window: &SeriesSample, p: usize, bounds: &ParamBounds, options: &FitOptions, prev: Option<&FitResult>) -> Result<FitResult> {
    if let Some(prev) = prev {
        let warm = FitOptions { n_starts: 1, warm_start: Some(prev.theta_hat.clone()), ..options.clone() };
        if let Ok(fit) = fit_qmle(window, p, bounds, &warm) {
            return Ok(fit);
        }
    }
    fit_qmle(window, p, bounds, options)
}

/// Fixed-length moving-window forecasts of `y_t` for every origin `t = window, …, n − 1`.
///
/// Each fit after the first starts from the previous estimate; the model is refit every
/// `refit_every` origins and reused in between.
pub fn rolling_backtest(
    series: &SeriesSample,
    window: usize,
    p: usize,
    taus: &[f64],
    refit_every: usize,
    bounds: &ParamBounds,
    options: &FitOptions,
) -> Result<RollingBacktest> {
    for &tau in taus {
        check_tau(tau)?;
    }
    if taus.is_empty() {
        return Err(AldarError::InvalidArgument("no quantile levels given".into()));
    }
    if refit_every == 0 {
        return Err(AldarError::InvalidArgument("refit_every must be at least 1".into()));
    }
    if p == 0 || window < 10 * (3 * p + 1) {
        return Err(AldarError::InvalidArgument(format!("window {window} too short for order {p}")));
    }
    let y = &series.values;
    if y.len() <= window {
        return Err(AldarError::SeriesTooShort { needed: window + 1, got: y.len() });
    }

    let mut current: Option<(FitResult, Vec<f64>)> = None;
    let mut last_good: Option<FitResult> = None;
    let mut times = Vec::new();
    let mut realized = Vec::new();
    let mut q: Vec<Vec<f64>> = vec![Vec::new(); taus.len()];
    let mut gaps = Vec::new();
    let mut refits = 0;

    for t in window..y.len() {
        if (t - window) % refit_every == 0 {
            refits += 1;
            let w = SeriesSample::new(y[t - window..t].to_vec(), series.name.clone())?;
            current = fit_window(&w, p, bounds, options, last_good.as_ref())
                .and_then(|fit| sorted_residuals(&fit).map(|s| (fit, s)))
                .ok();
            if let Some((fit, _)) = &current {
                last_good = Some(fit.clone());
            }
        }
        let Some((fit, sorted)) = &current else {
            gaps.push(t);
            continue;
        };
        let lags: Vec<f64> = (1..=p).map(|i| y[t - i]).collect();
        for (k, &tau) in taus.iter().enumerate() {
            q[k].push(quantile_from_sorted(fit, sorted, &lags, tau)?);
        }
        times.push(t);
        realized.push(y[t]);
    }

    let forecasts = taus
        .iter()
        .zip(q)
        .map(|(&tau, qk)| VarForecastSeries::new(tau, times.clone(), qk, realized.clone()))
        .collect::<Result<_>>()?;
    Ok(RollingBacktest { forecasts, gaps, refits })
}

/// Fraction of realizations below the forecast quantile.
pub fn ecr(forecasts: &VarForecastSeries) -> Result<f64> {
    if forecasts.is_empty() {
        return Err(AldarError::InvalidArgument("no forecasts".into()));
    }
    Ok(forecasts.hits.iter().filter(|h| **h).count() as f64 / forecasts.len() as f64)
}

/// `n·ln(π)` with `0·ln 0 = 0`.
fn xlogy(n: f64, pi: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * pi.ln()
    }
}

/// Conditional coverage: `LR_uc + LR_ind` against `χ²₂`.
pub fn cc_test(hits: &[bool], tau: f64) -> Result<TestOutcome> {
    check_tau(tau)?;
    if hits.len() < MIN_CC_LEN {
        return Err(AldarError::SeriesTooShort { needed: MIN_CC_LEN, got: hits.len() });
    }
    let n1 = hits.iter().filter(|h| **h).count() as f64;
    let n0 = hits.len() as f64 - n1;
    if n1 == 0.0 || n0 == 0.0 {
        return Err(AldarError::Degenerate("hit sequence has no variation".into()));
    }
    let pi = n1 / (n0 + n1);
    let lr_uc = -2.0 * (xlogy(n1, tau) + xlogy(n0, 1.0 - tau) - xlogy(n1, pi) - xlogy(n0, 1.0 - pi));

    let mut c = [[0.0f64; 2]; 2];
    for w in hits.windows(2) {
        c[w[0] as usize][w[1] as usize] += 1.0;
    }
    let [[n00, n01], [n10, n11]] = c;
    let pi01 = if n00 + n01 > 0.0 { n01 / (n00 + n01) } else { 0.0 };
    let pi11 = if n10 + n11 > 0.0 { n11 / (n10 + n11) } else { 0.0 };
    let pi2 = (n01 + n11) / (n00 + n01 + n10 + n11);
    let l_markov = xlogy(n00, 1.0 - pi01) + xlogy(n01, pi01) + xlogy(n10, 1.0 - pi11) + xlogy(n11, pi11);
    let l_iid = xlogy(n00 + n10, 1.0 - pi2) + xlogy(n01 + n11, pi2);
    let lr_ind = -2.0 * (l_iid - l_markov);

    let stat = (lr_uc + lr_ind).max(0.0);
    Ok(TestOutcome { statistic: stat, p_value: chi2_sf(2.0, stat) })
}

/// Dynamic quantile test with regressors `(1, H_{t−1}, …, H_{t−4}, q_t)` against `χ²₆`.
pub fn dq_test(forecasts: &VarForecastSeries) -> Result<TestOutcome> {
    let tau = forecasts.tau;
    check_tau(tau)?;
    let n = forecasts.len();
    if n < MIN_DQ_LEN {
        return Err(AldarError::SeriesTooShort { needed: MIN_DQ_LEN, got: n });
    }
    let h: Vec<f64> = forecasts.hits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let k = DQ_LAGS + 2;
    let rows = n - DQ_LAGS;
    let z = DMatrix::from_fn(rows, k, |r, c| {
        let t = r + DQ_LAGS;
        match c {
            0 => 1.0,
            c if c <= DQ_LAGS => h[t - c],
            _ => forecasts.q_forecast[t],
        }
    });
    let hit = DVector::from_fn(rows, |r, _| h[r + DQ_LAGS] - tau);
    let ztz = z.transpose() * &z;
    let zth = z.transpose() * hit;
    let quad = spd_quad_form(&ztz, &zth, "Z'Z").map_err(|e| AldarError::Degenerate(format!("DQ regressors: {e}")))?;
    let stat = (quad / (tau * (1.0 - tau))).max(0.0);
    Ok(TestOutcome { statistic: stat, p_value: chi2_sf(k as f64, stat) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovation::InnovationSpec;
    use crate::model::simulate;
    use crate::params::ModelParams;
    use rand::Rng;

    fn truth() -> ModelParams {
        ModelParams::new(vec![0.2], 0.4, vec![0.3], vec![0.5]).unwrap()
    }

    fn sample_fit(n: usize, seed: u64) -> (SeriesSample, FitResult) {
        let s = simulate(&truth(), &InnovationSpec::normal(), n, 500, seed).unwrap();
        let f = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        (s, f)
    }

    #[test]
    fn zero_lags_give_omega_times_quantile() {
        let (_, f) = sample_fit(600, 1);
        let q = forecast_quantile(&f, &[0.0], 0.05).unwrap();
        let b = crate::stats::quantile_type7(&f.residuals, 0.05).unwrap();
        assert!((q - f.theta_hat.omega * b).abs() < 1e-12);
        let lo = forecast_quantile(&f, &[0.7], 0.01).unwrap();
        let hi = forecast_quantile(&f, &[0.7], 0.99).unwrap();
        assert!(lo < hi);
        assert!(forecast_quantile(&f, &[0.0, 1.0], 0.5).is_err());
        assert!(forecast_quantile(&f, &[0.0], 1.0).is_err());
    }

    #[test]
    fn ecr_extremes() {
        let realized = vec![0.5, -1.0, 2.0];
        let low = VarForecastSeries::new(0.05, vec![0, 1, 2], vec![-1e9; 3], realized.clone()).unwrap();
        let high = VarForecastSeries::new(0.05, vec![0, 1, 2], vec![1e9; 3], realized).unwrap();
        assert_eq!(ecr(&low).unwrap(), 0.0);
        assert_eq!(ecr(&high).unwrap(), 1.0);
    }

    #[test]
    fn cc_uc_part_vanishes_at_nominal_rate() {
        // 5 isolated hits in 100: π̂ = τ
        let hits: Vec<bool> = (0..100).map(|i| i % 20 == 7).collect();
        let t = cc_test(&hits, 0.05).unwrap();
        // LR_ind for isolated hits is small but positive
        assert!(t.statistic >= 0.0 && t.statistic < 1.0, "{t:?}");
        assert!(cc_test(&vec![false; 100], 0.05).is_err());
        assert!(cc_test(&vec![true; 10], 0.05).is_err());
    }

    #[test]
    fn cc_detects_clustering() {
        let mut hits = vec![false; 677];
        for start in (0..600).step_by(60) {
            for h in hits.iter_mut().skip(start).take(4) {
                *h = true;
            }
        }
        let t = cc_test(&hits, 0.05).unwrap();
        assert!(t.p_value < 0.001, "{t:?}");
    }

    #[test]
    fn dq_degenerate_and_regular() {
        let series = VarForecastSeries::new(0.05, (0..100).collect(), vec![-1e9; 100], vec![0.0; 100]).unwrap();
        assert!(dq_test(&series).is_err());
        let mut rng = crate::rng::rng_from_seed(3);
        let realized: Vec<f64> = (0..677).map(|_| rng.random_range(0.0..1.0)).collect();
        let q: Vec<f64> = (0..677).map(|_| 0.05 + 0.001 * rng.random_range(-1.0..1.0)).collect();
        let s = VarForecastSeries::new(0.05, (0..677).collect(), q, realized).unwrap();
        let t = dq_test(&s).unwrap();
        assert!(t.statistic >= 0.0 && (0.0..=1.0).contains(&t.p_value));
    }

    #[test]
    fn rolling_counts() {
        let s = simulate(&truth(), &InnovationSpec::normal(), 160, 500, 11).unwrap();
        let out = rolling_backtest(&s, 159, 1, &[0.05], 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert_eq!(out.forecasts[0].len(), 1);
        let out = rolling_backtest(&s, 120, 1, &[0.01, 0.05, 0.95], 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert_eq!(out.forecasts.len(), 3);
        assert_eq!(out.forecasts[0].len() + out.gaps.len(), 40);
        assert_eq!(out.refits, 40);
        for f in &out.forecasts {
            for (i, h) in f.hits.iter().enumerate() {
                assert_eq!(*h, f.realized[i] < f.q_forecast[i]);
            }
        }
        let sparse = rolling_backtest(&s, 120, 1, &[0.05], 4, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert_eq!(sparse.refits, 10);
        assert!(rolling_backtest(&s, 20, 1, &[0.05], 1, &ParamBounds::default(), &FitOptions::default()).is_err());
    }
}
