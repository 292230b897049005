//! Order selection by BIC₁ and the misspecification-adjusted BIC₂.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{AldarError, Result};
use crate::estimation::{fit_qmle, FitOptions};
use crate::linalg::spd_logdet;
use crate::model::SeriesSample;
use crate::params::ParamBounds;
use nalgebra::DMatrix;

/// `−2L + (3p+1)·ln(n−p)`
pub fn bic1(loglik: f64, n: usize, p: usize) -> Result<f64> {
    if n <= p {
        return Err(AldarError::InvalidArgument(format!("bic needs n > p, got n = {n}, p = {p}")));
    }
    Ok(-2.0 * loglik + (3 * p + 1) as f64 * ((n - p) as f64).ln())
}

/// `−2L + (3p+1)·ln((n−p)/2π) + ln det Σ̂`
pub fn bic2(loglik: f64, n: usize, p: usize, sigma_hat: &DMatrix<f64>) -> Result<f64> {
    if n <= p {
        return Err(AldarError::InvalidArgument(format!("bic needs n > p, got n = {n}, p = {p}")));
    }
    let logdet = spd_logdet(sigma_hat, "Sigma")?;
    Ok(-2.0 * loglik + (3 * p + 1) as f64 * ((n - p) as f64 / (2.0 * PI)).ln() + logdet)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRow {
    pub p: usize,
    pub loglik: Option<f64>,
    pub bic1: Option<f64>,
    pub bic2: Option<f64>,
    pub logdet_sigma_hat: Option<f64>,
    /// Why the fit for this order was excluded.
    pub failure: Option<String>,
}

impl SelectionRow {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub p_max: usize,
    pub table: Vec<SelectionRow>,
    pub p_hat_bic1: usize,
    pub p_hat_bic2: usize,
}

fn argmin(table: &[SelectionRow], key: impl Fn(&SelectionRow) -> Option<f64>) -> Option<usize> {
    table
        .iter()
        .filter_map(|r| key(r).map(|v| (r.p, v)))
        .fold(None, |best: Option<(usize, f64)>, (p, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((p, v)),
        })
        .map(|(p, _)| p)
}

fn evaluate(series: &SeriesSample, p: usize, bounds: &ParamBounds, options: &FitOptions) -> SelectionRow {
    let n = series.len();
    let row = fit_qmle(series, p, bounds, options).and_then(|fit| {
        let logdet = spd_logdet(&fit.sigma_hat, "Sigma")?;
        Ok(SelectionRow {
            p,
            loglik: Some(fit.loglik),
            bic1: Some(bic1(fit.loglik, n, p)?),
            bic2: Some(bic2(fit.loglik, n, p, &fit.sigma_hat)?),
            logdet_sigma_hat: Some(logdet),
            failure: None,
        })
    });
    row.unwrap_or_else(|e| SelectionRow {
        p,
        loglik: None,
        bic1: None,
        bic2: None,
        logdet_sigma_hat: None,
        failure: Some(e.to_string()),
    })
}

/// Fits every order `1..=p_max` on the full series and reports both argmins.
pub fn select_order(series: &SeriesSample, p_max: usize, bounds: &ParamBounds, options: &FitOptions) -> Result<SelectionReport> {
    if p_max == 0 {
        return Err(AldarError::InvalidArgument("p_max must be at least 1".into()));
    }
    let table: Vec<SelectionRow> = (1..=p_max).into_par_iter().map(|p| evaluate(series, p, bounds, options)).collect();
    let p_hat_bic1 = argmin(&table, |r| r.bic1).ok_or(AldarError::SelectionFailed)?;
    let p_hat_bic2 = argmin(&table, |r| r.bic2).ok_or(AldarError::SelectionFailed)?;
    Ok(SelectionReport { p_max, table, p_hat_bic1, p_hat_bic2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovation::InnovationSpec;
    use crate::model::simulate;
    use crate::params::ModelParams;

    #[test]
    fn formula_values() {
        assert!((bic1(-500.0, 500, 2).unwrap() - 1043.474).abs() < 1e-3);
        assert!((bic1(0.0, 101, 1).unwrap() - 4.0 * 100f64.ln()).abs() < 1e-12);
        let id = DMatrix::identity(7, 7);
        let d = bic1(-321.0, 400, 2).unwrap() - bic2(-321.0, 400, 2, &id).unwrap();
        assert!((d - 7.0 * (2.0 * PI).ln()).abs() < 1e-10);
        assert!(bic1(0.0, 2, 2).is_err());
    }

    #[test]
    fn ties_go_to_smaller_order() {
        let row = |p, v| SelectionRow { p, loglik: Some(0.0), bic1: Some(v), bic2: Some(v), logdet_sigma_hat: Some(0.0), failure: None };
        let failed = SelectionRow { p: 3, loglik: None, bic1: None, bic2: None, logdet_sigma_hat: None, failure: Some("x".into()) };
        let table = vec![row(1, 5.0), row(2, 5.0), failed];
        assert_eq!(argmin(&table, |r| r.bic1), Some(1));
    }

    #[test]
    fn single_candidate() {
        let truth = ModelParams::new(vec![0.3, -0.2], 0.4, vec![0.2, 0.2], vec![0.2, 0.1]).unwrap();
        let s = simulate(&truth, &InnovationSpec::normal(), 300, 500, 3).unwrap();
        let r = select_order(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert_eq!((r.p_hat_bic1, r.p_hat_bic2), (1, 1));
        let r = select_order(&s, 3, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert_eq!(r.table.len(), 3);
        assert!(r.table.iter().all(|row| !row.failed()));
    }
}
