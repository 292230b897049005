//! Distribution tails and sample summaries shared across modules.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::checked_gamma_ur;

use crate::error::{AldarError, Result};

/// Upper tail `P(χ²_df > x)` for real `df > 0`, via the regularized upper incomplete gamma.
pub fn chi2_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    checked_gamma_ur(0.5 * df, 0.5 * x).unwrap_or(f64::NAN).clamp(0.0, 1.0)
}

/// `(1 − level)` quantile of `χ²_df`, i.e. the rejection threshold at `level`.
pub fn chi2_critical(df: f64, level: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").inverse_cdf(1.0 - level)
}

/// Linear-interpolation ("type 7") sample quantile.
pub fn quantile_type7(values: &[f64], tau: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(AldarError::InvalidArgument("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(AldarError::InvalidArgument(format!("quantile level {tau} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, tau))
}

/// Type-7 quantile of an already sorted sample.
pub fn quantile_sorted(sorted: &[f64], tau: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * tau;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with divisor `n`.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with divisor `n − 1`.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_reference_values() {
        assert!((chi2_sf(1.0, 3.841_458_820_694_124) - 0.05).abs() < 1e-12);
        assert!((chi2_sf(2.0, 2.0) - (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(chi2_sf(3.0, 0.0), 1.0);
        assert!((chi2_critical(12.0, 0.05) - 21.026_069_817_483_1).abs() < 1e-8);
    }

    #[test]
    fn type7_quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile_type7(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile_type7(&v, 1.0).unwrap(), 4.0);
        assert!((quantile_type7(&v, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!((quantile_type7(&v, 0.05).unwrap() - 1.15).abs() < 1e-12);
        assert!(quantile_type7(&[], 0.5).is_err());
    }
}
