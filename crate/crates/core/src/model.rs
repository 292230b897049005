use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AldarError, Result};
use crate::innovation::InnovationSpec;
use crate::params::ModelParams;
use crate::rng::rng_from_seed;

pub const DEFAULT_BURN_IN: usize = 500;
pub const MIN_BURN_IN: usize = 200;
pub const EXPLOSION_THRESHOLD: f64 = 1e12;

/// An observed or simulated series in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample {
    pub values: Vec<f64>,
    pub name: String,
}

impl SeriesSample {
    pub fn new(values: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(AldarError::NonFinite(i));
        }
        Ok(Self { values, name: name.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the minimum length `p + 2` required to fit an order-`p` model.
    pub fn check_fit_length(&self, p: usize) -> Result<()> {
        if self.values.len() < p + 2 {
            return Err(AldarError::SeriesTooShort { needed: p + 2, got: self.values.len() });
        }
        Ok(())
    }

    /// Percentage log returns `100·(ln P_t − ln P_{t−1})`, optionally centered by the
    /// full-sample mean.
    pub fn from_prices(prices: &[f64], center: bool, name: impl Into<String>) -> Result<Self> {
        if prices.len() < 2 {
            return Err(AldarError::SeriesTooShort { needed: 2, got: prices.len() });
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(AldarError::InvalidArgument(format!("price at index {i} is not positive")));
        }
        let mut r: Vec<f64> = prices.windows(2).map(|w| 100.0 * (w[1].ln() - w[0].ln())).collect();
        if center {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            r.iter_mut().for_each(|v| *v -= mean);
        }
        Self::new(r, name)
    }
}

/// Conditional mean and scale given lags ordered most recent first.
#[inline]
pub fn cond_mean_scale(params: &ModelParams, lags: &[f64]) -> (f64, f64) {
    debug_assert_eq!(lags.len(), params.order());
    let mut mu = 0.0;
    let mut sigma = params.omega;
    for (i, &y) in lags.iter().enumerate() {
        mu += params.alpha[i] * y;
        if y > 0.0 {
            sigma += params.beta_plus[i] * y;
        } else {
            sigma -= params.beta_minus[i] * y;
        }
    }
    (mu, sigma)
}

/// Simulates `n` observations after `burn_in` discarded steps from a zero initial state.
pub fn simulate(params: &ModelParams, innov: &InnovationSpec, n: usize, burn_in: usize, seed: u64) -> Result<SeriesSample> {
    let mut rng = rng_from_seed(seed);
    simulate_with_rng(params, innov, n, burn_in, &mut rng)
}

pub fn simulate_with_rng<R: Rng + ?Sized>(
    params: &ModelParams,
    innov: &InnovationSpec,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<SeriesSample> {
    params.validate()?;
    if n == 0 {
        return Err(AldarError::InvalidArgument("sample size must be positive".into()));
    }
    if burn_in < MIN_BURN_IN {
        return Err(AldarError::InvalidArgument(format!("burn-in must be at least {MIN_BURN_IN}, got {burn_in}")));
    }
    let p = params.order();
    // lags[0] is the most recent value
    let mut lags = vec![0.0; p];
    let mut out = Vec::with_capacity(n);
    for step in 0..burn_in + n {
        let (mu, sigma) = cond_mean_scale(params, &lags);
        let y = mu + sigma * innov.sample(rng);
        if !y.is_finite() || y.abs() > EXPLOSION_THRESHOLD {
            return Err(AldarError::ExplosivePath { step, value: y.abs() });
        }
        lags.rotate_right(1);
        lags[0] = y;
        if step >= burn_in {
            out.push(y);
        }
    }
    SeriesSample::new(out, "simulated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn table1() -> ModelParams {
        ModelParams::new(vec![0.5], 0.4, vec![0.4], vec![0.6]).unwrap()
    }

    #[test]
    fn cond_mean_scale_examples() {
        let p = table1();
        let (mu, s) = cond_mean_scale(&p, &[1.0]);
        assert!((mu - 0.5).abs() < 1e-15 && (s - 0.8).abs() < 1e-15);
        let (mu, s) = cond_mean_scale(&p, &[-1.0]);
        assert!((mu + 0.5).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        assert_eq!(cond_mean_scale(&p, &[0.0]), (0.0, 0.4));
    }

    #[test]
    fn degenerate_model_is_iid_innovations() {
        let params = ModelParams::new(vec![0.0], 1.0, vec![0.0], vec![0.0]).unwrap();
        let innov = InnovationSpec::normal();
        let s = simulate(&params, &innov, 100, 300, 11).unwrap();
        let mut rng = rng_from_seed(11);
        let draws: Vec<f64> = (0..400).map(|_| innov.sample(&mut rng)).collect();
        assert_eq!(s.values, draws[300..].to_vec());
    }

    #[test]
    fn deterministic_given_seed() {
        let innov = InnovationSpec::normal();
        let a = simulate(&table1(), &innov, 500, 500, 3).unwrap();
        let b = simulate(&table1(), &innov, 500, 500, 3).unwrap();
        let c = simulate(&table1(), &innov, 500, 500, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn explosive_parameters_error() {
        let params = ModelParams::new(vec![3.0], 1.0, vec![2.0], vec![2.0]).unwrap();
        let err = simulate(&params, &InnovationSpec::normal(), 10_000, 500, 1).unwrap_err();
        assert!(matches!(err, AldarError::ExplosivePath { .. }));
    }

    #[test]
    fn argument_checks() {
        let innov = InnovationSpec::normal();
        assert!(simulate(&table1(), &innov, 0, 500, 1).is_err());
        assert!(simulate(&table1(), &innov, 10, 100, 1).is_err());
        assert!(SeriesSample::new(vec![1.0, f64::NAN], "x").is_err());
    }

    #[test]
    fn log_returns_centered() {
        let s = SeriesSample::from_prices(&[100.0, 110.0, 99.0, 105.0], true, "px").unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.values.iter().sum::<f64>().abs() < 1e-12);
        let raw = SeriesSample::from_prices(&[100.0, 110.0], false, "px").unwrap();
        assert!((raw.values[0] - 100.0 * (1.1f64).ln()).abs() < 1e-12);
    }
}
