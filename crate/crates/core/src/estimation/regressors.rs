use crate::error::{AldarError, Result};
use crate::model::SeriesSample;

/// Lagged design for an order-`p` fit.
///
/// Row `r` corresponds to time `t = p + r` (0-based) and holds
/// `Y_{t−1} = (y_{t−1}, …, y_{t−p})`, `X_{t−1} = (1, y⁺_{t−1}, …, y⁺_{t−p}, −y⁻_{t−1}, …, −y⁻_{t−p})`
/// and the response `y_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressors {
    p: usize,
    n_obs: usize,
    y_lag: Vec<f64>,
    x_lag: Vec<f64>,
    resp: Vec<f64>,
}

impl Regressors {
    pub fn build(series: &SeriesSample, p: usize) -> Result<Self> {
        Self::from_values(&series.values, p)
    }

    pub fn from_values(y: &[f64], p: usize) -> Result<Self> {
        if p == 0 {
            return Err(AldarError::InvalidArgument("order p must be at least 1".into()));
        }
        if y.len() <= p {
            return Err(AldarError::SeriesTooShort { needed: p + 1, got: y.len() });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(AldarError::NonFinite(i));
        }
        let rows = y.len() - p;
        let mut y_lag = Vec::with_capacity(rows * p);
        let mut x_lag = Vec::with_capacity(rows * (2 * p + 1));
        for t in p..y.len() {
            let lags = (1..=p).map(|i| y[t - i]);
            y_lag.extend(lags.clone());
            x_lag.push(1.0);
            x_lag.extend(lags.clone().map(|v| v.max(0.0)));
            x_lag.extend(lags.map(|v| -(v.min(0.0))));
        }
        Ok(Self { p, n_obs: y.len(), y_lag, x_lag, resp: y[p..].to_vec() })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.p
    }

    /// Length `n` of the underlying series.
    #[inline]
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Number of likelihood terms, `n − p`.
    #[inline]
    pub fn n_rows(&self) -> usize {
        self.resp.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        3 * self.p + 1
    }

    #[inline]
    pub fn y_row(&self, r: usize) -> &[f64] {
        &self.y_lag[r * self.p..(r + 1) * self.p]
    }

    #[inline]
    pub fn x_row(&self, r: usize) -> &[f64] {
        let w = 2 * self.p + 1;
        &self.x_lag[r * w..(r + 1) * w]
    }

    #[inline]
    pub fn response(&self, r: usize) -> f64 {
        self.resp[r]
    }

    pub fn responses(&self) -> &[f64] {
        &self.resp
    }
}
