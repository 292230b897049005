use serde::{Deserialize, Serialize};

use crate::error::{AldarError, Result};

/// Parameters of an ALDAR(p) process.
///
/// The flattened vector θ has length `3p + 1` and is laid out as
/// `(α_1..α_p, ω, β_{1+}..β_{p+}, β_{1-}..β_{p-})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: Vec<f64>,
    pub omega: f64,
    pub beta_plus: Vec<f64>,
    pub beta_minus: Vec<f64>,
}

impl ModelParams {
    pub fn new(alpha: Vec<f64>, omega: f64, beta_plus: Vec<f64>, beta_minus: Vec<f64>) -> Result<Self> {
        let params = Self { alpha, omega, beta_plus, beta_minus };
        params.validate()?;
        Ok(params)
    }

    /// Symmetric (linear DAR) parameters with `β₊ = β₋ = beta`.
    pub fn symmetric(alpha: Vec<f64>, omega: f64, beta: Vec<f64>) -> Result<Self> {
        Self::new(alpha, omega, beta.clone(), beta)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.alpha.len();
        if p == 0 {
            return Err(AldarError::InvalidParams("order p must be at least 1".into()));
        }
        if self.beta_plus.len() != p || self.beta_minus.len() != p {
            return Err(AldarError::InvalidParams(format!(
                "coefficient lengths differ: alpha {}, beta_plus {}, beta_minus {}",
                p,
                self.beta_plus.len(),
                self.beta_minus.len()
            )));
        }
        let all = self.alpha.iter().chain(self.beta_plus.iter()).chain(self.beta_minus.iter());
        if !self.omega.is_finite() || all.clone().any(|v| !v.is_finite()) {
            return Err(AldarError::InvalidParams("non-finite coefficient".into()));
        }
        if self.omega <= 0.0 {
            return Err(AldarError::InvalidParams(format!("omega must be positive, got {}", self.omega)));
        }
        if self.beta_plus.iter().chain(self.beta_minus.iter()).any(|&b| b < 0.0) {
            return Err(AldarError::InvalidParams("beta coefficients must be nonnegative".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        3 * self.order() + 1
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.alpha);
        v.push(self.omega);
        v.extend_from_slice(&self.beta_plus);
        v.extend_from_slice(&self.beta_minus);
        v
    }

    /// Rebuilds parameters from a flattened θ without validating signs.
    pub fn from_slice_unchecked(p: usize, theta: &[f64]) -> Self {
        assert_eq!(theta.len(), 3 * p + 1, "theta length must be 3p+1");
        Self {
            alpha: theta[..p].to_vec(),
            omega: theta[p],
            beta_plus: theta[p + 1..2 * p + 1].to_vec(),
            beta_minus: theta[2 * p + 1..].to_vec(),
        }
    }

    pub fn from_slice(p: usize, theta: &[f64]) -> Result<Self> {
        if theta.len() != 3 * p + 1 {
            return Err(AldarError::InvalidParams(format!(
                "theta has length {}, expected {}",
                theta.len(),
                3 * p + 1
            )));
        }
        let params = Self::from_slice_unchecked(p, theta);
        params.validate()?;
        Ok(params)
    }

    /// `β` part of θ as used in `β′X_{t-1}`: `(ω, β₊, β₋)`.
    pub fn scale_coefs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(2 * self.order() + 1);
        b.push(self.omega);
        b.extend_from_slice(&self.beta_plus);
        b.extend_from_slice(&self.beta_minus);
        b
    }

    pub fn is_symmetric(&self) -> bool {
        self.beta_plus == self.beta_minus
    }
}

/// Box constraints defining the compact parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub alpha_abs_max: f64,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self { omega_lo: 1e-4, omega_hi: 1e4, beta_lo: 1e-6, beta_hi: 1e2, alpha_abs_max: 10.0 }
    }
}

impl ParamBounds {
    pub fn new(omega_lo: f64, omega_hi: f64, beta_lo: f64, beta_hi: f64, alpha_abs_max: f64) -> Result<Self> {
        let b = Self { omega_lo, omega_hi, beta_lo, beta_hi, alpha_abs_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_lo > 0.0
            && self.omega_lo <= self.omega_hi
            && self.beta_lo > 0.0
            && self.beta_lo <= self.beta_hi
            && self.alpha_abs_max > 0.0
            && [self.omega_hi, self.beta_hi, self.alpha_abs_max].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(AldarError::InvalidParams(format!("invalid bounds {self:?}")))
        }
    }

    /// Lower and upper bound vectors in θ layout for order `p`.
    pub fn box_for_order(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![-self.alpha_abs_max; p];
        let mut hi = vec![self.alpha_abs_max; p];
        lo.push(self.omega_lo);
        hi.push(self.omega_hi);
        lo.extend(std::iter::repeat_n(self.beta_lo, 2 * p));
        hi.extend(std::iter::repeat_n(self.beta_hi, 2 * p));
        (lo, hi)
    }

    pub fn contains(&self, params: &ModelParams) -> bool {
        let (lo, hi) = self.box_for_order(params.order());
        params.to_vec().iter().zip(lo.iter().zip(hi.iter())).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Bounds with ω limits multiplied by `c`, for rescaled data.
    pub fn scaled(&self, c: f64) -> Self {
        Self { omega_lo: self.omega_lo * c, omega_hi: self.omega_hi * c, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening_order() {
        let p = ModelParams::new(vec![0.1, 0.2], 0.5, vec![0.3, 0.4], vec![0.6, 0.7]).unwrap();
        assert_eq!(p.to_vec(), vec![0.1, 0.2, 0.5, 0.3, 0.4, 0.6, 0.7]);
        assert_eq!(ModelParams::from_slice(2, &p.to_vec()).unwrap(), p);
        assert_eq!(p.scale_coefs(), vec![0.5, 0.3, 0.4, 0.6, 0.7]);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(vec![0.1], 0.0, vec![0.1], vec![0.1]).is_err());
        assert!(ModelParams::new(vec![0.1], 1.0, vec![-0.1], vec![0.1]).is_err());
        assert!(ModelParams::new(vec![0.1, 0.2], 1.0, vec![0.1], vec![0.1]).is_err());
        assert!(ModelParams::new(vec![], 1.0, vec![], vec![]).is_err());
        assert!(ParamBounds::new(0.0, 1.0, 1e-6, 1.0, 1.0).is_err());
        assert!(ParamBounds::new(2.0, 1.0, 1e-6, 1.0, 1.0).is_err());
    }

    #[test]
    fn bounds_box_layout() {
        let b = ParamBounds::default();
        let (lo, hi) = b.box_for_order(1);
        assert_eq!(lo, vec![-10.0, 1e-4, 1e-6, 1e-6]);
        assert_eq!(hi, vec![10.0, 1e4, 1e2, 1e2]);
        let p = ModelParams::new(vec![0.5], 0.4, vec![0.4], vec![0.6]).unwrap();
        assert!(b.contains(&p));
    }
}
