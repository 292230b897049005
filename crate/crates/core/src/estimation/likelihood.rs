//! Gaussian quasi-log-likelihood and its analytic derivatives.
//!
//! Per observation, with `s = β′X_{t−1}` and `e = y_t − α′Y_{t−1}`:
//!
//! ```text
//! ℓ_t      = −ln s − e²/(2s²)
//! ∂ℓ_t/∂α  = Y e / s²
//! ∂ℓ_t/∂β  = −X/s · (1 − e²/s²)
//! ∂²/∂α∂α′ = −Y Y′ / s²
//! ∂²/∂α∂β′ = −2 e Y X′ / s³
//! ∂²/∂β∂β′ = X X′ / s² · (1 − 3e²/s²)
//! ```

use nalgebra::{DMatrix, DVector};

use super::regressors::Regressors;
use crate::error::Result;
use crate::linalg::{spd_inverse, symmetrize};
use crate::params::ModelParams;

#[inline]
fn residual_and_scale(theta: &[f64], reg: &Regressors, r: usize) -> (f64, f64) {
    let p = reg.order();
    let (alpha, beta) = theta.split_at(p);
    let y = reg.y_row(r);
    let x = reg.x_row(r);
    let mean: f64 = alpha.iter().zip(y).map(|(a, v)| a * v).sum();
    let scale: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
    (reg.response(r) - mean, scale)
}

pub(crate) fn loglik_slice(theta: &[f64], reg: &Regressors) -> f64 {
    let mut total = 0.0;
    for r in 0..reg.n_rows() {
        let (e, s) = residual_and_scale(theta, reg, r);
        if !(s > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += -s.ln() - 0.5 * (e / s) * (e / s);
    }
    total
}

/// `L_n(θ) = Σ_{t=p+1}^n ℓ_t(θ)`.
pub fn loglik(theta: &ModelParams, reg: &Regressors) -> f64 {
    loglik_slice(&theta.to_vec(), reg)
}

/// Value, gradient, Hessian and a positive definite curvature surrogate of `L_n`.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
    /// `Σ_t blockdiag(YY′/s², 2XX′/s²)`, the expected negative Hessian at the truth.
    pub info: DMatrix<f64>,
}

pub(crate) fn derivatives_slice(theta: &[f64], reg: &Regressors) -> Derivatives {
    let p = reg.order();
    let d = 3 * p + 1;
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut info = vec![0.0; d * d];
    let mut z = vec![0.0; d];
    for r in 0..reg.n_rows() {
        let (e, s) = residual_and_scale(theta, reg, r);
        if !(s > 0.0) {
            value = f64::NEG_INFINITY;
            continue;
        }
        z[..p].copy_from_slice(reg.y_row(r));
        z[p..].copy_from_slice(reg.x_row(r));
        let inv_s = 1.0 / s;
        let inv_s2 = inv_s * inv_s;
        let ratio2 = e * e * inv_s2;
        value += -s.ln() - 0.5 * ratio2;
        for i in 0..p {
            grad[i] += z[i] * e * inv_s2;
        }
        let gb = -inv_s * (1.0 - ratio2);
        for i in p..d {
            grad[i] += z[i] * gb;
        }
        let w_aa = -inv_s2;
        let w_ab = -2.0 * e * inv_s2 * inv_s;
        let w_bb = inv_s2 * (1.0 - 3.0 * ratio2);
        for i in 0..d {
            if z[i] == 0.0 {
                continue;
            }
            for j in i..d {
                if z[j] == 0.0 {
                    continue;
                }
                let zz = z[i] * z[j];
                let (h, f) = match (i < p, j < p) {
                    (true, true) => (w_aa, inv_s2),
                    (true, false) => (w_ab, 0.0),
                    _ => (w_bb, 2.0 * inv_s2),
                };
                hess[i * d + j] += h * zz;
                info[i * d + j] += f * zz;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            hess[i * d + j] = hess[j * d + i];
            info[i * d + j] = info[j * d + i];
        }
    }
    Derivatives {
        value,
        grad: DVector::from_vec(grad),
        hess: DMatrix::from_row_slice(d, d, &hess),
        info: DMatrix::from_row_slice(d, d, &info),
    }
}

pub fn derivatives(theta: &ModelParams, reg: &Regressors) -> Derivatives {
    derivatives_slice(&theta.to_vec(), reg)
}

/// `∂L_n/∂θ`.
pub fn score(theta: &ModelParams, reg: &Regressors) -> DVector<f64> {
    derivatives(theta, reg).grad
}

/// `∂²L_n/∂θ∂θ′`.
pub fn hessian(theta: &ModelParams, reg: &Regressors) -> DMatrix<f64> {
    derivatives(theta, reg).hess
}

/// Per-observation scores `∂ℓ_t/∂θ′`, one row per likelihood term.
pub fn observation_scores(theta: &[f64], reg: &Regressors) -> DMatrix<f64> {
    let p = reg.order();
    let d = 3 * p + 1;
    let mut out = DMatrix::zeros(reg.n_rows(), d);
    for r in 0..reg.n_rows() {
        let (e, s) = residual_and_scale(theta, reg, r);
        let inv_s2 = 1.0 / (s * s);
        for (i, v) in reg.y_row(r).iter().enumerate() {
            out[(r, i)] = v * e * inv_s2;
        }
        let gb = -(1.0 - e * e * inv_s2) / s;
        for (i, v) in reg.x_row(r).iter().enumerate() {
            out[(r, p + i)] = v * gb;
        }
    }
    out
}

/// Standardized residuals `(y_t − α′Y_{t−1}) / (β′X_{t−1})`.
pub fn residuals(theta: &[f64], reg: &Regressors) -> Vec<f64> {
    (0..reg.n_rows())
        .map(|r| {
            let (e, s) = residual_and_scale(theta, reg, r);
            e / s
        })
        .collect()
}

/// Where the fourth-moment constants inside `Ω̂` come from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MomentSource {
    /// Sample average of score outer products; `κ₁`, `κ₂` are implicit.
    #[default]
    ScoreOuterProduct,
    /// Closed-form block expression with supplied `κ₁ = E η³`, `κ₂ = E η⁴ − 1`.
    Given { kappa1: f64, kappa2: f64 },
}

/// Sample estimates of `Σ`, `Ω` and `Ξ = Σ⁻¹ΩΣ⁻¹` (average scale).
#[derive(Debug, Clone)]
pub struct InfoMatrices {
    pub sigma: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
}

/// `Σ̂ = avg blockdiag(YY′/s², 2XX′/s²)`.
pub fn sigma_hat(theta: &[f64], reg: &Regressors) -> DMatrix<f64> {
    derivatives_slice(theta, reg).info / reg.n_rows() as f64
}

pub fn info_matrices(theta: &[f64], reg: &Regressors, source: MomentSource) -> Result<InfoMatrices> {
    let n = reg.n_rows() as f64;
    let sigma = sigma_hat(theta, reg);
    let omega = match source {
        MomentSource::ScoreOuterProduct => {
            let g = observation_scores(theta, reg);
            symmetrize(&(g.transpose() * &g / n))
        }
        MomentSource::Given { kappa1, kappa2 } => {
            let p = reg.order();
            let d = 3 * p + 1;
            let mut om = DMatrix::zeros(d, d);
            let mut z = vec![0.0; d];
            for r in 0..reg.n_rows() {
                let (_, s) = residual_and_scale(theta, reg, r);
                z[..p].copy_from_slice(reg.y_row(r));
                z[p..].copy_from_slice(reg.x_row(r));
                let w = 1.0 / (s * s);
                for i in 0..d {
                    for j in 0..d {
                        let k = match (i < p, j < p) {
                            (true, true) => 1.0,
                            (false, false) => kappa2,
                            _ => kappa1,
                        };
                        om[(i, j)] += k * w * z[i] * z[j];
                    }
                }
            }
            om / n
        }
    };
    let sigma_inv = spd_inverse(&sigma, "Sigma")?;
    let xi = symmetrize(&(&sigma_inv * &omega * &sigma_inv));
    Ok(InfoMatrices { sigma, omega, xi, sigma_inv })
}

/// Sample `κ̂₁ = avg η̂³` and `κ̂₂ = avg η̂⁴ − 1`.
pub fn residual_moments(resid: &[f64]) -> (f64, f64) {
    let n = resid.len() as f64;
    let k1 = resid.iter().map(|e| e.powi(3)).sum::<f64>() / n;
    let k2 = resid.iter().map(|e| e.powi(4)).sum::<f64>() / n - 1.0;
    (k1, k2)
}
