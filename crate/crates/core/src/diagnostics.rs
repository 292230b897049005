//! Residual and absolute-residual autocorrelations and the mixed portmanteau test.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AldarError, Result};
use crate::estimation::{observation_scores, FitResult, Regressors};
use crate::linalg::{spd_inverse, symmetrize};
use crate::stats::chi2_sf;

const BAND_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfReport {
    pub m: usize,
    pub rho_hat: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    /// `V̂ĜV̂′/(n−p)`, row-major, ordered `(ρ̂₁…ρ̂_M, γ̂₁…γ̂_M)`.
    pub cov: Vec<Vec<f64>>,
    /// 95% half-widths for `ρ̂_k`.
    pub bands_rho: Vec<f64>,
    /// 95% half-widths for `γ̂_k`.
    pub bands_gamma: Vec<f64>,
    pub q_stat: f64,
    pub p_value: f64,
    pub df: usize,
    pub tau1_hat: f64,
    pub tau2_hat: f64,
    pub sigma_xi_sq_hat: f64,
}

fn acf(x: &[f64], m: usize, what: &str) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = c.iter().map(|v| v * v).sum();
    if !(denom > 1e-24 * x.iter().map(|v| v * v).sum::<f64>()) {
        return Err(AldarError::Degenerate(format!("{what} have zero sample variance")));
    }
    Ok((1..=m).map(|k| c[k..].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / denom).collect())
}

/// `(ρ̂_1…ρ̂_M, γ̂_1…γ̂_M)` from the residuals `η̂_{p+1}, …, η̂_n`.
pub fn residual_acfs(residuals: &[f64], m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(AldarError::InvalidArgument("M must be at least 1".into()));
    }
    if residuals.len() <= m + 1 {
        return Err(AldarError::SeriesTooShort { needed: m + 2, got: residuals.len() });
    }
    let rho = acf(residuals, m, "residuals")?;
    let abs: Vec<f64> = residuals.iter().map(|v| v.abs()).collect();
    let gamma = acf(&abs, m, "absolute residuals")?;
    Ok((rho, gamma))
}

struct Pieces {
    cov: DMatrix<f64>,
    tau1: f64,
    tau2: f64,
    sigma_xi_sq: f64,
}

fn covariance_pieces(fit: &FitResult, reg: &Regressors, m: usize) -> Result<Pieces> {
    let p = reg.order();
    if fit.order() != p || fit.n_eff() != reg.n_rows() {
        return Err(AldarError::InvalidArgument("fit and regressors do not match".into()));
    }
    let n = reg.n_rows();
    let d = 3 * p + 1;
    if m == 0 || n <= 2 * m + d {
        return Err(AldarError::SeriesTooShort { needed: 2 * m + d + 1 + p, got: reg.n_obs() });
    }
    let eta = &fit.residuals;
    let theta = fit.theta_hat.to_vec();
    let beta = &theta[p..];
    let scale: Vec<f64> = (0..n).map(|r| beta.iter().zip(reg.x_row(r)).map(|(b, x)| b * x).sum()).collect();
    let nf = n as f64;
    let tau1 = eta.iter().map(|e| if *e > 0.0 { 1.0 } else if *e < 0.0 { -1.0 } else { 0.0 }).sum::<f64>() / nf;
    let tau2 = eta.iter().map(|e| e.abs()).sum::<f64>() / nf;
    let xi: Vec<f64> = eta.iter().map(|e| e.abs() - tau2).collect();
    let sigma_xi_sq = xi.iter().map(|v| v * v).sum::<f64>() / nf;
    if !(sigma_xi_sq > 0.0) {
        return Err(AldarError::Degenerate("absolute residuals have zero sample variance".into()));
    }

    // V = [I 0 U_ρ; 0 I U_γ/σ²_ξ]
    let mut v = DMatrix::<f64>::zeros(2 * m, 2 * m + d);
    for k in 1..=m {
        v[(k - 1, k - 1)] = 1.0;
        v[(m + k - 1, m + k - 1)] = 1.0;
        let cnt = (n - k) as f64;
        let mut u_rho = vec![0.0; p];
        let mut u_gamma = vec![0.0; d];
        for r in k..n {
            let (y, x, s) = (reg.y_row(r), reg.x_row(r), scale[r]);
            for i in 0..p {
                u_rho[i] += eta[r - k] * y[i] / s;
                u_gamma[i] += tau1 * xi[r - k] * y[i] / s;
            }
            for (j, xj) in x.iter().enumerate() {
                u_gamma[p + j] += tau2 * xi[r - k] * xj / s;
            }
        }
        for i in 0..p {
            v[(k - 1, 2 * m + i)] = -u_rho[i] / cnt;
        }
        for j in 0..d {
            v[(m + k - 1, 2 * m + j)] = -u_gamma[j] / cnt / sigma_xi_sq;
        }
    }

    // G = avg v_t v_t′ with lag products outside the sample set to zero
    let scores = observation_scores(&theta, reg) * &fit.sigma_inv;
    let mut g = DMatrix::<f64>::zeros(2 * m + d, 2 * m + d);
    let mut vt = DVector::<f64>::zeros(2 * m + d);
    for r in 0..n {
        for k in 1..=m {
            let (a, b) = if r >= k { (eta[r] * eta[r - k], xi[r] * xi[r - k] / sigma_xi_sq) } else { (0.0, 0.0) };
            vt[k - 1] = a;
            vt[m + k - 1] = b;
        }
        for j in 0..d {
            vt[2 * m + j] = scores[(r, j)];
        }
        g.ger(1.0, &vt, &vt, 1.0);
    }
    g /= nf;
    let cov = symmetrize(&(&v * g * v.transpose()));
    Ok(Pieces { cov, tau1, tau2, sigma_xi_sq })
}

/// Asymptotic covariance `V̂ĜV̂′` of `√(n−p)·(ρ̂′, γ̂′)′`.
pub fn acf_covariance(fit: &FitResult, reg: &Regressors, m: usize) -> Result<DMatrix<f64>> {
    Ok(covariance_pieces(fit, reg, m)?.cov)
}

/// `Q(M) = (n−p)·(ρ̂′, γ̂′)(V̂ĜV̂′)⁻¹(ρ̂′, γ̂′)′`, referred to `χ²_{2M}`.
pub fn portmanteau(fit: &FitResult, reg: &Regressors, m: usize) -> Result<AcfReport> {
    let pieces = covariance_pieces(fit, reg, m)?;
    let (rho, gamma) = residual_acfs(&fit.residuals, m)?;
    let n = fit.n_eff() as f64;
    let stacked = DVector::from_iterator(2 * m, rho.iter().chain(&gamma).cloned());
    let inv = spd_inverse(&pieces.cov, "VGV'")?;
    let q = (n * stacked.dot(&(&inv * &stacked))).max(0.0);
    let cov = &pieces.cov / n;
    let band = |i: usize| BAND_Z * cov[(i, i)].max(0.0).sqrt();
    Ok(AcfReport {
        m,
        bands_rho: (0..m).map(band).collect(),
        bands_gamma: (m..2 * m).map(band).collect(),
        cov: (0..2 * m).map(|i| cov.row(i).iter().cloned().collect()).collect(),
        rho_hat: rho,
        gamma_hat: gamma,
        q_stat: q,
        p_value: chi2_sf((2 * m) as f64, q),
        df: 2 * m,
        tau1_hat: pieces.tau1,
        tau2_hat: pieces.tau2,
        sigma_xi_sq_hat: pieces.sigma_xi_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{fit_qmle, FitOptions};
    use crate::innovation::InnovationSpec;
    use crate::model::simulate;
    use crate::params::{ModelParams, ParamBounds};

    #[test]
    fn acf_hand_example() {
        let x = [1.0, 2.0, 3.0, 4.0];
        // centered (−1.5, −0.5, 0.5, 1.5), Σc² = 5
        let (rho, _) = residual_acfs(&[1.0, -2.0, 3.0, -4.0, 0.5], 1).unwrap();
        assert!(rho[0] < 0.0);
        let r = acf(&x, 2, "x").unwrap();
        assert!((r[0] - 1.25 / 5.0).abs() < 1e-12);
        assert!((r[1] - (-1.5 * 0.5 - 0.5 * 1.5) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_signs() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(matches!(residual_acfs(&x, 3), Err(AldarError::Degenerate(_))));
        let r = acf(&x, 1, "x").unwrap();
        assert!(r[0] < -0.98);
    }

    #[test]
    fn negation_symmetry() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 - 4.7).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(residual_acfs(&x, 4).unwrap(), residual_acfs(&neg, 4).unwrap());
    }

    #[test]
    fn report_shapes() {
        let truth = ModelParams::new(vec![0.3], 0.4, vec![0.3], vec![0.4]).unwrap();
        let s = simulate(&truth, &InnovationSpec::normal(), 1500, 500, 4).unwrap();
        let fit = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        let reg = Regressors::build(&s, 1).unwrap();
        let rep = portmanteau(&fit, &reg, 6).unwrap();
        assert_eq!(rep.df, 12);
        assert_eq!(rep.rho_hat.len(), 6);
        assert!(rep.q_stat >= 0.0 && (0.0..=1.0).contains(&rep.p_value));
        assert!(rep.rho_hat.iter().chain(&rep.gamma_hat).all(|v| v.abs() <= 1.0));
        let cov = acf_covariance(&fit, &reg, 6).unwrap();
        assert!((&cov - cov.transpose()).amax() < 1e-12);
        assert!(crate::linalg::sym_eigenvalues(&cov).iter().all(|e| *e > -1e-8));
        // far lags approach the white-noise band 1.96/√n; estimating α shrinks lag one
        let white = 1.96 / (1499f64).sqrt();
        assert!(rep.bands_rho[0] < rep.bands_rho[5]);
        for b in rep.bands_rho[3..].iter().chain(&rep.bands_gamma[3..]) {
            assert!((b / white - 1.0).abs() < 0.1, "{b}");
        }
    }
}
