//! Wald, Lagrange-multiplier and quasi-likelihood-ratio tests of `β_{i+} = β_{i−}` for all `i`.
//!
//! Under the null `W` and `LM` are asymptotically `χ²_p`; `QLR` converges to a weighted sum
//! `Σ e_j χ²₁` with weights the eigenvalues of `Ψ = Δ^{−1/2} RΞR′ Δ^{−1/2}`, `Δ = RΣ⁻¹R′`.
//! Its p-value uses Pearson's three-moment chi-square approximation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AldarError, Result};
use crate::estimation::{fit_qmle, fit_restricted, FitOptions, FitResult};
use crate::linalg::{spd_inverse, spd_quad_form, sym_eigenvalues, sym_inv_sqrt, symmetrize};
use crate::model::SeriesSample;
use crate::params::{ModelParams, ParamBounds};
use crate::stats::chi2_sf;

const INV_SQRT_FLOOR: f64 = 1e-12;
const QLR_SLACK: f64 = 1e-8;

/// `R = (0_{p×(p+1)}, I_p, −I_p)`, so that `Rθ = β₊ − β₋`.
pub fn restriction_matrix(p: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(p, 3 * p + 1);
    for i in 0..p {
        r[(i, p + 1 + i)] = 1.0;
        r[(i, 2 * p + 1 + i)] = -1.0;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QlrOutcome {
    pub statistic: f64,
    /// Eigenvalues of `Ψ̂`, largest first.
    pub eigenvalues: Vec<f64>,
    pub p_value: f64,
}

/// Which fit supplies `Σ̂`, `Ξ̂` inside `Ψ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiSource {
    #[default]
    Restricted,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymmetryTestReport {
    pub p: usize,
    pub n_eff: usize,
    pub wald: TestOutcome,
    pub lm: TestOutcome,
    pub qlr: QlrOutcome,
    pub psi_source: PsiSource,
    /// `Δ = RΣ̂⁻¹R′`, row-major.
    pub delta: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub theta_unrestricted: ModelParams,
    pub theta_restricted: ModelParams,
    pub loglik_unrestricted: f64,
    pub loglik_restricted: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

/// `W = (n−p)·θ̂′R′(RΞ̂R′)⁻¹Rθ̂`
pub fn wald_test(fit: &FitResult) -> Result<TestOutcome> {
    let p = fit.order();
    let r = restriction_matrix(p);
    let diff = &r * DVector::from_vec(fit.theta_hat.to_vec());
    let middle = &r * &fit.xi_hat * r.transpose();
    let w = fit.n_eff() as f64 * spd_quad_form(&middle, &diff, "R Xi R'")?;
    let w = w.max(0.0);
    Ok(TestOutcome { statistic: w, p_value: chi2_sf(p as f64, w) })
}

/// `LM = (n−p)⁻¹ s′Σ̃⁻¹R′(RΞ̃R′)⁻¹RΣ̃⁻¹s` with `s` the summed full score at the restricted estimate.
pub fn lm_test(fit_restricted: &FitResult) -> Result<TestOutcome> {
    let p = fit_restricted.order();
    let r = restriction_matrix(p);
    let v = &r * &fit_restricted.sigma_inv * &fit_restricted.score;
    let middle = &r * &fit_restricted.xi_hat * r.transpose();
    let lm = (spd_quad_form(&middle, &v, "R Xi R'")? / fit_restricted.n_eff() as f64).max(0.0);
    Ok(TestOutcome { statistic: lm, p_value: chi2_sf(p as f64, lm) })
}

/// `Δ` and `Ψ` from the given fit's `Σ̂⁻¹` and `Ξ̂`.
pub fn psi_matrix(fit: &FitResult) -> (DMatrix<f64>, DMatrix<f64>) {
    let r = restriction_matrix(fit.order());
    let delta = symmetrize(&(&r * &fit.sigma_inv * r.transpose()));
    let d = sym_inv_sqrt(&delta, INV_SQRT_FLOOR);
    let psi = symmetrize(&(&d * (&r * &fit.xi_hat * r.transpose()) * &d));
    (delta, psi)
}

/// `Q = −2(L̃ − L̂)` with the weighted-χ² null.
pub fn qlr_test(fit_restricted: &FitResult, fit_unrestricted: &FitResult, source: PsiSource) -> Result<QlrOutcome> {
    if fit_restricted.order() != fit_unrestricted.order() || fit_restricted.n_eff() != fit_unrestricted.n_eff() {
        return Err(AldarError::InvalidArgument("QLR fits must share data and order".into()));
    }
    let q = -2.0 * (fit_restricted.loglik - fit_unrestricted.loglik);
    let slack = QLR_SLACK * fit_unrestricted.n_eff() as f64;
    if q < -slack {
        return Err(AldarError::OptimizerInconsistency { excess: -q / 2.0 });
    }
    let q = q.max(0.0);
    let (_, psi) = psi_matrix(match source {
        PsiSource::Restricted => fit_restricted,
        PsiSource::Unrestricted => fit_unrestricted,
    });
    let eigenvalues: Vec<f64> = sym_eigenvalues(&psi).into_iter().map(|e| e.max(0.0)).collect();
    if eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(AldarError::Degenerate("non-finite eigenvalue of Psi".into()));
    }
    let p_value = pearson_pvalue(&eigenvalues, q)?;
    Ok(QlrOutcome { statistic: q, eigenvalues, p_value })
}

/// Pearson three-moment approximation to `P(Σ e_j χ²₁ > q)`.
pub fn pearson_pvalue(eigenvalues: &[f64], q_obs: f64) -> Result<f64> {
    if eigenvalues.is_empty() || eigenvalues.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(AldarError::InvalidArgument("eigenvalues must be finite and nonnegative".into()));
    }
    if q_obs.is_nan() || q_obs < 0.0 {
        return Err(AldarError::InvalidArgument(format!("statistic must be nonnegative, got {q_obs}")));
    }
    let c = |k: i32| eigenvalues.iter().map(|e| e.powi(k)).sum::<f64>();
    let (c1, c2, c3) = (c(1), c(2), c(3));
    if c1 == 0.0 {
        return Err(AldarError::Degenerate("all weights are zero".into()));
    }
    // c₂² ≤ c₁c₃ puts the transformed zero at or below zero
    if q_obs == 0.0 {
        return Ok(1.0);
    }
    let l = c2.powi(3) / c3.powi(2);
    let x = (q_obs - c1) * (2.0 * l).sqrt() / (2.0 * c2).sqrt() + l;
    Ok(chi2_sf(l, x.max(0.0)).clamp(0.0, 1.0))
}

/// `θ_n = θ₀ + h/√n`, checked against the bounds.
pub fn local_alternative_dgp(theta0: &ModelParams, h: &[f64], n: usize, bounds: &ParamBounds) -> Result<ModelParams> {
    if h.len() != theta0.dim() {
        return Err(AldarError::InvalidArgument(format!("h has length {}, expected {}", h.len(), theta0.dim())));
    }
    if n == 0 {
        return Err(AldarError::InvalidArgument("n must be positive".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let theta: Vec<f64> = theta0.to_vec().iter().zip(h).map(|(t, d)| t + d * scale).collect();
    let out = ModelParams::from_slice(theta0.order(), &theta)
        .map_err(|e| AldarError::OutOfBounds(format!("local alternative leaves the parameter space: {e}")))?;
    if !bounds.contains(&out) {
        return Err(AldarError::OutOfBounds(format!("local alternative {theta:?} outside bounds")));
    }
    Ok(out)
}

/// All three tests from a pair of fits.
pub fn tests_from_fits(restricted: &FitResult, unrestricted: &FitResult, source: PsiSource) -> Result<AsymmetryTestReport> {
    let wald = wald_test(unrestricted)?;
    let lm = lm_test(restricted)?;
    let qlr = qlr_test(restricted, unrestricted, source)?;
    let (delta, psi) = psi_matrix(match source {
        PsiSource::Restricted => restricted,
        PsiSource::Unrestricted => unrestricted,
    });
    Ok(AsymmetryTestReport {
        p: unrestricted.order(),
        n_eff: unrestricted.n_eff(),
        wald,
        lm,
        qlr,
        psi_source: source,
        delta: rows(&delta),
        psi: rows(&psi),
        theta_unrestricted: unrestricted.theta_hat.clone(),
        theta_restricted: restricted.theta_hat.clone(),
        loglik_unrestricted: unrestricted.loglik,
        loglik_restricted: restricted.loglik,
    })
}

/// Fits both models and runs all three tests.
pub fn asymmetry_tests(
    series: &SeriesSample,
    p: usize,
    bounds: &ParamBounds,
    options: &FitOptions,
    source: PsiSource,
) -> Result<AsymmetryTestReport> {
    let unrestricted = fit_qmle(series, p, bounds, options)?;
    let restricted = fit_restricted(series, p, bounds, options)?;
    tests_from_fits(&restricted, &unrestricted, source)
}

/// Inverse of `Δ` is exposed for power predictions in the experiment harness.
pub fn delta_inverse(fit: &FitResult) -> Result<DMatrix<f64>> {
    spd_inverse(&psi_matrix(fit).0, "Delta")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovation::InnovationSpec;
    use crate::model::simulate;

    #[test]
    fn restriction_picks_differences() {
        let r = restriction_matrix(2);
        let theta = ModelParams::new(vec![0.1, 0.2], 0.5, vec![0.3, 0.4], vec![0.7, 0.1]).unwrap();
        let d = &r * DVector::from_vec(theta.to_vec());
        assert!((d[0] + 0.4).abs() < 1e-15 && (d[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn pearson_identity_case() {
        for p in 1..=4 {
            let e = vec![1.0; p];
            for &q in &[0.3, 2.0, 3.8415, 9.0] {
                let a = pearson_pvalue(&e, q).unwrap();
                assert!((a - chi2_sf(p as f64, q)).abs() < 1e-12);
            }
        }
        assert!((pearson_pvalue(&[1.0], 3.841_458_820_694_124).unwrap() - 0.05).abs() < 1e-9);
        assert_eq!(pearson_pvalue(&[2.0, 1.0], 0.0).unwrap(), 1.0);
        assert!(pearson_pvalue(&[0.0, 0.0], 1.0).is_err());
        assert!(pearson_pvalue(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn pearson_monotone() {
        let e = [3.0, 1.0, 0.5];
        let mut prev = 1.0;
        for k in 0..200 {
            let v = pearson_pvalue(&e, k as f64 * 0.2).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn local_alternative() {
        let theta0 = ModelParams::new(vec![0.4], 0.4, vec![0.5], vec![0.5]).unwrap();
        let b = ParamBounds::default();
        assert_eq!(local_alternative_dgp(&theta0, &[0.0; 4], 2000, &b).unwrap(), theta0);
        let t = local_alternative_dgp(&theta0, &[0.0, 0.0, 0.0, 10.0], 2000, &b).unwrap();
        assert!((t.beta_minus[0] - 0.723_606_797_749_979).abs() < 1e-12);
        assert!(local_alternative_dgp(&theta0, &[0.0, 0.0, -100.0, 0.0], 4, &b).is_err());
    }

    #[test]
    fn statistics_on_symmetric_data() {
        let truth = ModelParams::new(vec![0.4], 0.4, vec![0.5], vec![0.5]).unwrap();
        let s = simulate(&truth, &InnovationSpec::normal(), 1000, 500, 77).unwrap();
        let rep = asymmetry_tests(&s, 1, &ParamBounds::default(), &FitOptions::default(), PsiSource::Restricted).unwrap();
        for t in [rep.wald, rep.lm] {
            assert!(t.statistic >= 0.0 && (0.0..=1.0).contains(&t.p_value));
        }
        assert!(rep.qlr.statistic >= 0.0);
        assert!(rep.qlr.eigenvalues.iter().all(|e| *e >= 0.0));
        // under normality Ψ ≈ I
        assert!((rep.qlr.eigenvalues[0] - 1.0).abs() < 0.3);
    }

    #[test]
    fn identical_fits_give_zero_qlr() {
        let truth = ModelParams::new(vec![0.4], 0.4, vec![0.5], vec![0.5]).unwrap();
        let s = simulate(&truth, &InnovationSpec::normal(), 600, 500, 9).unwrap();
        let f = fit_restricted(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        let q = qlr_test(&f, &f, PsiSource::Restricted).unwrap();
        assert_eq!(q.statistic, 0.0);
        assert_eq!(q.p_value, 1.0);
        let w = wald_test(&f).unwrap();
        assert_eq!(w.statistic, 0.0);
        assert_eq!(w.p_value, 1.0);
    }
}
