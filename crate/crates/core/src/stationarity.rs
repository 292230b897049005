//! Sufficient conditions for strict stationarity and their boundary curves.
//!
//! A margin below one certifies a strictly stationary, geometrically ergodic solution
//! with a finite `κ`-th moment.

use rayon::prelude::*;

use crate::error::{AldarError, Result};
use crate::innovation::InnovationSpec;
use crate::params::ModelParams;

const MARGIN_TOL: f64 = 1e-8;
const BOUNDARY_TOL: f64 = 1e-4;
const SCAN_POINTS: usize = 200;

/// E|a + bη|^κ
fn abs_linear_moment(innov: &InnovationSpec, a: f64, b: f64, kappa: f64) -> Result<f64> {
    if b == 0.0 {
        return Ok(a.abs().powf(kappa));
    }
    innov.expect_tol(|x| (a + b * x).abs().powf(kappa), &[-a / b], MARGIN_TOL)
}

/// `Σ_i max{E|α_i − β_{i−}η|^κ, E|α_i + β_{i+}η|^κ}` for `0 < κ ≤ 1`.
pub fn margin_case1(params: &ModelParams, innov: &InnovationSpec, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(AldarError::InvalidArgument(format!("case-1 margin needs 0 < kappa <= 1, got {kappa}")));
    }
    let mut total = 0.0;
    for i in 0..params.order() {
        let a = params.alpha[i];
        let minus = abs_linear_moment(innov, a, -params.beta_minus[i], kappa)?;
        let plus = abs_linear_moment(innov, a, params.beta_plus[i], kappa)?;
        total += minus.max(plus);
    }
    Ok(total)
}

/// `E[(Σ_i max{|α_i + β_{i+}η|, |α_i − β_{i−}η|})^κ]` for integer `κ ≥ 2`.
pub fn margin_case2(params: &ModelParams, innov: &InnovationSpec, kappa: u32) -> Result<f64> {
    if kappa < 2 {
        return Err(AldarError::InvalidArgument(format!("case-2 margin needs integer kappa >= 2, got {kappa}")));
    }
    let p = params.order();
    let mut kinks = vec![0.0];
    for i in 0..p {
        let (a, bp, bm) = (params.alpha[i], params.beta_plus[i], params.beta_minus[i]);
        if bp > 0.0 {
            kinks.push(-a / bp);
        }
        if bm > 0.0 {
            kinks.push(a / bm);
        }
        if bm != bp {
            kinks.push(2.0 * a / (bm - bp));
        }
    }
    let integrand = |x: f64| {
        let s: f64 = (0..p)
            .map(|i| {
                let a = params.alpha[i];
                (a + params.beta_plus[i] * x).abs().max((a - params.beta_minus[i] * x).abs())
            })
            .sum();
        s.powi(kappa as i32)
    };
    innov.expect_tol(integrand, &kinks, MARGIN_TOL)
}

/// Dispatches on `κ`: `(0, 1]` uses the first condition, integers `≥ 2` the second.
pub fn margin(params: &ModelParams, innov: &InnovationSpec, kappa: f64) -> Result<f64> {
    if kappa > 0.0 && kappa <= 1.0 {
        margin_case1(params, innov, kappa)
    } else if kappa >= 2.0 && kappa.fract() == 0.0 && kappa < 64.0 {
        margin_case2(params, innov, kappa as u32)
    } else {
        Err(AldarError::InvalidArgument(format!("kappa must lie in (0, 1] or be an integer >= 2, got {kappa}")))
    }
}

fn order_one(alpha: f64, beta_minus: f64, d: f64) -> ModelParams {
    ModelParams { alpha: vec![alpha], omega: 1.0, beta_plus: vec![d * beta_minus], beta_minus: vec![beta_minus] }
}

/// Largest `β₁₋` (with `β₁₊ = d·β₁₋`) whose margin stays below one, for a single `α₁`.
/// Returns 0 when no positive value qualifies.
pub fn boundary_at(innov: &InnovationSpec, kappa: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(AldarError::InvalidArgument(format!("asymmetry ratio must be positive, got {d}")));
    }
    let m = |b: f64| margin(&order_one(alpha, b, d), innov, kappa);
    let mut b_max = 4.0_f64.max(4.0 * alpha.abs());
    while m(b_max)? < 1.0 {
        b_max *= 2.0;
        if b_max > 1e6 {
            return Err(AldarError::Integration("stationarity boundary did not bracket".into()));
        }
    }
    let step = b_max / SCAN_POINTS as f64;
    let mut last_inside = None;
    for k in (1..SCAN_POINTS).rev() {
        if m(step * k as f64)? < 1.0 {
            last_inside = Some(k);
            break;
        }
    }
    let Some(k) = last_inside else {
        return Ok(0.0);
    };
    let (mut lo, mut hi) = (step * k as f64, step * (k + 1) as f64);
    while hi - lo > BOUNDARY_TOL {
        let mid = 0.5 * (lo + hi);
        if m(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Boundary curve over a grid of `α₁` values, for `p = 1`.
pub fn stationarity_boundary(innov: &InnovationSpec, kappa: f64, d: f64, alpha_grid: &[f64]) -> Result<Vec<f64>> {
    alpha_grid.par_iter().map(|&a| boundary_at(innov, kappa, d, a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p1(a: f64, bp: f64, bm: f64) -> ModelParams {
        ModelParams::new(vec![a], 1.0, vec![bp], vec![bm]).unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_margin() {
        let n = InnovationSpec::normal();
        assert_eq!(margin_case1(&p1(0.0, 0.0, 0.0), &n, 0.5).unwrap(), 0.0);
        assert!(margin_case2(&p1(0.0, 0.0, 0.0), &n, 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_forms_under_normality() {
        let n = InnovationSpec::normal();
        let b = 0.9;
        let m1 = margin_case1(&p1(0.0, b, b), &n, 1.0).unwrap();
        assert!((m1 - b * (2.0 / PI).sqrt()).abs() < 1e-8);
        let m2 = margin_case2(&p1(0.0, b, b), &n, 2).unwrap();
        assert!((m2 - b * b).abs() < 1e-8);
        let m = margin_case2(&p1(0.4, 0.4, 0.4), &n, 2).unwrap();
        assert!((m - (0.32 + 0.32 * (2.0 / PI).sqrt())).abs() < 1e-8);
        assert!((m - 0.5753).abs() < 1e-4);
    }

    #[test]
    fn region_extends_past_unit_alpha() {
        let n = InnovationSpec::normal();
        let m = margin_case1(&p1(1.0, 0.3, 0.3), &n, 0.1).unwrap();
        assert!(m < 1.0, "margin {m}");
    }

    #[test]
    fn kappa_validation() {
        let n = InnovationSpec::normal();
        let p = p1(0.1, 0.1, 0.1);
        assert!(margin_case1(&p, &n, 0.0).is_err());
        assert!(margin_case1(&p, &n, 1.5).is_err());
        assert!(margin_case2(&p, &n, 1).is_err());
        assert!(margin(&p, &n, 2.5).is_err());
        assert!(boundary_at(&n, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_simplification() {
        // for symmetric η and β₊ = β₋ the two expectations coincide
        let t5 = InnovationSpec::new(crate::InnovationKind::StudentT { df: 5.0 }).unwrap();
        let p = ModelParams::symmetric(vec![0.3, -0.2], 1.0, vec![0.2, 0.4]).unwrap();
        let m = margin_case1(&p, &t5, 0.6).unwrap();
        let direct: f64 = (0..2)
            .map(|i| t5.expect(|x| (p.alpha[i] + p.beta_plus[i] * x).abs().powf(0.6), &[-p.alpha[i] / p.beta_plus[i]]).unwrap())
            .sum();
        assert!((m - direct).abs() < 1e-7);
    }

    #[test]
    fn boundary_at_zero_alpha() {
        let n = InnovationSpec::normal();
        let b1 = boundary_at(&n, 1.0, 1.0, 0.0).unwrap();
        assert!((b1 - (PI / 2.0).sqrt()).abs() < 1e-3, "{b1}");
        let b2 = boundary_at(&n, 2.0, 1.0, 0.0).unwrap();
        assert!((b2 - 1.0).abs() < 1e-3, "{b2}");
    }
}
