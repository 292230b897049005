use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::likelihood::{self, derivatives_slice, info_matrices, loglik_slice, Derivatives, MomentSource};
use super::optimizer::{projected_newton, NewtonOutcome, NewtonSettings, Objective};
use super::regressors::Regressors;
use crate::error::{AldarError, Result};
use crate::model::SeriesSample;
use crate::params::{ModelParams, ParamBounds};
use crate::rng::rng_from_seed;

/// Controls for the multi-start projected Newton fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Total number of starting points (the data-driven or warm start plus jittered copies).
    pub n_starts: usize,
    pub max_iter: usize,
    /// Convergence when the projected-gradient norm is at most `grad_tol_rel · (n − p)`.
    pub grad_tol_rel: f64,
    /// Seed for the jittered starts.
    pub seed: u64,
    /// Replaces the data-driven start, e.g. the previous estimate in a rolling fit.
    pub warm_start: Option<ModelParams>,
    pub moments: MomentSource,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 5,
            max_iter: 200,
            grad_tol_rel: 1e-7,
            seed: 0x00A1_DA55,
            warm_start: None,
            moments: MomentSource::ScoreOuterProduct,
        }
    }
}

/// Output of a quasi-maximum likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: ModelParams,
    /// `L_n(θ̂)`
    pub loglik: f64,
    pub sigma_hat: DMatrix<f64>,
    pub omega_hat: DMatrix<f64>,
    /// `Σ̂⁻¹Ω̂Σ̂⁻¹`
    pub xi_hat: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
    /// `sqrt(diag(Ξ̂)/(n − p))`
    pub asd: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Full `(3p+1)`-dimensional score at `θ̂`.
    pub score: DVector<f64>,
    pub pg_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub restricted: bool,
    pub n_obs: usize,
    pub start_index: usize,
    pub starts_converged: usize,
    /// Log-likelihood after each accepted step of the winning start.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn order(&self) -> usize {
        self.theta_hat.order()
    }

    /// Number of likelihood terms `n − p`.
    pub fn n_eff(&self) -> usize {
        self.residuals.len()
    }
}

struct Unrestricted<'a> {
    reg: &'a Regressors,
}

impl Objective for Unrestricted<'_> {
    fn dim(&self) -> usize {
        self.reg.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        loglik_slice(x, self.reg)
    }
    fn derivatives(&self, x: &[f64]) -> Derivatives {
        derivatives_slice(x, self.reg)
    }
}

/// Linear-DAR parameterization `φ = (α, ω, b)` with `β₊ = β₋ = b`.
struct Symmetric<'a> {
    reg: &'a Regressors,
    map: DMatrix<f64>,
}

impl<'a> Symmetric<'a> {
    fn new(reg: &'a Regressors) -> Self {
        let p = reg.order();
        let mut map = DMatrix::zeros(3 * p + 1, 2 * p + 1);
        for i in 0..=p {
            map[(i, i)] = 1.0;
        }
        for i in 0..p {
            map[(p + 1 + i, p + 1 + i)] = 1.0;
            map[(2 * p + 1 + i, p + 1 + i)] = 1.0;
        }
        Self { reg, map }
    }
}

fn expand_symmetric(p: usize, phi: &[f64]) -> Vec<f64> {
    let mut theta = phi.to_vec();
    theta.extend_from_slice(&phi[p + 1..]);
    theta
}

impl Objective for Symmetric<'_> {
    fn dim(&self) -> usize {
        2 * self.reg.order() + 1
    }
    fn value(&self, x: &[f64]) -> f64 {
        loglik_slice(&expand_symmetric(self.reg.order(), x), self.reg)
    }
    fn derivatives(&self, x: &[f64]) -> Derivatives {
        let full = derivatives_slice(&expand_symmetric(self.reg.order(), x), self.reg);
        let t = &self.map;
        Derivatives {
            value: full.value,
            grad: t.transpose() * full.grad,
            hess: t.transpose() * full.hess * t,
            info: t.transpose() * full.info * t,
        }
    }
}

/// Least squares with a tiny ridge so rank-deficient designs still give a start.
fn ridge_ls(rows: usize, cols: usize, design: impl Fn(usize, usize) -> f64, resp: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut xtx = DMatrix::<f64>::zeros(cols, cols);
    let mut xty = DVector::<f64>::zeros(cols);
    for r in 0..rows {
        for i in 0..cols {
            let xi = design(r, i);
            xty[i] += xi * resp(r);
            for j in 0..cols {
                xtx[(i, j)] += xi * design(r, j);
            }
        }
    }
    let ridge = 1e-8 * (xtx.trace() / cols as f64).max(1e-12);
    for i in 0..cols {
        xtx[(i, i)] += ridge;
    }
    match xtx.cholesky() {
        Some(ch) => ch.solve(&xty).iter().cloned().collect(),
        None => vec![0.0; cols],
    }
}

/// Least-squares AR(p) for α, then a regression of `|ε̂_t|` on `X_{t−1}` rescaled by
/// `1/E|N(0,1)|` for `(ω, β₊, β₋)`, all clipped into the box.
pub fn initial_estimate(reg: &Regressors, bounds: &ParamBounds) -> ModelParams {
    let p = reg.order();
    let rows = reg.n_rows();
    let mut alpha = ridge_ls(rows, p, |r, i| reg.y_row(r)[i], |r| reg.response(r));
    let a_max = 0.99 * bounds.alpha_abs_max;
    alpha.iter_mut().for_each(|a| *a = a.clamp(-a_max, a_max));
    let abs_resid: Vec<f64> = (0..rows)
        .map(|r| (reg.response(r) - alpha.iter().zip(reg.y_row(r)).map(|(a, y)| a * y).sum::<f64>()).abs())
        .collect();
    let tau = (2.0 / std::f64::consts::PI).sqrt();
    let c = ridge_ls(rows, 2 * p + 1, |r, i| reg.x_row(r)[i], |r| abs_resid[r]);
    let mean_abs = abs_resid.iter().sum::<f64>() / rows as f64;
    let omega = (c[0] / tau).max(0.1 * mean_abs / tau).clamp(bounds.omega_lo, bounds.omega_hi);
    let clip = |v: f64| (v / tau).clamp(bounds.beta_lo, bounds.beta_hi);
    ModelParams {
        alpha,
        omega,
        beta_plus: c[1..=p].iter().map(|&v| clip(v)).collect(),
        beta_minus: c[p + 1..].iter().map(|&v| clip(v)).collect(),
    }
}

fn jitter<R: Rng>(base: &ModelParams, bounds: &ParamBounds, rng: &mut R) -> ModelParams {
    let a_max = 0.99 * bounds.alpha_abs_max;
    let mut scale = |v: f64, floor: f64, lo: f64, hi: f64| {
        let u: f64 = rng.random_range(-1.0..1.0);
        (v.max(floor) * (0.5 * u).exp()).clamp(lo, hi)
    };
    let omega = scale(base.omega, bounds.omega_lo, bounds.omega_lo, bounds.omega_hi);
    let beta_plus = base.beta_plus.iter().map(|&b| scale(b, 0.02, bounds.beta_lo, bounds.beta_hi)).collect();
    let beta_minus = base.beta_minus.iter().map(|&b| scale(b, 0.02, bounds.beta_lo, bounds.beta_hi)).collect();
    let alpha = base
        .alpha
        .iter()
        .map(|&a| {
            let z: f64 = rng.sample(StandardNormal);
            (a + 0.1 * z).clamp(-a_max, a_max)
        })
        .collect();
    ModelParams { alpha, omega, beta_plus, beta_minus }
}

fn starting_points(reg: &Regressors, bounds: &ParamBounds, options: &FitOptions) -> Vec<ModelParams> {
    let base = match &options.warm_start {
        Some(w) if w.order() == reg.order() => w.clone(),
        _ => initial_estimate(reg, bounds),
    };
    let mut rng = rng_from_seed(options.seed);
    let mut starts = vec![base.clone()];
    for _ in 1..options.n_starts.max(1) {
        starts.push(jitter(&base, bounds, &mut rng));
    }
    starts
}

fn settings(reg: &Regressors, options: &FitOptions) -> NewtonSettings {
    NewtonSettings {
        max_iter: options.max_iter,
        grad_tol: options.grad_tol_rel * reg.n_rows() as f64,
        armijo: 1e-4,
        max_backtracks: 60,
        active_eps: 1e-4,
    }
}

/// Highest log-likelihood, then smallest projected gradient, then lowest start index.
fn pick_best(outcomes: &[NewtonOutcome]) -> Option<usize> {
    outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.converged)
        .min_by(|(ia, a), (ib, b)| {
            b.value.total_cmp(&a.value).then(a.pg_norm.total_cmp(&b.pg_norm)).then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
}

fn non_convergence(outcomes: &[NewtonOutcome]) -> AldarError {
    let detail: Vec<String> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| format!("start {i}: loglik {:.6}, |pg| {:.3e}, {} iterations", o.value, o.pg_norm, o.iterations))
        .collect();
    AldarError::NonConvergence(detail.join("; "))
}

fn check_series(series: &SeriesSample, p: usize, bounds: &ParamBounds) -> Result<Regressors> {
    bounds.validate()?;
    if p == 0 {
        return Err(AldarError::InvalidArgument("order p must be at least 1".into()));
    }
    // more likelihood terms than parameters
    let needed = 4 * p + 2;
    if series.len() < needed {
        return Err(AldarError::SeriesTooShort { needed, got: series.len() });
    }
    Regressors::build(series, p)
}

fn finish(
    reg: &Regressors,
    theta: Vec<f64>,
    best: &NewtonOutcome,
    start_index: usize,
    starts_converged: usize,
    restricted: bool,
    options: &FitOptions,
) -> Result<FitResult> {
    let p = reg.order();
    let m = info_matrices(&theta, reg, options.moments)?;
    let n_eff = reg.n_rows() as f64;
    let asd = (0..m.xi.nrows()).map(|i| (m.xi[(i, i)].max(0.0) / n_eff).sqrt()).collect();
    let derivs = derivatives_slice(&theta, reg);
    Ok(FitResult {
        theta_hat: ModelParams::from_slice_unchecked(p, &theta),
        loglik: derivs.value,
        sigma_hat: m.sigma,
        omega_hat: m.omega,
        xi_hat: m.xi,
        sigma_inv: m.sigma_inv,
        asd,
        residuals: likelihood::residuals(&theta, reg),
        score: derivs.grad,
        pg_norm: best.pg_norm,
        converged: best.converged,
        iterations: best.iterations,
        restricted,
        n_obs: reg.n_obs(),
        start_index,
        starts_converged,
        trace: best.trace.clone(),
    })
}

/// Quasi-maximum likelihood estimate over the parameter box.
pub fn fit_qmle(series: &SeriesSample, p: usize, bounds: &ParamBounds, options: &FitOptions) -> Result<FitResult> {
    let reg = check_series(series, p, bounds)?;
    fit_qmle_regressors(&reg, bounds, options)
}

pub fn fit_qmle_regressors(reg: &Regressors, bounds: &ParamBounds, options: &FitOptions) -> Result<FitResult> {
    let (lo, hi) = bounds.box_for_order(reg.order());
    let obj = Unrestricted { reg };
    let s = settings(reg, options);
    let outcomes: Vec<NewtonOutcome> = starting_points(reg, bounds, options)
        .iter()
        .map(|start| projected_newton(&obj, &start.to_vec(), &lo, &hi, &s))
        .collect();
    let best = pick_best(&outcomes).ok_or_else(|| non_convergence(&outcomes))?;
    let converged = outcomes.iter().filter(|o| o.converged).count();
    finish(reg, outcomes[best].x.clone(), &outcomes[best], best, converged, false, options)
}

/// Quasi-maximum likelihood estimate under `β_{i+} = β_{i−}` for all `i`.
pub fn fit_restricted(series: &SeriesSample, p: usize, bounds: &ParamBounds, options: &FitOptions) -> Result<FitResult> {
    let reg = check_series(series, p, bounds)?;
    fit_restricted_regressors(&reg, bounds, options)
}

pub fn fit_restricted_regressors(reg: &Regressors, bounds: &ParamBounds, options: &FitOptions) -> Result<FitResult> {
    let p = reg.order();
    let (lo_full, hi_full) = bounds.box_for_order(p);
    let (lo, hi) = (lo_full[..=2 * p].to_vec(), hi_full[..=2 * p].to_vec());
    let obj = Symmetric::new(reg);
    let s = settings(reg, options);
    let outcomes: Vec<NewtonOutcome> = starting_points(reg, bounds, options)
        .iter()
        .map(|start| {
            let mut phi = start.alpha.clone();
            phi.push(start.omega);
            phi.extend(start.beta_plus.iter().zip(&start.beta_minus).map(|(a, b)| 0.5 * (a + b)));
            projected_newton(&obj, &phi, &lo, &hi, &s)
        })
        .collect();
    let best = pick_best(&outcomes).ok_or_else(|| non_convergence(&outcomes))?;
    let converged = outcomes.iter().filter(|o| o.converged).count();
    let theta = expand_symmetric(p, &outcomes[best].x);
    finish(reg, theta, &outcomes[best], best, converged, true, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovation::InnovationSpec;
    use crate::model::simulate;

    fn table1() -> ModelParams {
        ModelParams::new(vec![0.5], 0.4, vec![0.4], vec![0.6]).unwrap()
    }

    #[test]
    fn recovers_truth_on_long_sample() {
        let s = simulate(&table1(), &InnovationSpec::normal(), 5000, 500, 21).unwrap();
        let fit = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let truth = table1().to_vec();
        for (i, (est, t)) in fit.theta_hat.to_vec().iter().zip(truth).enumerate() {
            assert!((est - t).abs() < 4.0 * fit.asd[i], "component {i}: {est} vs {t} (asd {})", fit.asd[i]);
        }
        assert_eq!(fit.residuals.len(), 4999);
        assert!(fit.pg_norm <= 1e-7 * 4999.0);
        // every start is non-decreasing along its accepted steps
        assert!(fit.trace.first().unwrap() <= fit.trace.last().unwrap());
    }

    #[test]
    fn restricted_fit_is_symmetric_and_nested() {
        let s = simulate(&table1(), &InnovationSpec::normal(), 1000, 500, 5).unwrap();
        let full = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        let restr = fit_restricted(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert!(restr.restricted && !full.restricted);
        assert_eq!(restr.theta_hat.beta_plus, restr.theta_hat.beta_minus);
        assert!(restr.loglik <= full.loglik + 1e-9);
    }

    #[test]
    fn deterministic() {
        let s = simulate(&table1(), &InnovationSpec::normal(), 500, 500, 8).unwrap();
        let a = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        let b = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    }

    #[test]
    fn unidentified_negative_part_is_singular() {
        // an all-positive series leaves β₋ unidentified
        let y: Vec<f64> = (0..200).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 5.0).collect();
        let s = SeriesSample::new(y, "pos").unwrap();
        let err = fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()).unwrap_err();
        assert!(
            matches!(err, AldarError::SingularInformation { .. } | AldarError::NonConvergence(_)),
            "{err:?}"
        );
    }

    #[test]
    fn short_series_rejected() {
        let s = SeriesSample::new(vec![0.1, -0.2, 0.3, 0.1, 0.2], "short").unwrap();
        assert!(matches!(
            fit_qmle(&s, 1, &ParamBounds::default(), &FitOptions::default()),
            Err(AldarError::SeriesTooShort { .. })
        ));
    }
}
