//! Projected Newton method for box-constrained maximization.
//!
//! At each iterate the variables that sit within `ε` of a bound with the gradient
//! pointing outward form the active set; they take a diagonally scaled gradient step
//! while the free block takes a Newton step. When the free block of the negative
//! Hessian is not positive definite the supplied curvature surrogate is used instead.
//! Steps are projected onto the box and accepted under the projected Armijo rule.

use nalgebra::{DMatrix, DVector};

use super::likelihood::Derivatives;

pub(crate) trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn derivatives(&self, x: &[f64]) -> Derivatives;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonSettings {
    pub max_iter: usize,
    /// Absolute tolerance on the projected-gradient norm.
    pub grad_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub active_eps: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub pg_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after every accepted step, starting point first.
    pub trace: Vec<f64>,
}

fn clamp(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect()
}

fn projected_gradient_norm(x: &[f64], g: &DVector<f64>, lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let moved = (xi + g[i]).clamp(lo[i], hi[i]);
            (moved - xi).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Newton direction on the free block; `None` when neither curvature is usable.
fn free_direction(d: &Derivatives, free: &[usize]) -> Option<DVector<f64>> {
    if free.is_empty() {
        return Some(DVector::zeros(0));
    }
    let g = DVector::from_iterator(free.len(), free.iter().map(|&i| d.grad[i]));
    let neg_h = -submatrix(&d.hess, free);
    if let Some(ch) = neg_h.cholesky() {
        let dir = ch.solve(&g);
        if dir.iter().all(|v| v.is_finite()) && dir.dot(&g) > 0.0 {
            return Some(dir);
        }
    }
    let info = submatrix(&d.info, free);
    let ch = info.cholesky()?;
    let dir = ch.solve(&g);
    dir.iter().all(|v| v.is_finite()).then_some(dir)
}

pub(crate) fn projected_newton<O: Objective>(
    obj: &O,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    settings: &NewtonSettings,
) -> NewtonOutcome {
    let n = obj.dim();
    let mut x = clamp(x0, lo, hi);
    let mut derivs = obj.derivatives(&x);
    let mut trace = vec![derivs.value];
    let mut pg = projected_gradient_norm(&x, &derivs.grad, lo, hi);
    let mut iterations = 0;

    while iterations < settings.max_iter && derivs.value.is_finite() {
        if pg <= settings.grad_tol {
            break;
        }
        iterations += 1;
        let eps = settings.active_eps.min(pg);
        let g = &derivs.grad;
        let active: Vec<bool> = (0..n)
            .map(|i| (x[i] - lo[i] <= eps && g[i] < 0.0) || (hi[i] - x[i] <= eps && g[i] > 0.0))
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let Some(dir_free) = free_direction(&derivs, &free) else {
            break;
        };
        let mut dir = vec![0.0; n];
        for (k, &i) in free.iter().enumerate() {
            dir[i] = dir_free[k];
        }
        for i in (0..n).filter(|&i| active[i]) {
            let curv = (-derivs.hess[(i, i)]).max(derivs.info[(i, i)]).max(1e-12);
            dir[i] = g[i] / curv;
        }

        let f0 = derivs.value;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let trial: Vec<f64> = clamp(&x.iter().zip(&dir).map(|(a, b)| a + step * b).collect::<Vec<_>>(), lo, hi);
            let predicted: f64 = (0..n)
                .map(|i| if active[i] { g[i] * (trial[i] - x[i]) } else { step * g[i] * dir[i] })
                .sum();
            let f1 = obj.value(&trial);
            if f1.is_finite() && f1 - f0 >= settings.armijo * predicted {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let trial = match accepted {
            Some(t) => t,
            None => {
                // Round-off can defeat the sufficient-increase test right at the optimum;
                // keep the full step only if it still shrinks the projected gradient.
                let full = clamp(&x.iter().zip(&dir).map(|(a, b)| a + b).collect::<Vec<_>>(), lo, hi);
                let d_full = obj.derivatives(&full);
                let pg_full = projected_gradient_norm(&full, &d_full.grad, lo, hi);
                if d_full.value.is_finite() && pg_full < pg && (d_full.value - f0) >= -1e-10 * f0.abs().max(1.0) {
                    x = full;
                    derivs = d_full;
                    pg = pg_full;
                    trace.push(derivs.value);
                    continue;
                }
                break;
            }
        };
        x = trial;
        derivs = obj.derivatives(&x);
        pg = projected_gradient_norm(&x, &derivs.grad, lo, hi);
        trace.push(derivs.value);
    }

    NewtonOutcome {
        converged: derivs.value.is_finite() && pg <= settings.grad_tol,
        value: derivs.value,
        x,
        pg_norm: pg,
        iterations,
        trace,
    }
}
