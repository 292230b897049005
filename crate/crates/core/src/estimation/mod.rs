//! Gaussian quasi-maximum likelihood estimation.

mod fit;
mod likelihood;
mod optimizer;
mod regressors;

pub use fit::{
    fit_qmle, fit_qmle_regressors, fit_restricted, fit_restricted_regressors, initial_estimate, FitOptions, FitResult,
};
pub use likelihood::{
    derivatives, hessian, info_matrices, loglik, observation_scores, residual_moments, residuals, score, sigma_hat,
    Derivatives, InfoMatrices, MomentSource,
};
pub use regressors::Regressors;
