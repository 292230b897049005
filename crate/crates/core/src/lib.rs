//! Asymmetric linear double autoregression (ALDAR).
//!
//! The process is
//!
//! ```text
//! y_t = Σ α_i y_{t-i} + η_t (ω + Σ (β_{i+} y⁺_{t-i} − β_{i-} y⁻_{t-i}))
//! ```
//!
//! with `y⁺ = max(0, y)`, `y⁻ = min(0, y)` and i.i.d. standardized innovations `η_t`.
//! The crate covers simulation, stationarity margins, Gaussian quasi-maximum
//! likelihood estimation, BIC order selection, Wald/LM/QLR asymmetry tests, the mixed
//! portmanteau test and rolling Value-at-Risk backtests. The [`experiments`] module holds
//! the Monte Carlo designs used to regenerate the simulation tables.

pub mod asymtest;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod forecast;
pub mod innovation;
pub mod linalg;
pub mod model;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod selection;
pub mod stationarity;
pub mod stats;

pub use asymtest::{AsymmetryTestReport, TestOutcome};
pub use diagnostics::AcfReport;
pub use error::{AldarError, Result};
pub use estimation::{fit_qmle, fit_restricted, FitOptions, FitResult, Regressors};
pub use forecast::{BacktestReport, VarForecastSeries};
pub use innovation::{InnovationKind, InnovationSpec};
pub use model::{simulate, SeriesSample};
pub use params::{ModelParams, ParamBounds};
pub use selection::SelectionReport;
