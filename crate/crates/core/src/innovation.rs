//! Innovation laws for `η_t`, all standardized to mean zero and unit variance.
//!
//! The skewed Student-t is the Fernández–Steel two-piece construction applied to a
//! raw `t_ν` variable `T`:
//!
//! ```text
//! f_X(x) = 2/(γ + 1/γ) · [f_T(x/γ)·1{x ≥ 0} + f_T(γx)·1{x < 0}],   γ = exp(λ/4)
//! η = (X − E X) / sd(X)
//! ```
//!
//! A negative skew parameter `λ` gives `γ < 1` and a long left tail. The factor `1/4`
//! puts the skewness of `st_{5,-1.2}` at about −1.2.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{AldarError, Result};
use crate::quadrature::integrate_real_line;

/// Scale applied to the skew parameter before exponentiation.
pub const SKEW_LOG_SCALE: f64 = 0.25;

const MOMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationKind {
    Normal,
    StudentT { df: f64 },
    SkewedT { df: f64, skew: f64 },
}

impl fmt::Display for InnovationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnovationKind::Normal => write!(f, "normal"),
            InnovationKind::StudentT { df } => write!(f, "t:{df}"),
            InnovationKind::SkewedT { df, skew } => write!(f, "skewt:{df}:{skew}"),
        }
    }
}

impl FromStr for InnovationKind {
    type Err = AldarError;

    /// Accepts `normal`, `t:<df>` and `skewt:<df>:<skew>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| AldarError::InvalidArgument(format!("bad number '{v}' in innovation '{s}'")))
        };
        match parts.as_slice() {
            ["normal"] | ["gaussian"] => Ok(InnovationKind::Normal),
            ["t", df] => Ok(InnovationKind::StudentT { df: num(df)? }),
            ["skewt", df, skew] | ["st", df, skew] => Ok(InnovationKind::SkewedT { df: num(df)?, skew: num(skew)? }),
            _ => Err(AldarError::InvalidArgument(format!(
                "unknown innovation '{s}' (expected normal, t:<df> or skewt:<df>:<skew>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Normal,
    /// η = scale · T
    StudentT { df: f64, scale: f64, log_norm: f64 },
    /// η = (X − loc) / scale with X two-piece skewed
    SkewedT { df: f64, gamma: f64, loc: f64, scale: f64, log_norm: f64 },
}

/// A standardized innovation law with its cached moment functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationSpec {
    pub kind: InnovationKind,
    /// E(η³)
    pub kappa1: f64,
    /// E(η⁴) − 1
    pub kappa2: f64,
    /// E[sgn(η)]
    pub tau1: f64,
    /// E|η|
    pub tau2: f64,
    /// 1 − τ₂²
    pub sigma_xi_sq: f64,
    shape: Shape,
}

fn t_log_norm(df: f64) -> f64 {
    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln()
}

#[inline]
fn t_pdf(u: f64, df: f64, log_norm: f64) -> f64 {
    (log_norm - 0.5 * (df + 1.0) * (u * u / df).ln_1p()).exp()
}

/// E|T|^r for a raw Student-t with `df > r`.
fn t_abs_moment(df: f64, r: f64) -> f64 {
    (0.5 * r * df.ln() + ln_gamma(0.5 * (r + 1.0)) + ln_gamma(0.5 * (df - r))
        - 0.5 * PI.ln()
        - ln_gamma(0.5 * df))
        .exp()
}

impl InnovationSpec {
    pub fn new(kind: InnovationKind) -> Result<Self> {
        match kind {
            InnovationKind::Normal => Ok(Self {
                kind,
                kappa1: 0.0,
                kappa2: 2.0,
                tau1: 0.0,
                tau2: (2.0 / PI).sqrt(),
                sigma_xi_sq: 1.0 - 2.0 / PI,
                shape: Shape::Normal,
            }),
            InnovationKind::StudentT { df } => {
                check_df(df)?;
                let scale = ((df - 2.0) / df).sqrt();
                let tau2 = scale * t_abs_moment(df, 1.0);
                Ok(Self {
                    kind,
                    kappa1: 0.0,
                    kappa2: 3.0 * (df - 2.0) / (df - 4.0) - 1.0,
                    tau1: 0.0,
                    tau2,
                    sigma_xi_sq: 1.0 - tau2 * tau2,
                    shape: Shape::StudentT { df, scale, log_norm: t_log_norm(df) },
                })
            }
            InnovationKind::SkewedT { df, skew } => {
                check_df(df)?;
                if !skew.is_finite() {
                    return Err(AldarError::InvalidArgument("skew must be finite".into()));
                }
                let gamma = (SKEW_LOG_SCALE * skew).exp();
                let raw = |r: i32| {
                    let m = t_abs_moment(df, r as f64);
                    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                    m * (gamma.powi(r + 1) + sign * gamma.powi(-(r + 1))) / (gamma + 1.0 / gamma)
                };
                let (m1, m2, m3, m4) = (raw(1), raw(2), raw(3), raw(4));
                let var = m2 - m1 * m1;
                let scale = var.sqrt();
                let mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
                let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
                let mut spec = Self {
                    kind,
                    kappa1: mu3 / scale.powi(3),
                    kappa2: mu4 / (var * var) - 1.0,
                    tau1: 0.0,
                    tau2: 0.0,
                    sigma_xi_sq: 0.0,
                    shape: Shape::SkewedT { df, gamma, loc: m1, scale, log_norm: t_log_norm(df) },
                };
                // the sign and absolute moments have no convenient closed form
                let mass = spec.expect(|_| 1.0, &[])?;
                let mean = spec.expect(|x| x, &[])?;
                let second = spec.expect(|x| x * x, &[])?;
                if (mass - 1.0).abs() > 1e-7 || mean.abs() > 1e-7 || (second - 1.0).abs() > 1e-6 {
                    return Err(AldarError::Integration(format!(
                        "skewed-t standardization check failed: mass {mass}, mean {mean}, variance {second}"
                    )));
                }
                spec.tau1 = spec.expect(|x| x.signum(), &[0.0])?;
                spec.tau2 = spec.abs_moment(1.0)?;
                spec.sigma_xi_sq = 1.0 - spec.tau2 * spec.tau2;
                Ok(spec)
            }
        }
    }

    pub fn normal() -> Self {
        Self::new(InnovationKind::Normal).expect("normal law is always valid")
    }

    /// Density of the standardized innovation.
    pub fn pdf(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Normal => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Shape::StudentT { df, scale, log_norm } => t_pdf(x / scale, df, log_norm) / scale,
            Shape::SkewedT { df, gamma, loc, scale, log_norm } => {
                let u = loc + scale * x;
                let core = if u >= 0.0 { t_pdf(u / gamma, df, log_norm) } else { t_pdf(gamma * u, df, log_norm) };
                scale * 2.0 / (gamma + 1.0 / gamma) * core
            }
        }
    }

    /// Points where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self.shape {
            Shape::SkewedT { loc, scale, .. } => vec![-loc / scale],
            _ => Vec::new(),
        }
    }

    /// E[f(η)] by adaptive quadrature; `breakpoints` should list kinks of `f`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, breakpoints: &[f64]) -> Result<f64> {
        self.expect_tol(f, breakpoints, MOMENT_TOL)
    }

    pub fn expect_tol<F: Fn(f64) -> f64>(&self, f: F, breakpoints: &[f64], abs_tol: f64) -> Result<f64> {
        // anchors keep far-off breakpoints from hiding the bulk inside a tail piece
        let mut pts = vec![-8.0, -3.0, 0.0, 3.0, 8.0];
        pts.extend(self.kinks());
        pts.extend_from_slice(breakpoints);
        integrate_real_line(|x| f(x) * self.pdf(x), &pts, abs_tol)
    }

    /// E|η|^κ
    pub fn abs_moment(&self, kappa: f64) -> Result<f64> {
        self.expect(|x| x.abs().powf(kappa), &[0.0])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.shape {
            Shape::Normal => rng.sample(StandardNormal),
            Shape::StudentT { df, scale, .. } => {
                let t = StudentT::new(df).expect("df validated at construction");
                scale * t.sample(rng)
            }
            Shape::SkewedT { df, gamma, loc, scale, .. } => {
                let t = StudentT::new(df).expect("df validated at construction");
                let magnitude = t.sample(rng).abs();
                let positive = rng.random::<f64>() < gamma * gamma / (1.0 + gamma * gamma);
                let x = if positive { gamma * magnitude } else { -magnitude / gamma };
                (x - loc) / scale
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self.shape, Shape::SkewedT { gamma, .. } if gamma != 1.0)
    }
}

fn check_df(df: f64) -> Result<()> {
    if df.is_finite() && df > 4.0 {
        Ok(())
    } else {
        Err(AldarError::FourthMomentViolation { df })
    }
}
