pub mod analyze;
pub mod experiment;
pub mod simulate;

use std::path::PathBuf;

use aldar_core::rng::derive_seed;
use aldar_core::{FitOptions, InnovationKind, ModelParams, ParamBounds};
use serde::Serialize;

use crate::config::Config;
use crate::data::InputSeries;
use crate::error::{CliError, CliResult};
use crate::report::{check_writable, write_atomic, Envelope};

pub const BOUNDS_KEYS: &[&str] = &["omega_lo", "omega_hi", "beta_lo", "beta_hi", "alpha_abs_max"];
pub const FIT_KEYS: &[&str] = &["n_starts", "max_iter", "seed"];
pub const PARAM_KEYS: &[&str] = &["alpha", "omega", "beta_plus", "beta_minus"];

/// A subcommand's resolved configuration plus output switches.
pub struct Invocation {
    pub cfg: Config,
    pub json: bool,
}

impl Invocation {
    pub fn out(&self) -> Option<PathBuf> {
        self.cfg.path("out")
    }

    /// Validates the output location before any computation.
    pub fn check_out(&self) -> CliResult<()> {
        match self.out() {
            Some(p) => check_writable(&p),
            None => Ok(()),
        }
    }

    /// Writes the JSON report to `out` when set, and prints either the JSON or the table.
    pub fn emit<T: Serialize>(&self, command: &str, seed: Option<u64>, input: Option<&InputSeries>, result: T, table: &str) -> CliResult<()> {
        let json = Envelope::new(command, seed, self.cfg.entries(), input, result).to_json()?;
        if let Some(path) = self.out() {
            write_atomic(&path, &json)?;
        }
        if self.json {
            print!("{json}");
        } else {
            print!("{table}");
        }
        Ok(())
    }
}

pub fn bounds(cfg: &mut Config) -> CliResult<ParamBounds> {
    let d = ParamBounds::default();
    cfg.set_default("omega_lo", d.omega_lo);
    cfg.set_default("omega_hi", d.omega_hi);
    cfg.set_default("beta_lo", d.beta_lo);
    cfg.set_default("beta_hi", d.beta_hi);
    cfg.set_default("alpha_abs_max", d.alpha_abs_max);
    Ok(ParamBounds::new(
        cfg.require("omega_lo")?,
        cfg.require("omega_hi")?,
        cfg.require("beta_lo")?,
        cfg.require("beta_hi")?,
        cfg.require("alpha_abs_max")?,
    )?)
}

pub fn fit_options(cfg: &mut Config) -> CliResult<FitOptions> {
    let d = FitOptions::default();
    cfg.set_default("n_starts", d.n_starts);
    cfg.set_default("max_iter", d.max_iter);
    cfg.set_default("seed", d.seed);
    let n_starts: usize = cfg.require("n_starts")?;
    if n_starts == 0 {
        return Err(CliError::Usage("n_starts must be at least 1".into()));
    }
    Ok(FitOptions { n_starts, max_iter: cfg.require("max_iter")?, seed: cfg.require("seed")?, ..d })
}

/// The configured seed, or a fresh one recorded back into the configuration.
pub fn resolve_seed(cfg: &mut Config) -> CliResult<u64> {
    if let Some(s) = cfg.get::<u64>("seed")? {
        return Ok(s);
    }
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
    let seed = derive_seed(nanos, u64::from(std::process::id()));
    cfg.set("seed", seed.to_string());
    Ok(seed)
}

/// Model parameters from `alpha`, `omega`, `beta_plus`, `beta_minus`, falling back to `default`.
pub fn params(cfg: &mut Config, default: Option<&ModelParams>) -> CliResult<ModelParams> {
    if let Some(d) = default {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        cfg.set_default("alpha", join(&d.alpha));
        cfg.set_default("omega", d.omega);
        cfg.set_default("beta_plus", join(&d.beta_plus));
        cfg.set_default("beta_minus", join(&d.beta_minus));
    }
    let missing = |k: &str| CliError::Usage(format!("missing required key `{k}`"));
    let alpha: Vec<f64> = cfg.list("alpha")?.ok_or_else(|| missing("alpha"))?;
    let omega: f64 = cfg.require("omega")?;
    let beta_plus: Vec<f64> = cfg.list("beta_plus")?.ok_or_else(|| missing("beta_plus"))?;
    let beta_minus: Vec<f64> = cfg.list("beta_minus")?.ok_or_else(|| missing("beta_minus"))?;
    Ok(ModelParams::new(alpha, omega, beta_plus, beta_minus)?)
}

pub fn innovations(cfg: &mut Config, key: &str, default: &[InnovationKind]) -> CliResult<Vec<InnovationKind>> {
    cfg.set_default(key, default.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "));
    let kinds: Vec<InnovationKind> = cfg.list(key)?.unwrap_or_default();
    if kinds.is_empty() {
        return Err(CliError::Usage(format!("`{key}` lists no innovation laws")));
    }
    Ok(kinds)
}

/// Concatenates key lists.
pub fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}
