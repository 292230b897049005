use aldar_core::model::DEFAULT_BURN_IN;
use aldar_core::{simulate, InnovationKind, InnovationSpec, ModelParams};
use serde::Serialize;

use super::{keys, params, resolve_seed, Invocation, PARAM_KEYS};
use crate::error::{CliError, CliResult};
use crate::report::{check_writable, sibling, write_atomic, Envelope, TextTable};

#[derive(Debug, Serialize)]
struct SimulateResult<'a> {
    params: &'a ModelParams,
    innovation: String,
    n: usize,
    burn_in: usize,
    data_file: String,
    mean: f64,
    sd: f64,
    min: f64,
    max: f64,
}

/// Writes a one-column series to `out` and its metadata to `<out>.meta.json`.
pub fn run(mut inv: Invocation) -> CliResult<()> {
    inv.cfg.check_keys(&keys(&[PARAM_KEYS, &["innovation", "n", "burn_in", "seed", "out"]]))?;
    let out = inv.out().ok_or_else(|| CliError::Usage("simulate needs `out` (the series file to write)".into()))?;
    check_writable(&out)?;
    let cfg = &mut inv.cfg;
    let theta = params(cfg, None)?;
    cfg.set_default("innovation", InnovationKind::Normal);
    cfg.set_default("burn_in", DEFAULT_BURN_IN);
    let kind: InnovationKind = cfg.require("innovation")?;
    let n: usize = cfg.require("n")?;
    let burn_in: usize = cfg.require("burn_in")?;
    let seed = resolve_seed(cfg)?;

    let series = simulate(&theta, &InnovationSpec::new(kind)?, n, burn_in, seed)?;
    let mut csv = String::from("y\n");
    for v in &series.values {
        csv.push_str(&format!("{v}\n"));
    }
    write_atomic(&out, &csv)?;

    let v = &series.values;
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64).sqrt();
    let result = SimulateResult {
        params: &theta,
        innovation: kind.to_string(),
        n,
        burn_in,
        data_file: out.display().to_string(),
        mean,
        sd,
        min: v.iter().cloned().fold(f64::INFINITY, f64::min),
        max: v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    let mut t = TextTable::new(["n", "mean", "sd", "min", "max"]);
    t.row([n.to_string(), format!("{mean:.4}"), format!("{sd:.4}"), format!("{:.4}", result.min), format!("{:.4}", result.max)]);
    let meta_path = sibling(&out, ".meta.json");
    let json = Envelope::new("simulate", Some(seed), inv.cfg.entries(), None, &result).to_json()?;
    write_atomic(&meta_path, &json)?;
    let table = format!("wrote {n} observations to {} (seed {seed})\n{}", out.display(), t.render());
    if inv.json {
        print!("{json}");
    } else {
        print!("{table}");
    }
    Ok(())
}
