//! Monte Carlo experiments with checkpointing.

use std::path::PathBuf;

use aldar_core::asymtest::PsiSource;
use aldar_core::experiments::{
    fig1, AsymDesign, Experiment, ExperimentSummary, Fig1Design, Table1Design, Table2Design, Table4Design, VarDesign,
};
use aldar_core::InnovationKind;
use serde::Serialize;

use super::{innovations, keys, params, resolve_seed, Invocation, PARAM_KEYS};
use crate::checkpoint::Checkpoint;
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::report::{check_writable, sibling, write_atomic, Envelope, TextTable};

pub const NAMES: &[&str] = &["table1", "table2", "table3", "table4", "fig1", "fig2", "var"];

/// Replications between checkpoint writes.
pub const CHUNK: u64 = 100;

const RUN_KEYS: &[&str] = &["experiment", "reps", "seed", "out", "checkpoint", "resume"];

fn design_keys(name: &str) -> &'static [&'static str] {
    match name {
        "table1" => &["innovations", "ns"],
        "table2" => &["innovations", "ns", "p_max"],
        "table3" | "fig2" => &["innovations", "ns", "hs", "level", "psi"],
        "table4" => &["innovations", "ns", "cs", "m", "level"],
        "var" => &["innovation", "window", "n_forecasts", "taus", "refit_every", "level"],
        _ => &["curves", "alpha_min", "alpha_max", "alpha_step"],
    }
}

fn list_default<T: ToString>(cfg: &mut Config, key: &str, v: &[T]) {
    cfg.set_default(key, v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
}

fn nonempty<T>(v: Option<Vec<T>>, key: &str) -> CliResult<Vec<T>> {
    match v {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!("`{key}` must not be empty"))),
    }
}

fn psi(cfg: &mut Config, default: PsiSource) -> CliResult<PsiSource> {
    cfg.set_default("psi", if default == PsiSource::Restricted { "restricted" } else { "unrestricted" });
    match cfg.str("psi") {
        Some("restricted") => Ok(PsiSource::Restricted),
        Some("unrestricted") => Ok(PsiSource::Unrestricted),
        other => Err(CliError::Parse(format!("`psi`: expected restricted or unrestricted, got `{}`", other.unwrap_or("")))),
    }
}

fn pair(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Parse(format!("`cs`: expected c1:c2, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn curve(s: &str) -> CliResult<(InnovationKind, f64, f64)> {
    let bad = || CliError::Parse(format!("`curves`: expected innovation/kappa/d, got `{s}`"));
    let parts: Vec<&str> = s.split('/').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let kind = parts[0].parse().map_err(|e| CliError::Parse(format!("`curves`: {e}")))?;
    Ok((kind, parts[1].parse().map_err(|_| bad())?, parts[2].parse().map_err(|_| bad())?))
}

fn asym(cfg: &mut Config, d: AsymDesign) -> CliResult<AsymDesign> {
    let theta0 = params(cfg, Some(&d.theta0))?;
    let innovations = innovations(cfg, "innovations", &d.innovations)?;
    list_default(cfg, "ns", &d.ns);
    list_default(cfg, "hs", &d.hs);
    cfg.set_default("level", d.level);
    Ok(AsymDesign {
        theta0,
        innovations,
        ns: nonempty(cfg.list("ns")?, "ns")?,
        hs: nonempty(cfg.list("hs")?, "hs")?,
        level: cfg.require("level")?,
        psi_source: psi(cfg, d.psi_source)?,
    })
}

/// Builds the replicated design for `name`, filling defaults back into `cfg`.
pub fn design(name: &str, cfg: &mut Config) -> CliResult<Experiment> {
    Ok(match name {
        "table1" => {
            let d = Table1Design::default();
            let params = params(cfg, Some(&d.params))?;
            let innovations = innovations(cfg, "innovations", &d.innovations)?;
            list_default(cfg, "ns", &d.ns);
            Experiment::Table1(Table1Design { params, innovations, ns: nonempty(cfg.list("ns")?, "ns")? })
        }
        "table2" => {
            let d = Table2Design::default();
            let params = params(cfg, Some(&d.params))?;
            let innovations = innovations(cfg, "innovations", &d.innovations)?;
            list_default(cfg, "ns", &d.ns);
            cfg.set_default("p_max", d.p_max);
            Experiment::Table2(Table2Design { params, innovations, ns: nonempty(cfg.list("ns")?, "ns")?, p_max: cfg.require("p_max")? })
        }
        "table3" => Experiment::Table3(asym(cfg, AsymDesign::table3())?),
        "fig2" => Experiment::Fig2(asym(cfg, AsymDesign::fig2())?),
        "table4" => {
            let d = Table4Design::default();
            let innovations = innovations(cfg, "innovations", &d.innovations)?;
            list_default(cfg, "ns", &d.ns);
            cfg.set_default("cs", d.cs.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(", "));
            cfg.set_default("m", d.m);
            cfg.set_default("level", d.level);
            let cs: Vec<String> = nonempty(cfg.list("cs")?, "cs")?;
            Experiment::Table4(Table4Design {
                cs: cs.iter().map(|s| pair(s)).collect::<CliResult<_>>()?,
                innovations,
                ns: nonempty(cfg.list("ns")?, "ns")?,
                m: cfg.require("m")?,
                level: cfg.require("level")?,
            })
        }
        "var" => {
            let d = VarDesign::default();
            let params = params(cfg, Some(&d.params))?;
            cfg.set_default("innovation", d.innovation);
            cfg.set_default("window", d.window);
            cfg.set_default("n_forecasts", d.n_forecasts);
            list_default(cfg, "taus", &d.taus);
            cfg.set_default("refit_every", d.refit_every);
            cfg.set_default("level", d.level);
            Experiment::Var(VarDesign {
                params,
                innovation: cfg.require("innovation")?,
                window: cfg.require("window")?,
                n_forecasts: cfg.require("n_forecasts")?,
                taus: nonempty(cfg.list("taus")?, "taus")?,
                refit_every: cfg.require("refit_every")?,
                level: cfg.require("level")?,
            })
        }
        other => return Err(unknown(other)),
    })
}

fn unknown(name: &str) -> CliError {
    CliError::Usage(format!("unknown experiment `{name}` (expected one of {})", NAMES.join(", ")))
}

fn fig1_design(cfg: &mut Config) -> CliResult<Fig1Design> {
    let d = Fig1Design::default();
    cfg.set_default("curves", d.curves.iter().map(|(k, kappa, r)| format!("{k}/{kappa}/{r}")).collect::<Vec<_>>().join(", "));
    cfg.set_default("alpha_min", -5.0);
    cfg.set_default("alpha_max", 5.0);
    cfg.set_default("alpha_step", 0.25);
    let curves: Vec<String> = nonempty(cfg.list("curves")?, "curves")?;
    let (lo, hi, step): (f64, f64, f64) = (cfg.require("alpha_min")?, cfg.require("alpha_max")?, cfg.require("alpha_step")?);
    if !(step > 0.0) || !(hi >= lo) {
        return Err(CliError::Usage("alpha grid needs alpha_step > 0 and alpha_max >= alpha_min".into()));
    }
    let steps = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok(Fig1Design {
        curves: curves.iter().map(|s| curve(s)).collect::<CliResult<_>>()?,
        alpha_grid: (0..=steps).map(|i| lo + step * i as f64).collect(),
    })
}

#[derive(Debug, Serialize)]
struct ExperimentResult<'a, D: Serialize> {
    design: D,
    summary_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint: Option<String>,
    resumed_reps: usize,
    summary: &'a ExperimentSummary,
}

fn write_summary(path: &std::path::Path, summary: &ExperimentSummary) -> CliResult<()> {
    let (header, rows) = summary.csv();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::io(path, e);
    w.write_record(&header).map_err(io)?;
    for r in &rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, e))?;
    write_atomic(path, &String::from_utf8_lossy(&bytes))
}

fn table(summary: &ExperimentSummary) -> String {
    let (header, rows) = summary.csv();
    let mut t = TextTable::new(header);
    for r in rows {
        t.row(r);
    }
    t.render()
}

pub fn run(mut inv: Invocation, name: Option<String>) -> CliResult<()> {
    let name = match (name, inv.cfg.str("experiment")) {
        (Some(n), Some(c)) if n != c => {
            return Err(CliError::Usage(format!("experiment `{n}` given on the command line but `{c}` in the configuration")))
        }
        (Some(n), _) => n,
        (None, Some(c)) => c.to_string(),
        (None, None) => return Err(CliError::Usage("no experiment named (expected one of table1, ..., var)".into())),
    };
    if !NAMES.contains(&name.as_str()) {
        return Err(unknown(&name));
    }
    inv.cfg.set("experiment", name.clone());
    let mut allowed = keys(&[RUN_KEYS, design_keys(&name)]);
    if !matches!(name.as_str(), "table4" | "fig1") {
        allowed.extend_from_slice(PARAM_KEYS);
    }
    inv.cfg.check_keys(&allowed)?;
    let out = inv.out().ok_or_else(|| CliError::Usage("experiment needs `out` (the summary CSV to write)".into()))?;
    check_writable(&out)?;
    let meta_path = sibling(&out, ".json");

    if name == "fig1" {
        let d = fig1_design(&mut inv.cfg)?;
        let summary = fig1(&d)?;
        write_summary(&out, &summary)?;
        let result = ExperimentResult { design: &d, summary_file: out.display().to_string(), checkpoint: None, resumed_reps: 0, summary: &summary };
        return finish(&inv, None, &meta_path, &result, &summary);
    }

    let reps: u64 = inv.cfg.require("reps")?;
    if reps == 0 {
        return Err(CliError::Usage("reps must be at least 1".into()));
    }
    let experiment = design(&name, &mut inv.cfg)?;
    let seed = resolve_seed(&mut inv.cfg)?;
    inv.cfg.set_default("checkpoint", sibling(&out, ".ckpt.jsonl").display());
    inv.cfg.set_default("resume", true);
    let resume = inv.cfg.bool_or("resume", true)?;
    let ck_path: PathBuf = inv.cfg.path("checkpoint").unwrap_or_else(|| sibling(&out, ".ckpt.jsonl"));
    check_writable(&ck_path)?;

    let design_json = serde_json::to_value(&experiment).map_err(|e| CliError::Io(format!("serializing design: {e}")))?;
    let (mut ck, mut records) = Checkpoint::open(&ck_path, &design_json, seed, resume)?;
    let resumed = records.len().min(reps as usize);
    if resumed > 0 {
        eprintln!("resuming {name} from {} at replication {resumed}", ck.path().display());
    }
    let mut next = records.len() as u64;
    while next < reps {
        let end = (next + CHUNK).min(reps);
        let chunk = experiment.run(seed, next..end)?;
        ck.append(&chunk)?;
        records.extend(chunk);
        next = end;
        eprintln!("{name}: {next}/{reps} replications");
    }
    records.truncate(reps as usize);

    let summary = experiment.summarize(&records);
    write_summary(&out, &summary)?;
    let result = ExperimentResult {
        design: &experiment,
        summary_file: out.display().to_string(),
        checkpoint: Some(ck.path().display().to_string()),
        resumed_reps: resumed,
        summary: &summary,
    };
    finish(&inv, Some(seed), &meta_path, &result, &summary)
}

fn finish<D: Serialize>(inv: &Invocation, seed: Option<u64>, meta: &std::path::Path, result: &ExperimentResult<D>, summary: &ExperimentSummary) -> CliResult<()> {
    let json = Envelope::new("experiment", seed, inv.cfg.entries(), None, result).to_json()?;
    write_atomic(meta, &json)?;
    if inv.json {
        print!("{json}");
    } else {
        print!("{} ({} replications, {} failed cells)\n{}", summary.name, summary.reps, summary.failures, table(summary));
    }
    Ok(())
}
