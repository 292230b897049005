//! Subcommands that read a series: fit, select, test, diagnose, backtest.

use aldar_core::asymtest::{asymmetry_tests, PsiSource};
use aldar_core::diagnostics::portmanteau;
use aldar_core::experiments::component_names;
use aldar_core::forecast::rolling_backtest;
use aldar_core::selection::select_order;
use aldar_core::{fit_qmle, fit_restricted, AcfReport, FitResult, Regressors};
use nalgebra::DMatrix;
use serde::Serialize;

use super::{bounds, fit_options, keys, Invocation, BOUNDS_KEYS, FIT_KEYS};
use crate::data::{read_series, DataOptions, InputSeries, DATA_KEYS};
use crate::error::{CliError, CliResult};
use crate::report::{check_writable, fmt_num, fmt_opt, write_atomic, TextTable};

fn load(inv: &Invocation, extra: &[&'static str]) -> CliResult<InputSeries> {
    inv.cfg.check_keys(&keys(&[DATA_KEYS, BOUNDS_KEYS, FIT_KEYS, &["out"], extra]))?;
    inv.check_out()?;
    read_series(&DataOptions::from_config(&inv.cfg)?)
}

fn order(inv: &mut Invocation) -> CliResult<usize> {
    let p: usize = inv.cfg.require("p")?;
    if p == 0 {
        return Err(CliError::Usage("order p must be at least 1".into()));
    }
    Ok(p)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

#[derive(Debug, Serialize)]
struct ParamRow {
    name: String,
    estimate: f64,
    asd: f64,
}

#[derive(Debug, Serialize)]
struct FitSummary {
    p: usize,
    restricted: bool,
    n_obs: usize,
    n_eff: usize,
    loglik: f64,
    converged: bool,
    iterations: usize,
    pg_norm: f64,
    starts_converged: usize,
    start_index: usize,
    parameters: Vec<ParamRow>,
    sigma_hat: Vec<Vec<f64>>,
    xi_hat: Vec<Vec<f64>>,
    trace: Vec<f64>,
}

impl FitSummary {
    fn new(fit: &FitResult) -> Self {
        let names = component_names(fit.order());
        let parameters = names
            .into_iter()
            .zip(fit.theta_hat.to_vec())
            .zip(&fit.asd)
            .map(|((name, estimate), &asd)| ParamRow { name, estimate, asd })
            .collect();
        Self {
            p: fit.order(),
            restricted: fit.restricted,
            n_obs: fit.n_obs,
            n_eff: fit.n_eff(),
            loglik: fit.loglik,
            converged: fit.converged,
            iterations: fit.iterations,
            pg_norm: fit.pg_norm,
            starts_converged: fit.starts_converged,
            start_index: fit.start_index,
            parameters,
            sigma_hat: rows(&fit.sigma_hat),
            xi_hat: rows(&fit.xi_hat),
            trace: fit.trace.clone(),
        }
    }

    fn table(&self) -> String {
        let mut t = TextTable::new(["parameter", "estimate", "asd", "ratio"]);
        for r in &self.parameters {
            t.row([r.name.clone(), format!("{:.4}", r.estimate), format!("{:.4}", r.asd), format!("{:.2}", r.estimate / r.asd)]);
        }
        format!(
            "{} fit, p = {}, n_eff = {}, loglik = {:.4}, converged = {} ({} iterations, pg norm {:.2e})\n{}",
            if self.restricted { "restricted" } else { "unrestricted" },
            self.p,
            self.n_eff,
            self.loglik,
            self.converged,
            self.iterations,
            self.pg_norm,
            t.render()
        )
    }
}

#[derive(Debug, Serialize)]
struct FitReport {
    unrestricted: FitSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    restricted: Option<FitSummary>,
}

pub fn fit(mut inv: Invocation) -> CliResult<()> {
    let input = load(&inv, &["p", "restricted"])?;
    let p = order(&mut inv)?;
    let b = bounds(&mut inv.cfg)?;
    let opts = fit_options(&mut inv.cfg)?;
    inv.cfg.set_default("restricted", false);
    let with_restricted = inv.cfg.bool_or("restricted", false)?;

    let full = FitSummary::new(&fit_qmle(&input.series, p, &b, &opts)?);
    let restricted = if with_restricted { Some(FitSummary::new(&fit_restricted(&input.series, p, &b, &opts)?)) } else { None };
    let mut table = full.table();
    if let Some(r) = &restricted {
        table.push('\n');
        table.push_str(&r.table());
    }
    inv.emit("fit", Some(opts.seed), Some(&input), FitReport { unrestricted: full, restricted }, &table)
}

pub fn select(mut inv: Invocation) -> CliResult<()> {
    let input = load(&inv, &["p_max"])?;
    let p_max: usize = inv.cfg.require("p_max")?;
    let b = bounds(&mut inv.cfg)?;
    let opts = fit_options(&mut inv.cfg)?;
    let rep = select_order(&input.series, p_max, &b, &opts)?;

    let mut t = TextTable::new(["p", "loglik", "bic1", "bic2", "note"]);
    for r in &rep.table {
        let mark = |hat: usize| if hat == r.p { "*" } else { "" };
        t.row([
            r.p.to_string(),
            fmt_opt(r.loglik),
            format!("{}{}", fmt_opt(r.bic1), mark(rep.p_hat_bic1)),
            format!("{}{}", fmt_opt(r.bic2), mark(rep.p_hat_bic2)),
            r.failure.clone().unwrap_or_default(),
        ]);
    }
    let table = format!("selected p: bic1 = {}, bic2 = {}\n{}", rep.p_hat_bic1, rep.p_hat_bic2, t.render());
    inv.emit("select", Some(opts.seed), Some(&input), &rep, &table)
}

pub fn test(mut inv: Invocation) -> CliResult<()> {
    let input = load(&inv, &["p", "psi"])?;
    let p = order(&mut inv)?;
    let b = bounds(&mut inv.cfg)?;
    let opts = fit_options(&mut inv.cfg)?;
    inv.cfg.set_default("psi", "restricted");
    let psi = match inv.cfg.str("psi") {
        Some("restricted") => PsiSource::Restricted,
        Some("unrestricted") => PsiSource::Unrestricted,
        Some(other) => return Err(CliError::Parse(format!("`psi`: expected restricted or unrestricted, got `{other}`"))),
        None => unreachable!(),
    };
    let rep = asymmetry_tests(&input.series, p, &b, &opts, psi)?;

    let mut t = TextTable::new(["test", "statistic", "p_value"]);
    t.row(["wald".to_string(), fmt_num(rep.wald.statistic), fmt_num(rep.wald.p_value)]);
    t.row(["lm".to_string(), fmt_num(rep.lm.statistic), fmt_num(rep.lm.p_value)]);
    t.row(["qlr".to_string(), fmt_num(rep.qlr.statistic), fmt_num(rep.qlr.p_value)]);
    let eig: Vec<String> = rep.qlr.eigenvalues.iter().map(|e| format!("{e:.4}")).collect();
    let table = format!("H0: beta_plus = beta_minus, p = {p}, n_eff = {}\n{}QLR weights: {}\n", rep.n_eff, t.render(), eig.join(", "));
    inv.emit("test", Some(opts.seed), Some(&input), &rep, &table)
}

#[derive(Debug, Serialize)]
struct DiagnoseReport {
    fit: FitSummary,
    portmanteau: Vec<AcfReport>,
}

pub fn diagnose(mut inv: Invocation) -> CliResult<()> {
    let input = load(&inv, &["p", "m"])?;
    let p = order(&mut inv)?;
    let b = bounds(&mut inv.cfg)?;
    let opts = fit_options(&mut inv.cfg)?;
    inv.cfg.set_default("m", "6, 12, 18");
    let ms: Vec<usize> = inv.cfg.list("m")?.unwrap_or_default();
    if ms.is_empty() || ms.contains(&0) {
        return Err(CliError::Usage("`m` must list lags of at least 1".into()));
    }
    let fit = fit_qmle(&input.series, p, &b, &opts)?;
    let reg = Regressors::build(&input.series, p)?;
    let reports: Vec<AcfReport> = ms.iter().map(|&m| portmanteau(&fit, &reg, m)).collect::<Result<_, _>>()?;

    let mut q = TextTable::new(["M", "Q(M)", "df", "p_value"]);
    for r in &reports {
        q.row([r.m.to_string(), format!("{:.4}", r.q_stat), r.df.to_string(), format!("{:.4}", r.p_value)]);
    }
    let widest = reports.iter().max_by_key(|r| r.m).unwrap();
    let mut acf = TextTable::new(["lag", "rho", "band", "gamma", "band"]);
    for k in 0..widest.m {
        acf.row([
            (k + 1).to_string(),
            format!("{:.4}", widest.rho_hat[k]),
            format!("{:.4}", widest.bands_rho[k]),
            format!("{:.4}", widest.gamma_hat[k]),
            format!("{:.4}", widest.bands_gamma[k]),
        ]);
    }
    let table = format!("{}\nresidual ACFs with 95% bands\n{}", q.render(), acf.render());
    inv.emit("diagnose", Some(opts.seed), Some(&input), DiagnoseReport { fit: FitSummary::new(&fit), portmanteau: reports }, &table)
}

#[derive(Debug, Serialize)]
struct BacktestOutput {
    p: usize,
    window: usize,
    refit_every: usize,
    refits: usize,
    gaps: Vec<usize>,
    reports: Vec<aldar_core::BacktestReport>,
}

pub fn backtest(mut inv: Invocation) -> CliResult<()> {
    let input = load(&inv, &["p", "window", "taus", "refit_every", "forecasts_out"])?;
    let p = order(&mut inv)?;
    let b = bounds(&mut inv.cfg)?;
    let opts = fit_options(&mut inv.cfg)?;
    inv.cfg.set_default("taus", "0.01, 0.05, 0.95, 0.99");
    inv.cfg.set_default("refit_every", 1);
    let window: usize = inv.cfg.require("window")?;
    let taus: Vec<f64> = inv.cfg.list("taus")?.unwrap_or_default();
    let refit_every: usize = inv.cfg.require("refit_every")?;
    let forecasts_out = inv.cfg.path("forecasts_out");
    if let Some(f) = &forecasts_out {
        check_writable(f)?;
    }

    let bt = rolling_backtest(&input.series, window, p, &taus, refit_every, &b, &opts)?;
    let reports = bt.reports()?;

    if let Some(path) = &forecasts_out {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        if input.dates.is_some() {
            header.push("date".into());
        }
        header.push("y".into());
        header.extend(taus.iter().map(|t| format!("q_{t}")));
        w.write_record(&header).map_err(|e| CliError::io(path, e))?;
        for (i, &t) in bt.forecasts[0].times.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            if let Some(d) = &input.dates {
                rec.push(d[t].clone());
            }
            rec.push(bt.forecasts[0].realized[i].to_string());
            rec.extend(bt.forecasts.iter().map(|f| f.q_forecast[i].to_string()));
            w.write_record(&rec).map_err(|e| CliError::io(path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(path, e))?;
        write_atomic(path, &String::from_utf8_lossy(&bytes))?;
    }

    let mut t = TextTable::new(["tau", "n", "ecr", "cc_stat", "cc_p", "dq_stat", "dq_p"]);
    for r in &reports {
        t.row([
            format!("{}", r.tau),
            r.n_forecasts.to_string(),
            format!("{:.4}", r.ecr),
            fmt_opt(r.cc_stat),
            fmt_opt(r.cc_pvalue),
            fmt_opt(r.dq_stat),
            fmt_opt(r.dq_pvalue),
        ]);
    }
    let table = format!("rolling window {window}, order {p}, {} refits, {} gaps\n{}", bt.refits, bt.gaps.len(), t.render());
    let out = BacktestOutput { p, window, refit_every, refits: bt.refits, gaps: bt.gaps, reports };
    inv.emit("backtest", Some(opts.seed), Some(&input), out, &table)
}
