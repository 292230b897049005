//! Monte Carlo designs behind the simulation tables and figures.
//!
//! A replication draws every cell of a design from its own random stream: cell `c` of
//! replication `r` under master seed `s` uses stream `r` of the generator seeded with
//! `derive_seed(s, c)`. Cells that only differ in a local-alternative shift share a stream,
//! so power curves use common random numbers. Results depend on neither the thread count
//! nor the order in which replications finish.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymtest::{asymmetry_tests, local_alternative_dgp, PsiSource};
use crate::diagnostics::portmanteau;
use crate::error::{AldarError, Result};
use crate::estimation::{fit_qmle, FitOptions, Regressors};
use crate::forecast::{cc_test, dq_test, ecr, rolling_backtest};
use crate::innovation::{InnovationKind, InnovationSpec};
use crate::model::{simulate_with_rng, SeriesSample, DEFAULT_BURN_IN};
use crate::params::{ModelParams, ParamBounds};
use crate::rng::{derive_seed, replication_rng};
use crate::selection::select_order;
use crate::stationarity::stationarity_boundary;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "ALDAR_THREADS";

pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Runs `f` on a pool sized by `ALDAR_THREADS` (default: rayon's global pool).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match configured_threads() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Outcome of one cell: the recorded numbers or the failure message.
pub type CellResult = std::result::Result<Vec<f64>, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: u64,
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub labels: Vec<(String, String)>,
    pub values: Vec<(String, f64)>,
}

impl SummaryRow {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn label(&self, key: &str) -> Option<&str> {
        self.labels.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub reps: usize,
    pub failures: usize,
    pub rows: Vec<SummaryRow>,
}

impl ExperimentSummary {
    /// Header and rows for CSV output; every row carries the same columns.
    pub fn csv(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let Some(first) = self.rows.first() else {
            return (Vec::new(), Vec::new());
        };
        let header = first.labels.iter().map(|(k, _)| k.clone()).chain(first.values.iter().map(|(k, _)| k.clone())).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| r.labels.iter().map(|(_, v)| v.clone()).chain(r.values.iter().map(|(_, v)| format_number(*v))).collect())
            .collect();
        (header, rows)
    }

    /// Rows whose labels contain every `(key, value)` pair.
    pub fn find(&self, filter: &[(&str, &str)]) -> Vec<&SummaryRow> {
        self.rows.iter().filter(|r| filter.iter().all(|(k, v)| r.label(k) == Some(*v))).collect()
    }
}

fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.6}")
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn val(k: &str, v: f64) -> (String, f64) {
    (k.to_string(), v)
}

/// Monte Carlo standard error of a rejection or selection rate.
pub fn rate_se(rate: f64, reps: usize) -> f64 {
    if reps == 0 {
        return f64::NAN;
    }
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn cell_rng(master: u64, cell: u64, rep: u64) -> crate::rng::AldarRng {
    replication_rng(derive_seed(master, cell), rep)
}

fn fit_options(master: u64, cell: u64, rep: u64) -> FitOptions {
    FitOptions { seed: derive_seed(derive_seed(master, cell), rep.wrapping_add(1) << 20), ..FitOptions::default() }
}

fn simulate_cell(params: &ModelParams, innov: &InnovationSpec, n: usize, master: u64, cell: u64, rep: u64) -> Result<SeriesSample> {
    let mut rng = cell_rng(master, cell, rep);
    simulate_with_rng(params, innov, n, DEFAULT_BURN_IN, &mut rng)
}

fn specs(kinds: &[InnovationKind]) -> Result<Vec<InnovationSpec>> {
    kinds.iter().map(|k| InnovationSpec::new(*k)).collect()
}

/// Table 1: bias, empirical and asymptotic standard deviations of the QMLE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Design {
    pub params: ModelParams,
    pub innovations: Vec<InnovationKind>,
    pub ns: Vec<usize>,
}

impl Default for Table1Design {
    fn default() -> Self {
        Self {
            params: ModelParams { alpha: vec![0.5], omega: 0.4, beta_plus: vec![0.4], beta_minus: vec![0.6] },
            innovations: default_innovations(),
            ns: vec![500, 1000, 2000],
        }
    }
}

/// Table 2: order selection by BIC₁ and BIC₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Design {
    pub params: ModelParams,
    pub innovations: Vec<InnovationKind>,
    pub ns: Vec<usize>,
    pub p_max: usize,
}

impl Default for Table2Design {
    fn default() -> Self {
        Self {
            params: ModelParams { alpha: vec![0.3, -0.2], omega: 0.4, beta_plus: vec![0.2, 0.2], beta_minus: vec![0.2, 0.1] },
            innovations: default_innovations(),
            ns: vec![200, 500, 1000],
            p_max: 5,
        }
    }
}

/// Table 3 (`hs = [0]`) and Figure 2: asymmetry tests under `β₁₋ = β₀ + h/√n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymDesign {
    pub theta0: ModelParams,
    pub hs: Vec<f64>,
    pub innovations: Vec<InnovationKind>,
    pub ns: Vec<usize>,
    pub level: f64,
    pub psi_source: PsiSource,
}

impl AsymDesign {
    pub fn table3() -> Self {
        Self {
            theta0: ModelParams { alpha: vec![0.4], omega: 0.4, beta_plus: vec![0.5], beta_minus: vec![0.5] },
            hs: vec![0.0],
            innovations: default_innovations(),
            ns: vec![500, 1000, 2000],
            level: 0.05,
            psi_source: PsiSource::Restricted,
        }
    }

    pub fn fig2() -> Self {
        Self { hs: (-10..=10).map(f64::from).collect(), innovations: vec![InnovationKind::Normal], ns: vec![2000], ..Self::table3() }
    }
}

/// Table 4: mixed portmanteau size and power for an order-one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table4Design {
    /// `(c₁, c₂)` pairs.
    pub cs: Vec<(f64, f64)>,
    pub innovations: Vec<InnovationKind>,
    pub ns: Vec<usize>,
    pub m: usize,
    pub level: f64,
}

impl Default for Table4Design {
    fn default() -> Self {
        Self {
            cs: vec![(0.0, 0.0), (0.1, 0.0), (0.3, 0.0), (0.0, 0.1), (0.0, 0.3)],
            innovations: default_innovations(),
            ns: vec![500, 1000, 2000],
            m: 6,
            level: 0.05,
        }
    }
}

impl Table4Design {
    /// `y_t = 0.3y_{t−1} + c₁y_{t−2} + η_t(0.4 + 0.3y⁺_{t−1} + c₂y⁺_{t−2} − 0.4y⁻_{t−1} − c₂y⁻_{t−2})`
    pub fn dgp(c1: f64, c2: f64) -> ModelParams {
        ModelParams { alpha: vec![0.3, c1], omega: 0.4, beta_plus: vec![0.3, c2], beta_minus: vec![0.4, c2] }
    }
}

/// Calibration of rolling VaR backtests on correctly specified data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDesign {
    pub params: ModelParams,
    pub innovation: InnovationKind,
    pub window: usize,
    pub n_forecasts: usize,
    pub taus: Vec<f64>,
    pub refit_every: usize,
    pub level: f64,
}

impl Default for VarDesign {
    fn default() -> Self {
        Self {
            params: ModelParams { alpha: vec![0.1], omega: 0.4, beta_plus: vec![0.2], beta_minus: vec![0.4] },
            innovation: InnovationKind::Normal,
            window: 522,
            n_forecasts: 677,
            taus: vec![0.01, 0.05, 0.95, 0.99],
            refit_every: 1,
            level: 0.05,
        }
    }
}

/// Figure 1: stationarity boundary curves for order one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Design {
    /// `(innovation, κ, d = β₊/β₋)` per curve.
    pub curves: Vec<(InnovationKind, f64, f64)>,
    pub alpha_grid: Vec<f64>,
}

impl Default for Fig1Design {
    fn default() -> Self {
        let t5 = InnovationKind::StudentT { df: 5.0 };
        let n = InnovationKind::Normal;
        let mut curves = vec![(n, 0.1, 1.0), (t5, 0.1, 1.0)];
        curves.extend([0.6, 1.0, 2.0, 4.0].iter().map(|&k| (n, k, 1.0)));
        curves.extend([0.5, 0.8].iter().map(|&d| (n, 0.1, d)));
        Self { curves, alpha_grid: (0..=40).map(|i| -5.0 + 0.25 * i as f64).collect() }
    }
}

pub fn default_innovations() -> Vec<InnovationKind> {
    vec![InnovationKind::Normal, InnovationKind::StudentT { df: 5.0 }, InnovationKind::SkewedT { df: 5.0, skew: -1.2 }]
}

/// A replicated design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum Experiment {
    Table1(Table1Design),
    Table2(Table2Design),
    Table3(AsymDesign),
    Table4(Table4Design),
    Fig2(AsymDesign),
    Var(VarDesign),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table1(_) => "table1",
            Experiment::Table2(_) => "table2",
            Experiment::Table3(_) => "table3",
            Experiment::Table4(_) => "table4",
            Experiment::Fig2(_) => "fig2",
            Experiment::Var(_) => "var",
        }
    }

    fn validate(&self) -> Result<()> {
        let check_ns = |ns: &[usize]| {
            if ns.is_empty() || ns.iter().any(|&n| n < 50) {
                Err(AldarError::InvalidArgument("sample sizes must be at least 50".into()))
            } else {
                Ok(())
            }
        };
        match self {
            Experiment::Table1(d) => {
                d.params.validate()?;
                specs(&d.innovations)?;
                check_ns(&d.ns)
            }
            Experiment::Table2(d) => {
                d.params.validate()?;
                specs(&d.innovations)?;
                if d.p_max == 0 {
                    return Err(AldarError::InvalidArgument("p_max must be at least 1".into()));
                }
                check_ns(&d.ns)
            }
            Experiment::Table3(d) | Experiment::Fig2(d) => {
                d.theta0.validate()?;
                specs(&d.innovations)?;
                if d.hs.is_empty() {
                    return Err(AldarError::InvalidArgument("empty h grid".into()));
                }
                check_ns(&d.ns)
            }
            Experiment::Table4(d) => {
                specs(&d.innovations)?;
                if d.m == 0 || d.cs.is_empty() {
                    return Err(AldarError::InvalidArgument("table4 needs M >= 1 and at least one (c1, c2)".into()));
                }
                check_ns(&d.ns)
            }
            Experiment::Var(d) => {
                d.params.validate()?;
                InnovationSpec::new(d.innovation)?;
                if d.n_forecasts == 0 || d.taus.is_empty() || d.refit_every == 0 {
                    return Err(AldarError::InvalidArgument("var design needs forecasts, levels and refit_every >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Runs one replication.
    pub fn run_rep(&self, master: u64, rep: u64) -> Result<RepRecord> {
        let cells = match self {
            Experiment::Table1(d) => table1_rep(d, master, rep)?,
            Experiment::Table2(d) => table2_rep(d, master, rep)?,
            Experiment::Table3(d) | Experiment::Fig2(d) => asym_rep(d, master, rep)?,
            Experiment::Table4(d) => table4_rep(d, master, rep)?,
            Experiment::Var(d) => var_rep(d, master, rep)?,
        };
        Ok(RepRecord { rep, cells })
    }

    /// Runs replications `reps` in parallel; the output is ordered by replication index.
    pub fn run(&self, master: u64, reps: Range<u64>) -> Result<Vec<RepRecord>> {
        self.validate()?;
        with_thread_pool(|| reps.into_par_iter().map(|r| self.run_rep(master, r)).collect())
    }

    pub fn summarize(&self, records: &[RepRecord]) -> ExperimentSummary {
        let rows = match self {
            Experiment::Table1(d) => table1_summary(d, records),
            Experiment::Table2(d) => table2_summary(d, records),
            Experiment::Table3(d) | Experiment::Fig2(d) => asym_summary(d, records),
            Experiment::Table4(d) => table4_summary(d, records),
            Experiment::Var(d) => var_summary(d, records),
        };
        let failures = records.iter().map(|r| r.cells.iter().filter(|c| c.is_err()).count()).sum();
        ExperimentSummary { name: self.name().into(), reps: records.len(), failures, rows }
    }
}

fn grid<'a, A, B>(a: &'a [A], b: &'a [B]) -> impl Iterator<Item = (usize, &'a A, &'a B)> + 'a {
    a.iter().flat_map(move |x| b.iter().map(move |y| (x, y))).enumerate().map(|(i, (x, y))| (i, x, y))
}

fn cell_values(records: &[RepRecord], cell: usize) -> Vec<&Vec<f64>> {
    records.iter().filter_map(|r| r.cells.get(cell).and_then(|c| c.as_ref().ok())).collect()
}

fn table1_rep(d: &Table1Design, master: u64, rep: u64) -> Result<Vec<CellResult>> {
    let innovs = specs(&d.innovations)?;
    let p = d.params.order();
    Ok(grid(&innovs, &d.ns)
        .map(|(c, innov, &n)| {
            let s = simulate_cell(&d.params, innov, n, master, c as u64, rep)?;
            let fit = fit_qmle(&s, p, &ParamBounds::default(), &fit_options(master, c as u64, rep))?;
            let mut out = fit.theta_hat.to_vec();
            out.extend(&fit.asd);
            Ok(out)
        })
        .map(|r: Result<Vec<f64>>| r.map_err(|e| e.to_string()))
        .collect())
}

pub fn component_names(p: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=p).map(|i| format!("alpha{i}")).collect();
    names.push("omega".into());
    names.extend((1..=p).map(|i| format!("beta{i}_plus")));
    names.extend((1..=p).map(|i| format!("beta{i}_minus")));
    names
}

fn table1_summary(d: &Table1Design, records: &[RepRecord]) -> Vec<SummaryRow> {
    let truth = d.params.to_vec();
    let dim = truth.len();
    let names = component_names(d.params.order());
    let mut rows = Vec::new();
    for (c, innov, n) in grid(&d.innovations, &d.ns) {
        let vals = cell_values(records, c);
        for j in 0..dim {
            let est: Vec<f64> = vals.iter().map(|v| v[j]).collect();
            let asd: Vec<f64> = vals.iter().map(|v| v[dim + j]).collect();
            let r = est.len();
            let esd = sd(&est);
            rows.push(SummaryRow {
                labels: vec![kv("innovation", innov), kv("n", n), kv("parameter", &names[j])],
                values: vec![
                    val("truth", truth[j]),
                    val("bias", mean(&est) - truth[j]),
                    val("bias_se", esd / (r as f64).sqrt()),
                    val("esd", esd),
                    val("esd_se", esd / (2.0 * (r as f64 - 1.0)).sqrt()),
                    val("asd", mean(&asd)),
                    val("asd_se", sd(&asd) / (r as f64).sqrt()),
                    val("reps", r as f64),
                ],
            });
        }
    }
    rows
}

fn table2_rep(d: &Table2Design, master: u64, rep: u64) -> Result<Vec<CellResult>> {
    let innovs = specs(&d.innovations)?;
    Ok(grid(&innovs, &d.ns)
        .map(|(c, innov, &n)| -> Result<Vec<f64>> {
            let s = simulate_cell(&d.params, innov, n, master, c as u64, rep)?;
            let r = select_order(&s, d.p_max, &ParamBounds::default(), &fit_options(master, c as u64, rep))?;
            Ok(vec![r.p_hat_bic1 as f64, r.p_hat_bic2 as f64])
        })
        .map(|r| r.map_err(|e| e.to_string()))
        .collect())
}

fn table2_summary(d: &Table2Design, records: &[RepRecord]) -> Vec<SummaryRow> {
    let p0 = d.params.order() as f64;
    let mut rows = Vec::new();
    for (c, innov, n) in grid(&d.innovations, &d.ns) {
        let vals = cell_values(records, c);
        let r = vals.len();
        for (k, crit) in ["bic1", "bic2"].iter().enumerate() {
            let rate = |pred: &dyn Fn(f64) -> bool| vals.iter().filter(|v| pred(v[k])).count() as f64 / r.max(1) as f64;
            let (under, correct, over) = (rate(&|p| p < p0), rate(&|p| p == p0), rate(&|p| p > p0));
            rows.push(SummaryRow {
                labels: vec![kv("innovation", innov), kv("n", n), kv("criterion", crit)],
                values: vec![
                    val("under", under),
                    val("correct", correct),
                    val("over", over),
                    val("correct_se", rate_se(correct, r)),
                    val("reps", r as f64),
                ],
            });
        }
    }
    rows
}

/// `θ₀` with `β₁₋` shifted by `h/√n`.
pub fn asym_dgp(theta0: &ModelParams, h: f64, n: usize) -> Result<ModelParams> {
    let mut shift = vec![0.0; theta0.dim()];
    shift[2 * theta0.order() + 1] = h;
    local_alternative_dgp(theta0, &shift, n, &ParamBounds::default())
}

fn asym_rep(d: &AsymDesign, master: u64, rep: u64) -> Result<Vec<CellResult>> {
    let innovs = specs(&d.innovations)?;
    let p = d.theta0.order();
    let mut out = Vec::new();
    for (c, innov, &n) in grid(&innovs, &d.ns) {
        for &h in &d.hs {
            let cell = || -> Result<Vec<f64>> {
                let params = asym_dgp(&d.theta0, h, n)?;
                let s = simulate_cell(&params, innov, n, master, c as u64, rep)?;
                let t = asymmetry_tests(&s, p, &ParamBounds::default(), &fit_options(master, c as u64, rep), d.psi_source)?;
                let mut v = vec![t.wald.p_value, t.lm.p_value, t.qlr.p_value, t.wald.statistic, t.lm.statistic, t.qlr.statistic];
                v.extend(t.qlr.eigenvalues);
                Ok(v)
            };
            out.push(cell().map_err(|e| e.to_string()));
        }
    }
    Ok(out)
}

fn asym_summary(d: &AsymDesign, records: &[RepRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut cell = 0;
    for (_, innov, n) in grid(&d.innovations, &d.ns) {
        for &h in &d.hs {
            let vals = cell_values(records, cell);
            cell += 1;
            let r = vals.len();
            let rej = |k: usize| vals.iter().filter(|v| v[k] < d.level).count() as f64 / r.max(1) as f64;
            let (w, l, q) = (rej(0), rej(1), rej(2));
            let eig: Vec<f64> = vals.iter().flat_map(|v| v[6..].iter().cloned()).collect();
            rows.push(SummaryRow {
                labels: vec![kv("innovation", innov), kv("n", n), kv("h", h)],
                values: vec![
                    val("wald", w),
                    val("wald_se", rate_se(w, r)),
                    val("lm", l),
                    val("lm_se", rate_se(l, r)),
                    val("qlr", q),
                    val("qlr_se", rate_se(q, r)),
                    val("mean_eigenvalue", mean(&eig)),
                    val("reps", r as f64),
                ],
            });
        }
    }
    rows
}

fn table4_rep(d: &Table4Design, master: u64, rep: u64) -> Result<Vec<CellResult>> {
    let innovs = specs(&d.innovations)?;
    let mut out = Vec::new();
    for (c, innov, &n) in grid(&innovs, &d.ns) {
        for (k, &(c1, c2)) in d.cs.iter().enumerate() {
            let id = (c * d.cs.len() + k) as u64;
            let cell = || -> Result<Vec<f64>> {
                let s = simulate_cell(&Table4Design::dgp(c1, c2), innov, n, master, id, rep)?;
                let fit = fit_qmle(&s, 1, &ParamBounds::default(), &fit_options(master, id, rep))?;
                let reg = Regressors::build(&s, 1)?;
                let a = portmanteau(&fit, &reg, d.m)?;
                Ok(vec![a.p_value, a.q_stat])
            };
            out.push(cell().map_err(|e| e.to_string()));
        }
    }
    Ok(out)
}

fn table4_summary(d: &Table4Design, records: &[RepRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut cell = 0;
    for (_, innov, n) in grid(&d.innovations, &d.ns) {
        for &(c1, c2) in &d.cs {
            let vals = cell_values(records, cell);
            cell += 1;
            let r = vals.len();
            let rate = vals.iter().filter(|v| v[0] < d.level).count() as f64 / r.max(1) as f64;
            rows.push(SummaryRow {
                labels: vec![kv("innovation", innov), kv("n", n), kv("c1", c1), kv("c2", c2), kv("m", d.m)],
                values: vec![val("rejection", rate), val("rejection_se", rate_se(rate, r)), val("reps", r as f64)],
            });
        }
    }
    rows
}

fn var_rep(d: &VarDesign, master: u64, rep: u64) -> Result<Vec<CellResult>> {
    let innov = InnovationSpec::new(d.innovation)?;
    let p = d.params.order();
    let failed = |e: AldarError| vec![Err(e.to_string()); 3 * d.taus.len()];
    let s = match simulate_cell(&d.params, &innov, d.window + d.n_forecasts, master, 0, rep) {
        Ok(s) => s,
        Err(e) => return Ok(failed(e)),
    };
    let bt = match rolling_backtest(&s, d.window, p, &d.taus, d.refit_every, &ParamBounds::default(), &fit_options(master, 0, rep)) {
        Ok(bt) => bt,
        Err(e) => return Ok(failed(e)),
    };
    let mut out = Vec::new();
    for f in &bt.forecasts {
        out.push(ecr(f).map(|v| vec![v, bt.gaps.len() as f64]).map_err(|e| e.to_string()));
        out.push(cc_test(&f.hits, f.tau).map(|t| vec![t.p_value]).map_err(|e| e.to_string()));
        out.push(dq_test(f).map(|t| vec![t.p_value]).map_err(|e| e.to_string()));
    }
    Ok(out)
}

fn var_summary(d: &VarDesign, records: &[RepRecord]) -> Vec<SummaryRow> {
    d.taus
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let e = cell_values(records, 3 * k);
            let cc = cell_values(records, 3 * k + 1);
            let dq = cell_values(records, 3 * k + 2);
            let ecrs: Vec<f64> = e.iter().map(|v| v[0]).collect();
            let rej = |v: &[&Vec<f64>]| v.iter().filter(|x| x[0] < d.level).count() as f64 / v.len().max(1) as f64;
            let (cc_rate, dq_rate) = (rej(&cc), rej(&dq));
            SummaryRow {
                labels: vec![kv("tau", tau)],
                values: vec![
                    val("ecr", mean(&ecrs)),
                    val("ecr_se", sd(&ecrs) / (ecrs.len() as f64).sqrt()),
                    val("cc_rejection", cc_rate),
                    val("cc_rejection_se", rate_se(cc_rate, cc.len())),
                    val("cc_available", cc.len() as f64),
                    val("dq_rejection", dq_rate),
                    val("dq_rejection_se", rate_se(dq_rate, dq.len())),
                    val("dq_available", dq.len() as f64),
                    val("gaps", e.iter().map(|v| v[1]).sum()),
                    val("reps", e.len() as f64),
                ],
            }
        })
        .collect()
}

/// Boundary curves; deterministic, no replications.
pub fn fig1(design: &Fig1Design) -> Result<ExperimentSummary> {
    let mut rows = Vec::new();
    for &(kind, kappa, d) in &design.curves {
        let innov = InnovationSpec::new(kind)?;
        let b = with_thread_pool(|| stationarity_boundary(&innov, kappa, d, &design.alpha_grid))?;
        for (a, b) in design.alpha_grid.iter().zip(b) {
            rows.push(SummaryRow {
                labels: vec![kv("innovation", kind), kv("kappa", kappa), kv("d", d)],
                values: vec![val("alpha", *a), val("beta_minus_boundary", b), val("beta_plus_boundary", d * b)],
            });
        }
    }
    Ok(ExperimentSummary { name: "fig1".into(), reps: 0, failures: 0, rows })
}
