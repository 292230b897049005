use aldar_core::experiments::{Experiment, Table2Design, Table4Design};
use aldar_core::model::simulate_with_rng;
use aldar_core::rng::replication_rng;
use aldar_core::selection::select_order;
use aldar_core::stats::chi2_sf;
use aldar_core::{FitOptions, InnovationKind, InnovationSpec, ParamBounds};
use rayon::prelude::*;

const SEED: u64 = 0x5EED_0A1D;

#[test]
fn selection_improves_with_sample_size() {
    let e = Experiment::Table2(Table2Design { innovations: vec![InnovationKind::Normal], ..Default::default() });
    let s = e.summarize(&e.run(SEED, 0..500).unwrap());
    for crit in ["bic1", "bic2"] {
        let rates: Vec<f64> = ["200", "500", "1000"]
            .iter()
            .map(|n| s.find(&[("n", n), ("criterion", crit)])[0].get("correct").unwrap())
            .collect();
        assert!(rates[1] >= rates[0] - 0.02 && rates[2] >= rates[1] - 0.02, "{crit}: {rates:?}");
    }
}

#[test]
fn criteria_agree_in_large_samples() {
    let design = Table2Design::default();
    let agree: usize = (0..300u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(SEED, r);
            let s = simulate_with_rng(&design.params, &InnovationSpec::normal(), 2000, 500, &mut rng).unwrap();
            let sel = select_order(&s, design.p_max, &ParamBounds::default(), &FitOptions { seed: r, ..FitOptions::default() }).unwrap();
            usize::from(sel.p_hat_bic1 == sel.p_hat_bic2)
        })
        .sum();
    assert!(agree as f64 / 300.0 >= 0.95, "agreement {agree}/300");
}

#[test]
fn portmanteau_null_distribution() {
    let e = Experiment::Table4(Table4Design { cs: vec![(0.0, 0.0)], innovations: vec![InnovationKind::Normal], ns: vec![2000], ..Default::default() });
    let records = e.run(SEED, 0..500).unwrap();
    let mut u: Vec<f64> = records.iter().map(|r| r.cells[0].as_ref().unwrap()[1]).map(|q| 1.0 - chi2_sf(12.0, q)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &f)| (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs()))
        .fold(0.0, f64::max);
    // asymptotic 1% critical value of the one-sample KS statistic
    assert!(d < 1.6276 / n.sqrt(), "KS distance {d}");
}
