use aldar_core::asymtest::{asymmetry_tests, pearson_pvalue, restriction_matrix, wald_test, PsiSource};
use aldar_core::diagnostics::{portmanteau, residual_acfs};
use aldar_core::estimation::{initial_estimate, loglik};
use aldar_core::forecast::{cc_test, ecr, forecast_quantile, VarForecastSeries};
use aldar_core::model::cond_mean_scale;
use aldar_core::rng::rng_from_seed;
use aldar_core::stationarity::margin_case1;
use aldar_core::stats::chi2_sf;
use aldar_core::{fit_qmle, fit_restricted, simulate, FitOptions, InnovationKind, InnovationSpec, ModelParams, ParamBounds, Regressors, SeriesSample};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn params_strategy(p: usize) -> impl Strategy<Value = ModelParams> {
    (
        prop::collection::vec(-0.4..0.4f64, p),
        0.1..2.0f64,
        prop::collection::vec(0.0..0.5f64, p),
        prop::collection::vec(0.0..0.5f64, p),
    )
        .prop_map(|(a, w, bp, bm)| ModelParams::new(a, w, bp, bm).unwrap())
}

fn simulated(params: &ModelParams, n: usize, seed: u64) -> SeriesSample {
    simulate(params, &InnovationSpec::normal(), n, 300, seed).unwrap()
}

fn quick_fit() -> FitOptions {
    FitOptions { n_starts: 2, ..FitOptions::default() }
}

/// ∫ f(x)φ(x) dx by composite Simpson on [−12, 12].
fn normal_expect(f: impl Fn(f64) -> f64) -> f64 {
    let n = 200_000;
    let h = 24.0 / n as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let g = |i: usize| {
        let x = -12.0 + h * i as f64;
        f(x) * phi(x)
    };
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 * g(i) } else { 2.0 * g(i) }).sum();
    h / 3.0 * (g(0) + inner + g(n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flattening_roundtrip(p in 1usize..5, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let params = ModelParams::new(
            (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rng.random_range(0.1..3.0),
            (0..p).map(|_| rng.random_range(0.0..1.0)).collect(),
            (0..p).map(|_| rng.random_range(0.0..1.0)).collect(),
        ).unwrap();
        let theta = params.to_vec();
        prop_assert_eq!(theta.len(), 3 * p + 1);
        prop_assert_eq!(theta[p], params.omega);
        prop_assert_eq!(ModelParams::from_slice(p, &theta).unwrap(), params);
    }

    #[test]
    fn scale_never_below_omega(params in params_strategy(3), lags in prop::collection::vec(-1e6..1e6f64, 3)) {
        let (_, s) = cond_mean_scale(&params, &lags);
        prop_assert!(s >= params.omega);
    }

    #[test]
    fn symmetric_model_matches_linear_dar_oracle(a in -0.5..0.5f64, w in 0.1..1.0f64, b in 0.0..0.5f64, seed in any::<u64>()) {
        let params = ModelParams::symmetric(vec![a], w, vec![b]).unwrap();
        let got = simulate(&params, &InnovationSpec::normal(), 200, 200, seed).unwrap();
        let mut rng = rng_from_seed(seed);
        let mut y = 0.0f64;
        let mut expected = Vec::new();
        for step in 0..400 {
            let z: f64 = rng.sample(StandardNormal);
            y = a * y + (w + b * y.abs()) * z;
            if step >= 200 {
                expected.push(y);
            }
        }
        prop_assert_eq!(got.values, expected);
    }

    #[test]
    fn regressor_layout(params in params_strategy(2), seed in any::<u64>()) {
        let s = simulated(&params, 60, seed);
        let reg = Regressors::build(&s, 2).unwrap();
        prop_assert_eq!(reg.n_rows(), 58);
        for r in 0..reg.n_rows() {
            let x = reg.x_row(r);
            prop_assert_eq!(x[0], 1.0);
            for i in 0..2 {
                prop_assert!(x[1 + i] >= 0.0 && x[3 + i] >= 0.0);
                prop_assert_eq!(x[1 + i] * x[3 + i], 0.0);
                prop_assert_eq!(x[1 + i] - x[3 + i], reg.y_row(r)[i]);
            }
        }
    }

    #[test]
    fn pearson_monotone_in_statistic(e in prop::collection::vec(0.05..5.0f64, 1..5), q in 0.0..40.0f64, dq in 0.0..10.0f64) {
        let lo = pearson_pvalue(&e, q).unwrap();
        let hi = pearson_pvalue(&e, q + dq).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi <= lo + 1e-12);
    }

    #[test]
    fn restriction_picks_beta_difference(p in 1usize..6, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let theta = DVector::from_fn(3 * p + 1, |_, _| rng.random_range(-1.0..1.0));
        let r = restriction_matrix(p);
        let d = &r * &theta;
        for i in 0..p {
            prop_assert!((d[i] - (theta[p + 1 + i] - theta[2 * p + 1 + i])).abs() < 1e-15);
        }
        prop_assert_eq!(r.rank(1e-12), p);
    }

    #[test]
    fn acfs_are_bounded(x in prop::collection::vec(-100.0..100.0f64, 30..200), m in 1usize..10) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let (rho, gamma) = residual_acfs(&x, m).unwrap();
        prop_assert!(rho.iter().chain(&gamma).all(|r| r.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn hits_and_coverage_agree(q in prop::collection::vec(-2.0..2.0f64, 60..120), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let realized: Vec<f64> = q.iter().map(|_| rng.sample(StandardNormal)).collect();
        let f = VarForecastSeries::new(0.1, (0..q.len()).collect(), q.clone(), realized.clone()).unwrap();
        for ((h, y), qq) in f.hits.iter().zip(&realized).zip(&q) {
            prop_assert_eq!(*h, y < qq);
        }
        let rate = f.hits.iter().filter(|h| **h).count() as f64 / f.len() as f64;
        prop_assert_eq!(ecr(&f).unwrap(), rate);
        if let Ok(t) = cc_test(&f.hits, 0.1) {
            prop_assert!(t.statistic >= 0.0 && (0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn standardized_innovations(df in 4.5..40.0f64, skew in -2.0..2.0f64) {
        for kind in [InnovationKind::StudentT { df }, InnovationKind::SkewedT { df, skew }] {
            let s = InnovationSpec::new(kind).unwrap();
            prop_assert!(s.expect(|x| x, &[]).unwrap().abs() < 1e-7);
            prop_assert!((s.expect(|x| x * x, &[]).unwrap() - 1.0).abs() < 1e-6);
            prop_assert!(s.kappa2 - s.kappa1 * s.kappa1 > 0.0);
            prop_assert!(s.sigma_xi_sq > 0.0 && s.sigma_xi_sq <= 1.0);
        }
    }
}

#[test]
fn beta_can_lower_the_margin_below_kappa_one() {
    let innov = InnovationSpec::normal();
    let at = |b: f64| margin_case1(&ModelParams::new(vec![1.1], 0.5, vec![b], vec![b]).unwrap(), &innov, 0.1).unwrap();
    assert!(at(0.05) < at(0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn margin_monotone_in_coefficients(a in -1.5..1.5f64, bp in 0.0..1.5f64, bm in 0.0..1.5f64, which in 0usize..3, bump in 0.01..0.5f64, kappa in 0.1..1.0f64) {
        let innov = InnovationSpec::normal();
        let base = ModelParams::new(vec![a], 0.5, vec![bp], vec![bm]).unwrap();
        let mut up = base.clone();
        // for κ < 1 the margin dips as β grows from zero when α ≠ 0, so β moves are checked at κ = 1
        let kappa = match which {
            0 => {
                up.alpha[0] += bump * a.signum();
                kappa
            }
            1 => {
                up.beta_plus[0] += bump;
                1.0
            }
            _ => {
                up.beta_minus[0] += bump;
                1.0
            }
        };
        let m0 = margin_case1(&base, &innov, kappa).unwrap();
        let m1 = margin_case1(&up, &innov, kappa).unwrap();
        prop_assert!(m1 >= m0 - 1e-9, "{} -> {}", m0, m1);
    }

    #[test]
    fn symmetric_margin_matches_direct_integral(a in -1.0..1.0f64, b in 0.05..1.5f64, kappa in 0.1..1.0f64) {
        let params = ModelParams::symmetric(vec![a], 0.5, vec![b]).unwrap();
        let got = margin_case1(&params, &InnovationSpec::normal(), kappa).unwrap();
        let oracle = normal_expect(|x| (a + b * x).abs().powf(kappa));
        prop_assert!((got - oracle).abs() < 1e-5, "{} vs {}", got, oracle);
    }

    #[test]
    fn loglik_shifts_by_log_scale(params in params_strategy(2), c in 0.2..5.0f64, seed in any::<u64>()) {
        let s = simulated(&params, 200, seed);
        let scaled = SeriesSample::new(s.values.iter().map(|v| c * v).collect(), "scaled").unwrap();
        let (r0, r1) = (Regressors::build(&s, 2).unwrap(), Regressors::build(&scaled, 2).unwrap());
        let mut mapped = params.clone();
        mapped.omega *= c;
        let l0 = loglik(&params, &r0);
        let l1 = loglik(&mapped, &r1);
        let expected = l0 - 198.0 * c.ln();
        prop_assert!((l1 - expected).abs() <= 1e-9 * l0.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fit_invariants(params in params_strategy(1), seed in any::<u64>()) {
        let s = simulated(&params, 400, seed);
        let bounds = ParamBounds::default();
        let fit = fit_qmle(&s, 1, &bounds, &quick_fit()).unwrap();
        let reg = Regressors::build(&s, 1).unwrap();
        prop_assert!(fit.loglik >= loglik(&initial_estimate(&reg, &bounds), &reg) - 1e-9);
        prop_assert!(fit.sigma_hat.clone().cholesky().is_some());
        prop_assert!(fit.omega_hat.symmetric_eigenvalues().iter().all(|v| *v >= -1e-10));
        prop_assert_eq!(fit.residuals.len(), 399);
        let th = &fit.theta_hat;
        for (r, e) in fit.residuals.iter().enumerate() {
            let (mu, sd) = cond_mean_scale(th, reg.y_row(r));
            prop_assert!((e - (reg.response(r) - mu) / sd).abs() < 1e-12);
        }
        let restricted = fit_restricted(&s, 1, &bounds, &quick_fit()).unwrap();
        prop_assert!(restricted.loglik <= fit.loglik + 1e-8 * 399.0);
    }

    #[test]
    fn estimates_and_wald_are_scale_equivariant(seed in any::<u64>(), c in 0.2..5.0f64) {
        let truth = ModelParams::new(vec![0.3], 0.5, vec![0.3], vec![0.5]).unwrap();
        let s = simulated(&truth, 800, seed);
        let scaled = SeriesSample::new(s.values.iter().map(|v| c * v).collect(), "scaled").unwrap();
        let bounds = ParamBounds::default();
        let f0 = fit_qmle(&s, 1, &bounds, &FitOptions::default()).unwrap();
        let f1 = fit_qmle(&scaled, 1, &bounds.scaled(c), &FitOptions::default()).unwrap();
        let (a, b) = (f0.theta_hat.to_vec(), f1.theta_hat.to_vec());
        prop_assert!((a[0] - b[0]).abs() < 1e-5);
        prop_assert!((c * a[1] - b[1]).abs() < 1e-5 * c);
        prop_assert!((a[2] - b[2]).abs() < 1e-5 && (a[3] - b[3]).abs() < 1e-5);
        let (w0, w1) = (wald_test(&f0).unwrap().statistic, wald_test(&f1).unwrap().statistic);
        prop_assert!((w0 - w1).abs() <= 1e-6 * w0.max(1.0), "{} vs {}", w0, w1);
        let (r0, r1) = (Regressors::build(&s, 1).unwrap(), Regressors::build(&scaled, 1).unwrap());
        let (q0, q1) = (portmanteau(&f0, &r0, 6).unwrap().q_stat, portmanteau(&f1, &r1, 6).unwrap().q_stat);
        prop_assert!((q0 - q1).abs() <= 1e-6 * q0.max(1.0), "{} vs {}", q0, q1);
    }

    #[test]
    fn asymmetry_report_ranges(params in params_strategy(1), seed in any::<u64>()) {
        let s = simulated(&params, 500, seed);
        let rep = asymmetry_tests(&s, 1, &ParamBounds::default(), &quick_fit(), PsiSource::Restricted).unwrap();
        for t in [rep.wald, rep.lm] {
            prop_assert!(t.statistic >= 0.0 && (0.0..=1.0).contains(&t.p_value));
        }
        prop_assert!(rep.qlr.statistic >= 0.0 && (0.0..=1.0).contains(&rep.qlr.p_value));
        prop_assert!(rep.qlr.eigenvalues.iter().all(|e| *e >= -1e-12));
    }

    #[test]
    fn portmanteau_report_shape(params in params_strategy(1), seed in any::<u64>(), m in 1usize..8) {
        let s = simulated(&params, 500, seed);
        let fit = fit_qmle(&s, 1, &ParamBounds::default(), &quick_fit()).unwrap();
        let a = portmanteau(&fit, &Regressors::build(&s, 1).unwrap(), m).unwrap();
        prop_assert!(a.q_stat >= 0.0);
        prop_assert!((a.p_value - chi2_sf(2.0 * m as f64, a.q_stat)).abs() < 1e-14);
        for i in 0..2 * m {
            prop_assert!(a.cov[i][i] >= 0.0);
            for j in 0..2 * m {
                prop_assert!((a.cov[i][j] - a.cov[j][i]).abs() <= 1e-12 * a.cov[i][i].abs().max(1e-12));
            }
        }
    }

    #[test]
    fn quantile_forecast_monotone_in_level(params in params_strategy(2), seed in any::<u64>(), lags in prop::collection::vec(-3.0..3.0f64, 2), t1 in 0.01..0.99f64, t2 in 0.01..0.99f64) {
        let s = simulated(&params, 300, seed);
        let fit = fit_qmle(&s, 2, &ParamBounds::default(), &quick_fit()).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(forecast_quantile(&fit, &lags, lo).unwrap() <= forecast_quantile(&fit, &lags, hi).unwrap());
    }
}
