"""Smoke test for the `aldar` extension module.

Build and install first:  maturin develop -m crates/python/Cargo.toml --release
"""

import math

import aldar


def main():
    theta = aldar.ModelParams([0.3], 0.4, [0.2], [0.6])
    assert theta.order == 1
    assert theta.stationarity_margin() < 1.0

    y = aldar.simulate(theta, 2000, seed=42)
    assert len(y) == 2000
    assert y == theta.simulate(2000, seed=42)

    fit = aldar.fit(y, 1)
    assert fit.converged
    assert fit.names == ["alpha1", "omega", "beta1_plus", "beta1_minus"]
    for est, asd, truth in zip(fit.estimates, fit.asd, theta.to_list()):
        assert abs(est - truth) < 5 * asd, (est, truth, asd)

    tests = aldar.asymmetry_tests(y, 1)
    assert tests["wald"]["p_value"] < 0.01
    assert set(tests) >= {"wald", "lm", "qlr"}

    q = fit.portmanteau(6)
    assert q["df"] == 12 and 0.0 <= q["p_value"] <= 1.0

    sel = aldar.select_order(y, 3)
    assert sel["p_hat_bic2"] == 1

    bt = aldar.backtest(y, 1900, 1, taus=[0.05], refit_every=20)
    assert bt["reports"][0]["n_forecasts"] == 100

    b = aldar.stationarity_boundary([0.0], kappa=1.0)
    assert abs(b[0] - math.sqrt(math.pi / 2)) < 1e-3

    try:
        aldar.ModelParams([0.3], -1.0, [0.2], [0.6])
    except ValueError:
        pass
    else:
        raise AssertionError("negative omega accepted")

    print("aldar", aldar.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
