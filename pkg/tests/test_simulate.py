import numpy as np
import pytest
from scipy import stats

import alphatest.simulate as sim
from alphatest.errors import CellFailureError, InvalidArgumentError
from alphatest.simulate import (
    MARKET_EX1, ArGarchParams, SimConfig, gen_alphas, gen_ar_garch, gen_error_panel,
    gen_factors, gen_loadings, gen_state, preset_configs, replication_rng, run_experiment,
)


def test_degenerate_garch_is_iid_normal():
    params = ArGarchParams(mean=0.7, ar=0.0, omega=2.0, beta=0.0, alpha=0.0)
    f = gen_ar_garch(params, 50, 25, np.random.default_rng(3))
    z = np.random.default_rng(3).standard_normal((75, 1))[25:, 0]
    np.testing.assert_allclose(f, 0.7 + np.sqrt(2.0) * z, rtol=1e-14)


def test_market_factor_long_run_mean():
    f = gen_ar_garch(MARKET_EX1, 100_000, 25, np.random.default_rng(11))
    # AR(1) long-run variance inflation (1 + phi) / (1 - phi)
    se = f.std() / np.sqrt(f.size) * np.sqrt(1.05 / 0.95)
    assert abs(f.mean() - 0.34) < 3 * se


def test_garch_deterministic():
    a = gen_ar_garch(MARKET_EX1, 200, 25, np.random.default_rng(5))
    b = gen_ar_garch(MARKET_EX1, 200, 25, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_example_two_variance_source():
    a = gen_factors(2, 300, 25, np.random.default_rng(1))
    b = gen_factors(2, 300, 25, np.random.default_rng(1), own_lag=True)
    assert a.shape == (300, 3)
    np.testing.assert_array_equal(a[:, 0], b[:, 0])
    assert not np.allclose(a[:, 1], b[:, 1])


def test_error_panel_single_asset():
    e = gen_error_panel(1, 20_000, "normal", np.random.default_rng(0))
    assert e.shape == (20_000, 1)
    assert abs(e.var() - 1) < 0.03


def test_error_panel_toeplitz_covariance():
    e = gen_error_panel(3, 100_000, "normal", np.random.default_rng(1))
    target = np.array([[1, .5, .25], [.5, 1, .5], [.25, .5, 1]])
    assert np.abs(np.cov(e.T) - target).max() < 0.02


def test_error_panel_exponential_moments():
    z = gen_error_panel(1, 100_000, "exponential", np.random.default_rng(2))[:, 0]
    assert abs(z.mean()) < 3 * z.std() / np.sqrt(z.size)
    assert abs(z.var() - 1) < 0.03
    assert stats.skew(z) > 1


def test_error_covariance_converges():
    target = 0.5 ** np.abs(np.subtract.outer(np.arange(10), np.arange(10)))
    dist = [np.linalg.norm(np.cov(gen_error_panel(10, T, "normal", np.random.default_rng(4)).T)
                           - target) for T in (1_000, 10_000)]
    assert dist[1] < dist[0]


def test_unknown_distribution():
    with pytest.raises(InvalidArgumentError):
        gen_error_panel(3, 10, "cauchy", np.random.default_rng(0))


class OnesRng:
    def standard_normal(self, size):
        return np.ones(size)


def test_arch_variance_recursion():
    # v_1^2 = 0.1 + 0.6 * 1 = 0.7, so xi_1 = sqrt(0.7) with unit shocks
    xi = gen_state(3, 0, OnesRng())
    assert xi[0] == pytest.approx(np.sqrt(0.7))
    assert xi[1] == pytest.approx(0.8 * np.sqrt(0.7) + np.sqrt(0.1 + 0.6 * 0.7))


def test_loadings_with_forced_state():
    rng = np.random.default_rng(0)
    ex1 = gen_loadings(1, 4, 10, 25, rng, state=np.zeros(10))
    assert ex1.shape == (4, 1, 10) and np.all(ex1 == 1.0)
    ex2 = gen_loadings(2, 3, 5, 25, rng, state=np.ones(5))
    np.testing.assert_allclose(ex2[:, :, 0], [[1.5, 0.6, 0.6]] * 3)


def test_alphas_null_and_zero_signal():
    rng = np.random.default_rng(0)
    a, s = gen_alphas(20, 50, 0, 5.0, rng)
    assert not a.any() and s.size == 0
    a, s = gen_alphas(20, 50, 20, 0.0, rng)
    assert not a.any() and s.size == 20


def test_alpha_time_average():
    N, T = 50, 400
    a, support = gen_alphas(N, T, 10, 3.0, np.random.default_rng(8))
    assert len(set(support)) == 10
    amp = a[support, -1]  # alpha_i at t = T
    np.testing.assert_allclose(a[support].mean(axis=1), amp * (T + 1) / (2 * T), rtol=1e-12)
    assert np.all(amp <= 3.0 * np.sqrt(np.log(N) / (T * 10)))
    off = np.setdiff1d(np.arange(N), support)
    assert not a[off].any()


def small_config(**kw):
    base = dict(n=30, t=120, replications=20, seed=99, knots=1)
    base.update(kw)
    return SimConfig(**base)


def test_experiment_reproducible():
    cfg = small_config()
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.to_csv() == b.to_csv()
    assert a.replications_to_csv() == b.replications_to_csv()


def test_experiment_independent_of_workers():
    cfg = small_config(replications=10)
    assert run_experiment(cfg, jobs=2).to_csv() == run_experiment(cfg, jobs=1).to_csv()


def test_replications_uncorrelated():
    cfg = small_config(replications=200)
    z = np.array([r.z for r in run_experiment(cfg).replications[cfg]])
    rho = np.corrcoef(z[:-1], z[1:])[0, 1]
    assert abs(rho) < 3 / np.sqrt(200)


def test_power_table_columns_and_se():
    table = run_experiment(small_config(replications=1))
    lines = table.to_csv().splitlines()
    assert lines[0] == "example,error_dist,n,t,s,c,test,rejections,reps,rate,se"
    assert len(lines) == 4 and all(line.endswith(",") for line in lines[1:])
    long = table.replications_to_csv().splitlines()
    assert long[0] == "example,error_dist,n,t,s,c,rep,test,p_value,knots_p"
    assert len(long) == 4


def test_standard_error_formula():
    table = run_experiment(small_config(replications=40))
    for row in table.rows:
        assert 0 <= row.rate <= 1
        assert row.se == pytest.approx(np.sqrt(row.rate * (1 - row.rate) / 40))


def test_failures_recorded_then_abort(monkeypatch):
    real = sim.run_replication

    def flaky(config, rep):
        if rep in bad:
            raise InvalidArgumentError("boom")
        return real(config, rep)

    monkeypatch.setattr(sim, "run_replication", flaky)
    bad = {3}
    cfg = small_config(replications=100)
    table = run_experiment(cfg)
    assert table.failures[cfg] == [(3, "InvalidArgumentError: boom")]
    assert table.rows[0].reps == 99
    bad = {3, 4}
    with pytest.raises(CellFailureError):
        run_experiment(cfg)


def test_presets():
    t1 = preset_configs("table1", scale=0.5)
    assert len(t1) == 12 and all(c.replications == 500 for c in t1)
    assert {(c.example, c.error_dist, c.n) for c in t1} == {
        (e, d, n) for e in (1, 2) for d in ("normal", "exponential") for n in (200, 500, 1000)}
    f1 = preset_configs("figure1")
    assert {(c.s, c.c) for c in f1 if c.error_dist == "normal"} == {
        (4, 4.0), (8, 4.0), (12, 4.0), (16, 4.0), (18, 7.0), (21, 7.0), (24, 7.0), (27, 7.0),
        (30, 10.0), (60, 10.0), (90, 10.0), (120, 10.0)}
    f2 = preset_configs("figure2")
    assert len(f2) == 2 * 3 * 21 and {c.example for c in f2} == {2}
    with pytest.raises(InvalidArgumentError):
        preset_configs("table9")


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        SimConfig(n=10, s=11)
    with pytest.raises(InvalidArgumentError):
        SimConfig(example=3)


def test_replication_streams_differ():
    a = replication_rng(1, 0).standard_normal(5)
    b = replication_rng(1, 1).standard_normal(5)
    assert not np.allclose(a, b)
