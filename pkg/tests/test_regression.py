import numpy as np
import pytest

from alphatest.errors import DegreesOfFreedomError, SingularDesignError
from alphatest.regression import compute_trace_estimator, fit_null_model
from alphatest.splines import build_design, make_knots

from oracles import dense_statistics


def small_problem(rng, T=40, N=3, d=1, p=1):
    f = rng.standard_normal((T, d)) + 0.3
    design = build_design(f, make_knots(T, p))
    R = rng.standard_normal((T, N)) + 0.2
    return R, design


def test_residuals_match_dense_projector(rng):
    R, design = small_problem(rng)
    fit = fit_null_model(R, design)
    ref = dense_statistics(R, design.Z, design.d, design.L)
    np.testing.assert_allclose(fit.residuals, ref["E"], atol=1e-12)
    np.testing.assert_allclose(fit.h, ref["h"], atol=1e-12)
    np.testing.assert_allclose(fit.sigma_diag, ref["sigma"], rtol=1e-12)
    assert fit.trace_sigma_sq_hat == pytest.approx(ref["trace"], rel=1e-10)


def test_exact_fit_is_flagged_degenerate(rng):
    R, design = small_problem(rng, N=4)
    R[:, 2] = design.Z @ rng.standard_normal(design.Z.shape[1])
    fit = fit_null_model(R, design)
    assert np.abs(fit.residuals[:, 2]).max() < 1e-10
    assert fit.degenerate.tolist() == [False, False, True, False]


def test_scaling_an_asset(rng):
    R, design = small_problem(rng)
    base = fit_null_model(R, design)
    R2 = R.copy()
    R2[:, 1] *= 5
    scaled = fit_null_model(R2, design)
    np.testing.assert_allclose(scaled.residuals[:, 1], 5 * base.residuals[:, 1], rtol=1e-10)
    assert scaled.sigma_diag[1] == pytest.approx(25 * base.sigma_diag[1], rel=1e-10)


def test_structural_invariants(rng):
    R, design = small_problem(rng, T=120, N=10, d=2, p=3)
    fit = fit_null_model(R, design)
    scale = np.linalg.norm(R)
    assert np.abs(design.Z.T @ fit.residuals).max() < 1e-8 * scale
    assert np.abs(design.Z.T @ fit.h).max() < 1e-8 * design.T
    assert abs(fit.h.sum() - fit.h @ fit.h) < 1e-8 * design.T
    x = rng.standard_normal(design.T)
    once = fit.annihilate(x)
    assert np.linalg.norm(fit.annihilate(once) - once) < 1e-9 * np.linalg.norm(x)
    assert np.all(fit.sigma_diag > 0)


def test_collinear_factor_raises(rng):
    f = rng.standard_normal((60, 1))
    f = np.hstack([f, 2 * f])
    design = build_design(f, make_knots(60, 1))
    with pytest.raises(SingularDesignError) as info:
        fit_null_model(rng.standard_normal((60, 3)), design)
    assert info.value.condition_number > 1e10


def test_dof_correction_switch(rng):
    R, design = small_problem(rng)
    a = fit_null_model(R, design)
    b = fit_null_model(R, design, dof_correction=True)
    T, k = design.T, design.n_params
    np.testing.assert_allclose(b.sigma_diag * (T - k), a.sigma_diag * (T - design.d - 1))


def test_trace_rank_one():
    T, d, L = 30, 1, 4
    E = np.zeros((T, 5))
    E[:, 2] = np.sin(np.arange(T))
    C = E - E.mean(axis=0)
    tr1 = np.sum(C ** 2) / T
    k = (1 + d) * L
    want = T ** 2 / ((T + k - 1) * (T - k)) * tr1 ** 2 * (1 - 1 / (T - k))
    assert compute_trace_estimator(E, d, L) == pytest.approx(want, rel=1e-12)


def test_trace_matches_dense(rng):
    E = rng.standard_normal((60, 4))
    T, d, L = 60, 1, 4
    C = E - E.mean(axis=0)
    S = C.T @ C / T
    k = (1 + d) * L
    want = T ** 2 / ((T + k - 1) * (T - k)) * (np.trace(S @ S) - np.trace(S) ** 2 / (T - k))
    assert compute_trace_estimator(E, d, L) == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("N", [5, 20, 50])
def test_gram_route_equivalence(rng, N):
    E = rng.standard_normal((80, N)) @ rng.standard_normal((N, N))
    C = E - E.mean(axis=0)
    S = C.T @ C / 80
    k = 2 * 4
    want = 80 ** 2 / ((80 + k - 1) * (80 - k)) * (np.trace(S @ S) - np.trace(S) ** 2 / (80 - k))
    assert compute_trace_estimator(E, 1, 4) == pytest.approx(want, rel=1e-8)


def test_trace_identity_covariance_monte_carlo():
    # Tr(Sigma^2) = N for identity covariance
    rng = np.random.default_rng(2024)
    N, T = 100, 500
    est = [compute_trace_estimator(rng.standard_normal((T, N)), 0, 1) for _ in range(200)]
    assert abs(np.mean(est) / N - 1) < 0.15


def test_trace_dof_error():
    with pytest.raises(DegreesOfFreedomError):
        compute_trace_estimator(np.ones((8, 3)), 1, 4)
