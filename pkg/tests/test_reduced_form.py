import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midas_svar.errors import InfeasibleRestrictions, InsufficientSample, RankDeficientRegressors
from midas_svar.layout import AggregationScheme, reduced_equivalence_restrictions
from midas_svar.montecarlo import _SMALL_A1, builtin_dgp, simulate
from midas_svar.numerics import RngStream
from midas_svar.reduced_form import (
    StackedDataset,
    companion_spectral_radius,
    estimate_ols,
    estimate_restricted,
    information_criteria,
    select_order,
)
from midas_svar.restrictions import LinearRestrictions

from .conftest import random_spd, random_stable


def simulate_var(rng, A, sigma, T, c=None, burn=200):
    n = A.shape[0]
    L = np.linalg.cholesky(sigma)
    c = np.zeros(n) if c is None else c
    X = np.zeros((T + burn, n))
    for t in range(1, T + burn):
        X[t] = c + A @ X[t - 1] + L @ rng.standard_normal(n)
    return X[burn:]


def test_ols_recovers_small_model1_at_large_T():
    data = simulate(builtin_dgp("small-1-h1", T=100_000), RngStream(7, 0))
    fit = estimate_ols(data, 1)
    assert np.abs(fit.lag_coeffs[0] - _SMALL_A1).max() < 0.02


def test_ols_consistency_against_asymptotic_standard_errors():
    from scipy.linalg import solve_discrete_lyapunov

    from midas_svar.montecarlo import _SMALL_SIGMA

    T = 100_000
    data = simulate(builtin_dgp("small-1-h1", T=T), RngStream(7, 0))
    fit = estimate_ols(data, 1)
    G = solve_discrete_lyapunov(_SMALL_A1, _SMALL_SIGMA)
    se = np.sqrt(np.outer(np.diag(_SMALL_SIGMA), np.diag(np.linalg.inv(G))) / T)
    assert np.all(np.abs(fit.lag_coeffs[0] - _SMALL_A1) < 4.5 * se)
    assert np.abs(fit.lag_coeffs[0][:3] - _SMALL_A1[:3]).max() < 0.02


def test_ols_matches_equation_by_equation(rng):
    Y = simulate_var(rng, random_stable(rng, 3), random_spd(rng, 3), 300)
    data = StackedDataset(Y)
    fit = estimate_ols(data, 2)
    X = np.hstack([np.ones((298, 1)), Y[1:-1], Y[:-2]])
    for i in range(3):
        b, *_ = np.linalg.lstsq(X, Y[2:, i], rcond=None)
        np.testing.assert_allclose(fit.coef[i], b, atol=1e-10)
    E = fit.residuals
    np.testing.assert_allclose(fit.sigma_u, E.T @ E / 298, atol=1e-14)
    np.testing.assert_array_equal(fit.sigma_u, fit.sigma_u.T)
    assert np.abs(E.mean(axis=0)).max() < 1e-8
    assert fit.effective_T == 298


def test_white_noise_lags_near_zero(rng):
    Y = rng.standard_normal((5000, 2))
    fit = estimate_ols(StackedDataset(Y), 1)
    _, X = Y[1:], np.hstack([np.ones((4999, 1)), Y[:-1]])
    XtXi = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.outer(np.diag(fit.sigma_u), np.diag(XtXi)[1:]))
    assert np.all(np.abs(fit.lag_coeffs[0]) < 3 * se)


def test_constant_data_is_flagged():
    with pytest.raises(RankDeficientRegressors):
        estimate_ols(StackedDataset(np.ones((50, 2))), 1)


def test_insufficient_sample(rng):
    with pytest.raises(InsufficientSample):
        estimate_ols(StackedDataset(rng.standard_normal((5, 3))), 1)


def test_loglik_constant_and_kernel(rng):
    fit = estimate_ols(StackedDataset(rng.standard_normal((200, 2))), 1)
    T, n = fit.effective_T, 2
    ld = np.linalg.slogdet(fit.sigma_u)[1]
    assert fit.loglik_kernel == pytest.approx(-0.5 * T * ld, rel=1e-12)
    assert fit.loglik == pytest.approx(-0.5 * T * (n * np.log(2 * np.pi) + ld + n), rel=1e-12)


def test_empty_restrictions_equal_ols(rng):
    data = simulate(builtin_dgp("small-2-h1"), RngStream(1, 0))
    a = estimate_ols(data, 1)
    b = estimate_restricted(data, 1, LinearRestrictions.empty(a.coef_layout.n_params))
    np.testing.assert_allclose(a.coef, b.coef, atol=1e-10)
    assert abs(a.loglik - b.loglik) < 1e-10


def test_four_zero_restrictions_remove_four_parameters(small_layout):
    data = simulate(builtin_dgp("small-1-h0"), RngStream(2, 0))
    R = reduced_equivalence_restrictions(small_layout, AggregationScheme("first"))
    u = estimate_ols(data, 1)
    r = estimate_restricted(data, 1, R)
    assert u.n_free - r.n_free == 4
    assert R.satisfied_by(r.theta)
    assert r.loglik <= u.loglik + 1e-8


def test_ml_iteration_beats_single_ls_step(small_layout):
    data = simulate(builtin_dgp("small-2-h1"), RngStream(3, 0))
    R = reduced_equivalence_restrictions(small_layout, AggregationScheme("sum"))
    ml = estimate_restricted(data, 1, R, method="ml")
    ls = estimate_restricted(data, 1, R, method="ls")
    assert ml.loglik >= ls.loglik - 1e-9
    assert R.satisfied_by(ml.theta) and R.satisfied_by(ls.theta)


def test_nonzero_fixed_values(rng):
    Y = simulate_var(rng, 0.5 * np.eye(2), np.eye(2), 400)
    data = StackedDataset(Y)
    n_params = data.coef_layout(1).n_params
    S = np.zeros((1, n_params))
    S[0, 2] = 1.0  # A_1[0, 0] in vec order (intercept column first)
    fit = estimate_restricted(data, 1, LinearRestrictions(n_params, S, [0.25]))
    assert fit.lag_coeffs[0][0, 0] == pytest.approx(0.25, abs=1e-12)


def test_infeasible_restrictions(rng):
    data = StackedDataset(rng.standard_normal((100, 2)))
    n_params = data.coef_layout(1).n_params
    S = np.zeros((2, n_params))
    S[:, 3] = 1.0
    with pytest.raises(InfeasibleRestrictions):
        estimate_restricted(data, 1, LinearRestrictions(n_params, S, [0.0, 1.0]))
    S = np.zeros((2, n_params))
    S[0, 3] = S[0, 4] = 1.0
    S[1, 3] = S[1, 4] = 2.0
    with pytest.raises(InfeasibleRestrictions):
        estimate_restricted(data, 1, LinearRestrictions(n_params, S, [0.0, 1.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_restricted_never_beats_unrestricted(seed, q):
    rng = np.random.default_rng(seed)
    data = StackedDataset(simulate_var(rng, random_stable(rng, 3, 0.7), random_spd(rng, 3), 150))
    n_params = data.coef_layout(1).n_params
    S = rng.standard_normal((q, n_params))
    u = estimate_ols(data, 1)
    r = estimate_restricted(data, 1, LinearRestrictions(n_params, S))
    assert r.loglik <= u.loglik + 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_relabeling_equivariance(seed):
    rng = np.random.default_rng(seed)
    Y = simulate_var(rng, random_stable(rng, 3, 0.7), random_spd(rng, 3), 120)
    perm = rng.permutation(3)
    a = estimate_ols(StackedDataset(Y), 2)
    b = estimate_ols(StackedDataset(Y[:, perm]), 2)
    for A, Bm in zip(a.lag_coeffs, b.lag_coeffs):
        np.testing.assert_allclose(A[np.ix_(perm, perm)], Bm, atol=1e-9)
    np.testing.assert_allclose(a.sigma_u[np.ix_(perm, perm)], b.sigma_u, atol=1e-12)
    assert a.loglik == pytest.approx(b.loglik, rel=1e-10)


def test_intercept_irrelevant_for_mean_zero_data(rng):
    Y = simulate_var(rng, random_stable(rng, 2, 0.5), np.eye(2), 500)
    Y = Y - Y.mean(axis=0)
    # make the lagged block mean-zero too by construction: demean rows 1..T-1 and 0..T-2 jointly
    Y = np.vstack([Y, -Y[::-1]])  # symmetric extension keeps means at zero
    a = estimate_ols(StackedDataset(Y), 1, intercept=True)
    b = estimate_ols(StackedDataset(Y), 1, intercept=False)
    Yt, Yl = Y[1:], Y[:-1]
    if np.abs(Yt.mean(0)).max() < 1e-12 and np.abs(Yl.mean(0)).max() < 1e-12:
        np.testing.assert_allclose(a.lag_coeffs[0], b.lag_coeffs[0], atol=1e-8)
    else:
        assert np.abs(a.lag_coeffs[0] - b.lag_coeffs[0]).max() < 1e-2


def test_information_criteria_identity_and_common_sample(rng):
    data = StackedDataset(simulate_var(rng, random_stable(rng, 2, 0.6), np.eye(2), 300))
    rows = information_criteria(data, 4)
    assert [r.p for r in rows] == [1, 2, 3, 4]
    for r in rows:
        assert r.aic - r.bic == pytest.approx(r.n_params * (2 - np.log(296)), rel=1e-12)
        assert r.n_params == 2 * (1 + 2 * r.p)
    assert len(information_criteria(data, 1)) == 1
    with pytest.raises(ValueError):
        information_criteria(data, 0)


def test_bic_selects_true_order():
    hits = 0
    A = np.array([[0.5, 0.1], [0.2, 0.4]])
    for s in range(200):
        rng = np.random.default_rng(1000 + s)
        data = StackedDataset(simulate_var(rng, A, np.eye(2), 2000))
        hits += select_order(information_criteria(data, 4), "bic") == 1
    assert hits >= 190


def test_spectral_radius_cases():
    assert companion_spectral_radius([np.zeros((3, 3))]) == 0.0
    assert companion_spectral_radius([np.eye(2)]) == pytest.approx(1.0)
    rho = companion_spectral_radius([_SMALL_A1])
    # frozen eigen-solve of the printed matrix
    assert rho == pytest.approx(float(np.abs(np.linalg.eigvals(_SMALL_A1)).max()))
    assert rho < 1.0
    # second-order scalar AR: roots of z^2 - 0.5 z - 0.3
    assert companion_spectral_radius([np.array([[0.5]]), np.array([[0.3]])]) == pytest.approx(
        (0.5 + np.sqrt(0.25 + 1.2)) / 2
    )
