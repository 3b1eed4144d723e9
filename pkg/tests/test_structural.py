import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midas_svar.errors import NestingViolation, NonConvergence, SingularA, UnsupportedLayout
from midas_svar.layout import FrequencyLayout
from midas_svar.numerics import vec
from midas_svar.reduced_form import StackedDataset, estimate_ols
from midas_svar.structural import (
    HYPOTHESIS_BUNDLES,
    AbRestrictions,
    ab_loglik,
    ab_objective,
    build_recursive_midas_scheme,
    check_identification,
    cholesky_scheme,
    compile_pattern,
    estimate_identified,
    estimate_ml,
    identification_matrix,
    lr_test,
    named_scheme,
    recursive_midas_grids,
)

from .conftest import random_spd

# recursive mixed-frequency pattern for (i, vix) x 3 slots + k, slot-major; rows are equations
RECURSIVE_A = """
1 0 0 0 0 0 0
0 1 0 0 0 0 0
* * 1 0 0 0 0
* * 0 1 0 0 0
* * * * 1 0 0
* * * * 0 1 0
0 0 0 0 0 0 1
"""
RECURSIVE_B = """
* 0 0 0 0 0 0
* * 0 0 0 0 0
0 0 * 0 0 0 0
0 0 * * 0 0 0
0 0 0 0 * 0 0
0 0 0 0 * * 0
* * * * * * *
"""


def recursive_truth(rng):
    r = build_recursive_midas_scheme(FrequencyLayout(1, 2, 3))
    RA, rA, RB, rB = r.explicit()
    A0 = (RA @ (0.4 * rng.standard_normal(RA.shape[1])) + rA).reshape(7, 7, order="F")
    B0 = (RB @ (0.3 * rng.standard_normal(RB.shape[1])) + rB).reshape(7, 7, order="F")
    B0[np.diag_indices(7)] = np.abs(np.diag(B0)) + 0.5
    return r, A0, B0


def test_compile_pattern_cells():
    R = compile_pattern([["*", "0"], ["=a", "=a"]], "B")
    assert R.n_params == 4 and R.rank == 2
    assert R.satisfied_by(vec(np.array([[3.0, 0.0], [2.0, 2.0]])))
    assert not R.satisfied_by(vec(np.array([[3.0, 0.0], [2.0, 1.0]])))
    F = compile_pattern("1 *\n2.5 0")
    Rx, rx = F.explicit()
    np.testing.assert_array_equal(rx, [1, 2.5, 0, 0])
    assert Rx.shape == (4, 1)
    with pytest.raises(ValueError):
        compile_pattern([["*", "0"], ["*"]])
    with pytest.raises(ValueError):
        compile_pattern([["x", "0"], ["*", "*"]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 5))
def test_explicit_and_implicit_forms_agree(seed, n):
    rng = np.random.default_rng(seed)
    cells = rng.choice(["*", "0", "1", "=a", "=b"], size=(n, n))
    R = compile_pattern(cells.tolist())
    Rx, rx = R.explicit()
    g = rng.standard_normal(Rx.shape[1])
    assert np.all(np.abs(R.S @ (Rx @ g + rx) - R.s) <= 1e-10)
    assert Rx.shape[1] == R.n_free


def test_recursive_pattern_and_counts():
    L = FrequencyLayout(1, 2, 3)
    A, B = recursive_midas_grids(L)
    assert A == [row.split() for row in RECURSIVE_A.strip().splitlines()]
    assert B == [row.split() for row in RECURSIVE_B.strip().splitlines()]
    r = build_recursive_midas_scheme(L)
    assert (r.q_A, r.q_B, r.overid_dof) == (12, 16, 0)
    adj = build_recursive_midas_scheme(L, "adjacent")
    assert adj.q_A == 8 and adj.overid_dof == 4


def test_named_scheme_layout_checks():
    with pytest.raises(UnsupportedLayout):
        build_recursive_midas_scheme(FrequencyLayout(1, 1, 3))
    with pytest.raises(KeyError):
        named_scheme("nope", FrequencyLayout(1, 2, 3))
    assert named_scheme("cholesky", FrequencyLayout(1, 1, 3)).n == 4


@pytest.mark.parametrize("name,dof", list(zip(HYPOTHESIS_BUNDLES, [6, 9, 4, 2, 2])))
def test_bundle_dof(name, dof):
    L = FrequencyLayout(1, 2, 3)
    base = build_recursive_midas_scheme(L)
    assert base.added_rank(named_scheme(name, L)) == dof


def test_cholesky_identified(rng):
    rep = check_identification(cholesky_scheme(3), random_spd(rng, 3))
    assert rep.identified and rep.overid_dof == 0 and rep.required_rank == 18


def test_under_identified_examples(rng):
    sigma = random_spd(rng, 3)
    # q = 5 = n(n+1)/2 - 1 but the B(1,2) entry duplicates B(2,1) in the covariance map
    r = AbRestrictions.from_patterns(["1 0 0", "0 1 0", "0 0 1"], ["* * 0", "* * 0", "0 0 *"])
    rep = check_identification(r, sigma)
    assert r.free_params == 5 and not rep.identified and rep.jacobian_rank == 17


def test_recursive_identified_and_extra_free_parameter_fails(rng):
    r, A0, B0 = recursive_truth(rng)
    M = np.linalg.solve(A0, B0)
    sigma = M @ M.T
    rep = check_identification(r, sigma)
    assert rep.identified and rep.jacobian_rank == 98 and rep.overid_dof == 0
    A = [row.split() for row in RECURSIVE_A.strip().splitlines()]
    A[6][0] = "*"
    loose = AbRestrictions.from_patterns(A, [row.split() for row in RECURSIVE_B.strip().splitlines()])
    rep = check_identification(loose, sigma)
    assert loose.free_params == 29 and not rep.identified


def test_singular_a_rejected():
    r = cholesky_scheme(2)
    with pytest.raises(SingularA):
        identification_matrix(np.zeros((2, 2)), np.eye(2), r)


def test_objective_matches_gaussian_density(rng):
    n, T = 3, 40
    A = np.eye(n) + 0.2 * rng.standard_normal((n, n))
    B = np.tril(rng.standard_normal((n, n))) + 2 * np.eye(n)
    U = rng.standard_normal((T, n))
    S = U.T @ U / T
    Sig = np.linalg.solve(A, B) @ np.linalg.solve(A, B).T
    from scipy.stats import multivariate_normal

    ref = multivariate_normal(np.zeros(n), Sig).logpdf(U).sum()
    assert ab_loglik(A, B, S, T) == pytest.approx(ref, rel=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2024)
    L = FrequencyLayout(1, 2, 3)
    r = build_recursive_midas_scheme(L)
    RA, rA, RB, rB = r.explicit()
    for _ in range(20):
        S = random_spd(rng, 7)
        g = np.concatenate([0.3 * rng.standard_normal(RA.shape[1]), rng.standard_normal(RB.shape[1])])
        A, B = r.unpack(g)
        f, dA, dB = ab_objective(A, B, S)
        grad = np.concatenate([RA.T @ vec(dA), RB.T @ vec(dB)])
        fd = np.empty_like(g)
        for i in range(g.size):
            h = 1e-6 * max(1.0, abs(g[i]))
            e = np.zeros_like(g)
            e[i] = h
            fd[i] = (ab_objective(*r.unpack(g + e), S)[0] - ab_objective(*r.unpack(g - e), S)[0]) / (2 * h)
        assert np.linalg.norm(grad - fd) <= 1e-5 * max(1.0, np.linalg.norm(grad))


def test_cholesky_ml_recovers_closed_form(rng):
    for _ in range(10):
        S = random_spd(rng, 4)
        ab = estimate_ml(S, cholesky_scheme(4), T=100)
        np.testing.assert_allclose(ab.B, np.linalg.cholesky(S), atol=1e-6)
        np.testing.assert_allclose(ab.implied_sigma, S, atol=1e-6 * np.linalg.norm(S))
        assert np.all(np.diag(ab.B) >= 0)


def test_cholesky_ml_start_invariance(rng):
    S = random_spd(rng, 3)
    r = cholesky_scheme(3)
    ref = estimate_ml(S, r, T=50)
    for _ in range(5):
        B0 = np.tril(rng.standard_normal((3, 3))) + 2 * np.diag(rng.choice([-1, 1], 3))
        ab = estimate_ml(S, r, T=50, start=(np.eye(3), B0))
        np.testing.assert_allclose(ab.B, ref.B, atol=1e-6)
        assert ab.loglik == pytest.approx(ref.loglik, abs=1e-6)


def test_sign_normalization_respects_equalities():
    # B(2,1) = B(2,2) tie: flipping column 2 alone would break the equality
    r = AbRestrictions.from_patterns(["1 0", "0 1"], ["* 0", "=a =a"])
    S = np.array([[1.0, -0.5], [-0.5, 2.0]])
    ab = estimate_ml(S, r, T=100)
    assert r.B.satisfied_by(vec(ab.B))
    assert ab.B[0, 0] >= 0


def test_nested_schemes_order_loglik():
    rng = np.random.default_rng(5)
    r, A0, B0 = recursive_truth(rng)
    M = np.linalg.solve(A0, B0)
    U = rng.standard_normal((400, 7)) @ M.T
    fit = estimate_ols(StackedDataset(U), 1)
    base = estimate_identified(fit, r)
    assert base.identification.identified
    L = FrequencyLayout(1, 2, 3)
    for name in HYPOTHESIS_BUNDLES:
        rr = named_scheme(name, L)
        ab = estimate_ml(fit, rr, start=(base.A, base.B))
        assert ab.loglik <= base.loglik + 1e-6
    # just-identified structure fits the reduced-form covariance exactly
    assert base.loglik == pytest.approx(fit.loglik, abs=1e-6)


def test_nonconvergence_reported(rng):
    S = random_spd(rng, 4)
    with pytest.raises(NonConvergence):
        estimate_ml(S, cholesky_scheme(4), T=100, start=(np.eye(4), 10 * np.eye(4)), max_iter=1)


def test_lr_test_examples():
    res = lr_test(-132.114, 37.881, 36)
    assert res.statistic == pytest.approx(-2 * (-132.114 - 37.881), abs=1e-9)
    assert res.pvalue < 1e-12
    same = lr_test(5.0, 5.0, 3)
    assert same.statistic == 0.0 and same.pvalue == 1.0
    # from (statistic, dof): l_u = 0, l_r = -stat/2
    assert lr_test(-11.287 / 2, 0.0, 4).pvalue == pytest.approx(0.02, abs=0.005)
    # chi-square with two degrees of freedom has survival function exp(-x/2)
    assert lr_test(-1.178 / 2, 0.0, 2).pvalue == pytest.approx(np.exp(-0.589), rel=1e-12)
    assert lr_test(-13.915 / 2, 0.0, 2).pvalue == pytest.approx(0.00, abs=0.005)


def test_lr_test_errors():
    with pytest.raises(NestingViolation):
        lr_test(1.0, 0.0, 2)
    assert lr_test(1e-8, 0.0, 2).statistic == 0.0
    with pytest.raises(ValueError):
        lr_test(0.0, 1.0, 0)
