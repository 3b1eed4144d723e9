"""Monte Carlo experiments for the equivalence LR tests.

Built-in data-generating processes cover a small model (one monthly and one
quarterly variable) and a medium model (three monthly, one quarterly), each
with three parameterizations under the alternative and the matching null.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .errors import ExplosiveDgp, MidasSvarError, TestSpecMismatch, TooManyFailures, UnknownDgp
from .layout import AggregationScheme, CoefLayout, FrequencyLayout, reduced_equivalence_restrictions
from .numerics import RngStream, cholesky, nearest_pd
from .parallel import indexed_map
from .reduced_form import StackedDataset, companion_spectral_radius, estimate_ols
from .structural import estimate_ml, lr_test, named_scheme

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# parameter matrices

_SMALL_A1 = np.array([
    [-0.066, -0.344, 1.398, 0.003],
    [-0.319, -0.352, 1.641, 0.003],
    [-0.505, -0.248, 1.727, 0.003],
    [-4.005, 0.340, 3.276, 0.524],
])
_SMALL_SIGMA = np.array([
    [0.029, 0.051, 0.065, 0.385],
    [0.051, 0.119, 0.153, 0.873],
    [0.065, 0.153, 0.219, 0.935],
    [0.385, 0.873, 0.935, 94.231],
])
_SMALL_A2 = np.array([
    [0.3, 0.1, 0.1, 0.0],
    [0.1, 0.2, 0.3, 0.0],
    [0.1, 0.1, 0.4, 0.0],
    [0.0, 0.1, 0.1, 0.5],
])
_SMALL_A3 = np.array([
    [0.3, 0.03, 0.08, 0.0],
    [0.1, 0.2, 0.3, 0.0],
    [0.1, 0.1, 0.4, 0.0],
    [0.0, 0.02, 0.01, 0.5],
])
# printed to three decimals; the rounding leaves two tiny negative eigenvalues
_MEDIUM_SIGMA_PRINTED = np.array([
    [0.028, -0.004, -0.001, 0.046, -0.003, 0.000, 0.058, -0.005, -0.001, 0.204],
    [-0.004, 0.023, 0.001, -0.003, 0.022, 0.001, 0.001, 0.020, 0.001, -0.285],
    [-0.001, 0.001, 0.000, -0.001, 0.002, 0.000, 0.000, 0.002, 0.000, 0.005],
    [0.046, -0.003, -0.001, 0.102, -0.003, -0.001, 0.132, -0.008, -0.001, 0.350],
    [-0.003, 0.022, 0.002, -0.003, 0.045, 0.003, 0.001, 0.041, 0.003, -0.438],
    [0.000, 0.001, 0.000, -0.001, 0.003, 0.001, 0.000, 0.003, 0.001, -0.011],
    [0.058, 0.001, 0.000, 0.132, 0.001, 0.000, 0.193, -0.006, -0.001, 0.289],
    [-0.005, 0.020, 0.002, -0.008, 0.041, 0.003, -0.006, 0.051, 0.004, -0.389],
    [-0.001, 0.001, 0.000, -0.001, 0.003, 0.001, -0.001, 0.004, 0.001, -0.025],
    [0.204, -0.285, 0.005, 0.350, -0.438, -0.011, 0.289, -0.389, -0.025, 82.278],
])
MEDIUM_SIGMA_FLOOR = 1e-5

SMALL_LAYOUT = FrequencyLayout(n_low=1, n_high=1, m=3, p=1, high_names=("h",), low_names=("k",))
MEDIUM_LAYOUT = FrequencyLayout(n_low=1, n_high=3, m=3, p=1, high_names=("h0", "h1", "h2"), low_names=("k",))
FIRST = AggregationScheme("first")

DEFAULT_T = 109
DEFAULT_BURN_IN = 200


@dataclass
class DgpSpec:
    layout: FrequencyLayout
    lags: list
    sigma_u: np.ndarray
    intercept: np.ndarray | None = None
    T: int = DEFAULT_T
    burn_in: int = DEFAULT_BURN_IN
    name: str = "custom"
    approximate: bool = False
    note: str = ""

    def __post_init__(self):
        self.lags = [np.asarray(A, dtype=float) for A in self.lags]
        self.sigma_u = np.asarray(self.sigma_u, dtype=float)
        n = self.layout.n_stacked
        if self.intercept is None:
            self.intercept = np.zeros(n)
        self.intercept = np.asarray(self.intercept, dtype=float)
        if any(A.shape != (n, n) for A in self.lags) or self.sigma_u.shape != (n, n):
            raise ValueError("DGP matrices do not match the layout dimension")

    @property
    def p(self) -> int:
        return len(self.lags)


def null_projection(A: np.ndarray, sigma: np.ndarray, keep: np.ndarray):
    """Best linear predictor of ``x(t)`` from the ``keep`` components of ``x(t-1)``.

    Returns ``(A_r, sigma_r)``: a lag matrix whose nonzero columns are the kept
    ones, and the matching innovation covariance, both computed from the
    stationary second moments of the VAR(1) ``(A, sigma)``. The result is a
    stationary process satisfying zero restrictions on the dropped columns.
    """
    G0 = solve_discrete_lyapunov(A, sigma)
    S = np.eye(A.shape[0])[keep]
    W = A @ G0 @ S.T @ np.linalg.inv(S @ G0 @ S.T)
    A_r = W @ S
    D = A - A_r
    sig_r = sigma + D @ G0 @ D.T
    return A_r, 0.5 * (sig_r + sig_r.T)


def _zero_restricted(A: np.ndarray, layout: FrequencyLayout) -> np.ndarray:
    """Set the entries that first-observation equivalence restricts to zero."""
    n = layout.n_stacked
    restr = reduced_equivalence_restrictions(layout, FIRST, CoefLayout(n, 1, intercept=False))
    theta = A.ravel(order="F").copy()
    theta[np.argmax(restr.S != 0, axis=1)] = 0.0
    return theta.reshape((n, n), order="F")


def _kept_lag_columns(layout: FrequencyLayout) -> np.ndarray:
    keep = [layout.high_index(v, 1) for v in range(layout.n_high)]
    keep += [layout.low_index(v) for v in range(layout.n_low)]
    return np.array(keep)


def _medium_from_small(A: np.ndarray) -> np.ndarray:
    """Lift a 4x4 small-model matrix to the three-variable medium layout.

    Each monthly variable gets the slot dynamics of the small model, the
    quarterly variable enters every monthly equation as in the small model,
    and the quarterly equation loads on the average of the monthly variables.
    """
    m, nh = 3, 3
    P, a_hl, a_lh, a_ll = A[:m, :m], A[:m, m], A[m, :m], A[m, m]
    out = np.zeros((m * nh + 1, m * nh + 1))
    out[: m * nh, : m * nh] = np.kron(P, np.eye(nh))
    out[: m * nh, m * nh] = np.kron(a_hl, np.ones(nh))
    out[m * nh, : m * nh] = np.kron(a_lh, np.ones(nh) / nh)
    out[m * nh, m * nh] = a_ll
    return out


def medium_sigma() -> np.ndarray:
    return nearest_pd(_MEDIUM_SIGMA_PRINTED, MEDIUM_SIGMA_FLOOR)


DGP_NAMES = tuple(
    f"{size}-{k}-{h}" for size in ("small", "medium") for k in (1, 2, 3) for h in ("h1", "h0")
)


def builtin_dgp(name: str, T: int = DEFAULT_T, burn_in: int = DEFAULT_BURN_IN) -> DgpSpec:
    """Named data-generating process; see the module docstring."""
    try:
        size, k, h = name.split("-")
        k = int(k)
    except ValueError:
        raise UnknownDgp(f"unknown DGP {name!r}") from None
    if size not in ("small", "medium") or k not in (1, 2, 3) or h not in ("h0", "h1"):
        raise UnknownDgp(f"unknown DGP {name!r}")
    small = {1: _SMALL_A1, 2: _SMALL_A2, 3: _SMALL_A3}[k]
    if size == "small":
        layout, A, sigma = SMALL_LAYOUT, small.copy(), _SMALL_SIGMA.copy()
    else:
        layout, A, sigma = MEDIUM_LAYOUT, _medium_from_small(small), medium_sigma()
    approximate, note = False, ""
    if h == "h0":
        if k == 1:
            A, sigma = null_projection(A, sigma, _kept_lag_columns(layout))
            approximate = True
            note = "approximate-H0: projection of the alternative onto the restricted lag set"
        else:
            A = _zero_restricted(A, layout)
    return DgpSpec(layout, [A], sigma, None, T, burn_in, name, approximate, note)


def simulate(dgp: DgpSpec, rng) -> StackedDataset:
    """``x(t) = c + sum_i A_i x(t-i) + L z(t)`` from zero initial values; the burn-in is dropped."""
    rho = companion_spectral_radius(dgp.lags)
    if rho >= 1.0:
        raise ExplosiveDgp(f"companion spectral radius {rho:.4f} >= 1")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    L = cholesky(dgp.sigma_u)
    n, p = dgp.layout.n_stacked, dgp.p
    total = dgp.burn_in + dgp.T
    U = gen.standard_normal((total, n)) @ L.T
    X = np.zeros((total + p, n))
    for t in range(total):
        x = dgp.intercept + U[t]
        for i, A in enumerate(dgp.lags, start=1):
            x = x + A @ X[p + t - i]
        X[p + t] = x
    return StackedDataset(X[p + dgp.burn_in :], layout=dgp.layout)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class TestSpec:
    """Which LR test an experiment runs.

    ``kind="reduced"``: reduced-form equivalence under ``scheme``.
    ``kind="ab"``: structural LR of ``restricted`` against ``unrestricted``
    (named schemes), both estimated on the unrestricted reduced form.
    """

    kind: str = "reduced"
    scheme: str = "first"
    p: int = 1
    intercept: bool = True
    unrestricted: str = ""
    restricted: str = ""

    __test__ = False

    def label(self) -> str:
        if self.kind == "reduced":
            return f"reduced:{self.scheme}:p={self.p}"
        return f"ab:{self.restricted}|{self.unrestricted}:p={self.p}"


@dataclass
class McResult:
    pvalues: np.ndarray
    statistics: np.ndarray
    failures: int
    label: str
    seed: int
    R: int
    test: TestSpec = field(default_factory=TestSpec)
    dof: int = 0
    approximate: bool = False
    replications: np.ndarray | None = None

    @property
    def rejected_replications(self) -> int:
        return self.failures


@dataclass
class _McContext:
    dgp: DgpSpec
    test: TestSpec
    seed: int
    extra: dict = field(default_factory=dict)


def _run_test(data: StackedDataset, test: TestSpec, extra: dict):
    if test.kind == "reduced":
        from .equivalence import test_reduced_equivalence

        return test_reduced_equivalence(data, test.p, AggregationScheme.parse(test.scheme), intercept=test.intercept)
    if test.kind == "ab":
        fit = estimate_ols(data, test.p, test.intercept)
        ru, rr = extra["unrestricted"], extra["restricted"]
        ab_u = estimate_ml(fit, ru)
        ab_r = estimate_ml(fit, rr, start=(ab_u.A, ab_u.B))
        return lr_test(ab_r.loglik, ab_u.loglik, extra["dof"])
    raise ValueError(f"unknown test kind {test.kind!r}")


def _replicate(ctx: _McContext, rep: int):
    try:
        data = simulate(ctx.dgp, RngStream(ctx.seed, rep))
        res = _run_test(data, ctx.test, ctx.extra)
        return res.statistic, res.pvalue, res.dof
    except (MidasSvarError, np.linalg.LinAlgError) as exc:
        logger.debug("replication %d failed: %s", rep, exc)
        return None


def resolve_ab_schemes(test: TestSpec, layout: FrequencyLayout, custom: dict | None = None) -> dict:
    custom = custom or {}
    ru = custom.get(test.unrestricted) or named_scheme(test.unrestricted, layout)
    rr = custom.get(test.restricted) or named_scheme(test.restricted, layout)
    return {"unrestricted": ru, "restricted": rr, "dof": ru.added_rank(rr)}


def run_experiment(
    dgp: DgpSpec,
    R: int,
    test: TestSpec | None = None,
    seed: int = 0,
    workers: int = 1,
    schemes: dict | None = None,
    max_failure_rate: float = 0.05,
) -> McResult:
    """Simulate ``R`` samples (replication ``r`` uses stream ``r``) and collect LR p-values."""
    if R < 100:
        raise ValueError("R must be >= 100")
    test = test or TestSpec()
    extra = resolve_ab_schemes(test, dgp.layout, schemes) if test.kind == "ab" else {}
    ctx = _McContext(dgp, test, seed, extra)
    out = indexed_map(_replicate, ctx, R, workers)
    idx = np.array([r for r, o in enumerate(out) if o is not None], dtype=int)
    ok = [out[r] for r in idx]
    failures = R - len(ok)
    if failures > max_failure_rate * R:
        raise TooManyFailures(f"{failures} of {R} replications failed")
    stats = np.array([o[0] for o in ok])
    pv = np.array([o[1] for o in ok])
    dof = ok[0][2] if ok else 0
    return McResult(pv, stats, failures, f"{dgp.name}|{test.label()}", seed, R, test, dof, dgp.approximate, idx)


# ---------------------------------------------------------------------------
# p-value plots


def pvalue_grid() -> np.ndarray:
    """The 215 evaluation points: 0.001..0.010, 0.015..0.990 by 0.005, 0.991..0.999."""
    lo = np.arange(1, 11) / 1000.0
    mid = np.arange(15, 995, 5) / 1000.0
    hi = np.arange(991, 1000) / 1000.0
    return np.round(np.concatenate([lo, mid, hi]), 3)


@dataclass
class EdfCurve:
    grid: np.ndarray
    edf_values: np.ndarray


@dataclass
class SizePowerCurve:
    grid: np.ndarray
    size: np.ndarray  # EDF of null p-values
    power: np.ndarray  # EDF of alternative p-values


def edf(pvalues, grid) -> np.ndarray:
    pv = np.sort(np.asarray(pvalues, dtype=float))
    return np.searchsorted(pv, grid, side="right") / pv.size


def pvalue_plot(result) -> EdfCurve:
    pv = result.pvalues if isinstance(result, McResult) else np.asarray(result, dtype=float)
    if pv.size == 0:
        raise ValueError("no p-values")
    g = pvalue_grid()
    return EdfCurve(g, edf(pv, g))


def size_power_curve(null_result: McResult, alt_result: McResult) -> SizePowerCurve:
    if null_result.test != alt_result.test:
        raise TestSpecMismatch(f"{null_result.test.label()} vs {alt_result.test.label()}")
    g = pvalue_grid()
    return SizePowerCurve(g, edf(null_result.pvalues, g), edf(alt_result.pvalues, g))


def power_at_size(curve: SizePowerCurve, size: float) -> float:
    """Power at a given true size, interpolating the size-power curve linearly."""
    x = np.concatenate([[0.0], curve.size, [1.0]])
    y = np.concatenate([[0.0], curve.power, [1.0]])
    ux = np.unique(x)
    uy = np.array([y[x == v].max() for v in ux])
    return float(np.interp(size, ux, uy))


def rejection_rates(result: McResult, levels=(0.01, 0.05, 0.10)) -> dict:
    return {float(a): float(np.mean(result.pvalues < a)) for a in levels}


def dkw_epsilon(R: int, alpha: float = 0.01) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band for an EDF of ``R`` draws."""
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * R)))
