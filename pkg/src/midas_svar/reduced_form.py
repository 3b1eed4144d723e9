"""Least-squares / Gaussian ML estimation of the stacked reduced-form VAR.

The model for the stacked vector ``x(t)`` (one row per low-frequency period)
is ``x(t) = c + A_1 x(t-1) + ... + A_p x(t-p) + C z(t) + u(t)`` with an
unrestricted error covariance. Coefficients are collected in the ``n x K``
matrix ``Pi = [c | A_1 .. A_p | C]``; restrictions act on ``vec(Pi)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSample, NotPositiveDefinite, RankDeficientRegressors
from .layout import CoefLayout, FrequencyLayout
from .numerics import logdet_pd, numerical_rank, unvec, vec
from .restrictions import LinearRestrictions

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class StackedDataset:
    """Endogenous stacked series ``Y`` (T x n) and exogenous regressors ``Z`` (T x k)."""

    Y: np.ndarray
    Z: np.ndarray | None = None
    labels: list = field(default_factory=list)
    exog_labels: list = field(default_factory=list)
    exog_blocks: tuple = ()
    layout: FrequencyLayout | None = None
    periods: list = field(default_factory=list)

    def __post_init__(self):
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if self.Z is not None:
            self.Z = np.asarray(self.Z, dtype=float)
            if self.Z.ndim == 1:
                self.Z = self.Z[:, None]
            if self.Z.shape[1] == 0:
                self.Z = None
            elif self.Z.shape[0] != self.Y.shape[0]:
                raise ValueError("Y and Z must have the same number of rows")
        if not np.all(np.isfinite(self.Y)) or (self.Z is not None and not np.all(np.isfinite(self.Z))):
            raise ValueError("dataset contains missing or non-finite values")
        if self.layout is not None and self.layout.n_stacked != self.Y.shape[1]:
            raise ValueError("layout dimension does not match Y")
        if not self.labels:
            self.labels = self.layout.labels() if self.layout else [f"y{i}" for i in range(self.n)]
        if self.Z is not None and not self.exog_labels:
            self.exog_labels = [f"z{i}" for i in range(self.k)]

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[1]

    @property
    def k(self) -> int:
        return 0 if self.Z is None else self.Z.shape[1]

    def coef_layout(self, p: int, intercept: bool = True) -> CoefLayout:
        return CoefLayout(self.n, p, intercept, self.k, tuple(self.exog_blocks))


def regressors(data: StackedDataset, p: int, intercept: bool = True, start: int | None = None):
    """Return ``(Y_t, X_t)`` for rows ``start .. T-1`` (default ``start = p``)."""
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be >= p")
    T = data.T
    if T - start < 1:
        raise InsufficientSample(f"no observations left after {start} initial rows")
    cols = []
    if intercept:
        cols.append(np.ones((T - start, 1)))
    for i in range(1, p + 1):
        cols.append(data.Y[start - i : T - i])
    if data.Z is not None:
        cols.append(data.Z[start:])
    X = np.hstack(cols) if cols else np.zeros((T - start, 0))
    return data.Y[start:], X


@dataclass
class ReducedFormFit:
    coef: np.ndarray  # n x K, [c | A_1 .. A_p | C]
    coef_layout: CoefLayout
    residuals: np.ndarray
    sigma_u: np.ndarray
    loglik: float
    loglik_kernel: float
    effective_T: int
    n_free: int
    restrictions: LinearRestrictions | None = None
    iterations: int = 0
    data: StackedDataset | None = None
    start: int = 0

    @property
    def p(self) -> int:
        return self.coef_layout.p

    @property
    def n(self) -> int:
        return self.coef_layout.n

    @property
    def intercept(self) -> np.ndarray:
        if self.coef_layout.intercept:
            return self.coef[:, 0].copy()
        return np.zeros(self.n)

    @property
    def lag_coeffs(self) -> list[np.ndarray]:
        cl = self.coef_layout
        return [self.coef[:, cl.lag_offset(i) : cl.lag_offset(i) + cl.n].copy() for i in range(1, cl.p + 1)]

    @property
    def exog_coeffs(self) -> np.ndarray:
        cl = self.coef_layout
        return self.coef[:, cl.exog_offset :].copy()

    @property
    def theta(self) -> np.ndarray:
        return vec(self.coef)


def _gaussian_loglik(sigma: np.ndarray, T: int) -> tuple[float, float]:
    """Concentrated Gaussian log-likelihood at ``sigma = E'E/T``, with and without the 2*pi term."""
    n = sigma.shape[0]
    ld = logdet_pd(sigma)
    kernel = -0.5 * T * ld
    full = -0.5 * T * (n * LOG_2PI + ld + n)
    return float(full), float(kernel)


def _check_design(X: np.ndarray, n: int):
    T, K = X.shape
    if T <= K:
        raise InsufficientSample(f"{T} usable observations for {K} regressors per equation")
    if K and numerical_rank(X) < K:
        raise RankDeficientRegressors("regressor matrix is not of full column rank")


def estimate_ols(data: StackedDataset, p: int, intercept: bool = True, start: int | None = None) -> ReducedFormFit:
    """Multivariate least squares, identical to equation-by-equation OLS.

    ``sigma_u`` uses the divisor ``T - p`` (no degrees-of-freedom
    correction), which makes ``loglik`` the maximized Gaussian likelihood.
    """
    Yt, X = regressors(data, p, intercept, start)
    _check_design(X, data.n)
    B, *_ = np.linalg.lstsq(X, Yt, rcond=None)
    coef = B.T
    E = Yt - X @ B
    T = Yt.shape[0]
    sigma = E.T @ E / T
    sigma = 0.5 * (sigma + sigma.T)
    full, kernel = _gaussian_loglik(sigma, T)
    cl = data.coef_layout(p, intercept)
    return ReducedFormFit(
        coef=coef, coef_layout=cl, residuals=E, sigma_u=sigma, loglik=full, loglik_kernel=kernel,
        effective_T=T, n_free=cl.n_params, restrictions=None, data=data,
        start=p if start is None else start,
    )


def _gls_step(XX, XtY, R, r, Sinv):
    """Restricted GLS for ``vec(Pi) = R g + r`` given the inverse error covariance."""
    W = np.kron(XX, Sinv)
    lhs = R.T @ W @ R
    rhs = R.T @ (vec(Sinv @ XtY.T) - W @ r)
    g = np.linalg.solve(lhs, rhs)
    return R @ g + r


def estimate_restricted(
    data: StackedDataset,
    p: int,
    restrictions: LinearRestrictions | None,
    intercept: bool = True,
    method: str = "ml",
    max_iter: int = 500,
    tol: float = 1e-12,
    start: int | None = None,
) -> ReducedFormFit:
    """Estimate subject to ``S vec(Pi) = s``.

    ``method="ml"`` iterates feasible GLS until the log-determinant of the
    residual covariance settles, which is the restricted Gaussian ML
    estimate. ``method="ls"`` is a single restricted least-squares step with
    identity weighting.
    """
    if restrictions is None or restrictions.n_rows == 0:
        return estimate_ols(data, p, intercept, start)
    cl = data.coef_layout(p, intercept)
    if restrictions.n_params != cl.n_params:
        raise ValueError(f"restrictions act on {restrictions.n_params} parameters, model has {cl.n_params}")
    Yt, X = regressors(data, p, intercept, start)
    _check_design(X, data.n)
    T, n = Yt.shape
    R, r = restrictions.explicit()
    XX = X.T @ X
    XtY = X.T @ Yt  # K x n

    def resid_cov(theta):
        E = Yt - X @ unvec(theta, n, cl.n_cols).T
        S = E.T @ E / T
        return E, 0.5 * (S + S.T)

    if method == "ls":
        theta = _gls_step(XX, XtY, R, r, np.eye(n))
        E, sigma = resid_cov(theta)
        it = 1
    elif method == "ml":
        # start from the unrestricted covariance
        B, *_ = np.linalg.lstsq(X, Yt, rcond=None)
        E0 = Yt - X @ B
        sigma = E0.T @ E0 / T
        ld_old = None
        it = 0
        for it in range(1, max_iter + 1):
            try:
                Sinv = np.linalg.inv(sigma)
            except np.linalg.LinAlgError:
                raise NotPositiveDefinite("residual covariance became singular") from None
            theta = _gls_step(XX, XtY, R, r, Sinv)
            E, sigma = resid_cov(theta)
            ld = logdet_pd(sigma)
            if ld_old is not None and abs(ld - ld_old) <= tol * max(1.0, abs(ld)):
                break
            ld_old = ld
        else:
            logger.warning("restricted GLS did not settle in %d iterations", max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    full, kernel = _gaussian_loglik(sigma, T)
    return ReducedFormFit(
        coef=unvec(theta, n, cl.n_cols), coef_layout=cl, residuals=E, sigma_u=sigma,
        loglik=full, loglik_kernel=kernel, effective_T=T, n_free=R.shape[1],
        restrictions=restrictions, iterations=it, data=data,
        start=p if start is None else start,
    )


@dataclass(frozen=True)
class CriterionRow:
    p: int
    loglik: float
    n_params: int
    aic: float
    bic: float


def information_criteria(data: StackedDataset, p_max: int, intercept: bool = True) -> list[CriterionRow]:
    """AIC and BIC for p = 1..p_max fitted on the common sample rows p_max..T-1.

    ``n_params`` counts every estimated mean coefficient (intercepts and
    exogenous terms included).
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    rows = []
    for p in range(1, p_max + 1):
        fit = estimate_ols(data, p, intercept, start=p_max)
        q = fit.coef_layout.n_params
        T = fit.effective_T
        rows.append(CriterionRow(p, fit.loglik, q, -2 * fit.loglik + 2 * q, -2 * fit.loglik + q * np.log(T)))
    return rows


def select_order(rows: list[CriterionRow], criterion: str = "bic") -> int:
    return min(rows, key=lambda r: getattr(r, criterion)).p


def companion_matrix(lag_coeffs) -> np.ndarray:
    lag_coeffs = [np.atleast_2d(A) for A in lag_coeffs]
    n, p = lag_coeffs[0].shape[0], len(lag_coeffs)
    F = np.zeros((n * p, n * p))
    F[:n, :] = np.hstack(lag_coeffs)
    if p > 1:
        F[n:, :-n] = np.eye(n * (p - 1))
    return F


def companion_spectral_radius(fit) -> float:
    """Largest eigenvalue modulus of the companion matrix.

    Accepts a :class:`ReducedFormFit` or a sequence of lag matrices.
    """
    lags = fit.lag_coeffs if isinstance(fit, ReducedFormFit) else fit
    return float(np.abs(np.linalg.eigvals(companion_matrix(lags))).max())
