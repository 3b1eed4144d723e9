"""Moving-average representation, structural impulse responses, FEVD and bootstrap bands."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import MidasSvarError, SingularA, TooManyFailures
from .numerics import RngStream
from .parallel import indexed_map
from .reduced_form import StackedDataset, companion_spectral_radius, estimate_restricted
from .structural import AbRestrictions, AbStructure, estimate_ml

logger = logging.getLogger(__name__)


@dataclass
class VmaCoefficients:
    C: np.ndarray  # (H+1, n, n)

    @property
    def horizon(self) -> int:
        return self.C.shape[0] - 1


@dataclass
class IrfSet:
    responses: np.ndarray  # (H+1, n, n): [h, response, shock]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    level: float | None = None
    labels: list = field(default_factory=list)
    n_boot: int = 0
    n_failed: int = 0

    @property
    def horizon(self) -> int:
        return self.responses.shape[0] - 1


@dataclass
class FevdTable:
    shares: np.ndarray  # (H+1, n, n) percentages: [h, variable, shock]
    labels: list = field(default_factory=list)


def vma_from_var(lag_coeffs, H: int) -> VmaCoefficients:
    """``C_0 = I`` and ``C_k = sum_{i<=min(k,p)} A_i C_{k-i}``."""
    lags = [np.atleast_2d(np.asarray(A, dtype=float)) for A in lag_coeffs]
    n = lags[0].shape[0]
    if H < 0:
        raise ValueError("H must be >= 0")
    rho = companion_spectral_radius(lags)
    if rho >= 1.0:
        logger.warning("VAR is not stable (companion spectral radius %.4f)", rho)
    C = np.zeros((H + 1, n, n))
    C[0] = np.eye(n)
    for k in range(1, H + 1):
        for i in range(1, min(k, len(lags)) + 1):
            C[k] += lags[i - 1] @ C[k - i]
    return VmaCoefficients(C)


def _impact(ab: AbStructure) -> np.ndarray:
    if abs(np.linalg.det(ab.A)) < 1e-300 or np.linalg.cond(ab.A) > 1e14:
        raise SingularA("A is singular")
    return np.linalg.solve(ab.A, ab.B)


def structural_irf(vma: VmaCoefficients, ab: AbStructure, labels=None) -> IrfSet:
    """Responses to one-standard-deviation structural shocks, ``C_h A^-1 B``."""
    M = _impact(ab)
    return IrfSet(vma.C @ M, labels=list(labels or []))


def fevd(vma: VmaCoefficients, ab: AbStructure, H: int | None = None, labels=None) -> FevdTable:
    """Percentage of the ``h``-step forecast-error variance of each variable due to each shock."""
    H = vma.horizon if H is None else H
    if H > vma.horizon:
        raise ValueError("H exceeds the available VMA horizon")
    theta = vma.C[: H + 1] @ _impact(ab)
    acc = np.cumsum(theta**2, axis=0)
    tot = acc.sum(axis=2, keepdims=True)
    return FevdTable(100.0 * acc / tot, labels=list(labels or []))


# ---------------------------------------------------------------------------
# bootstrap


@dataclass
class _BootContext:
    data: StackedDataset
    p: int
    intercept: bool
    reduced: object
    ab_restr: AbRestrictions
    H: int
    coef: np.ndarray
    resid: np.ndarray
    start: int
    A_start: np.ndarray
    B_start: np.ndarray
    seed: int


def pseudo_data(ctx: _BootContext, gen: np.random.Generator) -> StackedDataset:
    """Rebuild a sample recursively from resampled residuals and the original initial rows."""
    data, p = ctx.data, ctx.p
    T, n = data.T, data.n
    E = ctx.resid
    draw = E[gen.integers(0, E.shape[0], size=T - ctx.start)]
    Y = data.Y.copy()
    c = ctx.coef[:, 0] if ctx.intercept else np.zeros(n)
    off = int(ctx.intercept)
    lags = [ctx.coef[:, off + (i - 1) * n : off + i * n] for i in range(1, p + 1)]
    C = ctx.coef[:, off + p * n :]
    for t in range(ctx.start, T):
        y = c + draw[t - ctx.start]
        for i in range(1, p + 1):
            y = y + lags[i - 1] @ Y[t - i]
        if data.Z is not None:
            y = y + C @ data.Z[t]
        Y[t] = y
    return StackedDataset(Y, data.Z, list(data.labels), list(data.exog_labels), data.exog_blocks, data.layout)


def _one_replication(ctx: _BootContext, rep: int):
    gen = RngStream(ctx.seed, rep).generator()
    try:
        d = pseudo_data(ctx, gen)
        fit = estimate_restricted(d, ctx.p, ctx.reduced, ctx.intercept, start=ctx.start)
        ab = estimate_ml(fit, ctx.ab_restr, start=(ctx.A_start, ctx.B_start))
        irf = structural_irf(vma_from_var(fit.lag_coeffs, ctx.H), ab)
        return irf.responses
    except (MidasSvarError, np.linalg.LinAlgError) as exc:
        logger.debug("bootstrap replication %d failed: %s", rep, exc)
        return None


def bootstrap_bands(
    data: StackedDataset,
    p: int,
    ab_restr: AbRestrictions,
    H: int = 20,
    n_boot: int = 999,
    level: float = 0.90,
    seed: int = 0,
    reduced_restrictions=None,
    intercept: bool = True,
    workers: int = 1,
    min_boot: int = 200,
) -> IrfSet:
    """Point IRFs with percentile bands from an iid residual bootstrap.

    Replication ``r`` draws from ``RngStream(seed, r)``, so the bands do not
    depend on ``workers``. Replications whose estimation fails are dropped
    and counted; more than 10% failures raise :class:`TooManyFailures`.
    """
    if n_boot < min_boot:
        raise ValueError(f"n_boot must be >= {min_boot}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    fit = estimate_restricted(data, p, reduced_restrictions, intercept)
    ab = estimate_ml(fit, ab_restr)
    point = structural_irf(vma_from_var(fit.lag_coeffs, H), ab, labels=data.labels)
    resid = fit.residuals - fit.residuals.mean(axis=0)
    ctx = _BootContext(data, p, intercept, reduced_restrictions, ab_restr, H, fit.coef, resid,
                       fit.start, ab.A, ab.B, seed)
    draws = indexed_map(_one_replication, ctx, n_boot, workers)
    ok = [d for d in draws if d is not None]
    n_failed = n_boot - len(ok)
    if n_failed > 0.10 * n_boot:
        raise TooManyFailures(f"{n_failed} of {n_boot} bootstrap replications failed")
    stack = np.stack(ok)
    alpha = 1.0 - level
    lower = np.quantile(stack, alpha / 2.0, axis=0)
    upper = np.quantile(stack, 1.0 - alpha / 2.0, axis=0)
    return IrfSet(point.responses, lower, upper, level, list(data.labels), n_boot, n_failed)

