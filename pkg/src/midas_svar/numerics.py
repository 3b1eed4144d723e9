"""Numeric kernel: factorizations, vec/vech helpers, chi-square tail, seeded RNG.

Conventions: ``vec`` stacks columns, ``vech`` stacks the lower triangle
column by column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import NotPositiveDefinite, NotSymmetric, SvdFailure


def vec(M: np.ndarray) -> np.ndarray:
    return np.asarray(M, dtype=float).ravel(order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")


def vech(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    return np.concatenate([S[j:, j] for j in range(n)])


def duplication_matrix(n: int) -> np.ndarray:
    """D_n with D_n @ vech(S) == vec(S) for symmetric S."""
    D = np.zeros((n * n, n * (n + 1) // 2))
    k = 0
    for j in range(n):
        for i in range(j, n):
            D[j * n + i, k] = 1.0
            D[i * n + j, k] = 1.0
            k += 1
    return D


def duplication_pinv(n: int) -> np.ndarray:
    """Moore-Penrose inverse of the duplication matrix, shape n(n+1)/2 x n^2.

    Built in closed form: off-diagonal pairs get weight 1/2 on both vec
    positions, diagonal entries weight 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    Dp = np.zeros((n * (n + 1) // 2, n * n))
    k = 0
    for j in range(n):
        for i in range(j, n):
            if i == j:
                Dp[k, j * n + i] = 1.0
            else:
                Dp[k, j * n + i] = 0.5
                Dp[k, i * n + j] = 0.5
            k += 1
    return Dp


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def cholesky(S: np.ndarray, sym_tol: float = 1e-10) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises
    ------
    NotSymmetric
        if ``max|S - S'|`` exceeds ``sym_tol * (1 + max|S|)``.
    NotPositiveDefinite
        if a pivot is not strictly positive.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"matrix is not square: {S.shape}")
    scale = 1.0 + np.abs(S).max(initial=0.0)
    if np.abs(S - S.T).max(initial=0.0) > sym_tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    S = 0.5 * (S + S.T)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(L) > 0):
        raise NotPositiveDefinite("non-positive pivot")
    return L


def numerical_rank(M: np.ndarray, rel_tol: float | None = None) -> int:
    """Number of singular values above ``rel_tol * s_max``.

    The default tolerance is ``1e-8 * max(rows, cols)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    if rel_tol is None:
        rel_tol = 1e-8 * max(M.shape)
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    try:
        s = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from None
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def null_space(M: np.ndarray, rel_tol: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n)
    r = numerical_rank(M, rel_tol)
    _, _, Vt = np.linalg.svd(M)
    return Vt[r:].T.copy()


def chi2_sf(x: float, dof: int) -> float:
    """Chi-square survival function via the regularized upper incomplete gamma."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    return float(special.gammaincc(0.5 * dof, 0.5 * x))


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Streams are derived with ``numpy.random.SeedSequence`` spawn keys, so
    replication ``r`` draws the same numbers whatever order or process it
    runs in.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


def mvn_draw(mean, chol_lower, rng, size: int | None = None) -> np.ndarray:
    """Draw ``mean + L z`` with ``z`` iid standard normal.

    ``rng`` may be an :class:`RngStream` or a ``numpy.random.Generator``.
    With ``size`` the result has shape ``(size, n)``.
    """
    mean = np.asarray(mean, dtype=float)
    L = np.atleast_2d(np.asarray(chol_lower, dtype=float))
    if L.shape != (mean.size, mean.size):
        raise ValueError("chol_lower shape does not match mean")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if size is None:
        z = gen.standard_normal(mean.size)
        return mean + L @ z
    z = gen.standard_normal((size, mean.size))
    return mean + z @ L.T


def logdet_pd(S: np.ndarray) -> float:
    sign, ld = np.linalg.slogdet(S)
    if sign <= 0:
        return -np.inf if sign == 0 else np.nan
    return float(ld)


def nearest_pd(S: np.ndarray, floor: float = 1e-5) -> np.ndarray:
    """Clip eigenvalues of a symmetric matrix from below."""
    S = 0.5 * (np.asarray(S, dtype=float) + np.asarray(S, dtype=float).T)
    w, V = np.linalg.eigh(S)
    out = (V * np.maximum(w, floor)) @ V.T
    return 0.5 * (out + out.T)
