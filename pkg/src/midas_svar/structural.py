"""AB structural model ``A u(t) = B e(t)`` with ``e(t) ~ (0, I)``.

Restrictions on ``vec(A)`` and ``vec(B)`` are linear. Local identification
is checked with the rank of the Jacobian of ``vech(A^-1 B B' A^-1')`` stacked
with the restriction matrices, and the parameters are estimated by
maximizing the concentrated Gaussian likelihood with damped Newton steps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IdentificationFailure,
    NestingViolation,
    NonConvergence,
    SingularA,
    UnsupportedLayout,
)
from .layout import FrequencyLayout
from .numerics import RngStream, chi2_sf, cholesky, duplication_pinv, numerical_rank, unvec, vec
from .restrictions import LinearRestrictions

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# restriction patterns


def _parse_grid(grid) -> list[list[str]]:
    if isinstance(grid, str):
        grid = [row for row in grid.strip().splitlines() if row.strip()]
    rows = []
    for row in grid:
        rows.append(row.split() if isinstance(row, str) else [str(c).strip() for c in row])
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("pattern grid must be square")
    return rows


def compile_pattern(grid, tag: str = "M") -> LinearRestrictions:
    """Compile a character grid into ``S vec(M) = s``.

    Cells: ``*`` free, ``0`` zero, ``1`` (or any number) fixed value,
    ``=k`` member of equality class ``k``.
    """
    rows = _parse_grid(grid)
    n = len(rows)
    S, s, labels = [], [], []
    classes: dict[str, list[tuple[int, int]]] = {}
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            if cell == "*":
                continue
            if cell.startswith("="):
                classes.setdefault(cell[1:], []).append((i, j))
                continue
            try:
                val = float(cell)
            except ValueError:
                raise ValueError(f"bad pattern cell {cell!r} at ({i},{j})") from None
            e = np.zeros(n * n)
            e[j * n + i] = 1.0
            S.append(e)
            s.append(val)
            labels.append(f"{tag}[{i},{j}]={cell}")
    for key in sorted(classes):
        members = classes[key]
        for (i0, j0), (i1, j1) in zip(members[:-1], members[1:]):
            e = np.zeros(n * n)
            e[j0 * n + i0] = 1.0
            e[j1 * n + i1] = -1.0
            S.append(e)
            s.append(0.0)
            labels.append(f"{tag}[{i0},{j0}]={tag}[{i1},{j1}]")
    return LinearRestrictions(n * n, np.array(S).reshape(-1, n * n), np.array(s), labels)


@dataclass
class AbRestrictions:
    n: int
    A: LinearRestrictions
    B: LinearRestrictions
    name: str = "custom"
    _explicit: tuple | None = field(default=None, repr=False)

    @classmethod
    def from_patterns(cls, A_grid, B_grid, name: str = "custom") -> "AbRestrictions":
        RA = compile_pattern(A_grid, "A")
        RB = compile_pattern(B_grid, "B")
        n = int(round(np.sqrt(RA.n_params)))
        if RB.n_params != n * n:
            raise ValueError("A and B patterns differ in size")
        return cls(n, RA, RB, name)

    @property
    def q_A(self) -> int:
        return self.A.n_free

    @property
    def q_B(self) -> int:
        return self.B.n_free

    @property
    def free_params(self) -> int:
        return self.q_A + self.q_B

    @property
    def overid_dof(self) -> int:
        return self.n * (self.n + 1) // 2 - self.free_params

    def explicit(self):
        if self._explicit is None:
            self._explicit = (*self.A.explicit(), *self.B.explicit())
        return self._explicit

    def with_extra(self, extra_A: LinearRestrictions | None = None, extra_B: LinearRestrictions | None = None,
                   name: str | None = None) -> "AbRestrictions":
        A = self.A if extra_A is None else self.A.stack(extra_A)
        B = self.B if extra_B is None else self.B.stack(extra_B)
        return AbRestrictions(self.n, A, B, name or self.name + "+extra")

    def added_rank(self, other: "AbRestrictions") -> int:
        """Constraints of ``other`` that bind beyond this set (``other`` must contain it)."""
        return (other.A.rank - self.A.rank) + (other.B.rank - self.B.rank)

    def unpack(self, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        RA, rA, RB, rB = self.explicit()
        qa = RA.shape[1]
        A = unvec(RA @ gamma[:qa] + rA, self.n)
        B = unvec(RB @ gamma[qa:] + rB, self.n)
        return A, B

    def pack(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Least-squares projection of ``(A, B)`` onto the feasible set, in ``gamma`` coordinates."""
        RA, rA, RB, rB = self.explicit()
        ga = np.linalg.lstsq(RA, vec(A) - rA, rcond=None)[0] if RA.shape[1] else np.zeros(0)
        gb = np.linalg.lstsq(RB, vec(B) - rB, rcond=None)[0] if RB.shape[1] else np.zeros(0)
        return np.concatenate([ga, gb])


def cholesky_scheme(n: int) -> AbRestrictions:
    """``A = I`` and lower-triangular ``B``: the recursive just-identified scheme."""
    A = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    B = [["*" if j <= i else "0" for j in range(n)] for i in range(n)]
    return AbRestrictions.from_patterns(A, B, "cholesky")


def recursive_midas_grids(layout: FrequencyLayout, variant: str = "full"):
    """Character grids of the within-period recursive mixed-frequency scheme.

    ``A`` has a unit diagonal and lets every high-frequency equation in slot
    ``j`` load on the residuals of earlier slots (all earlier slots for
    ``variant="full"``, only slot ``j-1`` for ``"adjacent"``). ``B`` is lower
    triangular within each slot and its low-frequency rows load on every
    shock.
    """
    if layout.n_high != 2 or layout.n_low != 1:
        raise UnsupportedLayout("the recursive mixed-frequency scheme needs n_high=2 and n_low=1")
    if variant not in ("full", "adjacent"):
        raise ValueError(f"unknown variant {variant!r}")
    n, nh, m = layout.n_stacked, layout.n_high, layout.m
    A = [["0"] * n for _ in range(n)]
    B = [["0"] * n for _ in range(n)]
    for i in range(n):
        A[i][i] = "1"
    for j in range(1, m + 1):
        earlier = range(1, j) if variant == "full" else range(max(1, j - 1), j)
        for v in range(nh):
            row = layout.high_index(v, j)
            for k in earlier:
                for w in range(nh):
                    A[row][layout.high_index(w, k)] = "*"
            for w in range(v + 1):
                B[row][layout.high_index(w, j)] = "*"
    for v in range(layout.n_low):
        row = layout.low_index(v)
        for c in range(layout.m * nh):
            B[row][c] = "*"
        for w in range(v + 1):
            B[row][layout.low_index(w)] = "*"
    return A, B


def build_recursive_midas_scheme(layout: FrequencyLayout, variant: str = "full") -> AbRestrictions:
    A, B = recursive_midas_grids(layout, variant)
    return AbRestrictions.from_patterns(A, B, f"recursive-midas-{variant}")


def _bundle_grids(name: str, layout: FrequencyLayout):
    A, B = recursive_midas_grids(layout, "full")
    m = layout.m
    k = layout.low_index(0)
    mp = [layout.high_index(0, j) for j in range(1, m + 1)]
    vx = [layout.high_index(1, j) for j in range(1, m + 1)]
    if name == "slots-help-identify-mp":
        for j in range(2, m + 1):
            for c in range(layout.high_index(0, 1), layout.high_index(0, j)):
                A[mp[j - 1]][c] = "0"
    elif name == "slots-help-identify-vix":
        for j in range(2, m + 1):
            for c in range(layout.high_index(0, 1), layout.high_index(0, j)):
                A[vx[j - 1]][c] = "0"
        for j in range(1, m + 1):
            B[vx[j - 1]][mp[j - 1]] = "0"
    elif name == "first-month-only-drives-k":
        for j in range(2, m + 1):
            B[k][mp[j - 1]] = "0"
            B[k][vx[j - 1]] = "0"
    elif name == "equal-mp-impact-across-months":
        for c in mp:
            B[k][c] = "=mp"
    elif name == "equal-vix-impact-across-months":
        for c in vx:
            B[k][c] = "=vix"
    else:
        raise KeyError(name)
    return A, B


HYPOTHESIS_BUNDLES = (
    "slots-help-identify-mp",
    "slots-help-identify-vix",
    "first-month-only-drives-k",
    "equal-mp-impact-across-months",
    "equal-vix-impact-across-months",
)


def named_scheme(name: str, layout: FrequencyLayout) -> AbRestrictions:
    """Resolve a scheme preset name for ``layout``."""
    if name == "cholesky":
        return cholesky_scheme(layout.n_stacked)
    if name in ("recursive-midas", "recursive-midas-full"):
        return build_recursive_midas_scheme(layout, "full")
    if name == "recursive-midas-adjacent":
        return build_recursive_midas_scheme(layout, "adjacent")
    if name in HYPOTHESIS_BUNDLES:
        A, B = _bundle_grids(name, layout)
        return AbRestrictions.from_patterns(A, B, name)
    raise KeyError(f"unknown identification scheme {name!r}")


# ---------------------------------------------------------------------------
# identification


@dataclass(frozen=True)
class IdentificationReport:
    jacobian_rank: int
    required_rank: int
    identified: bool
    free_params: int
    overid_dof: int


def identification_matrix(A: np.ndarray, B: np.ndarray, restr: AbRestrictions) -> np.ndarray:
    n = A.shape[0]
    try:
        Ai = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise SingularA("A is singular at the evaluation point") from None
    if np.linalg.cond(A) > 1e12:
        raise SingularA("A is numerically singular at the evaluation point")
    Dp = duplication_pinv(n)
    AiB = Ai @ B
    sigma = AiB @ AiB.T
    top = np.hstack([-2.0 * Dp @ np.kron(sigma, Ai), 2.0 * Dp @ np.kron(AiB, Ai)])
    SA, SB = restr.A.S, restr.B.S
    mid = np.hstack([SA, np.zeros((SA.shape[0], n * n))])
    bot = np.hstack([np.zeros((SB.shape[0], n * n)), SB])
    return np.vstack([top, mid, bot])


def _report(rank: int, restr: AbRestrictions) -> IdentificationReport:
    n = restr.n
    req = 2 * n * n
    return IdentificationReport(rank, req, rank == req, restr.free_params, restr.overid_dof)


def _starting_point(restr: AbRestrictions, sigma_u: np.ndarray) -> np.ndarray:
    n = restr.n
    g = restr.pack(np.eye(n), np.zeros((n, n)))
    A0, _ = restr.unpack(g)
    try:
        target = cholesky(A0 @ sigma_u @ A0.T)
    except Exception:
        target = np.diag(np.sqrt(np.abs(np.diag(sigma_u))) + 1e-8)
    return restr.pack(A0, target)


def check_identification(
    restr: AbRestrictions,
    sigma_u: np.ndarray,
    A: np.ndarray | None = None,
    B: np.ndarray | None = None,
    seed: int = 0,
    n_draws: int = 5,
) -> IdentificationReport:
    """Rank condition for local identification.

    With ``(A, B)`` given (e.g. the ML point) the Jacobian is evaluated
    there. Otherwise it is evaluated at ``n_draws`` random feasible points
    scattered around the default starting values, and the majority verdict
    is reported.
    """
    if A is not None and B is not None:
        return _report(numerical_rank(identification_matrix(A, B, restr)), restr)
    g0 = _starting_point(restr, np.asarray(sigma_u, dtype=float))
    qa = restr.q_A
    scale = np.sqrt(np.mean(np.diag(sigma_u)))
    reports = []
    for d in range(n_draws * 4):
        gen = RngStream(seed, d).generator()
        g = g0.copy()
        g[:qa] += 0.3 * gen.standard_normal(qa)
        g[qa:] += 0.3 * scale * gen.standard_normal(g.size - qa)
        Ad, Bd = restr.unpack(g)
        try:
            reports.append(_report(numerical_rank(identification_matrix(Ad, Bd, restr)), restr))
        except SingularA:
            continue
        if len(reports) == n_draws:
            break
    if not reports:
        raise SingularA("could not find an evaluation point with invertible A")
    votes = sum(r.identified for r in reports)
    winner = [r for r in reports if r.identified == (votes * 2 > len(reports))]
    return max(winner, key=lambda r: r.jacobian_rank)


# ---------------------------------------------------------------------------
# likelihood and ML


def ab_objective(A: np.ndarray, B: np.ndarray, sigma_hat: np.ndarray):
    """Minus the per-observation log-likelihood and its gradients in ``A`` and ``B``.

    Returns ``(f, dA, dB)`` with
    ``f = 0.5 * (n log 2pi + log det(A^-1 B B' A^-1') + tr(K sigma K'))``, ``K = B^-1 A``.
    Returns ``f = inf`` at singular points.
    """
    n = A.shape[0]
    sa, lda = np.linalg.slogdet(A)
    sb, ldb = np.linalg.slogdet(B)
    if sa == 0 or sb == 0 or not np.isfinite(lda + ldb):
        return np.inf, None, None
    try:
        Bi = np.linalg.inv(B)
        Ai = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        return np.inf, None, None
    K = Bi @ A
    KS = K @ sigma_hat
    f = 0.5 * (n * LOG_2PI + 2.0 * ldb - 2.0 * lda + np.trace(KS @ K.T))
    dA = -Ai.T + Bi.T @ KS
    dB = Bi.T - Bi.T @ KS @ K.T
    return float(f), dA, dB


def ab_loglik(A, B, sigma_hat, T: int) -> float:
    f, _, _ = ab_objective(np.asarray(A, float), np.asarray(B, float), np.asarray(sigma_hat, float))
    return -T * f


@dataclass
class AbStructure:
    A: np.ndarray
    B: np.ndarray
    restrictions: AbRestrictions
    loglik: float
    converged: bool
    iterations: int
    gradient_norm: float
    effective_T: int
    sigma_hat: np.ndarray
    identification: IdentificationReport | None = None

    @property
    def impact(self) -> np.ndarray:
        """``A^-1 B``: responses to one-standard-deviation structural shocks."""
        return np.linalg.solve(self.A, self.B)

    @property
    def implied_sigma(self) -> np.ndarray:
        M = self.impact
        return M @ M.T


def _fd_hessian(fg, x, g):
    """Symmetrized central differences of the analytic gradient."""
    k = x.size
    H = np.empty((k, k))
    for i in range(k):
        h = 1e-6 * max(1.0, abs(x[i]))
        e = np.zeros(k)
        e[i] = h
        fp, gp = fg(x + e)
        fm, gm = fg(x - e)
        if np.isfinite(fp) and np.isfinite(fm):
            H[:, i] = (gp - gm) / (2.0 * h)
        elif np.isfinite(fp):
            H[:, i] = (gp - g) / h
        elif np.isfinite(fm):
            H[:, i] = (g - gm) / h
        else:
            raise NonConvergence("objective is not finite around the current point")
    return 0.5 * (H + H.T)


def _newton(fg, x0, max_iter, gtol, ftol):
    """Damped Newton with an eigenvalue-modified Hessian and backtracking.

    Newton steps are invariant to rescaling the parameters, which matters
    because the entries of ``B`` inherit the very different scales of the
    residual variances. Returns ``(x, f, g, iterations, converged)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fg(x)
    if not np.isfinite(f):
        raise NonConvergence("objective is not finite at the starting point")
    for it in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm < gtol:
            return x, f, g, it, True
        w, V = np.linalg.eigh(_fd_hessian(fg, x, g))
        w = np.maximum(np.abs(w), 1e-10 * max(1.0, np.abs(w).max()))
        d = -(V / w) @ (V.T @ g)
        slope = float(g @ d)
        step = 1.0
        for _ in range(60):
            fn, gn = fg(x + step * d)
            if np.isfinite(fn) and fn <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            # no further decrease representable: accept if already stationary
            return x, f, g, it, gnorm < 1e-6
        small_change = abs(f - fn) <= ftol * max(1.0, abs(f))
        x, f, g = x + step * d, fn, gn
        if small_change and float(np.linalg.norm(g)) < 1e-6:
            return x, f, g, it + 1, True
    return x, f, g, max_iter, float(np.linalg.norm(g)) < 1e-6


def _normalize_signs(A, B, restr: AbRestrictions):
    B = B.copy()
    for j in range(B.shape[0]):
        if B[j, j] < 0:
            Bf = B.copy()
            Bf[:, j] *= -1.0
            if restr.B.satisfied_by(vec(Bf)):
                B = Bf
    return A, B


def estimate_ml(
    fit,
    restr: AbRestrictions,
    T: int | None = None,
    start: tuple[np.ndarray, np.ndarray] | None = None,
    max_iter: int = 2000,
    gtol: float = 1e-9,
    check: bool = True,
) -> AbStructure:
    """Maximize the AB likelihood given the reduced-form residual covariance.

    ``fit`` is a reduced-form fit (its ``sigma_u`` and ``effective_T`` are
    used) or a covariance matrix, in which case ``T`` is required.
    Convergence requires a relative change below ``1e-10`` and a
    per-observation gradient norm below ``1e-6``; the optimizer keeps
    iterating towards ``gtol`` while it can still make progress.
    """
    if hasattr(fit, "sigma_u"):
        sigma = np.asarray(fit.sigma_u, dtype=float)
        T = fit.effective_T if T is None else T
    else:
        sigma = np.asarray(fit, dtype=float)
        if T is None:
            raise ValueError("T is required when passing a covariance matrix")
    if check:
        cholesky(sigma)

    def fg(gamma):
        A, B = restr.unpack(gamma)
        f, dA, dB = ab_objective(A, B, sigma)
        if not np.isfinite(f):
            return np.inf, None
        RA, _, RB, _ = restr.explicit()
        return f, np.concatenate([RA.T @ vec(dA), RB.T @ vec(dB)])

    g0 = restr.pack(*start) if start is not None else _starting_point(restr, sigma)
    f0, _ = fg(g0)
    if not np.isfinite(f0):
        # nudge a singular starting B towards the identity
        n = restr.n
        A0, B0 = restr.unpack(g0)
        g0 = restr.pack(A0, B0 + np.eye(n) * np.sqrt(np.mean(np.diag(sigma))))
    x, f, g, it, ok = _newton(fg, g0, max_iter, gtol, 1e-10)
    gnorm = float(np.linalg.norm(g))
    if not ok:
        raise NonConvergence(f"AB likelihood did not converge (gradient norm {gnorm:.3g} after {it} iterations)")
    A, B = restr.unpack(x)
    A, B = _normalize_signs(A, B, restr)
    return AbStructure(A, B, restr, -T * f, True, it, gnorm, T, sigma)


# ---------------------------------------------------------------------------
# likelihood ratio


@dataclass(frozen=True)
class LrTestResult:
    statistic: float
    dof: int
    pvalue: float
    l_restricted: float
    l_unrestricted: float
    label: str = ""


def lr_test(l_restricted: float, l_unrestricted: float, dof: int, tol: float = 1e-6, label: str = "") -> LrTestResult:
    """``LR = -2 (l_r - l_u)`` referred to a chi-square with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if l_restricted - l_unrestricted > tol * max(1.0, abs(l_unrestricted)):
        raise NestingViolation(
            f"restricted log-likelihood {l_restricted:.6f} exceeds unrestricted {l_unrestricted:.6f}"
        )
    stat = max(0.0, -2.0 * (l_restricted - l_unrestricted))
    return LrTestResult(stat, int(dof), chi2_sf(stat, dof), float(l_restricted), float(l_unrestricted), label)


def estimate_identified(fit, restr: AbRestrictions, **kw) -> AbStructure:
    """Check identification at random feasible points, estimate, and re-check at the ML point."""
    pre = check_identification(restr, fit.sigma_u)
    if not pre.identified:
        raise IdentificationFailure(
            f"scheme {restr.name!r} fails the rank condition (rank {pre.jacobian_rank} < {pre.required_rank})"
        )
    ab = estimate_ml(fit, restr, **kw)
    ab.identification = check_identification(restr, fit.sigma_u, ab.A, ab.B)
    return ab
