"""Linear equality restrictions on a parameter vector.

Restrictions are stored in implicit form ``S @ theta = s`` and converted to
the explicit form ``theta = R @ gamma + r`` that the estimators optimize over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleRestrictions
from .numerics import null_space, numerical_rank


@dataclass
class LinearRestrictions:
    """``S @ theta = s`` on a parameter vector of length ``n_params``."""

    n_params: int
    S: np.ndarray = None
    s: np.ndarray = None
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.S is None:
            self.S = np.zeros((0, self.n_params))
        self.S = np.atleast_2d(np.asarray(self.S, dtype=float)).reshape(-1, self.n_params)
        if self.s is None:
            self.s = np.zeros(self.S.shape[0])
        self.s = np.asarray(self.s, dtype=float).ravel()
        if self.s.size != self.S.shape[0]:
            raise ValueError("S and s have inconsistent row counts")
        if not self.labels:
            self.labels = [f"c{i}" for i in range(self.S.shape[0])]
        if len(self.labels) != self.S.shape[0]:
            raise ValueError("one label per constraint row is required")

    @classmethod
    def empty(cls, n_params: int) -> "LinearRestrictions":
        return cls(n_params)

    @classmethod
    def zeros(cls, n_params: int, indices, labels=None) -> "LinearRestrictions":
        indices = list(indices)
        S = np.zeros((len(indices), n_params))
        S[np.arange(len(indices)), indices] = 1.0
        return cls(n_params, S, np.zeros(len(indices)), list(labels) if labels else [])

    @property
    def n_rows(self) -> int:
        return self.S.shape[0]

    @property
    def rank(self) -> int:
        return numerical_rank(self.S) if self.n_rows else 0

    @property
    def n_free(self) -> int:
        return self.n_params - self.rank

    def stack(self, other: "LinearRestrictions") -> "LinearRestrictions":
        if other.n_params != self.n_params:
            raise ValueError("restriction sets act on different parameter vectors")
        return LinearRestrictions(
            self.n_params,
            np.vstack([self.S, other.S]),
            np.concatenate([self.s, other.s]),
            self.labels + other.labels,
        )

    def added_rank(self, other: "LinearRestrictions") -> int:
        """Number of constraints in ``other`` that bind beyond ``self``."""
        return self.stack(other).rank - self.rank

    def explicit(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(R, r)`` spanning the same affine set.

        Pure selection restrictions (every row has a single nonzero) map to a
        column selection of the identity, so ``gamma`` keeps the meaning of
        the untouched entries. Otherwise ``R`` is an orthonormal null-space
        basis and ``r`` the minimum-norm particular solution.
        """
        n = self.n_params
        if self.n_rows == 0:
            return np.eye(n), np.zeros(n)
        nnz = (self.S != 0).sum(axis=1)
        if np.all(nnz == 1):
            cols = np.argmax(self.S != 0, axis=1)
            vals = self.s / self.S[np.arange(self.n_rows), cols]
            r = np.zeros(n)
            for c, v in zip(cols, vals):
                if not np.allclose(vals[cols == c], v):
                    raise InfeasibleRestrictions(f"conflicting fixed values for parameter {c}")
                r[c] = v
            free = np.setdiff1d(np.arange(n), cols)
            return np.eye(n)[:, free], r
        r, *_ = np.linalg.lstsq(self.S, self.s, rcond=None)
        resid = self.S @ r - self.s
        if np.abs(resid).max() > 1e-8 * (1.0 + np.abs(self.s).max()):
            raise InfeasibleRestrictions("restriction system has no solution")
        R = null_space(self.S)
        return R, r

    def satisfied_by(self, theta: np.ndarray, tol: float = 1e-8) -> bool:
        if self.n_rows == 0:
            return True
        return bool(np.abs(self.S @ theta - self.s).max() <= tol * (1.0 + np.abs(theta).max()))

    @classmethod
    def from_explicit(cls, R: np.ndarray, r: np.ndarray) -> "LinearRestrictions":
        """Implicit form of ``{R g + r}``: rows of ``S`` span the left null space of ``R``."""
        R = np.atleast_2d(np.asarray(R, dtype=float))
        S = null_space(R.T).T
        return cls(R.shape[0], S, S @ np.asarray(r, dtype=float))
