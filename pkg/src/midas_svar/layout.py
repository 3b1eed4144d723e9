"""Frequency geometry of the stacked mixed-frequency vector.

The stacked vector for one low-frequency period is ordered slot by slot::

    (x_H(t,1), x_H(t,2), ..., x_H(t,m), x_L(t))

so the high-frequency variable ``v`` observed in slot ``j`` (1-based) sits at
position ``(j-1)*n_high + v`` and low-frequency variable ``v`` at
``m*n_high + v``.

Equivalence with a temporally aggregated VAR holds when ``G M N = 0`` for
every coefficient block ``M`` that multiplies a stacked vector, where ``G``
is the selection matrix and the columns of ``N`` span the directions that
``G`` discards. For first-observation sampling these are plain zero
restrictions on slots 2..m; for sums and averages they equate the slot sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SchemeMismatch, UnsupportedScheme
from .restrictions import LinearRestrictions

SCHEME_KINDS = ("first", "last", "sum", "average", "mixed")
_BASIC = ("first", "last", "sum", "average")


@dataclass(frozen=True)
class FrequencyLayout:
    n_low: int
    n_high: int
    m: int = 3
    p: int = 1
    high_names: tuple = ()
    low_names: tuple = ()

    def __post_init__(self):
        if self.n_low < 0 or self.n_high < 0 or self.n_low + self.n_high < 1:
            raise ValueError("need n_low, n_high >= 0 and at least one variable")
        if self.m < 2:
            raise ValueError("frequency ratio m must be >= 2")
        if self.p < 1:
            raise ValueError("lag order p must be >= 1")
        if self.high_names and len(self.high_names) != self.n_high:
            raise ValueError("high_names length must equal n_high")
        if self.low_names and len(self.low_names) != self.n_low:
            raise ValueError("low_names length must equal n_low")

    @property
    def n_stacked(self) -> int:
        return self.n_low + self.m * self.n_high

    @property
    def n_aggregated(self) -> int:
        return self.n_low + self.n_high

    def high_index(self, var: int, slot: int) -> int:
        """Position of high-frequency variable ``var`` in slot ``slot`` (1-based)."""
        if not (0 <= var < self.n_high and 1 <= slot <= self.m):
            raise IndexError((var, slot))
        return (slot - 1) * self.n_high + var

    def low_index(self, var: int) -> int:
        if not 0 <= var < self.n_low:
            raise IndexError(var)
        return self.m * self.n_high + var

    def decode(self, index: int) -> tuple[str, int, int | None]:
        """Inverse of the index map: ``(kind, var, slot)``."""
        if not 0 <= index < self.n_stacked:
            raise IndexError(index)
        if index < self.m * self.n_high:
            slot, var = divmod(index, self.n_high)
            return "high", var, slot + 1
        return "low", index - self.m * self.n_high, None

    def labels(self) -> list[str]:
        hn = self.high_names or tuple(f"h{v}" for v in range(self.n_high))
        ln = self.low_names or tuple(f"l{v}" for v in range(self.n_low))
        out = []
        for i in range(self.n_stacked):
            kind, var, slot = self.decode(i)
            out.append(f"{hn[var]}@{slot}" if kind == "high" else ln[var])
        return out

    def aggregated_labels(self) -> list[str]:
        hn = self.high_names or tuple(f"h{v}" for v in range(self.n_high))
        ln = self.low_names or tuple(f"l{v}" for v in range(self.n_low))
        return list(hn) + list(ln)


def stacked_dim(layout: FrequencyLayout) -> int:
    return layout.n_stacked


@dataclass(frozen=True)
class AggregationScheme:
    """How each high-frequency variable is collapsed to the low frequency.

    ``kind`` is one of first, last, sum, average or mixed; a mixed scheme
    lists one basic kind per high-frequency variable in ``per_variable``.
    """

    kind: str
    per_variable: tuple = ()

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise UnsupportedScheme(f"unknown aggregation scheme {self.kind!r}")
        if self.kind == "mixed":
            bad = [k for k in self.per_variable if k not in _BASIC]
            if not self.per_variable or bad:
                raise SchemeMismatch("mixed scheme needs a basic kind per variable")

    @classmethod
    def parse(cls, text: str) -> "AggregationScheme":
        """``first``, ``sum``, ... or ``mixed:first,average,...``."""
        text = text.strip().lower()
        if text.startswith("mixed"):
            _, _, rest = text.partition(":")
            kinds = tuple(k.strip() for k in rest.split(",") if k.strip())
            return cls("mixed", kinds)
        return cls(text)

    def kinds_for(self, n_high: int) -> tuple:
        if self.kind != "mixed":
            return (self.kind,) * n_high
        if len(self.per_variable) != n_high:
            raise SchemeMismatch(
                f"mixed scheme lists {len(self.per_variable)} kinds for {n_high} variables"
            )
        return tuple(self.per_variable)

    def __str__(self):
        if self.kind == "mixed":
            return "mixed:" + ",".join(self.per_variable)
        return self.kind


def _slot_weights(kind: str, m: int) -> np.ndarray:
    w = np.zeros(m)
    if kind == "first":
        w[0] = 1.0
    elif kind == "last":
        w[-1] = 1.0
    elif kind == "sum":
        w[:] = 1.0
    elif kind == "average":
        w[:] = 1.0 / m
    else:
        raise UnsupportedScheme(kind)
    return w


def _null_slot_directions(kind: str, m: int) -> np.ndarray:
    """Columns span the slot directions annihilated by the slot weights."""
    if kind == "first":
        return np.eye(m)[:, 1:]
    if kind == "last":
        return np.eye(m)[:, :-1]
    if kind in ("sum", "average"):
        D = np.zeros((m, m - 1))
        for j in range(m - 1):
            D[j, j] = 1.0
            D[j + 1, j] = -1.0
        return D
    raise UnsupportedScheme(kind)


def _selection(n_high: int, n_low: int, m: int, kinds) -> np.ndarray:
    G = np.zeros((n_high + n_low, n_low + m * n_high))
    for v, kind in enumerate(kinds):
        w = _slot_weights(kind, m)
        for j in range(m):
            G[v, j * n_high + v] = w[j]
    for v in range(n_low):
        G[n_high + v, m * n_high + v] = 1.0
    return G


def _discarded(n_high: int, n_low: int, m: int, kinds) -> np.ndarray:
    cols = []
    for v, kind in enumerate(kinds):
        D = _null_slot_directions(kind, m)
        for c in range(D.shape[1]):
            col = np.zeros(n_low + m * n_high)
            for j in range(m):
                col[j * n_high + v] = D[j, c]
            cols.append(col)
    if not cols:
        return np.zeros((n_low + m * n_high, 0))
    return np.column_stack(cols)


def selection_matrix(layout: FrequencyLayout, scheme: AggregationScheme) -> np.ndarray:
    """The ``(n_low + n_high) x n_stacked`` aggregation matrix ``G``."""
    kinds = scheme.kinds_for(layout.n_high)
    return _selection(layout.n_high, layout.n_low, layout.m, kinds)


def discarded_directions(layout: FrequencyLayout, scheme: AggregationScheme) -> np.ndarray:
    """Basis ``N`` of the null space of ``G``, one column per (variable, slot step)."""
    kinds = scheme.kinds_for(layout.n_high)
    return _discarded(layout.n_high, layout.n_low, layout.m, kinds)


@dataclass(frozen=True)
class ExogBlock:
    """A group of exogenous columns laid out like a stacked vector.

    Columns ``start .. start + m*n_high + n_low - 1`` of the exogenous matrix
    hold ``n_high`` monthly series in slot order followed by ``n_low``
    low-frequency series. Blocks with ``restrict=False`` are plain controls
    and never enter equivalence restrictions.
    """

    start: int
    n_high: int
    n_low: int = 0
    restrict: bool = True
    label: str = "z"

    def m_width(self, m: int) -> int:
        return m * self.n_high + self.n_low


@dataclass(frozen=True)
class CoefLayout:
    """Column layout of the reduced-form coefficient matrix ``[c | A_1..A_p | C]``.

    Parameters are ``vec`` of that ``n x K`` matrix.
    """

    n: int
    p: int
    intercept: bool = True
    n_exog: int = 0
    exog_blocks: tuple = field(default_factory=tuple)

    @property
    def n_cols(self) -> int:
        return int(self.intercept) + self.n * self.p + self.n_exog

    @property
    def n_params(self) -> int:
        return self.n * self.n_cols

    def lag_offset(self, lag: int) -> int:
        return int(self.intercept) + (lag - 1) * self.n

    @property
    def exog_offset(self) -> int:
        return int(self.intercept) + self.n * self.p

    def param_index(self, row: int, col: int) -> int:
        return col * self.n + row


def _block_constraints(G, N, n_rows_total, col_offset, n_params, tag, row_labels, col_labels):
    """Rows of ``S`` expressing ``G M N = 0`` for the block ``M`` starting at ``col_offset``."""
    rows, labels = [], []
    for r in range(G.shape[0]):
        for c in range(N.shape[1]):
            coef = np.outer(G[r], N[:, c])  # coef[a, b] multiplies M[a, b]
            row = np.zeros(n_params)
            for a, b in zip(*np.nonzero(coef)):
                row[(col_offset + b) * n_rows_total + a] = coef[a, b]
            rows.append(row)
            nz = np.nonzero(coef)
            if len(nz[0]) == 1:
                labels.append(f"{tag}[{row_labels[nz[0][0]]},{col_labels[nz[1][0]]}]=0")
            else:
                labels.append(f"{tag}:G*M*N[{r},{c}]=0")
    return rows, labels


def reduced_equivalence_restrictions(
    layout: FrequencyLayout,
    scheme: AggregationScheme,
    coef: CoefLayout | None = None,
) -> LinearRestrictions:
    """Mean-equivalence restrictions on the reduced-form coefficients.

    One set of ``(n_high + n_low) * n_high * (m - 1)`` constraints per lag,
    plus one set per restricted exogenous block.
    """
    if coef is None:
        coef = CoefLayout(layout.n_stacked, layout.p)
    n = layout.n_stacked
    if coef.n != n:
        raise SchemeMismatch("coefficient layout does not match the frequency layout")
    G = selection_matrix(layout, scheme)
    N = discarded_directions(layout, scheme)
    labels_x = layout.labels()
    out = LinearRestrictions.empty(coef.n_params)
    if N.shape[1] == 0:
        return out
    rows, labels = [], []
    for lag in range(1, coef.p + 1):
        r_, l_ = _block_constraints(G, N, n, coef.lag_offset(lag), coef.n_params, f"A{lag}", labels_x, labels_x)
        rows += r_
        labels += l_
    kinds = scheme.kinds_for(layout.n_high)
    for blk in coef.exog_blocks:
        if not blk.restrict or blk.n_high == 0:
            continue
        bkinds = kinds if blk.n_high == layout.n_high else (
            (scheme.kind,) * blk.n_high if scheme.kind != "mixed" else None
        )
        if bkinds is None:
            raise SchemeMismatch("mixed scheme cannot be mapped onto an exogenous block of different width")
        Nz = _discarded(blk.n_high, blk.n_low, layout.m, bkinds)
        zl = [f"{blk.label}{i}" for i in range(blk.m_width(layout.m))]
        r_, l_ = _block_constraints(G, Nz, n, coef.exog_offset + blk.start, coef.n_params, f"C:{blk.label}", labels_x, zl)
        rows += r_
        labels += l_
    return LinearRestrictions(coef.n_params, np.array(rows), np.zeros(len(rows)), labels)


def structural_equivalence_restrictions(
    layout: FrequencyLayout, scheme: AggregationScheme
) -> tuple[LinearRestrictions, LinearRestrictions]:
    """Restrictions on ``vec(A)`` and ``vec(B)`` making the structural forms equivalent."""
    n = layout.n_stacked
    G = selection_matrix(layout, scheme)
    N = discarded_directions(layout, scheme)
    if N.shape[1] == 0:
        return LinearRestrictions.empty(n * n), LinearRestrictions.empty(n * n)
    labs = layout.labels()
    out = []
    for tag in ("A", "B"):
        rows, labels = _block_constraints(G, N, n, 0, n * n, tag, labs, labs)
        out.append(LinearRestrictions(n * n, np.array(rows), np.zeros(len(rows)), labels))
    return out[0], out[1]
