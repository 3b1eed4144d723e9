"""CSV ingestion of mixed-frequency series, run configuration, and tidy result files."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FrequencyMismatch, ParseError, PeriodGap
from .layout import ExogBlock, FrequencyLayout
from .reduced_form import StackedDataset

logger = logging.getLogger(__name__)

_MONTH = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER = re.compile(r"^(\d{4})-Q([1-4])$")
_YEAR = re.compile(r"^(\d{4})$")
PER_YEAR = {"monthly": 12, "quarterly": 4, "annual": 1}
MISSING = {"", "na", "nan", "null", "."}


def parse_period(label: str) -> tuple[str, int]:
    """Map ``YYYY-MM``, ``YYYY-Qn`` or ``YYYY`` to ``(frequency, ordinal)``."""
    label = label.strip()
    if mo := _MONTH.match(label):
        month = int(mo.group(2))
        if not 1 <= month <= 12:
            raise ValueError(f"bad month in {label!r}")
        return "monthly", int(mo.group(1)) * 12 + month - 1
    if mo := _QUARTER.match(label):
        return "quarterly", int(mo.group(1)) * 4 + int(mo.group(2)) - 1
    if mo := _YEAR.match(label):
        return "annual", int(mo.group(1))
    raise ValueError(f"unrecognized period label {label!r}")


def format_period(freq: str, ordinal: int) -> str:
    if freq == "monthly":
        return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"
    if freq == "quarterly":
        return f"{ordinal // 4:04d}-Q{ordinal % 4 + 1}"
    return f"{ordinal:04d}"


@dataclass
class SeriesFile:
    frequency: str
    path: str
    columns: list
    ordinals: np.ndarray
    values: np.ndarray  # rows x columns, NaN for missing

    @property
    def periods(self) -> list[str]:
        return [format_period(self.frequency, int(o)) for o in self.ordinals]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise ConfigError(f"series {name!r} not found in {self.path}") from None


def read_series_csv(path, frequency: str | None = None) -> SeriesFile:
    """Read a header-first CSV whose first column holds period labels.

    Periods must be of one frequency, strictly increasing and contiguous.
    """
    path = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file", line=1)
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise ParseError(f"{path}: header needs a period column and at least one series", line=1)
    columns = header[1:]
    freqs, ords, vals = set(), [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            f, o = parse_period(row[0])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}", line=lineno) from None
        freqs.add(f)
        rec = []
        for c in row[1:]:
            c = c.strip()
            if c.lower() in MISSING:
                rec.append(np.nan)
                continue
            try:
                rec.append(float(c))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value {c!r}", line=lineno) from None
        ords.append(o)
        vals.append(rec)
    if len(freqs) > 1:
        raise FrequencyMismatch(f"{path}: mixed period formats {sorted(freqs)}")
    freq = freqs.pop() if freqs else (frequency or "monthly")
    if frequency is not None and freq != frequency:
        raise FrequencyMismatch(f"{path}: expected {frequency} periods, found {freq}")
    ords = np.array(ords, dtype=int)
    for a, b in zip(ords[:-1], ords[1:]):
        if b <= a:
            raise ParseError(f"{path}: periods not strictly increasing at {format_period(freq, int(b))}")
        if b != a + 1:
            raise PeriodGap(f"{path}: missing period {format_period(freq, int(a) + 1)}")
    return SeriesFile(freq, path, columns, ords, np.array(vals, dtype=float).reshape(len(ords), len(columns)))


def transform(x: np.ndarray, kind: str) -> np.ndarray:
    """``level``, ``log``, ``diff`` or ``pct-change``; differences leave a leading NaN."""
    x = np.asarray(x, dtype=float)
    if kind == "level":
        return x.copy()
    if kind == "log":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(x)
        out[~(x > 0)] = np.nan
        return out
    if kind == "diff":
        return np.concatenate([[np.nan], np.diff(x)])
    if kind == "pct-change":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.concatenate([[np.nan], 100.0 * np.diff(x) / x[:-1]])
    raise ConfigError(f"unknown transform {kind!r}")


@dataclass
class DataConfig:
    high: str
    low: str
    high_vars: list
    low_vars: list
    exog_high: list = field(default_factory=list)  # [{"name": str, "lags": [0, ...]}] or names
    exog_low: list = field(default_factory=list)
    transforms: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "DataConfig":
        try:
            out = cls(
                high=str(d["high"]), low=str(d["low"]), high_vars=list(d["high_vars"]),
                low_vars=list(d["low_vars"]), exog_high=list(d.get("exog_high", [])),
                exog_low=list(d.get("exog_low", [])), transforms=dict(d.get("transforms", {})),
            )
        except KeyError as exc:
            raise ConfigError(f"data section lacks {exc.args[0]!r}") from None
        if base is not None:
            out.high = str((base / out.high).resolve()) if not Path(out.high).is_absolute() else out.high
            out.low = str((base / out.low).resolve()) if not Path(out.low).is_absolute() else out.low
        return out

    def exog_specs(self) -> list[tuple[str, list]]:
        out = []
        for e in self.exog_high:
            if isinstance(e, str):
                out.append((e, [0]))
            else:
                out.append((e["name"], [int(lag) for lag in e.get("lags", [0])]))
        return out


def _ratio(high: str, low: str) -> int:
    if PER_YEAR[high] % PER_YEAR[low] or PER_YEAR[high] <= PER_YEAR[low]:
        raise FrequencyMismatch(f"cannot stack {high} series into {low} periods")
    return PER_YEAR[high] // PER_YEAR[low]


def _longest_complete_run(ok: np.ndarray) -> tuple[int, int]:
    best, cur_start, best_span = (0, 0), None, 0
    for i, flag in enumerate(list(ok) + [False]):
        if flag and cur_start is None:
            cur_start = i
        elif not flag and cur_start is not None:
            if i - cur_start > best_span:
                best, best_span = (cur_start, i), i - cur_start
            cur_start = None
    return best


def ingest(high: SeriesFile, low: SeriesFile, cfg: DataConfig) -> StackedDataset:
    """Stack the high-frequency rows of each low-frequency period next to the low-frequency values.

    Exogenous high-frequency series become blocks of ``m`` slot columns per
    configured lag (lag ``l`` uses the slots of period ``t-l``). Rows with
    missing values after transformation are trimmed to the longest complete
    span, with a warning.
    """
    m = _ratio(high.frequency, low.frequency)
    per_low = PER_YEAR[high.frequency] // PER_YEAR[low.frequency]
    # low period q covers high ordinals q*m .. q*m + m - 1
    hx = {name: transform(high.column(name), cfg.transforms.get(name, "level")) for name in cfg.high_vars}
    exs = cfg.exog_specs()
    ex = {name: transform(high.column(name), cfg.transforms.get(name, "level")) for name, _ in exs}
    lx = {name: transform(low.column(name), cfg.transforms.get(name, "level")) for name in cfg.low_vars}
    exl = {name: transform(low.column(name), cfg.transforms.get(name, "level")) for name in cfg.exog_low}
    h0, h1 = int(high.ordinals[0]), int(high.ordinals[-1])
    q_lo = max(int(low.ordinals[0]), -(-h0 // per_low))
    q_hi = min(int(low.ordinals[-1]), (h1 + 1) // per_low - 1)
    if q_hi < q_lo:
        raise PeriodGap("high- and low-frequency files share no complete low-frequency period")
    if (h0 > q_lo * m) or (h1 < q_hi * m + m - 1):
        raise PeriodGap("high-frequency file does not cover the analysis window")
    quarters = np.arange(q_lo, q_hi + 1)
    nh, nl = len(cfg.high_vars), len(cfg.low_vars)
    rows_Y, rows_Z = [], []
    for q in quarters:
        y = np.empty(m * nh + nl)
        for j in range(m):
            hi = q * m + j - h0
            for v, name in enumerate(cfg.high_vars):
                y[j * nh + v] = hx[name][hi]
        for v, name in enumerate(cfg.low_vars):
            y[m * nh + v] = lx[name][q - int(low.ordinals[0])]
        rows_Y.append(y)
        z = []
        for name, lags in exs:
            for lag in lags:
                for j in range(m):
                    hi = (q - lag) * m + j - h0
                    z.append(ex[name][hi] if hi >= 0 else np.nan)
        for name in cfg.exog_low:
            z.append(exl[name][q - int(low.ordinals[0])])
        rows_Z.append(z)
    Y = np.array(rows_Y)
    Z = np.array(rows_Z, dtype=float).reshape(len(quarters), -1)
    ok = np.all(np.isfinite(Y), axis=1) & np.all(np.isfinite(Z), axis=1)
    a, b = _longest_complete_run(ok)
    if b - a < len(quarters):
        logger.warning(
            "trimming sample to %s..%s (%d of %d periods complete)",
            format_period(low.frequency, int(quarters[a])), format_period(low.frequency, int(quarters[b - 1])),
            b - a, len(quarters),
        )
    if b - a == 0:
        raise PeriodGap("no complete low-frequency period after transformations")
    layout = FrequencyLayout(nl, nh, m, 1, tuple(cfg.high_vars), tuple(cfg.low_vars))
    blocks, exog_labels, start = [], [], 0
    # one block per (series, lag); each block holds the m slots of one series
    for name, lags in exs:
        for lag in lags:
            tag = f"{name}_l{lag}"
            blocks.append(ExogBlock(start, 1, 0, True, tag))
            exog_labels += [f"{tag}@{j + 1}" for j in range(m)]
            start += m
    for name in cfg.exog_low:
        blocks.append(ExogBlock(start, 0, 1, False, name))
        exog_labels.append(name)
        start += 1
    periods = [format_period(low.frequency, int(q)) for q in quarters[a:b]]
    return StackedDataset(
        Y[a:b], Z[a:b] if Z.shape[1] else None, layout.labels(), exog_labels, tuple(blocks), layout, periods,
    )


def write_series_csv(path, frequency: str, ordinals, columns, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", *columns])
        for o, row in zip(ordinals, np.asarray(values)):
            w.writerow([format_period(frequency, int(o)), *(fmt(x) for x in row)])


def export_stacked(data: StackedDataset, high_path, low_path, first_low: str = "2000-Q1") -> None:
    """Write a stacked dataset back out as a high-frequency and a low-frequency CSV."""
    layout = data.layout
    if layout is None:
        raise ValueError("dataset has no frequency layout")
    lf, q0 = parse_period(first_low)
    hf = {"quarterly": "monthly", "annual": "monthly" if layout.m == 12 else "quarterly"}[lf]
    m, nh = layout.m, layout.n_high
    if _ratio(hf, lf) != m:
        raise FrequencyMismatch(f"m={m} does not match {hf}/{lf}")
    hn = list(layout.high_names or [f"h{v}" for v in range(nh)])
    ln = list(layout.low_names or [f"l{v}" for v in range(layout.n_low)])
    H = data.Y[:, : m * nh].reshape(data.T * m, nh)
    write_series_csv(high_path, hf, np.arange(q0 * m, q0 * m + data.T * m), hn, H)
    write_series_csv(low_path, lf, np.arange(q0, q0 + data.T), ln, data.Y[:, m * nh :])


# ---------------------------------------------------------------------------
# output files


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_table(path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def read_table(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def irf_rows(irf, labels=None):
    labels = labels or irf.labels or [str(i) for i in range(irf.responses.shape[1])]
    H, n, _ = irf.responses.shape
    for h in range(H):
        for i in range(n):
            for j in range(n):
                lo = irf.lower[h, i, j] if irf.lower is not None else float("nan")
                up = irf.upper[h, i, j] if irf.upper is not None else float("nan")
                yield h, labels[i], f"e{j}", irf.responses[h, i, j], lo, up


IRF_HEADER = ["horizon", "response_variable", "shock", "point", "lower", "upper"]
FEVD_HEADER = ["horizon", "variable", "shock", "share_pct"]


def fevd_rows(table, labels=None):
    labels = labels or table.labels or [str(i) for i in range(table.shares.shape[1])]
    H, n, _ = table.shares.shape
    for h in range(H):
        for i in range(n):
            for j in range(n):
                yield h, labels[i], f"e{j}", table.shares[h, i, j]


def matrix_rows(M, row_labels, col_labels):
    for i, rl in enumerate(row_labels):
        for j, cl in enumerate(col_labels):
            yield rl, cl, M[i, j]


def dump_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
