"""Batch command-line interface.

Every command writes tidy CSV files plus ``manifest.json`` (configuration
echo, seed, library versions and a SHA-256 digest of each output) into the
output directory. Wall-clock timings and the worker count go to
``timings.json``, the only file that may differ between identical runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig
from .dynamics import bootstrap_bands, fevd, structural_irf, vma_from_var
from .equivalence import run_equivalence
from .errors import ConfigError, MidasSvarError
from .io import (
    FEVD_HEADER,
    IRF_HEADER,
    dump_json,
    export_stacked,
    fevd_rows,
    ingest,
    irf_rows,
    matrix_rows,
    read_series_csv,
    write_table,
)
from .montecarlo import (
    TestSpec,
    builtin_dgp,
    power_at_size,
    pvalue_plot,
    rejection_rates,
    run_experiment,
    simulate,
    size_power_curve,
)
from .numerics import RngStream
from .parallel import default_workers
from .reduced_form import (
    companion_spectral_radius,
    estimate_ols,
    information_criteria,
    select_order,
)
from .structural import estimate_identified

logger = logging.getLogger("midas_svar")

LEVELS = (0.01, 0.05, 0.10)


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, command: str, cfg: RunConfig, workers: int):
        self.command = command
        self.cfg = cfg
        self.workers = workers
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def table(self, name: str, header, rows) -> None:
        write_table(self.out / name, header, rows)
        self.files.append(name)

    def lap(self, label: str) -> None:
        now = time.perf_counter()
        self.timings[label] = now - self._t0
        self._t0 = now

    def finish(self) -> None:
        digests = {}
        for name in sorted(self.files):
            digests[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        manifest = {
            "command": self.command,
            "config": self.cfg.to_dict(),
            "seed": self.cfg.seed,
            "versions": {
                "midas_svar": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "outputs": digests,
        }
        dump_json(self.out / "manifest.json", manifest)
        dump_json(self.out / "timings.json", {"workers": self.workers, "seconds": self.timings})


# ---------------------------------------------------------------------------
# data and model helpers


def load_data(cfg: RunConfig, args):
    if cfg.data is not None:
        high = read_series_csv(cfg.data.high)
        low = read_series_csv(cfg.data.low)
        return ingest(high, low, cfg.data)
    if args.dgp:
        # no data files: draw one sample from a built-in process
        dgp = builtin_dgp(args.dgp, T=cfg.mc.T, burn_in=cfg.mc.burn_in)
        return simulate(dgp, RngStream(cfg.seed, 0))
    raise ConfigError("no data: give a config with a data section or --dgp")


def regressor_labels(data, p: int, intercept: bool) -> list[str]:
    out = ["const"] if intercept else []
    for i in range(1, p + 1):
        out += [f"{lab}(t-{i})" for lab in data.labels]
    return out + list(data.exog_labels)


def choose_order(run: Run, data) -> int:
    cfg = run.cfg
    if not cfg.p_max:
        return cfg.p
    rows = information_criteria(data, cfg.p_max, cfg.intercept)
    run.table("criteria.csv", ["p", "loglik", "n_params", "aic", "bic"],
              [(r.p, r.loglik, r.n_params, r.aic, r.bic) for r in rows])
    return select_order(rows, cfg.criterion)


def structural_fit(cfg: RunConfig, data, fit):
    restr = cfg.ab_restrictions(data.layout)
    if restr is None:
        raise ConfigError("this command needs an identification scheme (config 'identification' or --scheme)")
    return restr, estimate_identified(fit, restr)


# ---------------------------------------------------------------------------
# commands


def cmd_estimate(run: Run, args) -> None:
    cfg = run.cfg
    data = load_data(cfg, args)
    p = choose_order(run, data)
    fit = estimate_ols(data, p, cfg.intercept)
    run.lap("reduced_form")
    run.table("reduced_coefficients.csv", ["equation", "regressor", "value"],
              matrix_rows(fit.coef, data.labels, regressor_labels(data, p, cfg.intercept)))
    run.table("sigma_u.csv", ["row", "column", "value"], matrix_rows(fit.sigma_u, data.labels, data.labels))
    summary = [
        ("p", p), ("effective_T", fit.effective_T), ("n_free", fit.n_free), ("loglik", fit.loglik),
        ("loglik_kernel", fit.loglik_kernel), ("spectral_radius", companion_spectral_radius(fit)),
    ]
    if cfg.identification is not None:
        restr, ab = structural_fit(cfg, data, fit)
        run.lap("structural")
        shocks = [f"e{j}" for j in range(data.n)]
        run.table("structural_A.csv", ["row", "column", "value"], matrix_rows(ab.A, data.labels, data.labels))
        run.table("structural_B.csv", ["row", "column", "value"], matrix_rows(ab.B, data.labels, shocks))
        rep = ab.identification
        summary += [
            ("scheme", restr.name), ("q_A", restr.q_A), ("q_B", restr.q_B),
            ("jacobian_rank", rep.jacobian_rank), ("required_rank", rep.required_rank),
            ("identified", rep.identified), ("overid_dof", rep.overid_dof),
            ("structural_loglik", ab.loglik), ("converged", ab.converged),
            ("iterations", ab.iterations), ("gradient_norm", ab.gradient_norm),
        ]
    run.table("fit_summary.csv", ["key", "value"], summary)


def cmd_test_equivalence(run: Run, args) -> None:
    cfg = run.cfg
    data = load_data(cfg, args)
    p = choose_order(run, data)
    ab = cfg.ab_restrictions(data.layout)
    rows = []
    for scheme in cfg.aggregation_schemes():
        rep = run_equivalence(data, p, scheme, ab, intercept=cfg.intercept, level=cfg.level,
                              skip_structural_on_reject=cfg.skip_structural_on_reject)
        for r in rep.rows():
            rows.append((r["test"], r["scheme"], r["statistic"], r["dof"], r["pvalue"],
                         r["pvalue"] < cfg.level, r["l_unrestricted"], r["l_restricted"]))
        if rep.structural_skipped:
            rows.append(("structural", str(scheme), "", "", "", "", "", "skipped"))
        run.lap(f"scheme:{scheme}")
    run.table("equivalence.csv",
              ["test", "scheme", "statistic", "dof", "pvalue", "reject", "l_unrestricted", "l_restricted"], rows)


def cmd_irf(run: Run, args) -> None:
    cfg = run.cfg
    data = load_data(cfg, args)
    p = choose_order(run, data)
    H = cfg.bootstrap.horizons
    if cfg.bootstrap.n_boot > 0:
        restr = cfg.ab_restrictions(data.layout)
        if restr is None:
            raise ConfigError("irf needs an identification scheme")
        irf = bootstrap_bands(data, p, restr, H, cfg.bootstrap.n_boot, cfg.bootstrap.level, cfg.seed,
                              intercept=cfg.intercept, workers=run.workers)
        run.table("bootstrap_summary.csv", ["key", "value"],
                  [("n_boot", irf.n_boot), ("n_failed", irf.n_failed), ("level", irf.level)])
    else:
        fit = estimate_ols(data, p, cfg.intercept)
        _, ab = structural_fit(cfg, data, fit)
        irf = structural_irf(vma_from_var(fit.lag_coeffs, H), ab, labels=data.labels)
    run.lap("irf")
    run.table("irf.csv", IRF_HEADER, irf_rows(irf, data.labels))


def cmd_fevd(run: Run, args) -> None:
    cfg = run.cfg
    data = load_data(cfg, args)
    p = choose_order(run, data)
    fit = estimate_ols(data, p, cfg.intercept)
    _, ab = structural_fit(cfg, data, fit)
    horizons = sorted(set(int(h) for h in cfg.fevd_horizons))
    table = fevd(vma_from_var(fit.lag_coeffs, max(horizons)), ab, labels=data.labels)
    keep = set(horizons)
    run.lap("fevd")
    run.table("fevd.csv", FEVD_HEADER, (r for r in fevd_rows(table, data.labels) if r[0] in keep))


def cmd_simulate(run: Run, args) -> None:
    cfg = run.cfg
    name = args.dgp or cfg.mc.dgp
    dgp = builtin_dgp(name, T=cfg.mc.T, burn_in=cfg.mc.burn_in)
    data = simulate(dgp, RngStream(cfg.seed, 0))
    high, low = run.out / "high.csv", run.out / "low.csv"
    export_stacked(data, high, low)
    run.files += ["high.csv", "low.csv"]
    run.table("stacked.csv", ["row", *data.labels], ((t, *data.Y[t]) for t in range(data.T)))
    run.table("dgp.csv", ["key", "value"], [("name", dgp.name), ("T", dgp.T), ("burn_in", dgp.burn_in),
                                             ("approximate", dgp.approximate), ("note", dgp.note)])
    run.lap("simulate")


def cmd_mc(run: Run, args) -> None:
    cfg = run.cfg
    test = TestSpec(**cfg.mc.test) if cfg.mc.test else TestSpec()
    names = [args.dgp or cfg.mc.dgp]
    alt = args.alt_dgp or cfg.mc.alt_dgp
    if alt:
        names.append(alt)
    results = []
    for k, name in enumerate(names):
        dgp = builtin_dgp(name, T=cfg.mc.T, burn_in=cfg.mc.burn_in)
        # the alternative gets its own seed offset so the two samples are independent
        res = run_experiment(dgp, cfg.mc.reps, test, cfg.seed + k, run.workers)
        results.append((name, res))
        run.lap(f"mc:{name}")
    pv_rows, sum_rows = [], []
    for name, res in results:
        pv_rows += [(name, int(r), s, p) for r, s, p in zip(res.replications, res.statistics, res.pvalues)]
        for a, rate in rejection_rates(res, LEVELS).items():
            sum_rows.append((name, a, rate, res.R, res.failures, res.dof, res.approximate))
    run.table("pvalues.csv", ["dgp", "replication", "statistic", "pvalue"], pv_rows)
    run.table("summary.csv", ["dgp", "level", "rejection_rate", "R", "failures", "dof", "approximate"], sum_rows)
    curve = pvalue_plot(results[0][1])
    if len(results) == 1:
        run.table("edf.csv", ["grid_point", "edf_null"], zip(curve.grid, curve.edf_values))
    else:
        sp = size_power_curve(results[0][1], results[1][1])
        run.table("edf.csv", ["grid_point", "edf_null", "edf_alt"], zip(sp.grid, sp.size, sp.power))
        run.table("power_at_size.csv", ["true_size", "power"], [(a, power_at_size(sp, a)) for a in LEVELS])


COMMANDS = {
    "estimate": cmd_estimate,
    "test-equivalence": cmd_test_equivalence,
    "irf": cmd_irf,
    "fevd": cmd_fevd,
    "simulate": cmd_simulate,
    "mc": cmd_mc,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="midas-svar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, help="worker processes (default: all cores)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--scheme", help="identification scheme preset")
        sp.add_argument("--aggregation", action="append",
                        help="aggregation scheme to test (repeatable), e.g. first or mixed:first,sum")
        sp.add_argument("--level", type=float, help="test level (test-equivalence) or band level (irf)")
        sp.add_argument("--horizons", type=int, help="maximum horizon")
        sp.add_argument("--boot", type=int, help="bootstrap replications (0: point estimates only)")
        sp.add_argument("--reps", type=int, help="Monte Carlo replications")
        sp.add_argument("--dgp", help="built-in data-generating process")
        sp.add_argument("--alt-dgp", help="alternative process for a size-power pair (mc)")
        sp.add_argument("-p", "--lags", type=int, help="lag order")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.scheme is not None:
        cfg.identification = args.scheme
    if args.aggregation is not None:
        cfg.aggregation = list(args.aggregation)
    if args.level is not None:
        if args.command == "irf":
            cfg.bootstrap.level = args.level
        else:
            cfg.level = args.level
    if args.horizons is not None:
        cfg.bootstrap.horizons = args.horizons
        cfg.fevd_horizons = list(range(args.horizons + 1))
    if args.boot is not None:
        cfg.bootstrap.n_boot = args.boot
    if args.reps is not None:
        cfg.mc.reps = args.reps
    if args.dgp is not None:
        cfg.mc.dgp = args.dgp
    if args.alt_dgp is not None:
        cfg.mc.alt_dgp = args.alt_dgp
    if args.lags is not None:
        cfg.p, cfg.p_max = args.lags, None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        cfg = apply_overrides(cfg, args)
        workers = args.workers or cfg.workers or default_workers()
        run = Run(args.command, cfg, workers)
        COMMANDS[args.command](run, args)
        run.finish()
    except MidasSvarError as exc:
        err = {"category": exc.category, "type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "line", None) is not None:
            err["line"] = exc.line
        print(json.dumps({"error": err}), file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        err = {"category": "invalid-input", "type": type(exc).__name__, "message": str(exc)}
        print(json.dumps({"error": err}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
