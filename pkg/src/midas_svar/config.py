"""JSON run configuration.

Schema (all keys optional unless a command needs them)::

    {
      "data": {"high": "monthly.csv", "low": "quarterly.csv",
               "high_vars": ["i", "vix"], "low_vars": ["k"],
               "exog_high": [{"name": "oil", "lags": [0]}], "exog_low": [],
               "transforms": {"vix": "log"}},
      "p": 1, "p_max": null, "criterion": "bic", "intercept": true,
      "identification": "recursive-midas"   or   {"A": [...rows...], "B": [...rows...]},
      "aggregation": ["first"],
      "level": 0.05, "skip_structural_on_reject": false,
      "bootstrap": {"n_boot": 999, "level": 0.90, "horizons": 20},
      "fevd_horizons": [0, 1, 4, 8, 20],
      "mc": {"dgp": "small-1-h0", "alt_dgp": null, "reps": 1000, "T": 109,
             "test": {"kind": "reduced", "scheme": "first", "p": 1}},
      "seed": 0, "out": "out", "workers": 1
    }

Relative data paths resolve against the directory of the config file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .io import DataConfig
from .layout import AggregationScheme, FrequencyLayout
from .structural import AbRestrictions, named_scheme

DEFAULT_FEVD_HORIZONS = [0, 1, 4, 8, 20]


@dataclass
class BootstrapConfig:
    n_boot: int = 999
    level: float = 0.90
    horizons: int = 20


@dataclass
class McConfig:
    dgp: str = "small-1-h0"
    alt_dgp: str | None = None
    reps: int = 1000
    T: int = 109
    burn_in: int = 200
    test: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    data: DataConfig | None = None
    p: int = 1
    p_max: int | None = None
    criterion: str = "bic"
    intercept: bool = True
    identification: object = None
    aggregation: list = field(default_factory=lambda: ["first"])
    level: float = 0.05
    skip_structural_on_reject: bool = False
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    fevd_horizons: list = field(default_factory=lambda: list(DEFAULT_FEVD_HORIZONS))
    mc: McConfig = field(default_factory=McConfig)
    seed: int = 0
    out: str = "out"
    workers: int | None = None

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "RunConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        data = DataConfig.from_dict(d.pop("data"), base) if d.get("data") else None
        d.pop("data", None)
        try:
            boot = BootstrapConfig(**d.pop("bootstrap", {}))
            mc = McConfig(**d.pop("mc", {}))
            cfg = cls(data=data, bootstrap=boot, mc=mc, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        if isinstance(cfg.aggregation, str):
            cfg.aggregation = [cfg.aggregation]
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers", None)
        return d

    def aggregation_schemes(self) -> list[AggregationScheme]:
        return [AggregationScheme.parse(s) for s in self.aggregation]

    def ab_restrictions(self, layout: FrequencyLayout) -> AbRestrictions | None:
        ident = self.identification
        if ident is None:
            return None
        if isinstance(ident, str):
            try:
                return named_scheme(ident, layout)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
        if isinstance(ident, dict) and "A" in ident and "B" in ident:
            try:
                r = AbRestrictions.from_patterns(ident["A"], ident["B"], ident.get("name", "config"))
            except ValueError as exc:
                raise ConfigError(f"bad restriction pattern: {exc}") from None
            if r.n != layout.n_stacked:
                raise ConfigError(f"pattern size {r.n} does not match stacked dimension {layout.n_stacked}")
            return r
        raise ConfigError("identification must be a scheme name or an {A, B} pattern pair")
