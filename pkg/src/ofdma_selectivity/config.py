"""Flat ``key = value`` experiment configs and PDP definition files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path

from .channel import (
    OfdmConfig,
    PowerDelayProfile,
    exponential_pdp_for_eff_paths,
    make_exponential_pdp,
    uniform_pdp,
)
from .errors import ConfigError, InvalidParameterError

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "parse_config_text",
    "load_config",
    "parse_pdp_text",
    "load_pdp",
    "defaults_table",
]

EXPERIMENTS = (
    "corr_sweep",
    "max_cb_vs_selectivity",
    "sum_rate_vs_delay",
    "gain_vs_blocksize",
    "optimal_delay_vs_tau",
)


def _floats(*xs):
    return field(default_factory=lambda: list(xs))


@dataclass
class ExperimentConfig:
    """One experiment run. Every field can be set from a config file or ``--set``."""

    experiment: str = "corr_sweep"
    # OFDM grid and link
    n_sc: int = 1024
    block_size: int = 32
    snr_scale: float = 10.0
    # scheduler
    k_users: int = 32
    n_fb: int = 1
    t_c: float = 100.0
    n_slots: int = 2000
    n_trials: int = 20000
    outage_policy: str = "skip"
    # channel and CDD
    max_taps: int = 64
    channel_eff_paths: float = 1.6246
    n_tx: int = 2
    kappa: float = 0.9
    k_c: typing.Optional[float] = None
    # sweep grids
    eff_paths_grid: list = _floats(1.01, 1.25, 1.6, 2.0, 2.5, 3.2, 4.0, 5.0, 6.4, 8.0, 10.0,
                                   12.8, 16.0, 24.0, 32.0, 48.0, 64.0)
    tau_grid: list = _floats(0.05, 0.1, 0.2, 0.4, 0.7, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0,
                             16.0, 24.0, 32.0)
    delay_grid: list = field(default_factory=lambda: list(range(0, 33)))
    block_sizes: list = field(default_factory=lambda: [8, 16, 32, 64, 128, 256])
    fixed_delays: list = field(default_factory=lambda: [1, 3, 5, 8])
    simulate: bool = True
    # run control
    seed: int = 0
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}",
                              field="experiment")
        for name in ("eff_paths_grid", "tau_grid", "delay_grid", "block_sizes"):
            if not getattr(self, name):
                raise ConfigError("grid must not be empty", field=name)
        positive = ("n_sc", "block_size", "k_users", "n_fb", "n_slots", "n_trials", "max_taps",
                    "n_tx", "workers")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError("must be >= 1", field=name)
        if self.snr_scale <= 0:
            raise ConfigError("must be positive", field="snr_scale")
        if self.t_c < 1:
            raise ConfigError("must be >= 1", field="t_c")
        if not 0 < self.kappa < 1:
            raise ConfigError("must lie in (0, 1)", field="kappa")
        if self.k_c is not None and self.k_c <= 0:
            raise ConfigError("must be positive", field="k_c")
        if self.outage_policy not in ("skip", "round_robin"):
            raise ConfigError("must be 'skip' or 'round_robin'", field="outage_policy")
        if any(e < 1 for e in self.eff_paths_grid):
            raise ConfigError("effective path counts must be >= 1", field="eff_paths_grid")
        if any(d < 0 for d in self.delay_grid + self.fixed_delays):
            raise ConfigError("delays must be nonnegative", field="delay_grid")
        try:
            for s in self.block_sizes + [self.block_size]:
                OfdmConfig(self.n_sc, s, self.snr_scale)
        except InvalidParameterError as exc:
            raise ConfigError(str(exc), field="block_sizes") from None

    def ofdm(self, block_size: int | None = None) -> OfdmConfig:
        return OfdmConfig(self.n_sc, block_size or self.block_size, self.snr_scale)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Short digest of every setting except where outputs go and how many workers run."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_HINTS = typing.get_type_hints(ExperimentConfig)


def _convert(name: str, raw: str, line: int | None):
    hint = _HINTS[name]
    raw = raw.strip()
    try:
        if hint is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint == typing.Optional[float]:
            return None if raw.lower() in ("", "none", "default") else float(raw)
        if hint is list:
            items = [x for x in raw.strip("[]").replace(",", " ").split() if x]
            nums = [float(x) for x in items]
            return [int(x) if x.is_integer() and name != "eff_paths_grid" and name != "tau_grid"
                    else x for x in nums]
        return raw.strip("'\"")
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {getattr(hint, '__name__', hint)}",
                          line=line, field=name) from None


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) over ``base`` defaults."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _HINTS:
            raise ConfigError("unknown setting", line=lineno, field=key)
        values[key] = _convert(key, raw, lineno)
    base = base or ExperimentConfig()
    return apply_overrides(base, values)


def apply_overrides(base: ExperimentConfig, values: dict) -> ExperimentConfig:
    cfg = dataclasses.replace(base, **values) if values else base
    cfg.validate()
    return cfg


def parse_assignments(items, base: ExperimentConfig) -> ExperimentConfig:
    """Apply ``key=value`` strings such as command-line ``--set`` overrides."""
    values = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key not in _HINTS:
            raise ConfigError("unknown setting", field=key)
        values[key] = _convert(key, raw, None)
    return apply_overrides(base, values)


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def defaults_table() -> str:
    d = ExperimentConfig()
    rows = []
    for f in fields(ExperimentConfig):
        hint = _HINTS[f.name]
        tname = "float|None" if hint == typing.Optional[float] else hint.__name__
        rows.append(f"  {f.name:<18} {tname:<11} {getattr(d, f.name)}")
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# PDP files
# ---------------------------------------------------------------------------

_PDP_KEYS = {"type", "tau_o", "max_taps", "n_taps", "target", "gains", "powers"}


def _pdp_from_mapping(spec: dict, line_of: dict) -> PowerDelayProfile:
    def num(key, kind=float, default=None):
        if key not in spec:
            if default is not None:
                return default
            raise ConfigError("missing required field", line=line_of.get("type"), field=key)
        try:
            return kind(spec[key])
        except (TypeError, ValueError):
            raise ConfigError(f"not a valid {kind.__name__}: {spec[key]!r}",
                              line=line_of.get(key), field=key) from None

    for key in spec:
        if key not in _PDP_KEYS:
            raise ConfigError("unknown PDP field", line=line_of.get(key), field=key)
    kind = str(spec.get("type", "gains")).lower()
    try:
        if kind == "exponential":
            return make_exponential_pdp(num("tau_o"), num("max_taps", int, 64))
        if kind == "uniform":
            return uniform_pdp(num("n_taps", int))
        if kind == "eff_paths":
            return exponential_pdp_for_eff_paths(num("target"), num("max_taps", int, 64))
        if kind in ("gains", "powers"):
            key = "powers" if "powers" in spec else "gains"
            raw = spec.get(key)
            if raw is None:
                raise ConfigError("missing required field", field=key)
            if isinstance(raw, str):
                raw = raw.strip("[]").replace(",", " ").split()
            try:
                vals = [float(v) for v in raw]
            except (TypeError, ValueError):
                raise ConfigError("gains must be numbers", line=line_of.get(key), field=key) from None
            return (PowerDelayProfile.from_powers(vals) if key == "powers"
                    else PowerDelayProfile.from_gains(vals))
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), line=line_of.get("type")) from None
    raise ConfigError(f"unknown PDP type {kind!r}", line=line_of.get("type"), field="type")


def parse_pdp_text(text: str) -> PowerDelayProfile:
    """Parse a PDP definition.

    Accepted forms: JSON (a list of gains or an object with ``type``), a
    plain list of amplitude gains (one or more per line), or ``key = value``
    lines such as ``type = exponential`` / ``tau_o = 2.5`` / ``max_taps = 64``.
    Gains are normalized to unit power.
    """
    stripped = text.strip()
    if not stripped:
        raise ConfigError("empty PDP definition", line=1)
    if stripped[0] in "[{":
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
        if isinstance(obj, list):
            obj = {"type": "gains", "gains": obj}
        if not isinstance(obj, dict):
            raise ConfigError("expected a list or an object", line=1)
        return _pdp_from_mapping(obj, {})

    spec, line_of, gains = {}, {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, raw = (s.strip() for s in line.split("=", 1))
            spec[key] = raw
            line_of[key] = lineno
            continue
        for tok in line.replace(",", " ").split():
            try:
                gains.append(float(tok))
            except ValueError:
                raise ConfigError(f"not a number: {tok!r}", line=lineno, field="gains") from None
    if gains and spec:
        raise ConfigError("mixes a bare gain list with key = value settings", line=1)
    if gains:
        return _pdp_from_mapping({"type": "gains", "gains": gains}, {})
    return _pdp_from_mapping(spec, line_of)


def load_pdp(path) -> PowerDelayProfile:
    return parse_pdp_text(Path(path).read_text())
