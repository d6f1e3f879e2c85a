"""Scenario configuration: defaults, validation and the INI-style config file grammar.

The config file is parsed with :mod:`configparser`. Four sections are recognised and
every key belongs to exactly one of them::

    [scenario]  traffic_model ues arrival t_ap t_rap beta_a beta_b d_c t_rms_us
                preambles max_attempts detection_probs
    [channel]   rate_0 rate_1 rate_2 delta_db snr_db theta
    [timing]    t_prach t_pd t_rar t_r3 t_msg3 t_cr w_rar w_cr w_bo eta xi
    [run]       scheme engine replications seed scenario1 pair_resolution
                msg3_model workers

Precedence is overrides > file > traffic-model preset > defaults. ``traffic_model``
is applied first, so a file that sets both ``traffic_model = tm2`` and
``ues = 50000`` ends up with Beta arrivals and 50000 UEs.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .channel import OutageParams, db_to_linear
from .core import ArrivalKind, ArrivalModel, CellGeometry, PreamblePool, Scheme, default_detection_prob


class ConfigError(ValueError):
    pass


ENGINES = ("analytic", "montecarlo", "both")
SCENARIO1_POLICIES = ("ideal", "realistic")
PAIR_RESOLUTION = ("geometric", "coin")
MSG3_MODELS = ("sampled", "closed-form")

TRAFFIC_MODELS = {
    "tm1": {"arrival": "uniform", "ues": 40000},
    "tm2": {"arrival": "beta", "ues": 20000},
}


@dataclass(frozen=True)
class ScenarioConfig:
    # [scenario]
    traffic_model: str = "tm1"
    ues: int = 40000
    arrival: str = "uniform"
    t_ap: float = 10000.0  # ms
    t_rap: float = 5.0  # ms
    beta_a: float = 3.0
    beta_b: float = 4.0
    d_c: float = 500.0  # m
    t_rms_us: float = 0.3
    preambles: int = 54
    max_attempts: int = 10
    detection_probs: tuple = ()  # empty -> 1 - exp(-l)
    # [channel]
    rate_0: float = 1.6
    rate_1: float = 1.6
    rate_2: float = 1.6
    delta_db: float = 3.0
    snr_db: float = 10.0
    theta: float = 1.0
    # [timing], all ms
    t_prach: float = 2.0
    t_pd: float = 2.0
    t_rar: float = 1.0
    t_r3: float = 3.0
    t_msg3: float = 3.0
    t_cr: float = 1.0
    w_rar: float = 6.0
    w_cr: float = 16.0
    w_bo: float = 20.0
    eta: float = 0.5
    xi: float = 0.5
    # [run]
    scheme: str = "nora"
    engine: str = "analytic"
    replications: int = 1
    seed: int = 0
    scenario1: str = "ideal"
    pair_resolution: str = "geometric"
    msg3_model: str = "sampled"
    workers: int = 1

    def __post_init__(self):
        errors = _validate(self)
        if errors:
            raise ConfigError("; ".join(errors))

    # derived objects

    @property
    def scheme_enum(self) -> Scheme:
        return Scheme(self.scheme)

    def geometry(self) -> CellGeometry:
        return CellGeometry(d_c=self.d_c, t_rms=self.t_rms_us * 1e-6)

    def arrival_model(self) -> ArrivalModel:
        return ArrivalModel(kind=ArrivalKind(self.arrival), T_AP=self.t_ap, alpha=self.beta_a, beta=self.beta_b)

    def pool(self) -> PreamblePool:
        if self.detection_probs:
            table = np.asarray(self.detection_probs, dtype=float)
            return PreamblePool(R=self.preambles, L=self.max_attempts,
                                p_l=lambda l: table[np.asarray(l, dtype=int) - 1])
        return PreamblePool(R=self.preambles, L=self.max_attempts, p_l=default_detection_prob)

    def outage_params(self) -> OutageParams:
        return OutageParams(gamma_target=db_to_linear(self.snr_db), delta_db=self.delta_db,
                            R_hat_0=self.rate_0, R_hat_1=self.rate_1, R_hat_2=self.rate_2, theta=self.theta)

    @property
    def t_pf0(self) -> float:
        return self.t_prach + self.t_pd + self.w_rar

    @property
    def t_mf0(self) -> float:
        return self.t_prach + self.t_pd + self.eta * self.w_rar + self.t_rar + self.t_r3 + self.t_msg3 + self.w_cr

    @property
    def t_s(self) -> float:
        return (self.t_prach + self.t_pd + self.eta * self.w_rar + self.t_rar + self.t_r3 + self.t_msg3
                + self.xi * self.w_cr + self.t_cr)

    def replace(self, **changes) -> "ScenarioConfig":
        return build_config(base=self, overrides=changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["detection_probs"] = list(self.detection_probs)
        return d


FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}

SECTIONS = {
    "scenario": ("traffic_model", "ues", "arrival", "t_ap", "t_rap", "beta_a", "beta_b", "d_c", "t_rms_us",
                 "preambles", "max_attempts", "detection_probs"),
    "channel": ("rate_0", "rate_1", "rate_2", "delta_db", "snr_db", "theta"),
    "timing": ("t_prach", "t_pd", "t_rar", "t_r3", "t_msg3", "t_cr", "w_rar", "w_cr", "w_bo", "eta", "xi"),
    "run": ("scheme", "engine", "replications", "seed", "scenario1", "pair_resolution", "msg3_model", "workers"),
}
assert set(sum(SECTIONS.values(), ())) == set(FIELDS)

NUMERIC_FIELDS = tuple(n for n, f in FIELDS.items() if f.type in ("int", "float"))


def _validate(c: ScenarioConfig) -> list[str]:
    errs = []

    def need(ok, name, what):
        if not ok:
            errs.append(f"{name}={getattr(c, name)!r}: {what}")

    need(c.traffic_model in TRAFFIC_MODELS, "traffic_model", f"expected one of {sorted(TRAFFIC_MODELS)}")
    need(c.ues >= 0, "ues", "must be >= 0")
    need(c.arrival in ("uniform", "beta"), "arrival", "expected 'uniform' or 'beta'")
    need(c.t_ap >= 0 and math.isfinite(c.t_ap), "t_ap", "must be finite and >= 0")
    need(c.t_rap > 0, "t_rap", "must be > 0")
    need(c.beta_a > 0, "beta_a", "must be > 0")
    need(c.beta_b > 0, "beta_b", "must be > 0")
    need(c.d_c > 0, "d_c", "must be > 0")
    need(c.t_rms_us >= 0, "t_rms_us", "must be >= 0")
    need(c.preambles >= 2, "preambles", "must be >= 2")
    need(c.max_attempts >= 1, "max_attempts", "must be >= 1")
    if c.detection_probs:
        need(len(c.detection_probs) == c.max_attempts, "detection_probs", "needs exactly max_attempts entries")
        need(all(0 <= p <= 1 for p in c.detection_probs), "detection_probs", "entries must lie in [0, 1]")
    for name in ("rate_0", "rate_1", "rate_2", "delta_db"):
        need(getattr(c, name) >= 0, name, "must be >= 0")
    need(math.isfinite(c.snr_db), "snr_db", "must be finite")
    need(c.theta > 0, "theta", "must be > 0")
    for name in SECTIONS["timing"]:
        if name in ("eta", "xi"):
            need(0 <= getattr(c, name) <= 1, name, "must lie in [0, 1]")
        elif name == "w_bo":
            need(c.w_bo > 0, name, "must be > 0")
        else:
            need(getattr(c, name) >= 0, name, "must be >= 0")
    need(c.t_pf0 > 0, "t_prach", "preamble-failure turnaround t_prach+t_pd+w_rar must be > 0")
    need(c.scheme in ("nora", "ora"), "scheme", "expected 'nora' or 'ora'")
    need(c.engine in ENGINES, "engine", f"expected one of {ENGINES}")
    need(c.replications >= 1, "replications", "must be >= 1")
    need(c.seed >= 0, "seed", "must be >= 0")
    need(c.scenario1 in SCENARIO1_POLICIES, "scenario1", f"expected one of {SCENARIO1_POLICIES}")
    need(c.pair_resolution in PAIR_RESOLUTION, "pair_resolution", f"expected one of {PAIR_RESOLUTION}")
    need(c.msg3_model in MSG3_MODELS, "msg3_model", f"expected one of {MSG3_MODELS}")
    need(c.workers >= 1, "workers", "must be >= 1")
    return errs


def _coerce(name: str, value: Any):
    f = FIELDS.get(name)
    if f is None:
        raise ConfigError(f"unknown config key {name!r}")
    try:
        if f.type == "int":
            if isinstance(value, str):
                v = float(value.strip())
            else:
                v = float(value)
            if v != int(v):
                raise ValueError
            return int(v)
        if f.type == "float":
            return float(value)
        if f.type == "tuple":
            if isinstance(value, str):
                value = [p for p in value.replace(",", " ").split() if p]
            return tuple(float(p) for p in value)
        return str(value).strip().lower()
    except (TypeError, ValueError):
        raise ConfigError(f"{name}={value!r}: cannot convert to {f.type}") from None


def build_config(file_values: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None,
                 base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Merge defaults (or ``base``), traffic-model preset, file values and overrides."""
    layers = [dict(file_values or {}), dict(overrides or {})]
    merged = {} if base is None else base.to_dict()
    explicit = {}
    for layer in layers:
        for k, v in layer.items():
            key = k.replace("-", "_")
            explicit[key] = _coerce(key, v)
    tm = explicit.get("traffic_model", merged.get("traffic_model", "tm1"))
    if "traffic_model" in explicit or base is None:
        if tm not in TRAFFIC_MODELS:
            raise ConfigError(f"traffic_model={tm!r}: expected one of {sorted(TRAFFIC_MODELS)}")
        merged.update(TRAFFIC_MODELS[tm])
        merged["traffic_model"] = tm
    merged.update(explicit)
    if "detection_probs" in merged:
        merged["detection_probs"] = tuple(merged["detection_probs"])
    return ScenarioConfig(**merged)


def read_config_file(path: str | Path) -> dict:
    """Read a sectioned ``key = value`` file into a flat dict, rejecting unknown keys."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError:
        if text.strip():
            raise ConfigError(f"{path}: keys must appear under a [section] header") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        allowed = SECTIONS.get(section.lower())
        if allowed is None:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in parser.items(section):
            key = key.replace("-", "_")
            if key not in FIELDS:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            if key not in allowed:
                raise ConfigError(f"{path}: key {key!r} belongs in a different section than [{section}]")
            values[key] = value
    return values


def parse_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> ScenarioConfig:
    file_values = read_config_file(path) if path is not None else {}
    return build_config(file_values, overrides)
