"""Declarative run configuration: flat ``[section]`` blocks of ``key = value``
lines with ``#`` comments, parsed with :mod:`configparser` and validated
against a typed schema.  Unknown keys, type mismatches and out-of-range values
raise :class:`~bergerflow.errors.ConfigError` naming the key and line.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields
from typing import Any, Callable

from .errors import ConfigError

FAMILIES = ("cap_cylinder", "taubnut_like", "neck", "flat", "cylinder")

# family -> {param: (default, validator, description)}
FAMILY_PARAMS: dict[str, dict[str, tuple[float, Callable[[float], bool], str]]] = {
    "cap_cylinder": {
        "B": (1.0, lambda v: v > 0, "> 0"),
        "a": (0.0, lambda v: 0.0 <= v <= 0.5, "in [0, 0.5]"),
    },
    "taubnut_like": {
        "ell": (1.0, lambda v: v > 0, "> 0"),
        "q": (0.25, lambda v: 0.0 <= v <= 0.25, "in [0, 1/4]"),
        "mu0": (1.0, lambda v: v > 0, "> 0"),
    },
    "neck": {
        "r_n": (0.2, lambda v: v > 0, "> 0"),
        "d": (0.6, lambda v: 0.0 < v < 1.0, "in (0, 1)"),
        "x0": (3.0, lambda v: v > 0, "> 0"),
        "w": (1.0, lambda v: v > 0, "> 0"),
    },
    "flat": {},
    "cylinder": {"r0": (1.0, lambda v: v > 0, "> 0")},
}


def _pos(v):
    return v > 0


@dataclass
class GridConfig:
    n_nodes: int = 1024
    x_max: float = 8.0
    cluster_factor: float = 1.0
    inner: str = "origin"
    outer: str = "pinned"


@dataclass
class StepConfig:
    cfl_factor: float = 0.15
    curvature_factor: float = 0.05
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    max_retries: int = 8


@dataclass
class RunSection:
    t_max: float = 1.0
    max_steps: int = 5_000_000
    rescale_trigger: float = 4.0
    max_rescales: int = 40
    remesh: bool = True
    nodes_per_length: float = 64.0
    core_lengths: float = 4.0
    remesh_dt_ratio: float = 0.25
    seed: int = 0


@dataclass
class OutputConfig:
    directory: str = "run_out"
    snapshot_decades: int = 1
    snapshot_dt: float = 0.0
    snapshot_on_rescale: bool = True
    write_files: bool = True
    series_every: int = 20


@dataclass
class MonitorConfig:
    tol: float = 1e-3
    band: float = 10.0
    pos_phi4_rate: float = 0.01


@dataclass
class AnalysisConfig:
    sigma_max: float = 20.0
    sigma_cmp: float = 5.0
    neck_sigma_cmp: float = 1.0
    type1_slope: float = 0.1
    type2_slope: float = -0.3


@dataclass
class RunConfig:
    family: str = "cap_cylinder"
    params: dict = field(default_factory=dict)
    grid: GridConfig = field(default_factory=GridConfig)
    step: StepConfig = field(default_factory=StepConfig)
    run: RunSection = field(default_factory=RunSection)
    output: OutputConfig = field(default_factory=OutputConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def replace(self, **sections) -> "RunConfig":
        """Copy with selected section fields overridden, e.g.
        ``cfg.replace(grid={"n_nodes": 512}, params={"a": 0.3})``."""
        import copy

        new = copy.deepcopy(self)
        for name, upd in sections.items():
            if name == "params":
                new.params.update(upd)
            elif name == "family":
                new.family = upd
            else:
                sec = getattr(new, name)
                for k, v in upd.items():
                    if not hasattr(sec, k):
                        raise ConfigError("unknown key", key=f"{name}.{k}")
                    setattr(sec, k, v)
        validate(new)
        return new


_SECTIONS = {
    "grid": GridConfig,
    "step": StepConfig,
    "run": RunSection,
    "output": OutputConfig,
    "monitor": MonitorConfig,
    "analysis": AnalysisConfig,
}

_RANGES: dict[str, tuple[Callable[[Any], bool], str]] = {
    "grid.n_nodes": (lambda v: v >= 16, ">= 16"),
    "grid.x_max": (_pos, "> 0"),
    "grid.cluster_factor": (lambda v: v >= 1.0, ">= 1"),
    "grid.inner": (lambda v: v in ("origin", "mirror"), "origin|mirror"),
    "grid.outer": (lambda v: v in ("pinned", "reflect"), "pinned|reflect"),
    "step.cfl_factor": (lambda v: 0 < v <= 1.0, "in (0, 1]"),
    "step.curvature_factor": (_pos, "> 0"),
    "step.dt_min": (_pos, "> 0"),
    "step.dt_max": (_pos, "> 0"),
    "step.max_retries": (lambda v: 0 <= v <= 64, "in [0, 64]"),
    "run.t_max": (_pos, "> 0"),
    "run.max_steps": (_pos, "> 0"),
    "run.rescale_trigger": (lambda v: v > 1.0, "> 1"),
    "run.max_rescales": (lambda v: v >= 0, ">= 0"),
    "run.nodes_per_length": (_pos, "> 0"),
    "run.core_lengths": (_pos, "> 0"),
    "run.remesh_dt_ratio": (lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "output.snapshot_decades": (lambda v: v >= 0, ">= 0"),
    "output.snapshot_dt": (lambda v: v >= 0, ">= 0"),
    "output.series_every": (lambda v: v >= 1, ">= 1"),
    "monitor.tol": (_pos, "> 0"),
    "monitor.band": (lambda v: v >= 1, ">= 1"),
    "monitor.pos_phi4_rate": (_pos, "> 0"),
    "analysis.sigma_max": (_pos, "> 0"),
    "analysis.sigma_cmp": (_pos, "> 0"),
    "analysis.neck_sigma_cmp": (_pos, "> 0"),
}


def _convert(raw: str, typ, key: str, line: int | None):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            if not re.fullmatch(r"[+-]?\d+", raw.replace("_", "")):
                raise ValueError(raw)
            return int(raw.replace("_", ""))
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        return raw
    except ValueError:
        raise ConfigError(f"type mismatch: expected {typ.__name__}, got {raw!r}", key=key, line=line) from None


def _line_of(text: str, section: str, key: str) -> int | None:
    cur = None
    for i, ln in enumerate(text.splitlines(), start=1):
        st = ln.split("#", 1)[0].strip()
        if st.startswith("[") and st.endswith("]"):
            cur = st[1:-1].strip()
        elif cur == section and "=" in st and st.split("=", 1)[0].strip() == key:
            return i
    return None


def validate(cfg: RunConfig) -> RunConfig:
    """Range-check every field and fill family parameter defaults."""
    if cfg.family not in FAMILIES:
        raise ConfigError(f"unknown family {cfg.family!r}", key="initial.family")
    spec = FAMILY_PARAMS[cfg.family]
    for k in cfg.params:
        if k not in spec:
            raise ConfigError(f"unknown parameter for family {cfg.family}", key=f"initial.{k}")
    for k, (default, ok, desc) in spec.items():
        v = float(cfg.params.get(k, default))
        if not (math.isfinite(v) and ok(v)):
            raise ConfigError(f"out of range: must be {desc}", key=f"initial.{k}")
        cfg.params[k] = v
    for sec_name in _SECTIONS:
        sec = getattr(cfg, sec_name)
        for f in fields(sec):
            key = f"{sec_name}.{f.name}"
            if key in _RANGES:
                ok, desc = _RANGES[key]
                if not ok(getattr(sec, f.name)):
                    raise ConfigError(f"out of range: must be {desc}", key=key)
    if cfg.step.dt_min >= cfg.step.dt_max:
        raise ConfigError("dt_min must be < dt_max", key="step.dt_min")
    if cfg.family == "cylinder" and cfg.grid.inner != "mirror":
        raise ConfigError("the cylinder family needs grid.inner = mirror", key="grid.inner")
    if cfg.family != "cylinder" and cfg.grid.inner != "origin":
        raise ConfigError("only the cylinder family may use grid.inner = mirror", key="grid.inner")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",),
        delimiters=("=",), strict=True,
    )
    cp.optionxform = str  # keep key case (B vs b)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"syntax error: {exc.message if hasattr(exc, 'message') else exc}", line=line) from None
    cfg = RunConfig()
    for sec_name in cp.sections():
        if sec_name == "initial":
            for key, raw in cp.items(sec_name):
                line = _line_of(text, sec_name, key)
                if key == "family":
                    cfg.family = raw.strip()
                    if cfg.family not in FAMILIES:
                        raise ConfigError(f"unknown family {cfg.family!r}", key="initial.family", line=line)
                else:
                    cfg.params[key] = _convert(raw, float, f"initial.{key}", line)
            continue
        if sec_name not in _SECTIONS:
            raise ConfigError("unknown section", key=sec_name, line=_line_of_section(text, sec_name))
        sec = getattr(cfg, sec_name)
        types = {f.name: f.type for f in fields(sec)}
        for key, raw in cp.items(sec_name):
            line = _line_of(text, sec_name, key)
            if key not in types:
                raise ConfigError("unknown key", key=f"{sec_name}.{key}", line=line)
            typ = {"int": int, "float": float, "bool": bool, "str": str}[str(types[key])]
            setattr(sec, key, _convert(raw, typ, f"{sec_name}.{key}", line))
    try:
        return validate(cfg)
    except ConfigError as exc:
        if exc.key and exc.line is None:
            sec, _, k = exc.key.partition(".")
            line = _line_of(text, sec, k)
            if line is not None:
                raise ConfigError(str(exc).split(" (")[0], key=exc.key, line=line) from None
        raise


def _line_of_section(text: str, section: str) -> int | None:
    for i, ln in enumerate(text.splitlines(), start=1):
        if ln.split("#", 1)[0].strip() == f"[{section}]":
            return i
    return None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c))`` equals ``c``."""
    out = ["[initial]", f"family = {cfg.family}"]
    out += [f"{k} = {_fmt(float(v))}" for k, v in sorted(cfg.params.items())]
    for sec_name in _SECTIONS:
        sec = getattr(cfg, sec_name)
        out.append("")
        out.append(f"[{sec_name}]")
        out += [f"{f.name} = {_fmt(getattr(sec, f.name))}" for f in fields(sec)]
    return "\n".join(out) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
