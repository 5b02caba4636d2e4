"""Snapshot and time-series persistence in versioned delimited text.

Every float is printed with 17 significant digits, which round-trips IEEE
doubles exactly.  A snapshot is ``<stem>.tsv`` (one row per node) plus a JSON
sidecar ``<stem>.json`` with the scalar metadata and the monitor report.
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .curvature import CurvatureField, curvature_field
from .mesh import Grid, MetricState
from .monitor import MonitorReport

FORMAT_VERSION = 1
SNAPSHOT_COLUMNS = ("x", "xi", "b", "c", "s", "k01", "k03", "k12", "k13", "R", "H")
FLOAT_FMT = "%.17g"


class SchemaError(ValueError):
    """A persisted file does not match the expected layout or version."""


def _fmt(v: float) -> str:
    return FLOAT_FMT % v


def _write_table(path: Path, columns, data: np.ndarray, comment: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {comment}\n")
        fh.write("\t".join(columns) + "\n")
        for row in data:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def _read_table(path: Path, required) -> tuple[dict, str]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2 or not lines[0].startswith("#"):
        raise SchemaError(f"{path}: missing header")
    header = lines[1].split("\t")
    for col in required:
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    rows = []
    for i, ln in enumerate(lines[2:], start=3):
        parts = ln.split("\t")
        if len(parts) != len(header):
            raise SchemaError(f"{path}: truncated or malformed row at line {i}")
        rows.append([float(p) for p in parts])
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return {h: arr[:, j] for j, h in enumerate(header)}, lines[0]


def write_snapshot(
    state: MetricState,
    cf: CurvatureField,
    report: MonitorReport,
    directory,
    stem: str,
    meta: dict | None = None,
) -> Path:
    """Write ``<directory>/<stem>.tsv`` and its ``.json`` manifest; returns the table path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    table = d / f"{stem}.tsv"
    data = np.column_stack([state.grid.nodes, state.xi, state.b, state.c, np.asarray(state.s),
                            cf.k01, cf.k03, cf.k12, cf.k13, cf.R, cf.H])
    _write_table(table, SNAPSHOT_COLUMNS, data, f"bergerflow snapshot format_version={FORMAT_VERSION}")
    manifest = {
        "format_version": FORMAT_VERSION,
        "t": state.t,
        "n_nodes": state.grid.n,
        "inner": state.grid.inner,
        "outer": state.grid.outer,
        "cluster_factor": state.grid.cluster_factor,
        "rm_max": cf.rm_max,
        "rm_index": cf.rm_index,
        "monitor": report.as_dict(),
    }
    manifest.update(meta or {})
    with open(d / f"{stem}.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return table


def read_snapshot(path) -> tuple[MetricState, CurvatureField, MonitorReport, dict]:
    """Inverse of :func:`write_snapshot` (accepts the ``.tsv`` or ``.json`` path)."""
    p = Path(path)
    table, man_path = p.with_suffix(".tsv"), p.with_suffix(".json")
    try:
        with open(man_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{man_path}: corrupt manifest ({exc})") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"{man_path}: format_version {manifest.get('format_version')!r} != {FORMAT_VERSION}")
    cols, first = _read_table(table, SNAPSHOT_COLUMNS)
    if f"format_version={FORMAT_VERSION}" not in first:
        raise SchemaError(f"{table}: format_version mismatch")
    if cols["x"].size != manifest["n_nodes"]:
        raise SchemaError(f"{table}: expected {manifest['n_nodes']} rows, found {cols['x'].size} (truncated)")
    grid = Grid(cols["x"], manifest["cluster_factor"], manifest["inner"], manifest["outer"])
    state = MetricState(manifest["t"], cols["xi"], cols["b"], cols["c"], grid)
    cf = curvature_field(state)
    report = MonitorReport(**manifest["monitor"])
    return state, cf, report, manifest


TIMESERIES_COLUMNS = (
    "step", "t", "dt", "lam_total", "rm_max", "R_origin", "min_H", "min_bs", "ratio_min", "ratio_max",
    "sup_b2rm", "sup_pos_phi4", "sup_b", "b2_track", "sup_symm0", "sup_symm1", "sup_symm2",
    "sup_phi1", "min_clogc", "min_blogb", "cH_origin", "max_abs_H", "max_abs_bs", "rm_index", "N",
)


def emit_timeseries(rows: list[dict], directory, name: str = "timeseries.tsv", T_est: float | None = None) -> Path:
    """Write one row per recorded step; N = (T_est − t)·rm_max when T_est is known."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / name
    data = np.empty((len(rows), len(TIMESERIES_COLUMNS)))
    for i, r in enumerate(rows):
        for j, col in enumerate(TIMESERIES_COLUMNS):
            if col == "N":
                ok = T_est is not None and math.isfinite(T_est) and r["t"] < T_est
                data[i, j] = (T_est - r["t"]) * r["rm_max"] if ok else math.nan
            else:
                data[i, j] = r[col]
    tmp = path.with_suffix(".tmp")
    _write_table(tmp, TIMESERIES_COLUMNS, data, f"bergerflow timeseries format_version={FORMAT_VERSION}")
    os.replace(tmp, path)
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    cols, first = _read_table(Path(path), TIMESERIES_COLUMNS)
    if f"format_version={FORMAT_VERSION}" not in first:
        raise SchemaError(f"{path}: format_version mismatch")
    return cols


def write_profile(profile, path) -> Path:
    """Emit an oracle profile as a (sigma, phi, dphi) table."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    _write_table(p, ("sigma", "phi", "dphi"), np.column_stack([profile.sigma, profile.phi, profile.dphi]),
                 f"bergerflow profile kind={profile.kind} format_version={FORMAT_VERSION}")
    return p
