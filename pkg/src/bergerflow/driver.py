"""Run orchestration: evolve a configured initial metric with monitoring,
rescale-and-continue, snapshots and post-run singularity analysis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, serialize_config
from .curvature import curvature_field
from .errors import MonitorFailure, NumericalBreakdown
from .flow import FlowState, StepControl, constrained, rescale_continue, rm_and_rhs, rm_max_fast, select_dt, step
from .initial_data import ClassValidation, construct_initial, validate_class
from .mesh import build_grid
from .monitor import MonitorReport, Verdict, check_monotone, enforce_ratio, first_failure_time, monitor_report
from .singularity import (
    SingularityEstimate,
    blowup_frame,
    classify_type,
    compare_profile,
    detect_minimal_spheres,
    estimate_T,
)
from .solitons import bryant_profile, cylinder_profile
from .storage import emit_timeseries, write_snapshot


@dataclass
class FrameSummary:
    """Blow-up frame diagnostics of one snapshot."""

    t: float
    rm_max: float
    lam_origin: float = math.nan
    slope0: float = math.nan
    dist_bryant: float = math.nan
    sym_defect: float = math.nan
    lam_peak: float = math.nan
    dist_cylinder: float = math.nan
    minimal_spheres: tuple = ()


@dataclass
class RunResult:
    config: RunConfig
    validation: ClassValidation
    estimate: SingularityEstimate
    verdicts: list[Verdict]
    trusted_until: float
    termination: str
    series: dict
    reports: list[MonitorReport]
    frames: list[FrameSummary]
    snapshots: list[dict]
    paths: dict = field(default_factory=dict)
    final: FlowState | None = None
    eps0: float = math.nan

    @property
    def singular(self) -> bool:
        return self.estimate.singular

    def summary(self) -> dict:
        e = self.estimate
        return {
            "family": self.config.family,
            "params": self.config.params,
            "verdict_class": self.validation.verdict,
            "termination": self.termination,
            "singular": e.singular,
            "T_est": e.T_est,
            "T_uncertainty": e.uncertainty,
            "T_method": e.method,
            "T_rm": e.T_rm,
            "T_b2": e.T_b2,
            "type_verdict": e.type_verdict,
            "type_slope": e.slope,
            "trusted_until": self.trusted_until,
            "monitor": [str(v) for v in self.verdicts],
            "frames": [f.__dict__ for f in self.frames],
            "paths": {k: str(v) for k, v in self.paths.items()},
        }


def _step_control(cfg: RunConfig) -> StepControl:
    s = cfg.step
    return StepControl(cfl=s.cfl_factor, eta=s.curvature_factor, dt_min=s.dt_min, dt_max=s.dt_max,
                       max_retries=s.max_retries)


def _row(fs: FlowState, rep: MonitorReport, dt: float, b2_track: float) -> dict:
    r = {
        "step": fs.step_count,
        "t": rep.t,
        "dt": dt / fs.lam_total,
        "lam_total": fs.lam_total,
        "b2_track": b2_track,
    }
    for k in ("rm_max", "R_origin", "min_H", "min_bs", "ratio_min", "ratio_max", "sup_b2rm", "sup_pos_phi4",
              "sup_b", "sup_symm0", "sup_symm1", "sup_symm2", "sup_phi1", "min_clogc", "min_blogb",
              "cH_origin", "max_abs_H", "max_abs_bs", "rm_index"):
        r[k] = getattr(rep, k)
    return r


def _frame_summary(state, cf, t_phys, lam, cfg: RunConfig) -> FrameSummary:
    a = cfg.analysis
    fsum = FrameSummary(t=t_phys, rm_max=cf.rm_max * lam)
    if state.grid.inner == "origin" and cf.R[0] > 0:
        fr = blowup_frame(state, cf, at_origin=True, sigma_max=a.sigma_max)
        fsum.lam_origin = fr.lam * lam
        fsum.slope0 = fr.slope0
        try:
            d = compare_profile(fr, bryant_profile(max(a.sigma_max, a.sigma_cmp)), a.sigma_cmp)
        except ValueError:  # frame does not resolve σ ∈ (0, σ_cmp]
            pass
        else:
            fsum.dist_bryant = d.distance
            fsum.sym_defect = d.symmetry_defect
    if cf.R[cf.rm_index] > 0:
        fr = blowup_frame(state, cf, at_origin=False, sigma_max=a.sigma_max)
        fsum.lam_peak = fr.lam * lam
        cyl = cylinder_profile(math.sqrt(6.0), max(a.sigma_max, a.neck_sigma_cmp))
        try:
            fsum.dist_cylinder = compare_profile(fr, cyl, a.neck_sigma_cmp).distance
        except ValueError:
            pass
    x_phys = detect_minimal_spheres(state, cf)
    fsum.minimal_spheres = tuple(x / math.sqrt(lam) for x in x_phys)
    return fsum


def run(cfg: RunConfig, progress=None) -> RunResult:
    """Evolve ``cfg`` to termination and analyse the result.

    Termination reasons: ``t_max``, ``max_rescales`` (curvature grew past the
    last allowed rescale), ``resolution_exhausted``, ``max_steps`` and
    ``monitor_failure`` (c/b left its band).  :class:`NumericalBreakdown`
    propagates with the last good state attached as ``snapshot`` and the
    partial result as ``partial``.
    """
    g = cfg.grid
    grid = build_grid(g.n_nodes, g.x_max, g.cluster_factor, g.inner, g.outer)
    state0 = construct_initial(cfg.family, cfg.params, grid)
    validation = validate_class(state0)
    fs = FlowState(constrained(state0))
    ctl = _step_control(cfg)
    rs, out = cfg.run, cfg.output
    outdir = Path(out.directory)
    eps0 = validation.ratio_floor
    rows: list[dict] = []
    reports: list[MonitorReport] = []
    frames: list[FrameSummary] = []
    snaps: list[dict] = []
    paths: dict = {}
    rm0, _ = rm_max_fast(fs.state)
    fs.rm_at_rescale = rm0
    fs.dt_at_remesh = select_dt(fs.state, ctl, rm0)
    next_decade = rm0 * 10.0 ** out.snapshot_decades if out.snapshot_decades > 0 and rm0 > 0 else math.inf
    next_dt_snap = out.snapshot_dt if out.snapshot_dt > 0 else math.inf
    every = max(1, int(out.series_every))
    termination = "max_steps"
    last_cf = last_rep = None
    last_dt = 0.0

    def record(dt, force=False):
        nonlocal last_cf, last_rep
        st = fs.state
        cf = curvature_field(st)
        rep = monitor_report(st, cf, fs.lam_total, fs.t_phys)
        if cf.rm_index <= 2:
            b2 = rep.sup_b ** 2
        else:
            b2 = float(st.b[cf.rm_index]) ** 2 / fs.lam_total
        rows.append(_row(fs, rep, dt, b2))
        reports.append(rep)
        last_cf, last_rep = cf, rep
        enforce_ratio(rep, eps0, cfg.monitor.tol)
        return cf, rep

    def snapshot(cf, rep, reason):
        st = fs.state
        meta = {"t_phys": fs.t_phys, "step": fs.step_count, "lam_total": fs.lam_total,
                "t_offset": fs.t_offset, "dt": last_dt / fs.lam_total, "reason": reason, "index": len(snaps)}
        entry = dict(meta)
        frames.append(_frame_summary(st, cf, fs.t_phys, fs.lam_total, cfg))
        if out.write_files:
            entry["path"] = str(write_snapshot(st, cf, rep, outdir / "snapshots", f"snap_{len(snaps):04d}", meta))
        snaps.append(entry)

    try:
        cf, rep = record(0.0)
        snapshot(cf, rep, "initial")
        k = 0
        while True:
            st = fs.state
            if fs.t_phys >= rs.t_max * (1 - 1e-14):
                termination = "t_max"
                break
            if fs.step_count >= rs.max_steps:
                termination = "max_steps"
                break
            rm, _, k1 = rm_and_rhs(st)
            if rm >= rs.rescale_trigger * fs.rm_at_rescale and fs.rm_at_rescale > 0:
                cf, rep = record(0.0)
                if out.snapshot_on_rescale:
                    snapshot(cf, rep, "rescale")
                if fs.rescales >= rs.max_rescales or not rs.remesh:
                    termination = "max_rescales"
                    break
                fs = rescale_continue(fs, rs.rescale_trigger, nodes_per_length=rs.nodes_per_length,
                                      core_lengths=rs.core_lengths)
                fs.dt_at_remesh = select_dt(fs.state, ctl)
                continue
            dt = select_dt(st, ctl, rm)
            if rs.remesh and rs.remesh_dt_ratio > 0 and dt < rs.remesh_dt_ratio * fs.dt_at_remesh:
                fs = rescale_continue(fs, 1.0, nodes_per_length=rs.nodes_per_length, core_lengths=rs.core_lengths)
                fs.dt_at_remesh = select_dt(fs.state, ctl)
                continue
            if dt < ctl.dt_min:
                termination = "resolution_exhausted"
                break
            dt = min(dt, (rs.t_max - fs.t_phys) * fs.lam_total)
            if dt <= 0:
                termination = "t_max"
                break
            new, used = step(st, max(dt, ctl.dt_min), ctl, k1)
            fs.state = new
            fs.step_count += 1
            last_dt = used
            k += 1
            if k % every == 0:
                cf, rep = record(used)
                if rep.rm_max >= next_decade:
                    snapshot(cf, rep, "decade")
                    while next_decade <= rep.rm_max:
                        next_decade *= 10.0 ** out.snapshot_decades
                if fs.t_phys >= next_dt_snap:
                    snapshot(cf, rep, "interval")
                    while next_dt_snap <= fs.t_phys:
                        next_dt_snap += out.snapshot_dt
                if progress is not None:
                    progress(fs, rep)
    except MonitorFailure:
        termination = "monitor_failure"
    except NumericalBreakdown as exc:
        exc.partial = _finish(cfg, validation, fs, rows, reports, frames, snaps, paths, "numerical_breakdown",
                              eps0, outdir, last_cf, last_rep, snapshot)
        raise
    return _finish(cfg, validation, fs, rows, reports, frames, snaps, paths, termination, eps0, outdir,
                   last_cf, last_rep, snapshot)


def _finish(cfg, validation, fs, rows, reports, frames, snaps, paths, termination, eps0, outdir,
            last_cf, last_rep, snapshot) -> RunResult:
    if last_cf is not None and (not snaps or snaps[-1]["step"] != fs.step_count):
        try:
            snapshot(last_cf, last_rep, "final")
        except Exception:  # pragma: no cover - best effort on breakdown
            pass
    series = {k: np.array([r[k] for r in rows], dtype=float) for k in rows[0]} if rows else {}
    a = cfg.analysis
    est = estimate_T(series["t"], series["rm_max"], series["b2_track"]) if rows else estimate_T([], [], [])
    est = classify_type(est, series.get("rm_max", []), type1_slope=a.type1_slope, type2_slope=a.type2_slope)
    cls = validation.verdict
    verdicts = check_monotone(reports, cls, eps0, cfg.monitor.tol, phi4_rate=cfg.monitor.pos_phi4_rate) \
        if len(reports) >= 2 else []
    t_fail = first_failure_time(verdicts)
    trusted = math.inf if t_fail is None else t_fail
    if series:
        T = est.T_est if est.singular else None
        series["N"] = (np.where(series["t"] < T, (T - series["t"]) * series["rm_max"], np.nan)
                       if T is not None else np.full(series["t"].size, np.nan))
    res = RunResult(cfg, validation, est, verdicts, trusted, termination, series, reports, frames, snaps,
                    paths, fs, eps0)
    if cfg.output.write_files:
        outdir.mkdir(parents=True, exist_ok=True)
        paths["timeseries"] = emit_timeseries(rows, outdir, T_est=est.T_est if est.singular else None)
        paths["config"] = outdir / "config.ini"
        paths["config"].write_text(serialize_config(cfg), encoding="utf-8")
        paths["result"] = outdir / "result.json"
        with open(paths["result"], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(res.summary(), fh, indent=1, sort_keys=True, default=float)
            fh.write("\n")
    return res


@dataclass
class AnalysisResult:
    """Post-hoc analysis of a persisted run directory."""

    config: RunConfig
    estimate: SingularityEstimate
    frames: list[FrameSummary]
    series: dict


def analyze_run(run_dir) -> AnalysisResult:
    """Recompute the singularity estimate and the blow-up frame summaries of a
    finished run from its persisted config, time series and snapshots."""
    from .config import load_config
    from .storage import read_snapshot, read_timeseries

    d = Path(run_dir)
    cfg = load_config(d / "config.ini")
    series = read_timeseries(d / "timeseries.tsv")
    a = cfg.analysis
    est = estimate_T(series["t"], series["rm_max"], series["b2_track"])
    est = classify_type(est, series["rm_max"], type1_slope=a.type1_slope, type2_slope=a.type2_slope)
    frames = []
    for path in sorted((d / "snapshots").glob("snap_*.tsv")):
        state, cf, _, man = read_snapshot(path)
        frames.append(_frame_summary(state, cf, man["t_phys"], man["lam_total"], cfg))
    return AnalysisResult(cfg, est, frames, series)
