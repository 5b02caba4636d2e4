"""Numerical U(2)-invariant warped Berger Ricci flow on R⁴.

Metrics g = ξ(x)²dx² + b(x)²(σ₁² + σ₂²) + c(x)²σ₃² are evolved by the
Ricci flow with curvature-adaptive time steps and parabolic
rescale-and-continue; runs are monitored against the preserved quantities of
the flow and analysed for the singular time, its type and blow-up profiles.
"""
from __future__ import annotations

from .config import RunConfig, load_config, parse_config, serialize_config
from .curvature import CurvatureField, curvature_field
from .driver import RunResult, analyze_run, run
from .errors import BergerFlowError, ConfigError, MonitorFailure, NumericalBreakdown, ResolutionExhausted
from .flow import StepControl, evolve, step
from .initial_data import construct_initial, validate_class
from .kernels import BACKEND
from .mesh import Grid, MetricState, build_grid
from .singularity import blowup_frame, classify_type, compare_profile, detect_minimal_spheres, estimate_T
from .solitons import bryant_profile, cylinder_profile

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BergerFlowError", "ConfigError", "CurvatureField", "Grid", "MetricState", "MonitorFailure",
    "NumericalBreakdown", "ResolutionExhausted", "RunConfig", "RunResult", "StepControl", "analyze_run",
    "blowup_frame", "bryant_profile", "build_grid", "classify_type", "compare_profile", "construct_initial",
    "curvature_field", "cylinder_profile", "detect_minimal_spheres", "estimate_T", "evolve", "load_config",
    "parse_config", "run", "serialize_config", "step", "validate_class",
]
