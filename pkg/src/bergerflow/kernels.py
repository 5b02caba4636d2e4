"""Kernel dispatch: compiled Cython core when available, numpy otherwise.

Set the environment variable ``BERGERFLOW_PURE_PYTHON=1`` before import to
force the fallback (used by the benchmark and by the parity tests).
"""
from __future__ import annotations

import os

from . import _kernels_py

INNER_ORIGIN = _kernels_py.INNER_ORIGIN
INNER_MIRROR = _kernels_py.INNER_MIRROR
OUTER_PINNED = _kernels_py.OUTER_PINNED
OUTER_REFLECT = _kernels_py.OUTER_REFLECT

if os.environ.get("BERGERFLOW_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py
        BACKEND = "python"

rhs_kernel = _impl.rhs_kernel
deriv4 = _impl.deriv4
origin_segment_length = _impl.origin_segment_length

__all__ = [
    "BACKEND",
    "INNER_MIRROR",
    "INNER_ORIGIN",
    "OUTER_PINNED",
    "OUTER_REFLECT",
    "deriv4",
    "origin_segment_length",
    "rhs_kernel",
]
