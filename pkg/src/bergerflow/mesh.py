"""Radial grid, metric-state storage and parity-aware s-derivatives.

The metric is g = ξ(x)² dx² + b(x)² (σ1² + σ2²) + c(x)² σ3² on x > 0, with the
geometric coordinate s = ∫ ξ dx.

Storage layout
--------------
Nodes sit at 0 < x_0 < x_1 < ... < x_{n-1} = x_max.  ``b`` and ``c`` are
sampled at the nodes.  ``xi[i]`` is the mean of ξ over the segment
(x_{i-1}, x_i] (with x_{-1} = 0), i.e. ξ is staggered half a cell inwards of
the node carrying the same index.  Segment lengths L_i = xi[i]·Δx_i are then
exact physical distances between consecutive nodes, which is what makes the
discrete fixed-x system neutral with respect to radial reparametrisation.

At the singular orbit (``inner="origin"``) b and c extend to odd functions and
ξ to an even one; the reflection point is x = 0 itself, where odd fields
vanish.  ``inner="mirror"`` places a mirror plane at x = 0 instead (b, c even),
which is how the R × S³ cylinder is represented.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from . import kernels

Parity = Literal["odd", "even"]
INNER_KINDS = ("origin", "mirror")
OUTER_KINDS = ("pinned", "reflect")


class MeshError(ValueError):
    """Invalid grid parameters or mismatched field layout."""


def _as_float_array(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise MeshError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing radial nodes with boundary-condition tags.

    Attributes
    ----------
    nodes : positive, strictly increasing coordinates; ``nodes[-1] == x_max``.
    cluster_factor : ratio last/first spacing (1 for uniform grids).
    inner : ``"origin"`` (singular orbit at x = 0) or ``"mirror"``.
    outer : ``"pinned"`` (Dirichlet at x_max) or ``"reflect"`` (even mirror).
    """

    nodes: np.ndarray
    cluster_factor: float = 1.0
    inner: str = "origin"
    outer: str = "pinned"

    def __post_init__(self) -> None:
        nodes = _as_float_array(self.nodes, "nodes")
        object.__setattr__(self, "nodes", nodes)
        if nodes.size < 5:
            raise MeshError("a grid needs at least 5 nodes")
        if not np.all(np.isfinite(nodes)):
            raise MeshError("grid nodes must be finite")
        if nodes[0] <= 0.0:
            raise MeshError("nodes[0] must be > 0 (no node at the origin)")
        w = np.diff(nodes, prepend=0.0)
        if np.any(w <= 0.0):
            raise MeshError("grid nodes must be strictly increasing")
        ratio = w[1:] / w[:-1]
        if np.any(ratio < 0.5 - 1e-12) or np.any(ratio > 2.0 + 1e-12):
            raise MeshError("adjacent spacing ratio must lie in [1/2, 2]")
        if self.inner not in INNER_KINDS:
            raise MeshError(f"inner must be one of {INNER_KINDS}")
        if self.outer not in OUTER_KINDS:
            raise MeshError(f"outer must be one of {OUTER_KINDS}")

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    @property
    def x_max(self) -> float:
        return float(self.nodes[-1])

    @cached_property
    def widths(self) -> np.ndarray:
        """Δx_i = x_i − x_{i−1} with x_{−1} = 0 (read-only, cached)."""
        w = np.diff(self.nodes, prepend=0.0)
        w.setflags(write=False)
        return w

    @property
    def midpoints(self) -> np.ndarray:
        """Segment midpoints, where the stored ξ values live."""
        return self.nodes - 0.5 * self.widths

    @property
    def inner_code(self) -> int:
        return kernels.INNER_ORIGIN if self.inner == "origin" else kernels.INNER_MIRROR

    @property
    def outer_code(self) -> int:
        return kernels.OUTER_PINNED if self.outer == "pinned" else kernels.OUTER_REFLECT

    @classmethod
    def from_nodes(cls, nodes, inner: str = "origin", outer: str = "pinned") -> "Grid":
        w = np.diff(np.asarray(nodes, float), prepend=0.0)
        return cls(np.asarray(nodes, float), float(w[-1] / w[0]), inner, outer)

    def with_bc(self, inner: str | None = None, outer: str | None = None) -> "Grid":
        return Grid(self.nodes, self.cluster_factor, inner or self.inner, outer or self.outer)


def stretching_widths(n_nodes: int, x_max: float, cluster_factor: float) -> np.ndarray:
    """Geometric cell widths w_i = w_0·r^i with r = cluster_factor^(1/(n−1)).

    The last width is exactly ``cluster_factor`` times the first and the widths
    sum to ``x_max``.
    """
    r = cluster_factor ** (1.0 / (n_nodes - 1))
    w = r ** np.arange(n_nodes)
    return w * (x_max / w.sum())


def build_grid(
    n_nodes: int,
    x_max: float,
    cluster_factor: float = 1.0,
    inner: str = "origin",
    outer: str = "pinned",
) -> Grid:
    """Grid of ``n_nodes`` nodes on (0, x_max], refined geometrically toward 0.

    The uniform case gives nodes x_i = (i+1)·x_max/n.
    """
    if not isinstance(n_nodes, (int, np.integer)) or n_nodes < 16:
        raise MeshError("n_nodes must be an integer >= 16")
    if not (np.isfinite(x_max) and x_max > 0.0):
        raise MeshError("x_max must be finite and > 0")
    if not (np.isfinite(cluster_factor) and cluster_factor >= 1.0):
        raise MeshError("cluster_factor must be finite and >= 1")
    if cluster_factor ** (1.0 / (n_nodes - 1)) > 2.0:
        raise MeshError("cluster_factor too large for n_nodes (spacing ratio > 2)")
    w = stretching_widths(int(n_nodes), float(x_max), float(cluster_factor))
    nodes = np.cumsum(w)
    nodes[-1] = x_max
    return Grid(nodes, float(cluster_factor), inner, outer)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Values aligned with a grid plus the parity used for ghost reflection."""

    values: np.ndarray
    parity: Parity | None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_float_array(self.values, "values"))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class MetricState:
    """The triple (ξ, b, c) on a grid at time ``t``.

    ``xi[i]`` is the segment mean of ξ over (x_{i−1}, x_i]; see the module
    docstring.  All entries must be finite and strictly positive.
    """

    t: float
    xi: np.ndarray
    b: np.ndarray
    c: np.ndarray
    grid: Grid
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("xi", "b", "c"):
            arr = _as_float_array(getattr(self, name), name)
            if arr.size != self.grid.n:
                raise MeshError(f"{name} has length {arr.size}, grid has {self.grid.n}")
            if not np.all(np.isfinite(arr)):
                raise MeshError(f"{name} contains non-finite entries")
            if np.any(arr <= 0.0):
                raise MeshError(f"{name} must be strictly positive")
            object.__setattr__(self, name, arr)

    @classmethod
    def from_functions(
        cls,
        grid: Grid,
        b: Callable[[np.ndarray], np.ndarray],
        c: Callable[[np.ndarray], np.ndarray],
        xi: Callable[[np.ndarray], np.ndarray] | None = None,
        t: float = 0.0,
    ) -> "MetricState":
        """Sample b, c at the nodes and ξ at the segment midpoints."""
        xv = grid.nodes
        xiv = np.ones(grid.n) if xi is None else np.broadcast_to(xi(grid.midpoints), (grid.n,))
        return cls(float(t), xiv, b(xv), c(xv), grid)

    @property
    def lnxi(self) -> np.ndarray:
        return np.log(self.xi)

    @property
    def segment_lengths(self) -> np.ndarray:
        return self.xi * self.grid.widths

    @property
    def s(self) -> np.ndarray:
        if "s" not in self._cache:
            s = np.cumsum(self.segment_lengths)
            s.setflags(write=False)
            self._cache["s"] = s
        return self._cache["s"]

    @property
    def metric_parity(self) -> Parity:
        """Parity of b and c across x = 0 for this grid's inner boundary."""
        return "odd" if self.grid.inner == "origin" else "even"

    def field(self, name: str) -> RadialField:
        if name in ("b", "c"):
            return RadialField(getattr(self, name), self.metric_parity)
        if name == "xi":
            return RadialField(self.xi, "even")
        raise MeshError(f"unknown field {name!r}")

    def replace(self, **kw) -> "MetricState":
        d = dict(t=self.t, xi=self.xi, b=self.b, c=self.c, grid=self.grid)
        d.update(kw)
        return MetricState(**d)


def _three_point(f: np.ndarray, s: np.ndarray, parity: Parity, order: int) -> np.ndarray:
    """Second-order nonuniform three-point stencils in s with a parity ghost.

    Even fields use the mirror ghost at −s_0 with value f_0.  Odd fields use
    their known zero at the reflection point s = 0 instead: the stencil
    (−s_0, s_0, s_1) is lopsided and only first-order accurate for the second
    derivative, while (0, s_0, s_1) is second order.  The last node uses a
    one-sided second-order stencil.
    """
    n = f.size
    if parity == "odd":
        sg = np.concatenate(([0.0], s))
        fg = np.concatenate(([0.0], f))
    else:
        sg = np.concatenate(([-s[0]], s))
        fg = np.concatenate(([f[0]], f))
    out = np.empty(n)
    # interior nodes (and node 0 via the ghost)
    hm = sg[1:-1] - sg[:-2]
    hp = sg[2:] - sg[1:-1]
    fm, f0, fp = fg[:-2], fg[1:-1], fg[2:]
    if order == 1:
        out[:-1] = (-hp / (hm * (hm + hp))) * fm + ((hp - hm) / (hm * hp)) * f0 + (hm / (hp * (hm + hp))) * fp
    else:
        out[:-1] = 2.0 * (fm / (hm * (hm + hp)) - f0 / (hm * hp) + fp / (hp * (hm + hp)))
    # one-sided at the outer end through the last three nodes
    x0, x1, x2 = s[-3], s[-2], s[-1]
    y0, y1, y2 = f[-3], f[-2], f[-1]
    h1, h2 = x1 - x0, x2 - x1
    if order == 1:
        out[-1] = y0 * h2 / (h1 * (h1 + h2)) - y1 * (h1 + h2) / (h1 * h2) + y2 * (h1 + 2 * h2) / (h2 * (h1 + h2))
    else:
        out[-1] = 2.0 * (y0 / (h1 * (h1 + h2)) - y1 / (h1 * h2) + y2 / (h2 * (h1 + h2)))
    return out


def deriv_s(field: RadialField, state: MetricState, order: int, accuracy: int = 2) -> RadialField:
    """s-derivative of ``field`` of the given order (1 or 2).

    ``accuracy=2`` uses nonuniform three-point stencils with the parity ghost
    at −s_0 and a one-sided stencil at the outer end.  ``accuracy=4`` uses
    five-point parity-aware stencils (one-sided near x_max, except that a
    reflecting outer boundary sets first derivatives to zero); the diagnostics
    use it because combinations such as (1 − b_s²)/b² amplify O(h²) stencil
    errors by 1/b² at the innermost nodes.

    The result has the opposite parity for odd orders.
    """
    if field.parity not in ("odd", "even"):
        raise MeshError("field parity is unset")
    if len(field) != state.grid.n:
        raise MeshError("field length does not match the state's grid")
    if order not in (1, 2):
        raise MeshError("order must be 1 or 2")
    s = state.s
    f = field.values
    if accuracy == 2:
        vals = _three_point(f, s, field.parity, order)
    elif accuracy == 4:
        d1, d2 = kernels.deriv4(f, s, field.parity == "odd", state.grid.inner_code)
        vals = d1 if order == 1 else d2
    else:
        raise MeshError("accuracy must be 2 or 4")
    if order == 1 and state.grid.outer == "reflect":
        # the reflecting outer boundary imposes f_s = 0 there
        vals = vals.copy()
        vals[-1] = 0.0
    flip = {"odd": "even", "even": "odd"}
    return RadialField(vals, flip[field.parity] if order == 1 else field.parity)


def arclength(state: MetricState) -> RadialField:
    """s_i = ∫_0^{x_i} ξ dx as the sum of segment lengths (midpoint rule)."""
    return RadialField(state.s.copy(), "odd")
