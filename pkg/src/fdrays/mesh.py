"""Uniform reference grids on [-1, 1] and their images under smooth mesh maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument, InvalidMesh

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MeshMap:
    """A C^2 diffeomorphism g of [-1, 1] with its derivatives and inverse.

    ``bounds`` holds the declared constants (g_d_minus, g_d_plus, g_dd) with
    g_d_minus <= |g'| <= g_d_plus and |g''| <= g_dd.  ``dddg`` is optional; when
    it is missing, callers that need a third derivative difference ``ddg``.
    """

    name: str
    g: Fn
    dg: Fn
    ddg: Fn
    ginv: Fn
    bounds: tuple[float, float, float]
    dddg: Fn | None = None
    params: dict = field(default_factory=dict)

    def third_derivative(self, y):
        if self.dddg is not None:
            return self.dddg(y)
        step = 1e-5
        return (self.ddg(y + step) - self.ddg(y - step)) / (2 * step)


def identity_map() -> MeshMap:
    return MeshMap(
        name="identity",
        g=lambda y: 1.0 * y,
        dg=lambda y: 0.0 * y + 1.0,
        ddg=lambda y: 0.0 * y,
        dddg=lambda y: 0.0 * y,
        ginv=lambda x: 1.0 * x,
        bounds=(1.0, 1.0, 0.0),
    )


def tan_center_map(alpha: float = math.pi / 4) -> MeshMap:
    """g(y) = tan(alpha*y)/tan(alpha): fine cells at the center, coarse at +-1.

    The default alpha = pi/4 gives g(y) = tan(pi*y/4).
    """
    if not 0.0 < alpha < math.pi / 2:
        raise InvalidArgument(f"tan_center needs 0 < alpha < pi/2, got {alpha}")
    t = math.tan(alpha)

    def dg(y):
        return alpha / (np.cos(alpha * y) ** 2 * t)

    def ddg(y):
        s2 = 1.0 / np.cos(alpha * y) ** 2
        return 2 * alpha**2 * s2 * np.tan(alpha * y) / t

    def dddg(y):
        s2 = 1.0 / np.cos(alpha * y) ** 2
        tn = np.tan(alpha * y)
        return 2 * alpha**3 * (2 * s2 * tn**2 + s2**2) / t

    sec2 = 1.0 / math.cos(alpha) ** 2
    return MeshMap(
        name="tan_center",
        g=lambda y: np.tan(alpha * y) / t,
        dg=dg,
        ddg=ddg,
        dddg=dddg,
        ginv=lambda x: np.arctan(x * t) / alpha,
        bounds=(alpha / t, alpha * sec2 / t, 2 * alpha**2 * sec2),
        params={"alpha": alpha},
    )


def sin_boundary_map(beta: float = math.pi / 6) -> MeshMap:
    """g(y) = sin(beta*y)/sin(beta): fine cells at +-1, coarse at the center.

    The default beta = pi/6 gives g(y) = 2 sin(pi*y/6).
    """
    if not 0.0 < beta < math.pi / 2:
        raise InvalidArgument(f"sin_boundary needs 0 < beta < pi/2, got {beta}")
    s = math.sin(beta)
    return MeshMap(
        name="sin_boundary",
        g=lambda y: np.sin(beta * y) / s,
        dg=lambda y: beta * np.cos(beta * y) / s,
        ddg=lambda y: -(beta**2) * np.sin(beta * y) / s,
        dddg=lambda y: -(beta**3) * np.cos(beta * y) / s,
        ginv=lambda x: np.arcsin(x * s) / beta,
        bounds=(beta * math.cos(beta) / s, beta / s, beta**2),
        params={"beta": beta},
    )


_BUILTIN = {
    "identity": identity_map,
    "tan_center": tan_center_map,
    "sin_boundary": sin_boundary_map,
}

MAP_NAMES = tuple(_BUILTIN)


def builtin_maps() -> dict[str, MeshMap]:
    """The three named maps with their default parameters."""
    return {name: make() for name, make in _BUILTIN.items()}


def get_map(name: str, **params) -> MeshMap:
    try:
        make = _BUILTIN[name]
    except KeyError:
        raise InvalidArgument(
            f"unknown mesh map {name!r}; expected one of {sorted(_BUILTIN)}"
        ) from None
    return make(**params)


@dataclass(frozen=True)
class MapReport:
    min_dg: float
    max_dg: float
    max_ddg: float
    endpoint_residuals: tuple[float, float]
    inverse_residual: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_mesh_map(mmap: MeshMap, samples: int = 10_000) -> MapReport:
    """Certify the declared derivative bounds of ``mmap`` by dense sampling."""
    if samples < 2:
        raise InvalidArgument("need at least 2 samples")
    # the centre is always sampled: symmetric maps attain an extreme of g' there
    y = np.union1d(np.linspace(-1.0, 1.0, samples), [0.0])
    dg = np.asarray(mmap.dg(y), dtype=float) * np.ones_like(y)
    ddg = np.asarray(mmap.ddg(y), dtype=float) * np.ones_like(y)
    adg = np.abs(dg)
    lo, hi, dd = mmap.bounds
    slack = 1e-12
    issues = []

    res = (abs(float(mmap.g(-1.0)) + 1.0), abs(float(mmap.g(1.0)) - 1.0))
    if max(res) > slack:
        issues.append(f"endpoints not preserved: residuals {res}")
    if lo <= 0 or lo > hi:
        issues.append(f"declared bounds invalid: {mmap.bounds}")
    if np.any(dg <= 0) and np.any(dg >= 0):
        issues.append("not monotone: g' vanishes or changes sign")
    if adg.min() < lo * (1 - slack) - slack:
        issues.append(f"min |g'| = {adg.min():.6g} below declared {lo:.6g}")
    if adg.max() > hi * (1 + slack) + slack:
        issues.append(f"max |g'| = {adg.max():.6g} above declared {hi:.6g}")
    if np.abs(ddg).max() > dd * (1 + slack) + slack:
        issues.append(f"max |g''| = {np.abs(ddg).max():.6g} above declared {dd:.6g}")

    with np.errstate(invalid="ignore"):
        inv = np.abs(np.asarray(mmap.ginv(mmap.g(y))) - y)
    inv_res = float(np.nanmax(inv)) if np.all(np.isfinite(inv)) else math.inf
    if inv_res > 1e-10:
        issues.append(f"ginv(g(y)) != y: max residual {inv_res:.3e}")

    return MapReport(
        min_dg=float(adg.min()),
        max_dg=float(adg.max()),
        max_ddg=float(np.abs(ddg).max()),
        endpoint_residuals=res,
        inverse_residual=inv_res,
        violations=tuple(issues),
    )


@dataclass(frozen=True)
class Grid1D:
    n: int
    h: float
    nodes: np.ndarray


def uniform_grid(n_interior: int) -> Grid1D:
    """N interior nodes plus the two endpoints, x_j = -1 + j*h with h = 2/(N+1)."""
    if int(n_interior) != n_interior or n_interior < 1:
        raise InvalidArgument(f"need a positive interior node count, got {n_interior}")
    n = int(n_interior)
    h = 2.0 / (n + 1)
    nodes = -1.0 + h * np.arange(n + 2)
    nodes[-1] = 1.0
    return Grid1D(n=n, h=h, nodes=nodes)


@dataclass(frozen=True)
class TransformedGrid1D:
    """Image of a uniform grid under a mesh map.

    ``cells[j]`` is h_{j+1/2} = g_{j+1} - g_j for j = 0..N.  The dual cell of an
    interior node is the average of its two neighbouring cells.
    """

    source: Grid1D
    map: MeshMap
    nodes: np.ndarray
    midpoints: np.ndarray
    cells: np.ndarray

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def h(self) -> float:
        return self.source.h

    @property
    def cell_right(self) -> np.ndarray:
        return self.cells[1:]

    @property
    def cell_left(self) -> np.ndarray:
        return self.cells[:-1]

    @property
    def dual(self) -> np.ndarray:
        return 0.5 * (self.cells[1:] + self.cells[:-1])

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]


def transform_grid(grid: Grid1D, mmap: MeshMap) -> TransformedGrid1D:
    nodes = np.asarray(mmap.g(grid.nodes), dtype=float)
    if abs(nodes[0] + 1.0) > 1e-12 or abs(nodes[-1] - 1.0) > 1e-12:
        raise InvalidMesh(f"map {mmap.name!r} does not fix the endpoints +-1")
    nodes[0], nodes[-1] = -1.0, 1.0
    cells = np.diff(nodes)
    if np.any(cells <= 0):
        bad = int(np.argmin(cells))
        raise InvalidMesh(f"map {mmap.name!r} is not increasing on the node set (cell {bad})")
    mids = np.asarray(mmap.g(grid.nodes[:-1] + 0.5 * grid.h), dtype=float)
    return TransformedGrid1D(source=grid, map=mmap, nodes=nodes, midpoints=mids, cells=cells)


def make_grid(n_interior: int, mmap: MeshMap | str = "identity") -> TransformedGrid1D:
    if isinstance(mmap, str):
        mmap = get_map(mmap)
    return transform_grid(uniform_grid(n_interior), mmap)
