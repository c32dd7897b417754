"""Tensor-grid 2D waves: five-point operator, spectral solver, packets and axis rays.

For constant coefficients the 2D symbol splits as Lambda = lambda1^2 + lambda2^2
with lambda1 = 2 sin(xi/2) / g1'(x) and lambda2 = 2 sin(eta/2) / g2'(y), and the
rays decouple into one system per axis, each rescaled by lambda_i / sqrt(Lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg, optimize

from .errors import (
    DegenerateRay,
    InstabilityError,
    InvalidArgument,
    InvalidOperator,
    NotTrapped,
    UndefinedCentroid,
)
from .mesh import MeshMap, TransformedGrid1D, get_map, make_grid
from .rays import DISCRETE, RayPath, RaySystem1D, first_return, integrate_ray


# grids and coefficients ----------------------------------------------------


@dataclass(frozen=True)
class Grid2D:
    axis_x: TransformedGrid1D
    axis_y: TransformedGrid1D

    @property
    def dims(self) -> tuple[int, int]:
        return self.axis_x.n, self.axis_y.n

    @property
    def shape(self) -> tuple[int, int]:
        return self.axis_x.n + 2, self.axis_y.n + 2

    def mesh(self):
        """Physical node coordinates (X, Y), each of shape (M+2, N+2)."""
        return np.meshgrid(self.axis_x.nodes, self.axis_y.nodes, indexing="ij")

    def reference_mesh(self):
        return np.meshgrid(self.axis_x.source.nodes, self.axis_y.source.nodes, indexing="ij")

    @property
    def weights(self) -> np.ndarray:
        """Dual-cell area of each interior node, shape (M, N)."""
        return np.outer(self.axis_x.dual, self.axis_y.dual)


def make_grid_2d(m: int, n: int | None = None, map_x="tan_center", map_y="tan_center") -> Grid2D:
    return Grid2D(make_grid(m, map_x), make_grid(m if n is None else n, map_y))


@dataclass(frozen=True)
class Coefficients2D:
    rho: Callable
    sigma: Callable
    name: str = "custom"

    @property
    def is_constant(self) -> bool:
        return self.name == "constant"


def constant_coefficients_2d() -> Coefficients2D:
    one = lambda x, y: 0.0 * (x + y) + 1.0  # noqa: E731
    return Coefficients2D(one, one, "constant")


@dataclass
class WaveState2D:
    u: np.ndarray
    u_prev: np.ndarray
    time: float
    dt: float
    grid: Grid2D
    coeffs: Coefficients2D

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.u)


# five-point operator -------------------------------------------------------


class WaveOperator2D:
    """u -> div(sigma grad u) / rho on the tensor grid, zero on the frame."""

    def __init__(self, grid: Grid2D, coeffs: Coefficients2D | None = None):
        coeffs = coeffs or constant_coefficients_2d()
        ax, ay = grid.axis_x, grid.axis_y
        self.grid, self.coeffs = grid, coeffs
        # sigma on x-edges (j+1/2, k) and y-edges (j, k+1/2)
        sx = coeffs.sigma(*np.meshgrid(ax.midpoints, ay.interior, indexing="ij"))
        sy = coeffs.sigma(*np.meshgrid(ax.interior, ay.midpoints, indexing="ij"))
        self.flux_x = np.asarray(sx, dtype=float) / ax.cells[:, None]
        self.flux_y = np.asarray(sy, dtype=float) / ay.cells[None, :]
        rho = np.asarray(coeffs.rho(*np.meshgrid(ax.interior, ay.interior, indexing="ij")), dtype=float)
        self.rho = rho * np.ones(grid.dims)
        self.weights = grid.weights

    def __call__(self, u: np.ndarray) -> np.ndarray:
        if u.shape != self.grid.shape:
            raise InvalidArgument(f"field has shape {u.shape}, grid needs {self.grid.shape}")
        ax, ay = self.grid.axis_x, self.grid.axis_y
        qx = self.flux_x * np.diff(u[:, 1:-1], axis=0)
        qy = self.flux_y * np.diff(u[1:-1, :], axis=1)
        v = np.zeros_like(u)
        v[1:-1, 1:-1] = (
            (qx[1:] - qx[:-1]) / ax.dual[:, None] + (qy[:, 1:] - qy[:, :-1]) / ay.dual[None, :]
        ) / self.rho
        return v

    def stiffness(self, u: np.ndarray, w: np.ndarray) -> float:
        ax, ay = self.grid.axis_x, self.grid.axis_y
        dxu, dxw = np.diff(u[:, 1:-1], axis=0), np.diff(w[:, 1:-1], axis=0)
        dyu, dyw = np.diff(u[1:-1, :], axis=1), np.diff(w[1:-1, :], axis=1)
        ex = np.sum(self.flux_x * ay.dual[None, :] * dxu * np.conj(dxw))
        ey = np.sum(self.flux_y * ax.dual[:, None] * dyu * np.conj(dyw))
        return float((ex + ey).real)

    def mass(self, u: np.ndarray, w: np.ndarray) -> float:
        return float(np.sum(self.weights * self.rho * u[1:-1, 1:-1] * np.conj(w[1:-1, 1:-1])).real)


def apply_operator_2d(state_or_grid, coeffs=None, u=None) -> np.ndarray:
    """Apply the five-point operator to ``state.u`` or to ``u`` on ``grid``."""
    if isinstance(state_or_grid, WaveState2D):
        s = state_or_grid
        return WaveOperator2D(s.grid, s.coeffs)(s.u)
    return WaveOperator2D(state_or_grid, coeffs)(np.asarray(u))


def energy_2d(grid: Grid2D, u, ut, coeffs: Coefficients2D | None = None) -> float:
    """1/2 sum w rho |u_t|^2 + 1/2 (sigma-weighted squared differences), w = dual-cell areas."""
    op = WaveOperator2D(grid, coeffs)
    return 0.5 * op.mass(ut, ut) + 0.5 * op.stiffness(u, u)


def _energy_levels(op: WaveOperator2D, u, u_prev, dt) -> float:
    ut = (u - u_prev) / dt
    return 0.5 * op.mass(ut, ut) + 0.5 * op.stiffness(u, u_prev)


def centroid_2d(u, grid: Grid2D) -> tuple[float, float]:
    w = grid.weights * np.abs(np.asarray(u)[1:-1, 1:-1]) ** 2
    total = w.sum()
    if not total > 0:
        raise UndefinedCentroid("centroid of an all-zero field")
    cx = float(np.sum(w.sum(axis=1) * grid.axis_x.interior) / total)
    cy = float(np.sum(w.sum(axis=0) * grid.axis_y.interior) / total)
    return cx, cy


# spectral solver -----------------------------------------------------------


def eigendecompose_axis(axis: TransformedGrid1D, sigma: Callable | None = None):
    """Eigenpairs of the 1D Dirichlet operator -(sigma u')' on ``axis``.

    Returns ascending eigenvalues, eigenvectors as columns (interior nodes only,
    orthonormal for the dual-cell weights) and the weights themselves.
    """
    s = np.ones_like(axis.midpoints) if sigma is None else np.asarray(sigma(axis.midpoints), dtype=float)
    f = s / axis.cells
    w = axis.dual
    diag = (f[:-1] + f[1:]) / w
    off = -f[1:-1] / np.sqrt(w[:-1] * w[1:])
    vals, vecs = linalg.eigh_tridiagonal(diag, off)
    if not vals[0] > 0:
        raise InvalidOperator(f"axis operator is not positive definite (min eigenvalue {vals[0]:.3e})")
    vecs = vecs / np.sqrt(w)[:, None]
    return vals, vecs, w


@dataclass
class SpectralBasis2D:
    grid: Grid2D
    mu: np.ndarray
    psi: np.ndarray
    wx: np.ndarray
    nu: np.ndarray
    upsilon: np.ndarray
    wy: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        """lambda_{j,k} = mu_j + nu_k, shape (M, N)."""
        return self.mu[:, None] + self.nu[None, :]

    def coefficients(self, u: np.ndarray) -> np.ndarray:
        """beta_{j,k}: weighted inner products of ``u`` with Psi_j (x) Upsilon_k."""
        inner = u[1:-1, 1:-1] if u.shape == self.grid.shape else u
        return self.psi.T @ (self.wx[:, None] * inner * self.wy[None, :]) @ self.upsilon

    def synthesize(self, beta: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=complex)
        out[1:-1, 1:-1] = self.psi @ beta @ self.upsilon.T
        return out

    def mode(self, j: int, k: int) -> np.ndarray:
        """Phi_{j,k} with 1-based indices, as a full-frame field."""
        out = np.zeros(self.grid.shape)
        out[1:-1, 1:-1] = np.outer(self.psi[:, j - 1], self.upsilon[:, k - 1])
        return out


def spectral_basis(grid: Grid2D) -> SpectralBasis2D:
    mu, psi, wx = eigendecompose_axis(grid.axis_x)
    nu, ups, wy = eigendecompose_axis(grid.axis_y)
    return SpectralBasis2D(grid, mu, psi, wx, nu, ups, wy)


def spectral_solution(basis: SpectralBasis2D, u0: np.ndarray, t: float, u1: np.ndarray | None = None):
    """Mode-sum solution at time t (sigma = rho = 1).

    Without ``u1`` every mode carries the single phase e^{+i t sqrt(lambda)},
    which fixes the initial velocity to i sqrt(lambda) times each coefficient.
    Passing ``u1`` switches to the two-branch solution matching (u0, u1).
    """
    beta = basis.coefficients(u0)
    om = np.sqrt(basis.eigenvalues)
    if u1 is None:
        return basis.synthesize(beta * np.exp(1j * t * om))
    beta1 = basis.coefficients(u1)
    return basis.synthesize(beta * np.cos(t * om) + beta1 * np.sin(t * om) / om)


def spectral_velocity(basis: SpectralBasis2D, u0: np.ndarray) -> np.ndarray:
    """Time derivative at t = 0 of the single-phase mode sum."""
    return basis.synthesize(1j * np.sqrt(basis.eigenvalues) * basis.coefficients(u0))


def spectral_energy(basis: SpectralBasis2D, u0: np.ndarray) -> float:
    """Energy of the single-phase mode sum, sum lambda |beta|^2."""
    return float(np.sum(basis.eigenvalues * np.abs(basis.coefficients(u0)) ** 2))


# packets -------------------------------------------------------------------


def gaussian_packet_2d(
    grid: Grid2D,
    x0: float,
    y0: float,
    xi0: float,
    eta0: float,
    gamma: float | None = None,
    reference_phase: bool = False,
) -> np.ndarray:
    """exp(-gamma |p - p0|^2) exp(i (x xi0 / h_x + y eta0 / h_y)) on the nodes, frame zeroed.

    By default p = (x, y) are physical coordinates.  With ``reference_phase``
    both envelope and phase use the uniform-grid coordinates g^{-1}(x), so that
    (xi0, eta0) are the local discrete frequencies at every node.
    """
    if not (-1.0 <= x0 <= 1.0 and -1.0 <= y0 <= 1.0):
        raise InvalidArgument(f"packet center ({x0}, {y0}) outside the square")
    hx, hy = grid.axis_x.h, grid.axis_y.h
    gamma = min(hx, hy) ** -0.9 if gamma is None else gamma
    if not gamma > 0:
        raise InvalidArgument(f"gamma must be positive, got {gamma}")
    if reference_phase:
        X, Y = grid.reference_mesh()
        x0 = float(grid.axis_x.map.ginv(x0))
        y0 = float(grid.axis_y.map.ginv(y0))
    else:
        X, Y = grid.mesh()
    u = np.exp(-gamma * ((X - x0) ** 2 + (Y - y0) ** 2)) * np.exp(1j * (X * xi0 / hx + Y * eta0 / hy))
    u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0
    return u


def local_frequencies(grid: Grid2D, x0, y0, xi0, eta0, reference_phase=False):
    """Discrete frequencies seen by the rays at the packet center."""
    if reference_phase:
        return xi0, eta0
    mx, my = grid.axis_x.map, grid.axis_y.map
    return xi0 * float(mx.dg(mx.ginv(x0))), eta0 * float(my.dg(my.ginv(y0)))


# leapfrog in 2D ------------------------------------------------------------


@dataclass
class Trajectory2D:
    times: np.ndarray
    snapshots: list[np.ndarray]
    centroids: np.ndarray  # (snapshots, 2)
    energy_times: np.ndarray
    energies: np.ndarray
    final: WaveState2D


def leapfrog_integrate_2d(
    grid: Grid2D,
    coeffs: Coefficients2D | None,
    initial,
    T: float,
    cfl: float = 0.1,
    stride: int | None = None,
) -> Trajectory2D:
    """Same recurrence as the 1D solver with dt = cfl * min(h_x, h_y)."""
    if not 0.0 < cfl <= 0.5:
        raise InvalidArgument(f"cfl must lie in (0, 0.5], got {cfl}")
    if not T > 0:
        raise InvalidArgument(f"horizon must be positive, got {T}")
    coeffs = coeffs or constant_coefficients_2d()
    op = WaveOperator2D(grid, coeffs)
    dt = cfl * min(grid.axis_x.h, grid.axis_y.h)
    steps = int(math.ceil(T / dt - 1e-9))
    stride = max(1, steps // 64) if stride is None else max(1, int(stride))

    u0 = np.array(initial[0], dtype=complex)
    v0 = np.array(initial[1], dtype=complex)
    for a in (u0, v0):
        a[0, :] = a[-1, :] = a[:, 0] = a[:, -1] = 0.0
    ref = max(np.max(np.abs(u0)), np.max(np.abs(v0)) * dt, 1e-300)

    times, snaps, cents, e_times, energies = [0.0], [np.abs(u0)], [_safe_centroid(u0, grid)], [], []
    prev, curr = u0, u0 + dt * v0 + 0.5 * dt**2 * op(u0)
    for n in range(1, steps + 1):
        if n > 1:
            prev, curr = curr, 2.0 * curr - prev + dt**2 * op(curr)
        growth = np.max(np.abs(curr)) / ref
        if not growth <= 1e6:
            raise InstabilityError(n, growth)
        if n % stride == 0 or n == steps:
            times.append(n * dt)
            snaps.append(np.abs(curr))
            cents.append(_safe_centroid(curr, grid))
            e_times.append(n * dt)
            energies.append(_energy_levels(op, curr, prev, dt))
    final = WaveState2D(curr, prev, steps * dt, dt, grid, coeffs)
    return Trajectory2D(np.array(times), snaps, np.array(cents), np.array(e_times), np.array(energies), final)


def _safe_centroid(u, grid):
    try:
        return centroid_2d(u, grid)
    except UndefinedCentroid:
        return (math.nan, math.nan)


# symbols and rays ----------------------------------------------------------


def lambda_symbols(map_x: MeshMap, map_y: MeshMap, x, y, xi, eta):
    """(lambda1, lambda2, Lambda) at physical (x, y) for sigma/rho = 1."""
    l1 = 2.0 * np.sin(0.5 * xi) / map_x.dg(map_x.ginv(x))
    l2 = 2.0 * np.sin(0.5 * eta) / map_y.dg(map_y.ginv(y))
    return l1, l2, l1**2 + l2**2


class AxisRaySystem:
    """One decoupled axis of the 2D ray flow in the physical variable.

    dx/dt  = -s c_g omega omega' / r0,   dxi/dt = s c_g c_g' omega^2 / r0,

    i.e. the 1D field rescaled by lambda / r0 with lambda = c_g omega.
    """

    def __init__(self, mmap: MeshMap, r0: float, branch: int = 1):
        if not r0 > 0:
            raise DegenerateRay("r0 must be positive")
        self.base = RaySystem1D(mmap, law=DISCRETE, branch=branch)
        self.map, self.r0, self.branch = mmap, float(r0), branch

    def lam(self, x, xi):
        return self.base.c_g(x) * self.base.law.omega(xi)

    def rhs(self, x, xi):
        f1, f2 = self.base.rhs(x, xi)
        k = self.lam(x, xi) / self.r0
        return k * f1, k * f2

    def jacobian(self, x, xi) -> np.ndarray:
        F = np.array(self.base.rhs(x, xi), dtype=float)
        J = self.base.jacobian(x, xi)
        cg = self.base.c_g(x)
        law = self.base.law
        grad = np.array([self.base.b(x) * cg * law.omega(xi), cg * law.domega(xi)], dtype=float)
        return (self.lam(x, xi) * J + np.outer(F, grad)) / self.r0


@dataclass
class Ray2D:
    x_path: RayPath
    y_path: RayPath
    r0: float
    r1: float
    r2: float
    map_x: MeshMap
    map_y: MeshMap

    def invariants(self):
        """(r0, r1, r2) evaluated along the path, each an array over time."""
        l1 = 2.0 * np.sin(0.5 * self.x_path.xi) / self.map_x.dg(self.map_x.ginv(self.x_path.x))
        l2 = 2.0 * np.sin(0.5 * self.y_path.xi) / self.map_y.dg(self.map_y.ginv(self.y_path.x))
        n = min(l1.size, l2.size)
        return np.sqrt(l1[:n] ** 2 + l2[:n] ** 2), l1, l2

    def drift(self) -> float:
        """Largest deviation of r0, |r1|, |r2| from their initial values."""
        r0, l1, l2 = self.invariants()
        return float(max(np.max(np.abs(r0 - self.r0)), np.max(np.abs(np.abs(l1) - abs(self.r1))),
                         np.max(np.abs(np.abs(l2) - abs(self.r2)))))

    @property
    def t(self) -> np.ndarray:
        return self.x_path.t

    def projection(self):
        """(t, x, y, xi, eta) sampled on the common clock."""
        t = np.union1d(self.x_path.t, self.y_path.t)
        return (
            t,
            np.interp(t, self.x_path.t, self.x_path.x),
            np.interp(t, self.y_path.t, self.y_path.x),
            np.interp(t, self.x_path.t, self.x_path.xi),
            np.interp(t, self.y_path.t, self.y_path.xi),
        )


def integrate_ray_2d(map_x, map_y, x0, y0, xi0, eta0, T, dt=1e-3, branch: int = 1) -> Ray2D:
    """Integrate both axis systems with per-axis wall reflection."""
    if isinstance(map_x, str):
        map_x = get_map(map_x)
    if isinstance(map_y, str):
        map_y = get_map(map_y)
    l1, l2, lam = lambda_symbols(map_x, map_y, x0, y0, xi0, eta0)
    r0 = math.sqrt(float(lam))
    # sin(pi) etc. leave ~1e-16 instead of 0; treat round-off level symbols as zero
    if not r0 > 1e-12:
        raise DegenerateRay(f"both frequencies vanish (xi0={xi0}, eta0={eta0}); r0 = 0")
    xp = integrate_ray(AxisRaySystem(map_x, r0, branch), x0, xi0, T, dt)
    yp = integrate_ray(AxisRaySystem(map_y, r0, branch), y0, eta0, T, dt)
    return Ray2D(xp, yp, r0, float(l1), float(l2), map_x, map_y)


# period integrals ----------------------------------------------------------


def turning_point(mmap: MeshMap, x0: float, xi0: float) -> float:
    """Reference-variable z* >= 0 with g'(z*) = g'(z0) / sin(xi0/2).

    Assumes g' even and increasing on [0, 1], which holds for the centre-refined
    maps that trap rays.  Raises NotTrapped when no such z* lies in [0, 1].
    """
    s = math.sin(0.5 * xi0)
    if not s > 1e-14:
        raise NotTrapped(f"xi0={xi0} carries no oscillation on this axis")
    z0 = abs(float(mmap.ginv(x0)))
    target = float(mmap.dg(z0)) / s
    d0, d1 = float(mmap.dg(0.0)), float(mmap.dg(1.0))
    if d1 <= d0 or np.any(np.diff(mmap.dg(np.linspace(0.0, 1.0, 257))) <= 0):
        raise NotTrapped(f"map {mmap.name!r} has no increasing g' away from the centre")
    if target > d1:
        raise NotTrapped(f"turning point beyond the wall (needs g' = {target:.6g} > {d1:.6g})")
    if target - float(mmap.dg(z0)) <= 0:
        return z0
    return optimize.brentq(lambda z: float(mmap.dg(z)) - target, z0, 1.0, xtol=1e-15, rtol=1e-15)


def trap_period(mmap: MeshMap, r0: float, r1: float, x0: float, xi0: float, panels: int = 16,
                order: int = 16) -> float:
    """Oscillation period of a trapped axis ray.

    T = (2 r0 / r1) * int_{-z*}^{z*} g'(z) / sqrt(1 - (g'(z)/g'(z*))^2) dz, computed
    with z = z* sin(theta), which removes the endpoint singularity, and a
    composite Gauss-Legendre rule.  At z* = 0 the small-oscillation limit is
    returned.
    """
    if not (r0 > 0 and r1 != 0):
        raise InvalidArgument("need r0 > 0 and r1 != 0")
    zs = turning_point(mmap, x0, xi0)
    scale = 2.0 * r0 / abs(r1)
    if zs < 1e-7:
        g1 = float(mmap.dg(0.0))
        g3 = float(mmap.third_derivative(0.0))
        if not g3 > 0:
            raise NotTrapped("no restoring curvature at the centre")
        return scale * math.pi * g1**1.5 / math.sqrt(g3)
    nodes, weights = leggauss(order)
    edges = np.linspace(-0.5 * math.pi, 0.5 * math.pi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    th = (0.5 * (b - a) * nodes + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * weights).ravel()
    z = zs * np.sin(th)
    gs = float(mmap.dg(zs))
    gz = mmap.dg(z)
    ratio = np.clip(1.0 - (gz / gs) ** 2, 1e-300, None)
    return scale * float(np.sum(wt * gz * zs * np.cos(th) / np.sqrt(ratio)))


def observed_period(path: RayPath, leave: float = 1e-2) -> float:
    """First-return time of an axis path to its starting state."""
    t, _ = first_return(path, leave)
    return t
