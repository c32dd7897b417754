"""1D semi-discrete wave equation on a transformed grid, leapfrog in time."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .coefficients import CoefficientField, constant_coefficients
from .errors import (
    InstabilityError,
    InvalidArgument,
    OutOfValidity,
    UndefinedCentroid,
)
from .mesh import TransformedGrid1D


@dataclass(frozen=True)
class PacketSpec:
    x0: float
    xi0: float
    gamma: float | None = None  # None -> h**-0.9

    def __post_init__(self):
        if not -1.0 < self.x0 < 1.0:
            raise InvalidArgument(f"packet center must be interior, got x0={self.x0}")
        if self.gamma is not None and not self.gamma > 0:
            raise InvalidArgument(f"gamma must be positive, got {self.gamma}")


def default_gamma(h: float) -> float:
    return h**-0.9


def gaussian_packet(grid: TransformedGrid1D, spec: PacketSpec):
    """Initial data (u0, u1) = (G, G') sampled at the nodes of ``grid``.

    G(x) = exp(-gamma/2 (y - y0)^2) exp(i xi0 y / h) with y = g^{-1}(x), and
    G' is its exact x-derivative, dG/dx = dG/dy / g'(y).
    """
    mmap, h = grid.map, grid.h
    gamma = default_gamma(h) if spec.gamma is None else spec.gamma
    y = grid.source.nodes
    y0 = float(mmap.ginv(spec.x0))
    k = spec.xi0 / h
    u0 = np.exp(-0.5 * gamma * (y - y0) ** 2) * np.exp(1j * k * y)
    u1 = (-gamma * (y - y0) + 1j * k) * u0 / mmap.dg(y)
    u0[0] = u0[-1] = 0.0
    u1[0] = u1[-1] = 0.0
    return u0, u1


@dataclass
class WaveOperator1D:
    """Precomputed stencil weights of u -> (1/(h_j rho_j)) (sigma du/dx)_x."""

    grid: TransformedGrid1D
    coeffs: CoefficientField

    def __post_init__(self):
        g = self.grid
        self.flux = np.asarray(self.coeffs.sigma(g.midpoints), dtype=float) / g.cells
        self.mass = g.dual * np.asarray(self.coeffs.rho(g.interior), dtype=float)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        if u.shape != self.grid.nodes.shape:
            raise InvalidArgument(
                f"field has shape {u.shape}, grid needs {self.grid.nodes.shape}"
            )
        q = self.flux * np.diff(u)
        v = np.zeros_like(u)
        v[1:-1] = (q[1:] - q[:-1]) / self.mass
        return v

    def stiffness(self, u: np.ndarray, w: np.ndarray) -> complex:
        """Sum_j sigma_{j+1/2} (u_{j+1}-u_j) conj(w_{j+1}-w_j) / h_{j+1/2}."""
        return complex(np.sum(self.flux * np.diff(u) * np.conj(np.diff(w))))


def apply_operator(grid, coeffs, u) -> np.ndarray:
    return WaveOperator1D(grid, coeffs)(np.asarray(u))


@dataclass
class WaveState1D:
    u_curr: np.ndarray
    u_prev: np.ndarray
    time: float
    dt: float
    grid: TransformedGrid1D
    coeffs: CoefficientField

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.u_curr)


def energy_from_velocity(grid, coeffs, u, ut) -> float:
    """E = 1/2 sum h_j rho_j |u_t|^2 + 1/2 sum sigma_{j+1/2} |u_{j+1}-u_j|^2 / h_{j+1/2}."""
    op = WaveOperator1D(grid, coeffs)
    kin = 0.5 * np.sum(op.mass * np.abs(ut[1:-1]) ** 2)
    pot = 0.5 * op.stiffness(u, u).real
    return float(kin + pot)


def discrete_energy(state: WaveState1D) -> float:
    """Energy of two consecutive leapfrog levels.

    Kinetic part from the backward difference (u^n - u^{n-1})/dt; the potential
    part pairs the two levels, 1/2 Re <S u^n, u^{n-1}>, which is the quadratic
    form the leapfrog recursion conserves to round-off.  It is positive under
    the CFL restriction and approaches the semi-discrete energy as dt -> 0.
    """
    op = WaveOperator1D(state.grid, state.coeffs)
    return _energy(op, state.u_curr, state.u_prev, state.dt)


def _energy(op, u, u_prev, dt):
    ut = (u - u_prev) / dt
    kin = 0.5 * np.sum(op.mass * np.abs(ut[1:-1]) ** 2)
    pot = 0.5 * op.stiffness(u, u_prev).real
    return float(kin + pot)


def centroid(field, grid: TransformedGrid1D) -> float:
    """Position of the dual-cell weighted |u|^2 mass."""
    w = grid.dual * np.abs(np.asarray(field)[1:-1]) ** 2
    total = w.sum()
    if not total > 0:
        raise UndefinedCentroid("centroid of an all-zero field")
    return float(np.sum(w * grid.interior) / total)


@dataclass
class Trajectory1D:
    times: np.ndarray
    modulus: np.ndarray  # (snapshots, N+2)
    centroids: np.ndarray
    energy_times: np.ndarray
    energies: np.ndarray
    final: WaveState1D
    grid: TransformedGrid1D


def default_stride(steps: int) -> int:
    return max(1, steps // 512)


def leapfrog_integrate(
    grid: TransformedGrid1D,
    coeffs: CoefficientField | None,
    initial,
    T: float,
    cfl: float = 0.1,
    stride: int | None = None,
) -> Trajectory1D:
    """u^{n+1} = 2u^n - u^{n-1} + dt^2 L u^n with dt = cfl*h.

    The first step is the Taylor start u^1 = u^0 + dt u1 + dt^2/2 L u^0.
    Snapshots are taken every ``stride`` steps plus the final step; energies
    are recorded at every snapshot from step 1 on.
    """
    if not 0.0 < cfl <= 0.5:
        raise InvalidArgument(f"cfl must lie in (0, 0.5], got {cfl}")
    if not T > 0:
        raise InvalidArgument(f"horizon must be positive, got {T}")
    coeffs = coeffs or constant_coefficients()
    op = WaveOperator1D(grid, coeffs)
    dt = cfl * grid.h
    steps = int(math.ceil(T / dt - 1e-9))
    stride = default_stride(steps) if stride is None else max(1, int(stride))

    u0 = np.array(initial[0], dtype=complex)
    v0 = np.array(initial[1], dtype=complex)
    u0[0] = u0[-1] = v0[0] = v0[-1] = 0.0
    ref = max(np.max(np.abs(u0)), np.max(np.abs(v0)) * dt, 1e-300)

    times, snaps, cents, e_times, energies = [0.0], [np.abs(u0)], [], [], []
    cents.append(_safe_centroid(u0, grid))

    prev = u0
    curr = u0 + dt * v0 + 0.5 * dt**2 * op(u0)
    for n in range(1, steps + 1):
        if n > 1:
            prev, curr = curr, 2.0 * curr - prev + dt**2 * op(curr)
        growth = np.max(np.abs(curr)) / ref
        if not growth <= 1e6:
            raise InstabilityError(n, growth)
        if n % stride == 0 or n == steps:
            t = n * dt
            times.append(t)
            snaps.append(np.abs(curr))
            cents.append(_safe_centroid(curr, grid))
            e_times.append(t)
            energies.append(_energy(op, curr, prev, dt))

    final = WaveState1D(curr, prev, steps * dt, dt, grid, coeffs)
    return Trajectory1D(
        times=np.array(times),
        modulus=np.array(snaps),
        centroids=np.array(cents),
        energy_times=np.array(e_times),
        energies=np.array(energies),
        final=final,
        grid=grid,
    )


def _safe_centroid(u, grid):
    try:
        return centroid(u, grid)
    except UndefinedCentroid:
        return math.nan


def dalembert_reference(u0, u1, x: float, t: float, tol: float = 1e-10) -> complex:
    """Whole-line d'Alembert solution; valid while [x-t, x+t] stays inside (-1, 1)."""
    if not (-1.0 < x - t and x + t < 1.0):
        raise OutOfValidity(f"cone [{x - t}, {x + t}] leaves (-1, 1)")
    val = 0.5 * (complex(u0(x + t)) + complex(u0(x - t)))
    if t > 0:
        re = integrate.quad(lambda z: complex(u1(z)).real, x - t, x + t, epsabs=tol, epsrel=tol)[0]
        im = integrate.quad(lambda z: complex(u1(z)).imag, x - t, x + t, epsabs=tol, epsrel=tol)[0]
        val += 0.5 * complex(re, im)
    return val
