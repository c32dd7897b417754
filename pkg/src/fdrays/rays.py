"""Bi-characteristic rays of the continuous and finite-difference wave symbols.

A ray system lives in the physical variable x = g(y) and the frequency xi
conjugate to the reference variable y.  On the branch with sign s = +-1:

    dx/dt  = -s a_g(x) omega'(xi)
    dxi/dt =  s b_g(x) omega(xi)

with omega(xi) = 2 sin(xi/2) for the three-point scheme and omega(xi) = xi for
the continuous equation.  Rays reflect at x = +-1 with xi -> 2*pi - xi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coefficients import (
    CoefficientField,
    constant_coefficients,
    effective_speed_cg_derivatives,
    wave_speed_derivatives,
)
from .errors import InvalidArgument, RayStepError
from .mesh import MeshMap, identity_map

TWO_PI = 2.0 * math.pi


def _scalar_or_array(scalar_fn, array_fn):
    """math.* on plain floats (the RK4 hot path), numpy on arrays."""

    def f(v):
        return scalar_fn(v) if isinstance(v, float) else array_fn(v)

    return f


_sin = _scalar_or_array(math.sin, np.sin)
_cos = _scalar_or_array(math.cos, np.cos)
_sqrt = _scalar_or_array(math.sqrt, np.sqrt)


@dataclass(frozen=True)
class DispersionLaw:
    kind: str
    omega: Callable
    domega: Callable
    ddomega: Callable


DISCRETE = DispersionLaw(
    "discrete",
    omega=lambda xi: 2.0 * _sin(0.5 * xi),
    # cos(xi/2) written as sin((pi - xi)/2) so that it vanishes exactly at xi = pi
    domega=lambda xi: _sin(0.5 * (math.pi - xi)),
    ddomega=lambda xi: -0.5 * _sin(0.5 * xi),
)

CONTINUOUS = DispersionLaw(
    "continuous",
    omega=lambda xi: 1.0 * xi,
    domega=lambda xi: 0.0 * xi + 1.0,
    ddomega=lambda xi: 0.0 * xi,
)


def group_velocity(law: DispersionLaw, xi):
    return law.domega(xi)


def _speed_functions(mmap: MeshMap, coeffs: CoefficientField):
    """(a, a', b, b') as functions of x; closed forms for the builtin cases."""
    name = mmap.name
    if coeffs.is_constant:
        C = math.sqrt(coeffs.params["sigma"] / coeffs.params["rho"])
        zero = lambda x: 0.0 * x  # noqa: E731
        a = lambda x: 0.0 * x + C  # noqa: E731
        if name == "identity":
            return a, zero, zero, zero
        if name == "tan_center":
            T2 = math.tan(mmap.params["alpha"]) ** 2
            return (
                a,
                zero,
                lambda x: -2 * C * T2 * x / (1 + T2 * x * x),
                lambda x: -2 * C * T2 * (1 - T2 * x * x) / (1 + T2 * x * x) ** 2,
            )
        if name == "sin_boundary":
            S2 = math.sin(mmap.params["beta"]) ** 2
            return (
                a,
                zero,
                lambda x: C * S2 * x / (1 - S2 * x * x),
                lambda x: C * S2 * (1 + S2 * x * x) / (1 - S2 * x * x) ** 2,
            )
    if coeffs.name == "oscillatory" and name == "identity":
        A, k = coeffs.params["A"], coeffs.params["kappa"] * math.pi

        def a(x):
            return _sqrt(1 + A * _cos(k * x) ** 2)

        def b(x):
            return -A * k * _sin(2 * k * x) / (2 * a(x))

        def db(x):
            ax = a(x)
            return -A * k * (2 * k * _cos(2 * k * x) * ax - _sin(2 * k * x) * b(x)) / (2 * ax**2)

        return a, b, b, db
    return _generic_speed_functions(mmap, coeffs)


def _generic_speed_functions(mmap: MeshMap, coeffs: CoefficientField):
    last = [None, None]  # one-entry cache: rhs and jacobian query a and b at the same x

    def evaluate(x):
        scalar = np.ndim(x) == 0
        if scalar and last[0] == x:
            return last[1]
        y = mmap.ginv(x)
        c, dc, ddc = wave_speed_derivatives(coeffs, x)
        d1, d2, d3 = mmap.dg(y), mmap.ddg(y), mmap.third_derivative(y)
        dcg = dc - c * d2 / d1**2
        ddcg = ddc * d1 - dc * d2 / d1 - c * (d3 / d1**2 - 2 * d2**2 / d1**3)
        out = (c, dc, dcg, ddcg / d1)
        if scalar:
            last[0], last[1] = x, out
        return out

    return (
        lambda x: evaluate(x)[0],
        lambda x: evaluate(x)[1],
        lambda x: evaluate(x)[2],
        lambda x: evaluate(x)[3],
    )


class RaySystem1D:
    """Hamiltonian ray system of the 1D scheme on the grid generated by ``mmap``.

    ``branch`` is +1 or -1; on the +1 branch low frequencies travel to the left.
    Set ``closed_form=False`` to force the generic composition of map and
    coefficient derivatives instead of the hand-differentiated builtins.
    """

    def __init__(
        self,
        mmap: MeshMap | None = None,
        coeffs: CoefficientField | None = None,
        law: DispersionLaw = DISCRETE,
        branch: int = 1,
        closed_form: bool = True,
    ):
        if branch not in (1, -1):
            raise InvalidArgument(f"branch must be +1 or -1, got {branch}")
        self.map = mmap or identity_map()
        self.coeffs = coeffs or constant_coefficients()
        self.law = law
        self.branch = branch
        make = _speed_functions if closed_form else _generic_speed_functions
        self.a, self.da, self.b, self.db = make(self.map, self.coeffs)

    def __repr__(self):
        return (
            f"RaySystem1D(map={self.map.name}, coeffs={self.coeffs.name}, "
            f"law={self.law.kind}, branch={self.branch:+d})"
        )

    def with_branch(self, branch: int) -> "RaySystem1D":
        other = RaySystem1D.__new__(RaySystem1D)
        other.__dict__.update(self.__dict__)
        if branch not in (1, -1):
            raise InvalidArgument(f"branch must be +1 or -1, got {branch}")
        other.branch = branch
        return other

    def rhs(self, x, xi):
        s = self.branch
        return -s * self.a(x) * self.law.domega(xi), s * self.b(x) * self.law.omega(xi)

    def jacobian(self, x, xi) -> np.ndarray:
        s, law = self.branch, self.law
        w, dw, ddw = law.omega(xi), law.domega(xi), law.ddomega(xi)
        return np.array(
            [
                [-s * self.da(x) * dw, -s * self.a(x) * ddw],
                [s * self.db(x) * w, s * self.b(x) * dw],
            ],
            dtype=float,
        )

    def c_g(self, x):
        """c_g at the reference point g^{-1}(x), i.e. a_g(x) / g'(g^{-1}(x))."""
        return self.a(x) / self.map.dg(self.map.ginv(x))

    def rhs_reference(self, y, xi):
        """Same flow in the reference variable y: (-s c_g omega', s c_g' omega)."""
        cg, dcg, _ = effective_speed_cg_derivatives(self.coeffs, self.map, y)
        s = self.branch
        return -s * cg * self.law.domega(xi), s * dcg * self.law.omega(xi)

    def reference_form(self) -> "_ReferenceForm":
        return _ReferenceForm(self)

    def tau0(self, x, xi):
        return self.branch * self.c_g(x) * np.abs(self.law.omega(xi))


@dataclass
class _ReferenceForm:
    system: RaySystem1D

    def rhs(self, y, xi):
        return self.system.rhs_reference(y, xi)


def variable_coefficient_rhs(A: float, kappa: int, x, xi):
    """Closed-form ray field for sigma = 1 + A cos^2(kappa pi x), rho = 1, uniform mesh."""
    sq = np.sqrt(1 + A * np.cos(kappa * math.pi * x) ** 2)
    dx = -sq * np.cos(0.5 * xi)
    dxi = -A * kappa * math.pi * np.sin(2 * kappa * math.pi * x) / sq * np.sin(0.5 * xi)
    return dx, dxi


def acceleration(system, x, xi) -> float:
    """d^2x/dt^2 along the flow, (J F)_x."""
    F = np.array(system.rhs(x, xi), dtype=float)
    return float((system.jacobian(x, xi) @ F)[0])


@dataclass(frozen=True)
class Reflection:
    t: float
    endpoint: float
    xi_before: float
    xi_after: float


@dataclass
class RayPath:
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    reflections: list[Reflection] = field(default_factory=list)
    branch: int = 1

    def at(self, t: float) -> tuple[float, float]:
        """Linear interpolation of (x, xi) at time t."""
        return float(np.interp(t, self.t, self.x)), float(np.interp(t, self.t, self.xi))


def _rk4(f, x, xi, h):
    k1x, k1p = f(x, xi)
    k2x, k2p = f(x + 0.5 * h * k1x, xi + 0.5 * h * k1p)
    k3x, k3p = f(x + 0.5 * h * k2x, xi + 0.5 * h * k2p)
    k4x, k4p = f(x + h * k3x, xi + h * k3p)
    return (
        x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
        xi + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p),
    )


def _locate_wall(f, x, xi, h, tol=1e-10):
    lo, hi = 0.0, h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if abs(_rk4(f, x, xi, mid)[0]) > 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def integrate_ray(
    system,
    x0: float,
    xi0: float,
    T: float,
    dt: float = 1e-3,
    reflect: bool = True,
    window: float | None = None,
) -> RayPath:
    """Fixed-step RK4 with wall reflection located by bisection (1e-10 in time).

    With ``reflect=False`` the orbit is free to leave [-1, 1]; integration stops
    once |x| exceeds ``window`` (if given).
    """
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    if reflect and abs(x0) > 1.0:
        raise InvalidArgument(f"x0={x0} outside [-1, 1]")
    f = system.rhs
    x, xi, t = float(x0), float(xi0), 0.0
    ts, xs, xis, events = [0.0], [x], [xi], []

    if reflect and abs(x) == 1.0 and float(f(x, xi)[0]) * x > 0:
        new = TWO_PI - xi
        events.append(Reflection(0.0, x, xi, new))
        xi = new
        xis[0] = xi

    steps = int(math.ceil(T / dt - 1e-9))
    for k in range(1, steps + 1):
        t_next = min(k * dt, T)
        h = t_next - t
        xn, xin = _rk4(f, x, xi, h)
        xn, xin = float(xn), float(xin)
        if reflect and abs(xn) > 1.0:
            if abs(xn) > 1.0 + 10 * dt:
                raise RayStepError(f"step at t={t:.6g} jumps to x={xn:.6g}; dt={dt} too coarse")
            tau = _locate_wall(f, x, xi, h)
            xe, xie = _rk4(f, x, xi, tau)
            wall = math.copysign(1.0, float(xe))
            new = TWO_PI - float(xie)
            events.append(Reflection(t + tau, wall, float(xie), new))
            ts.append(t + tau)
            xs.append(wall)
            xis.append(new)
            xn, xin = _rk4(f, wall, new, h - tau)
            xn, xin = float(xn), float(xin)
            if abs(xn) > 1.0:
                xn = math.copysign(1.0, xn)
        x, xi, t = xn, xin, t_next
        ts.append(t)
        xs.append(x)
        xis.append(xi)
        if window is not None and abs(x) > window:
            break
    return RayPath(np.array(ts), np.array(xs), np.array(xis), events, getattr(system, "branch", 1))


def integrate_ray_reference(system: RaySystem1D, x0, xi0, T, dt=1e-3) -> RayPath:
    """Integrate in the reference variable y and map the path back through g."""
    path = integrate_ray(system.reference_form(), float(system.map.ginv(x0)), xi0, T, dt)
    path.x = np.asarray(system.map.g(path.x), dtype=float)
    path.reflections = [
        Reflection(r.t, r.endpoint, r.xi_before, r.xi_after) for r in path.reflections
    ]
    return path


def hamiltonian_value(system: RaySystem1D, x, xi, tau0):
    """-tau0^2 + c_g^2 omega(xi)^2; vanishes on null bi-characteristics."""
    return -(tau0**2) + system.c_g(x) ** 2 * system.law.omega(xi) ** 2


def hamiltonian_residual(system: RaySystem1D, path: RayPath) -> float:
    tau0 = system.tau0(path.x[0], path.xi[0])
    return float(np.max(np.abs(hamiltonian_value(system, path.x, path.xi, tau0))))


# equilibria ---------------------------------------------------------------


@dataclass(frozen=True)
class Equilibrium:
    x: float
    xi: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    kind: str  # "center" | "saddle" | "other"


@dataclass
class EquilibriumScan:
    equilibria: list[Equilibrium]
    degenerate: list[tuple[float, float]]
    dropped: list[tuple[tuple[float, float], str]]

    @property
    def locations(self) -> list[tuple[float, float]]:
        return [(e.x, e.xi) for e in self.equilibria]


def _kind(eig: np.ndarray) -> str:
    scale = float(np.max(np.abs(eig)))
    if scale < 1e-8:
        return "other"
    re, im = eig.real, eig.imag
    if np.all(np.abs(re) <= 1e-9 * scale) and np.all(np.abs(im) > 1e-8):
        return "center"
    if np.all(np.abs(im) <= 1e-9 * scale) and re.min() < -1e-8 and re.max() > 1e-8:
        return "saddle"
    return "other"


def classify_equilibrium(system, location, check: bool = True) -> Equilibrium:
    x, xi = map(float, location)
    if check:
        F = np.array(system.rhs(x, xi), dtype=float)
        if np.linalg.norm(F) > 1e-10:
            raise InvalidArgument(f"({x}, {xi}) is not an equilibrium: |F| = {np.linalg.norm(F):.3e}")
    J = np.asarray(system.jacobian(x, xi), dtype=float)
    eig = np.linalg.eigvals(J)
    eig = eig[np.argsort(eig.imag + eig.real)]
    return Equilibrium(x, xi, J, eig, _kind(eig))


def _newton(system, x, xi, tol=1e-12, maxiter=50):
    z = np.array([x, xi], dtype=float)
    for _ in range(maxiter):
        F = np.array(system.rhs(z[0], z[1]), dtype=float)
        if np.max(np.abs(F)) <= tol:
            return z, True
        J = system.jacobian(z[0], z[1])
        step = np.linalg.lstsq(J, F, rcond=1e-13)[0]
        z = z - step
        if not np.all(np.isfinite(z)):
            return z, False
    F = np.array(system.rhs(z[0], z[1]), dtype=float)
    return z, bool(np.max(np.abs(F)) <= tol)


def find_equilibria(
    system,
    resolution: int = 64,
    x_range: tuple[float, float] = (-1.0, 1.0),
    xi_range: tuple[float, float] = (0.0, TWO_PI),
) -> EquilibriumScan:
    """Scan a grid for cells where both field components can vanish, then refine by Newton.

    Roots with a singular Jacobian are reported in ``degenerate`` (lines of
    equilibria, e.g. the uniform mesh), not as isolated equilibria.
    """
    xs = np.linspace(*x_range, resolution + 1)
    ps = np.linspace(*xi_range, resolution + 1)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    F1, F2 = system.rhs(X, P)
    F1 = np.broadcast_to(np.asarray(F1, dtype=float), X.shape)
    F2 = np.broadcast_to(np.asarray(F2, dtype=float), X.shape)

    def spans_zero(F):
        c = np.stack([F[:-1, :-1], F[1:, :-1], F[:-1, 1:], F[1:, 1:]])
        return (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)

    cand = np.argwhere(spans_zero(F1) & spans_zero(F2))
    found, degenerate, dropped = [], [], []
    slack = 1e-9
    for i, j in cand:
        start = (0.5 * (xs[i] + xs[i + 1]), 0.5 * (ps[j] + ps[j + 1]))
        z, ok = _newton(system, *start)
        if not ok:
            dropped.append((start, "newton did not converge"))
            continue
        if not (x_range[0] - slack <= z[0] <= x_range[1] + slack
                and xi_range[0] - slack <= z[1] <= xi_range[1] + slack):
            dropped.append((start, f"converged outside the scan window to {tuple(z)}"))
            continue
        J = system.jacobian(z[0], z[1])
        target = degenerate if abs(np.linalg.det(J)) < 1e-10 else found
        if all(math.hypot(z[0] - u, z[1] - v) > 1e-6 for u, v in target):
            target.append((float(z[0]), float(z[1])))
    if dropped:
        warnings.warn(f"{len(dropped)} equilibrium candidates dropped", RuntimeWarning, stacklevel=2)
    found.sort()
    degenerate.sort()
    eqs = [classify_equilibrium(system, loc, check=False) for loc in found]
    return EquilibriumScan(eqs, degenerate, dropped)


# phase portraits ----------------------------------------------------------


@dataclass
class Portrait:
    orbits: list[RayPath]
    seeds: list[tuple[float, float]]
    equilibria: list[Equilibrium]


def phase_portrait(system, seeds, T: float, dt: float = 1e-3, window: float = 1.5,
                   resolution: int = 64) -> Portrait:
    """One unreflected orbit per seed, cut once |x| > window, plus equilibria in [-1, 1]."""
    seeds = [(float(a), float(b)) for a, b in seeds]
    if not seeds:
        raise InvalidArgument("phase portrait needs at least one seed")
    orbits = [integrate_ray(system, x0, p0, T, dt, reflect=False, window=window) for x0, p0 in seeds]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        eqs = find_equilibria(system, resolution).equilibria
    return Portrait(orbits, seeds, eqs)


def first_return(path: RayPath, leave: float = 1e-2):
    """(time, distance) of the first closest approach to the start after leaving a ball.

    The path must first move farther than ``leave`` from its initial state in
    the (x, xi) plane; the return is the distance minimum within the first
    re-entry into that ball.  Returns (nan, 0.0) for a path that never leaves
    (a stationary orbit) and (nan, inf) for one that never comes back.
    """
    d = np.hypot(path.x - path.x[0], path.xi - path.xi[0])
    away = np.nonzero(d > leave)[0]
    if away.size == 0:
        return math.nan, 0.0
    start = int(away[0])
    back = np.nonzero(d[start:] <= leave)[0]
    if back.size == 0:
        return math.nan, math.inf
    lo = start + int(back[0])
    out = np.nonzero(d[lo:] > leave)[0]
    hi = lo + int(out[0]) if out.size else d.size
    idx = lo + int(np.argmin(d[lo:hi]))
    return float(path.t[idx]), float(d[idx])
