"""Material coefficients rho, sigma and the speed fields derived from them.

Besides the local wave speed c = sqrt(sigma/rho) this module provides the
grid-adapted speeds used by the ray systems:

* c_g(y) = c(g(y)) / g'(y), in the reference (uniform-grid) variable y;
* a_g(x) = (g' c_g)(g^{-1}(x)) = c(x) and b_g(x) = c_g'(g^{-1}(x)), in the
  physical variable x = g(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .mesh import MeshMap

_FD_STEP = 1e-6


def _fd(f, step=_FD_STEP):
    return lambda x: (f(x + step) - f(x - step)) / (2 * step)


@dataclass(frozen=True)
class CoefficientField:
    """Density rho(x) and stiffness sigma(x) with first and second derivatives.

    Fields built with :func:`from_functions` have finite-difference derivatives
    (step 1e-6), which costs roughly 1e-10 absolute accuracy in ray right-hand
    sides.
    """

    rho: Callable
    sigma: Callable
    drho: Callable
    dsigma: Callable
    ddrho: Callable
    ddsigma: Callable
    lower_bounds: tuple[float, float]
    name: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def is_constant(self) -> bool:
        return self.name == "constant"


def constant_coefficients(rho: float = 1.0, sigma: float = 1.0) -> CoefficientField:
    if rho <= 0 or sigma <= 0:
        raise InvalidArgument("rho and sigma must be positive")
    return CoefficientField(
        rho=lambda x: 0.0 * x + rho,
        sigma=lambda x: 0.0 * x + sigma,
        drho=lambda x: 0.0 * x,
        dsigma=lambda x: 0.0 * x,
        ddrho=lambda x: 0.0 * x,
        ddsigma=lambda x: 0.0 * x,
        lower_bounds=(rho, sigma),
        name="constant",
        params={"rho": rho, "sigma": sigma},
    )


@dataclass(frozen=True)
class OscillatorySigma:
    """sigma(x) = 1 + A cos^2(kappa*pi*x), period 1/kappa in x."""

    A: float
    kappa: int

    def __post_init__(self):
        if not self.A > 0:
            raise InvalidArgument(f"amplitude A must be positive, got {self.A}")
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise InvalidArgument(f"kappa must be a positive integer, got {self.kappa}")

    def sigma(self, x):
        return 1.0 + self.A * np.cos(self.kappa * math.pi * x) ** 2

    def dsigma(self, x):
        k = self.kappa * math.pi
        return -self.A * k * np.sin(2 * k * x)

    def ddsigma(self, x):
        k = self.kappa * math.pi
        return -2 * self.A * k**2 * np.cos(2 * k * x)

    def field(self) -> CoefficientField:
        return CoefficientField(
            rho=lambda x: 0.0 * x + 1.0,
            sigma=self.sigma,
            drho=lambda x: 0.0 * x,
            dsigma=self.dsigma,
            ddrho=lambda x: 0.0 * x,
            ddsigma=self.ddsigma,
            lower_bounds=(1.0, 1.0),
            name="oscillatory",
            params={"A": self.A, "kappa": self.kappa},
        )


def oscillatory_coefficients(A: float, kappa: int) -> CoefficientField:
    return OscillatorySigma(A, kappa).field()


def from_functions(rho, sigma, rho_star: float, sigma_star: float) -> CoefficientField:
    """Wrap arbitrary smooth callables; derivatives by central differences."""
    drho, dsigma = _fd(rho), _fd(sigma)
    return CoefficientField(
        rho=rho,
        sigma=sigma,
        drho=drho,
        dsigma=dsigma,
        ddrho=_fd(drho, 1e-4),
        ddsigma=_fd(dsigma, 1e-4),
        lower_bounds=(rho_star, sigma_star),
    )


def check_lower_bounds(coeffs: CoefficientField, samples: int = 10_000) -> bool:
    x = np.linspace(-1.0, 1.0, samples)
    rho_star, sigma_star = coeffs.lower_bounds
    slack = 1e-12
    return bool(
        rho_star > 0
        and sigma_star > 0
        and np.all(coeffs.rho(x) >= rho_star - slack)
        and np.all(coeffs.sigma(x) >= sigma_star - slack)
    )


def wave_speed(coeffs: CoefficientField, x):
    """c(x) = sqrt(sigma(x)/rho(x))."""
    return np.sqrt(coeffs.sigma(x) / coeffs.rho(x))


def wave_speed_derivatives(coeffs: CoefficientField, x):
    """Return (c, c', c'') at x, via q = c^2 = sigma/rho."""
    r, s = coeffs.rho(x), coeffs.sigma(x)
    dr, ds = coeffs.drho(x), coeffs.dsigma(x)
    ddr, dds = coeffs.ddrho(x), coeffs.ddsigma(x)
    c = np.sqrt(s / r)
    num = ds * r - s * dr
    dq = num / r**2
    ddq = (dds * r - s * ddr) / r**2 - 2 * dr * num / r**3
    dc = dq / (2 * c)
    ddc = ddq / (2 * c) - dq**2 / (4 * c**3)
    return c, dc, ddc


def effective_speed_cg(coeffs: CoefficientField, mmap: MeshMap, y):
    """c_g(y) = c(g(y)) / g'(y)."""
    return wave_speed(coeffs, mmap.g(y)) / mmap.dg(y)


def effective_speed_cg_derivatives(coeffs: CoefficientField, mmap: MeshMap, y):
    """Return (c_g, c_g', c_g'') at reference position y."""
    x = mmap.g(y)
    c, dc, ddc = wave_speed_derivatives(coeffs, x)
    d1, d2, d3 = mmap.dg(y), mmap.ddg(y), mmap.third_derivative(y)
    cg = c / d1
    dcg = dc - c * d2 / d1**2
    ddcg = ddc * d1 - dc * d2 / d1 - c * (d3 / d1**2 - 2 * d2**2 / d1**3)
    return cg, dcg, ddcg


def grid_speed_pair(coeffs: CoefficientField, mmap: MeshMap, x):
    """(a_g, b_g) at physical position x.

    a_g = (g' c_g)(g^{-1}(x)) reduces to c(x), so constant coefficients give
    exactly 1 for every map.
    """
    y = mmap.ginv(x)
    _, dcg, _ = effective_speed_cg_derivatives(coeffs, mmap, y)
    return wave_speed(coeffs, x), dcg


def coefficients_from_spec(rho_spec="one", sigma_spec="one") -> CoefficientField:
    """Build a field from config values: ``"one"`` or an oscillatory table for sigma."""
    if rho_spec not in ("one", 1, 1.0):
        raise InvalidArgument(f"unsupported rho spec {rho_spec!r}; only 'one'")
    if sigma_spec in ("one", 1, 1.0):
        return constant_coefficients()
    if isinstance(sigma_spec, dict) and sigma_spec.get("kind") == "oscillatory":
        return oscillatory_coefficients(float(sigma_spec["A"]), int(sigma_spec["kappa"]))
    raise InvalidArgument(f"unsupported sigma spec {sigma_spec!r}")
