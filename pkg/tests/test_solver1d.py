import math

import numpy as np
import pytest

from fdrays.coefficients import constant_coefficients, oscillatory_coefficients
from fdrays.errors import InstabilityError, InvalidArgument, OutOfValidity, UndefinedCentroid
from fdrays.mesh import make_grid, tan_center_map
from fdrays.solver1d import (
    PacketSpec,
    WaveOperator1D,
    WaveState1D,
    apply_operator,
    centroid,
    dalembert_reference,
    default_gamma,
    discrete_energy,
    energy_from_velocity,
    gaussian_packet,
    leapfrog_integrate,
)

ONE = constant_coefficients()


def first_mode(grid):
    return np.sin(math.pi * (grid.nodes + 1) / 2)


def mu1(h):
    return 4 / h**2 * math.sin(math.pi * h / 4) ** 2


# packets ---------------------------------------------------------------------


def test_default_gamma_n99():
    assert default_gamma(make_grid(99).h) == pytest.approx(33.81, abs=5e-3)


def test_packet_peak_at_center():
    grid = make_grid(200, "tan_center")
    spec = PacketSpec(0.3, math.pi / 4)
    u0, _ = gaussian_packet(grid, spec)
    k = int(np.argmin(np.abs(grid.nodes - 0.3)))
    m = np.abs(u0)
    assert m[k] == m.max()
    assert m[k] >= math.exp(-default_gamma(grid.h) * grid.h**2 / 2)


def test_zero_frequency_packet_real_and_symmetric():
    grid = make_grid(101)
    u0, _ = gaussian_packet(grid, PacketSpec(0.0, 0.0))
    assert np.all(u0.imag == 0)
    assert np.all(u0.real[1:-1] > 0)
    np.testing.assert_allclose(u0, u0[::-1], atol=1e-12)


def test_packet_velocity_is_derivative():
    grid = make_grid(400, "sin_boundary")
    spec = PacketSpec(-0.2, math.pi / 3)
    u0, u1 = gaussian_packet(grid, spec)
    g, gamma = grid.map, default_gamma(grid.h)
    y0 = float(g.ginv(-0.2))

    def G(x):
        y = g.ginv(x)
        return np.exp(-0.5 * gamma * (y - y0) ** 2 + 1j * spec.xi0 * y / grid.h)

    x = grid.interior
    d = 1e-7
    np.testing.assert_allclose(u0[1:-1], G(x), atol=1e-12)
    fd = (G(x + d) - G(x - d)) / (2 * d)
    assert np.max(np.abs(fd - u1[1:-1])) / np.max(np.abs(u1)) < 1e-6


@pytest.mark.parametrize("x0", [-1.0, 1.0, 1.5])
def test_packet_center_must_be_interior(x0):
    with pytest.raises(InvalidArgument):
        PacketSpec(x0, 0.0)


# operator --------------------------------------------------------------------


@pytest.mark.parametrize("name", ["identity", "tan_center", "sin_boundary"])
def test_operator_kills_affine(name):
    grid = make_grid(57, name)
    v = apply_operator(grid, ONE, 0.7 * grid.nodes - 0.2)
    assert np.max(np.abs(v)) < 1e-10


def test_operator_first_mode():
    grid = make_grid(80)
    u = first_mode(grid)
    np.testing.assert_allclose(apply_operator(grid, ONE, u), -mu1(grid.h) * u, atol=1e-9)


def test_operator_stencil():
    grid = make_grid(9)
    e = np.zeros(11)
    e[5] = 1.0
    v = apply_operator(grid, ONE, e)
    assert np.count_nonzero(v) == 3
    np.testing.assert_allclose(v[4:7], np.array([1, -2, 1]) / grid.h**2, rtol=1e-12)


def test_operator_length_mismatch():
    with pytest.raises(InvalidArgument):
        apply_operator(make_grid(10), ONE, np.zeros(5))


def test_operator_symmetric_in_weighted_product():
    grid = make_grid(40, "tan_center")
    coeffs = oscillatory_coefficients(2.0, 3)
    op = WaveOperator1D(grid, coeffs)
    rng = np.random.default_rng(7)
    u, w = rng.standard_normal((2, 42))
    u[[0, -1]] = w[[0, -1]] = 0
    lhs = np.sum(op.mass * op(u)[1:-1] * w[1:-1])
    rhs = np.sum(op.mass * u[1:-1] * op(w)[1:-1])
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert -lhs == pytest.approx(op.stiffness(u, w).real, rel=1e-12)


# time stepping ---------------------------------------------------------------


def test_zero_data_stays_zero():
    grid = make_grid(50, "tan_center")
    z = np.zeros(52)
    tr = leapfrog_integrate(grid, ONE, (z, z), 1.0)
    assert np.all(tr.modulus == 0)
    assert np.all(tr.final.u_curr == 0)


def test_single_mode_evolution():
    grid = make_grid(200)
    u0 = first_mode(grid)
    tr = leapfrog_integrate(grid, ONE, (u0, np.zeros_like(u0)), 1.0)
    exact = math.cos(math.sqrt(mu1(grid.h)) * tr.final.time) * u0
    assert np.max(np.abs(tr.final.u_curr - exact)) < 1e-3


@pytest.mark.parametrize("name", ["identity", "tan_center", "sin_boundary"])
def test_non_propagation(name):
    grid = make_grid(200, name)
    tr = leapfrog_integrate(grid, ONE, gaussian_packet(grid, PacketSpec(0.0, math.pi)), 5.0)
    assert np.max(np.abs(tr.centroids - tr.centroids[0])) <= 0.05


def test_boundary_values_stay_zero():
    grid = make_grid(60, "sin_boundary")
    tr = leapfrog_integrate(grid, ONE, gaussian_packet(grid, PacketSpec(0.6, math.pi / 4)), 3.0, stride=1)
    assert np.all(tr.modulus[:, 0] == 0) and np.all(tr.modulus[:, -1] == 0)


def test_linearity():
    grid = make_grid(80, "tan_center")
    coeffs = oscillatory_coefficients(1.0, 2)
    a = gaussian_packet(grid, PacketSpec(0.1, math.pi / 5))
    b = gaussian_packet(grid, PacketSpec(-0.4, 2.0))
    al, be = 0.3 - 1.1j, 2.5
    mix = (al * a[0] + be * b[0], al * a[1] + be * b[1])
    ua = leapfrog_integrate(grid, coeffs, a, 1.0).final.u_curr
    ub = leapfrog_integrate(grid, coeffs, b, 1.0).final.u_curr
    um = leapfrog_integrate(grid, coeffs, mix, 1.0).final.u_curr
    assert np.max(np.abs(um - (al * ua + be * ub))) < 1e-10


def test_cfl_validation():
    grid = make_grid(10)
    z = np.zeros(12)
    for cfl in (0.0, 0.6):
        with pytest.raises(InvalidArgument):
            leapfrog_integrate(grid, ONE, (z, z), 1.0, cfl=cfl)


def test_instability_names_step():
    grid = make_grid(100, tan_center_map(1.55))
    u0, u1 = gaussian_packet(grid, PacketSpec(0.0, math.pi))
    with pytest.raises(InstabilityError) as info:
        leapfrog_integrate(grid, ONE, (u0, u1), 5.0, cfl=0.5)
    assert info.value.step > 1
    assert str(info.value.step) in str(info.value)


def test_default_stride():
    grid = make_grid(200)
    tr = leapfrog_integrate(grid, ONE, gaussian_packet(grid, PacketSpec(0.0, 1.0)), 5.0)
    steps = math.ceil(5.0 / (0.1 * grid.h) - 1e-9)
    stride = steps // 512
    assert tr.modulus.shape[0] == 1 + steps // stride + (steps % stride != 0)
    assert tr.times[1] == pytest.approx(stride * 0.1 * grid.h)
    assert tr.times[-1] == pytest.approx(tr.final.time)


# energy ----------------------------------------------------------------------


def test_energy_of_zero_state():
    grid = make_grid(20)
    z = np.zeros(22)
    assert energy_from_velocity(grid, ONE, z, z) == 0.0
    assert discrete_energy(WaveState1D(z, z, 0.0, 0.01, grid, ONE)) == 0.0


@pytest.mark.parametrize("name", ["identity", "tan_center", "sin_boundary"])
def test_energy_drift(name):
    grid = make_grid(200, name)
    tr = leapfrog_integrate(grid, oscillatory_coefficients(2.0, 5), gaussian_packet(grid, PacketSpec(0.2, 1.0)), 5.0)
    e = tr.energies
    assert np.max(np.abs(e - e[0])) / e[0] <= 1e-3


def test_single_mode_energy():
    grid = make_grid(200)
    u0 = first_mode(grid)
    weighted = np.sum(grid.dual * u0[1:-1] ** 2)
    exact = 0.5 * mu1(grid.h) * weighted
    assert energy_from_velocity(grid, ONE, u0, np.zeros_like(u0)) == pytest.approx(exact, rel=1e-12)
    tr = leapfrog_integrate(grid, ONE, (u0, np.zeros_like(u0)), 1.0)
    assert np.max(np.abs(tr.energies - exact)) < 1e-6


# centroid --------------------------------------------------------------------


def test_centroid_symmetric():
    grid = make_grid(51, "tan_center")
    u = np.exp(-(grid.nodes**2) * 9)
    assert abs(centroid(u, grid)) < 1e-10


def test_centroid_delta():
    grid = make_grid(30, "sin_boundary")
    u = np.zeros(32)
    u[7] = 1.0
    assert centroid(u, grid) == grid.nodes[7]


def test_centroid_of_packet():
    grid = make_grid(200, "tan_center")
    u0, _ = gaussian_packet(grid, PacketSpec(0.25, 1.0))
    assert abs(centroid(u0, grid) - 0.25) <= grid.h


def test_centroid_zero_field():
    with pytest.raises(UndefinedCentroid):
        centroid(np.zeros(12), make_grid(10))


# d'Alembert reference --------------------------------------------------------


def test_dalembert_even_data():
    u0 = lambda x: math.exp(-3 * x * x)  # noqa: E731
    assert dalembert_reference(u0, lambda x: 0.0, 0.0, 0.4) == pytest.approx(u0(0.4), rel=1e-14)


def test_dalembert_unit_velocity():
    assert dalembert_reference(lambda x: 0.0, lambda x: 1.0, 0.3, 0.1) == pytest.approx(0.1, rel=1e-12)


def test_dalembert_gaussian():
    u0 = lambda x: math.exp(-8 * x * x)  # noqa: E731
    want = 0.5 * (math.exp(-8 * 0.3**2) + math.exp(-8 * 0.1**2))
    assert dalembert_reference(u0, lambda x: 0.0, 0.1, 0.2) == pytest.approx(want, rel=1e-14)


def test_dalembert_outside_cone():
    with pytest.raises(OutOfValidity):
        dalembert_reference(lambda x: 0.0, lambda x: 0.0, 0.8, 0.3)
