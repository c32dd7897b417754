import math

import numpy as np
import pytest
import sympy as sp

from fdrays.coefficients import (
    OscillatorySigma,
    check_lower_bounds,
    coefficients_from_spec,
    constant_coefficients,
    effective_speed_cg,
    effective_speed_cg_derivatives,
    from_functions,
    grid_speed_pair,
    oscillatory_coefficients,
    wave_speed,
    wave_speed_derivatives,
)
from fdrays.errors import InvalidArgument
from fdrays.mesh import builtin_maps, identity_map, sin_boundary_map, tan_center_map


def test_wave_speed_constant():
    assert wave_speed(constant_coefficients(), 0.3) == 1.0


def test_wave_speed_oscillatory():
    c = oscillatory_coefficients(2.0, 1)
    assert wave_speed(c, 0.0) == pytest.approx(math.sqrt(3), rel=1e-15)
    assert wave_speed(c, 0.5) == pytest.approx(1.0, rel=1e-15)
    assert wave_speed(c, -0.5) == pytest.approx(1.0, rel=1e-15)


def test_effective_speed_examples():
    one = constant_coefficients()
    y = np.linspace(-1, 1, 9)
    np.testing.assert_array_equal(effective_speed_cg(one, identity_map(), y), np.ones_like(y))
    assert effective_speed_cg(one, tan_center_map(), 0.0) == pytest.approx(4 / math.pi, rel=1e-15)
    osc = oscillatory_coefficients(1.0, 1)
    assert effective_speed_cg(osc, tan_center_map(), 0.0) == pytest.approx(math.sqrt(2) * 4 / math.pi, rel=1e-15)


def test_b_g_closed_forms():
    one = constant_coefficients()
    x = np.linspace(-1, 1, 21)
    _, b1 = grid_speed_pair(one, tan_center_map(), x)
    np.testing.assert_allclose(b1, -2 * x / (x**2 + 1), atol=1e-14)
    assert grid_speed_pair(one, tan_center_map(), 1.0)[1] == pytest.approx(-1.0, abs=1e-14)
    _, b2 = grid_speed_pair(one, sin_boundary_map(), x)
    np.testing.assert_allclose(b2, x / (4 - x**2), atol=1e-14)
    assert grid_speed_pair(one, sin_boundary_map(), 1.0)[1] == pytest.approx(1 / 3, abs=1e-14)
    _, b0 = grid_speed_pair(one, identity_map(), x)
    np.testing.assert_array_equal(b0, 0.0)


def test_a_g_is_exactly_one():
    one = constant_coefficients()
    x = np.linspace(-1, 1, 101)
    for m in builtin_maps().values():
        a, _ = grid_speed_pair(one, m, x)
        assert np.all(a == 1.0), m.name


def test_b_g_odd():
    one = constant_coefficients()
    x = np.linspace(0, 1, 51)
    for m in (tan_center_map(), sin_boundary_map()):
        bp = grid_speed_pair(one, m, x)[1]
        bm = grid_speed_pair(one, m, -x)[1]
        np.testing.assert_allclose(bm, -bp, atol=1e-12)


def test_sigma_period():
    for kappa in (1, 2, 5):
        s = OscillatorySigma(3.0, kappa)
        x = np.linspace(-1, 1, 97)
        np.testing.assert_allclose(s.sigma(x + 1 / kappa), s.sigma(x), atol=1e-13)


@pytest.mark.parametrize("A,kappa", [(0.0, 1), (-1.0, 1), (1.0, 0), (1.0, 1.5)])
def test_sigma_rejects_bad_parameters(A, kappa):
    with pytest.raises(InvalidArgument):
        OscillatorySigma(A, kappa)


def test_constant_rejects_nonpositive():
    with pytest.raises(InvalidArgument):
        constant_coefficients(sigma=0.0)


def test_cg_derivatives_against_symbolic():
    """Composite c_g = c(g(y))/g'(y) differentiated symbolically."""
    y = sp.Symbol("y")
    A, k = 1.5, 2
    g = sp.tan(sp.pi * y / 4)
    cg = sp.sqrt(1 + A * sp.cos(k * sp.pi * g) ** 2) / sp.diff(g, y)
    f0, f1, f2 = (sp.lambdify(y, sp.diff(cg, y, n), "numpy") for n in range(3))
    ys = np.linspace(-0.95, 0.95, 31)
    got = effective_speed_cg_derivatives(oscillatory_coefficients(A, k), tan_center_map(), ys)
    np.testing.assert_allclose(got[0], f0(ys), rtol=1e-12)
    np.testing.assert_allclose(got[1], f1(ys), rtol=1e-10, atol=1e-11)
    np.testing.assert_allclose(got[2], f2(ys), rtol=1e-9, atol=1e-9)


def test_wave_speed_derivatives_with_density():
    x = sp.Symbol("x")
    rho = 2 + sp.sin(x)
    sig = 1 + x**2
    c = sp.sqrt(sig / rho)
    field = from_functions(sp.lambdify(x, rho, "numpy"), sp.lambdify(x, sig, "numpy"), 1.0, 1.0)
    xs = np.linspace(-0.9, 0.9, 13)
    got = wave_speed_derivatives(field, xs)
    for n in range(3):
        np.testing.assert_allclose(got[n], sp.lambdify(x, sp.diff(c, x, n), "numpy")(xs), atol=2e-6)


def test_lipschitz_on_samples():
    y = np.linspace(-1, 1, 4001)
    for m in builtin_maps().values():
        for coeffs in (constant_coefficients(), oscillatory_coefficients(7.0, 1)):
            cg = effective_speed_cg(coeffs, m, y)
            L = np.max(np.abs(np.diff(cg)) / np.diff(y))
            assert np.isfinite(L)
            _, dcg, _ = effective_speed_cg_derivatives(coeffs, m, y)
            assert L <= np.max(np.abs(dcg)) * (1 + 1e-3) + 1e-12


def test_lower_bounds():
    assert check_lower_bounds(oscillatory_coefficients(2.0, 3))
    wrong = from_functions(lambda x: 1 + 0 * x, lambda x: 0.5 + 0 * x, 1.0, 1.0)
    assert not check_lower_bounds(wrong)


def test_from_spec():
    assert coefficients_from_spec().is_constant
    f = coefficients_from_spec("one", {"kind": "oscillatory", "A": 2.0, "kappa": 5})
    assert f.params == {"A": 2.0, "kappa": 5}
    with pytest.raises(InvalidArgument):
        coefficients_from_spec("heavy")
    with pytest.raises(InvalidArgument):
        coefficients_from_spec("one", {"kind": "random"})
