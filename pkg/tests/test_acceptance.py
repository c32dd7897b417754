"""The thirteen acceptance criteria, one test each, with wall-clock budgets.

Every test runs inside the ``criterion`` context manager from conftest, which
prints a PASS/FAIL line per criterion at the end of the session.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from fdrays import cli
from fdrays.coefficients import constant_coefficients, oscillatory_coefficients
from fdrays.config import config_from_mapping
from fdrays.mesh import identity_map, make_grid, sin_boundary_map, tan_center_map
from fdrays.rays import (
    DISCRETE,
    RaySystem1D,
    find_equilibria,
    group_velocity,
    hamiltonian_residual,
    integrate_ray,
)
from fdrays.solver1d import PacketSpec, centroid, dalembert_reference, gaussian_packet, leapfrog_integrate
from fdrays.wave2d import (
    AxisRaySystem,
    eigendecompose_axis,
    gaussian_packet_2d,
    integrate_ray_2d,
    lambda_symbols,
    leapfrog_integrate_2d,
    make_grid_2d,
    observed_period,
    spectral_basis,
    spectral_solution,
    trap_period,
)

PI = math.pi
TAN = tan_center_map()
SIN = sin_boundary_map()
ROW_A_Y0 = math.tan(math.acos(0.5**0.25))


def test_c01_equilibrium_analytics(criterion):
    with criterion(1, "equilibria: g1 centre +-i sqrt2, g2 saddle +-1/2", 1.0):
        scan = find_equilibria(RaySystem1D(TAN))
        assert len(scan.equilibria) == 1
        (eq,) = scan.equilibria
        assert abs(eq.x) <= 1e-12 and abs(eq.xi - PI) <= 1e-12
        assert eq.kind == "center"
        np.testing.assert_allclose(np.sort_complex(eq.eigenvalues), [-1j * math.sqrt(2), 1j * math.sqrt(2)],
                                   atol=1e-10)

        scan = find_equilibria(RaySystem1D(SIN))
        assert len(scan.equilibria) == 1
        (eq,) = scan.equilibria
        assert abs(eq.x) <= 1e-12 and abs(eq.xi - PI) <= 1e-12
        assert eq.kind == "saddle"
        np.testing.assert_allclose(np.sort(eq.eigenvalues.real), [-0.5, 0.5], atol=1e-10)
        assert np.all(eq.eigenvalues.imag == 0)


def test_c02_vanishing_group_velocity(criterion):
    with criterion(2, "group velocity vanishes at pi; rays there are stationary", 1.0):
        assert group_velocity(DISCRETE, PI) == 0.0
        xi = np.linspace(0.0, 2 * PI, 4001)
        xi = xi[xi != PI]
        assert np.all(group_velocity(DISCRETE, xi) != 0.0)

        osc = RaySystem1D(identity_map(), oscillatory_coefficients(1.0, 1))
        cases = [(RaySystem1D(TAN), 0.0), (RaySystem1D(SIN), 0.0)]
        cases += [(osc, e.x) for e in find_equilibria(osc).equilibria]
        cases += [(RaySystem1D(identity_map()), x) for x in (-0.7, 0.4)]
        assert len(cases) == 7
        for system, x0 in cases:
            path = integrate_ray(system, x0, PI, 10.0)
            assert np.max(np.abs(path.x - x0)) <= 1e-10
            assert np.max(np.abs(path.xi - PI)) <= 1e-10
            assert path.t[-1] == 10.0


def test_c03_invariant_conservation(criterion):
    with criterion(3, "Hamiltonian residual and 2D invariants <= 1e-8", 5.0):
        rays_1d = [
            (RaySystem1D(TAN), 0.0, PI / 4),
            (RaySystem1D(TAN), 0.3, 10 * PI / 15),
            (RaySystem1D(SIN), 0.5, PI),
            (RaySystem1D(SIN, branch=-1), -0.2, 2.0),
            (RaySystem1D(identity_map(), oscillatory_coefficients(1.0, 1)), 0.0, PI / 7),
        ]
        reflections = 0
        for system, x0, xi0 in rays_1d:
            path = integrate_ray(system, x0, xi0, 10.0, dt=1e-3)
            reflections += len(path.reflections)
            assert hamiltonian_residual(system, path) <= 1e-8
        assert reflections >= 2

        for args in ((0.0, 0.0, PI / 2, 5 * PI / 6), (0.3, -0.4, 1.0, 2.5)):
            ray = integrate_ray_2d(TAN, TAN, *args, 10.0, dt=1e-3)
            assert ray.drift() <= 1e-8


def test_c04_internal_reflection(criterion):
    with criterion(4, "internal reflection on the g1 grid", 2.0):
        extents = []
        for k in (7, 10, 13):
            path = integrate_ray(RaySystem1D(TAN), 0.0, k * PI / 15, 5.0)
            assert path.reflections == []
            extents.append(float(np.max(np.abs(path.x))))
        assert all(e < 1.0 for e in extents)
        assert extents[0] >= extents[1] >= extents[2]


def test_c05_saddle_trapping(criterion):
    with criterion(5, "saddle trapping on the g2 grid", 2.0):
        right = integrate_ray(RaySystem1D(SIN), 0.5, PI, 5.0)
        assert np.all((right.x >= 0.0) & (right.x <= 1.0))
        left = integrate_ray(RaySystem1D(SIN), -0.5, PI, 5.0)
        assert np.all((left.x >= -1.0) & (left.x <= 0.0))
        np.testing.assert_allclose(left.x, -right.x, atol=1e-12)


def test_c06_energy_conservation(criterion):
    coefficient_sets = [
        constant_coefficients(),
        oscillatory_coefficients(1.0, 1),
        oscillatory_coefficients(7.0, 1),
        oscillatory_coefficients(2.0, 1),
        oscillatory_coefficients(2.0, 5),
    ]
    with criterion(6, "1D leapfrog energy drift <= 1e-3 (3 maps x 5 coefficient sets)", 30.0):
        worst = 0.0
        for name in ("identity", "tan_center", "sin_boundary"):
            grid = make_grid(200, name)
            data = gaussian_packet(grid, PacketSpec(0.0, PI / 4))
            for coeffs in coefficient_sets:
                e = leapfrog_integrate(grid, coeffs, data, 5.0, cfl=0.1).energies
                worst = max(worst, float(np.max(np.abs(e - e[0])) / e[0]))
        assert worst <= 1e-3


def _standing_mode_error(n, name):
    grid = make_grid(n, name)
    u0 = np.sin(PI * (grid.nodes + 1) / 2)
    tr = leapfrog_integrate(grid, None, (u0, np.zeros_like(u0)), 1.0, cfl=0.1)
    exact = u0 * math.cos(PI * tr.final.time / 2)
    err = tr.final.u_curr[1:-1] - exact[1:-1]
    return math.sqrt(float(np.sum(grid.dual * np.abs(err) ** 2))), grid.h


def test_c07_convergence_order(criterion):
    with criterion(7, "standing-mode order >= 1.8 uniform, >= 0.9 on g1", 60.0):
        for name, floor in (("identity", 1.8), ("tan_center", 0.9)):
            runs = [_standing_mode_error(n, name) for n in (50, 100, 200)]
            orders = [math.log(e1 / e2) / math.log(h1 / h2) for (e1, h1), (e2, h2) in zip(runs, runs[1:])]
            assert min(orders) >= floor, (name, orders)


def test_c08_dalembert_oracle(criterion):
    def f0(x):
        return np.exp(-25 * x * x) * np.exp(10j * x)

    def f1(x):
        return (-50 * x + 10j) * f0(x)

    with criterion(8, "uniform N=400 against d'Alembert, error <= 5e-2", 20.0):
        grid = make_grid(400)
        u0, u1 = f0(grid.nodes), f1(grid.nodes)
        dt = 0.1 * grid.h
        worst, checked = 0.0, 0
        for target in (0.1, 0.2, 0.3, 0.4, 0.5):
            steps = math.floor(target / dt)  # land on a step at or before the target time
            state = leapfrog_integrate(grid, None, (u0, u1), steps * dt, cfl=0.1).final
            t = state.time
            assert t <= 0.5
            for j in np.nonzero(np.abs(grid.nodes) + t < 1.0)[0]:
                ref = dalembert_reference(f0, f1, float(grid.nodes[j]), t)
                worst = max(worst, abs(state.u_curr[j] - ref))
                checked += 1
        assert checked > 1000
        assert worst <= 5e-2


def test_c09_ray_packet_agreement(criterion):
    with criterion(9, "g1 packet centroid follows its ray within 0.1", 30.0):
        grid = make_grid(400, "tan_center")
        tr = leapfrog_integrate(grid, None, gaussian_packet(grid, PacketSpec(0.0, PI / 4)), 1.5, stride=1)
        path = integrate_ray(RaySystem1D(TAN), 0.0, PI / 4, 1.5)
        ray_x = np.interp(tr.times, path.t, path.x)
        assert abs(path.x[-1]) > 0.3  # the packet actually travels
        assert np.max(np.abs(tr.centroids - ray_x)) <= 0.1
        assert centroid(tr.final.u_curr, grid) == tr.centroids[-1]


def test_c10_spectral_solver(criterion):
    with criterion(10, "2D spectral eigenvalues, reconstruction, Parseval, leapfrog gap", 60.0):
        axis = make_grid(60)
        vals, _, _ = eigendecompose_axis(axis)
        j = np.arange(1, 61)
        np.testing.assert_allclose(vals, 4 / axis.h**2 * np.sin(j * PI * axis.h / 4) ** 2, rtol=0, atol=1e-10)

        grid = make_grid_2d(60, 60)
        basis = spectral_basis(grid)
        u0 = gaussian_packet_2d(grid, 0.0, 0.5, PI / 4, PI / 4)
        beta = basis.coefficients(u0)
        assert np.max(np.abs(basis.synthesize(beta) - u0)) <= 1e-9
        norm2 = float(np.sum(grid.weights * np.abs(u0[1:-1, 1:-1]) ** 2))
        assert abs(float(np.sum(np.abs(beta) ** 2)) - norm2) <= 1e-9

        w0 = gaussian_packet_2d(grid, 0.0, 0.0, 0.0, 0.0)
        zero = np.zeros_like(w0)
        final = leapfrog_integrate_2d(grid, None, (w0, zero), 1.0, cfl=0.1).final
        ref = spectral_solution(basis, w0, final.time, zero)
        assert np.max(np.abs(final.u - ref)) <= 5e-3


def test_c11_non_propagation_2d(criterion):
    def wall_hits(path):
        return {r.endpoint for r in path.reflections}

    with criterion(11, "2D non-propagation: np1 bounces in x only, np3 stays put", 5.0):
        for mmap in ("tan_center", "identity"):
            ray = integrate_ray_2d(mmap, mmap, 1.0, 0.0, PI / 2, PI, 10.0)
            assert np.max(np.abs(ray.y_path.x)) <= 1e-8
            assert ray.x_path.x.max() == 1.0 and ray.x_path.x.min() == -1.0
            assert -1.0 in wall_hits(ray.x_path)
            if mmap == "identity":
                assert wall_hits(ray.x_path) == {-1.0, 1.0}
        # the refined grid slows the ray near the centre; the return bounce off +1 comes later
        ray = integrate_ray_2d(TAN, TAN, 1.0, 0.0, PI / 2, PI, 20.0)
        assert wall_hits(ray.x_path) == {-1.0, 1.0}
        assert np.max(np.abs(ray.y_path.x)) <= 1e-8

        for mmap in ("tan_center", "identity"):
            ray = integrate_ray_2d(mmap, mmap, 0.0, 0.0, PI, PI, 10.0)
            drift = np.abs(ray.x_path.x) + np.abs(ray.y_path.x)
            assert np.max(drift) <= 1e-8


def test_c12_period_integrals(criterion):
    rows = {
        "a": (0.0, ROW_A_Y0, PI / 2, PI),
        "b": (0.0, 0.0, PI / 2, 5 * PI / 6),
        "c": (0.0, 0.0, PI / 2, 7 * PI / 18),
        "d": (0.0, 0.0, PI / 2, 7 * PI / 12),
    }
    with criterion(12, "trap_period quadrature within 1% of the observed return", 5.0):
        for label, (x0, y0, xi0, eta0) in rows.items():
            l1, l2, lam = lambda_symbols(TAN, TAN, x0, y0, xi0, eta0)
            r0 = math.sqrt(float(lam))
            for p0, f0, r in ((x0, xi0, float(l1)), (y0, eta0, float(l2))):
                tq = trap_period(TAN, r0, r, p0, f0)
                path = integrate_ray(AxisRaySystem(TAN, r0), p0, f0, 1.1 * tq)
                assert path.reflections == []
                to = observed_period(path)
                assert abs(to - tq) <= 1e-2 * tq, (label, to, tq)


def _csv_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_c13_determinism(criterion):
    presets = ["fig-low", "fig-internal-mid", "fig-trap-right", "fig-portrait-g2", "fig-np1", "fig-u3a"]
    with criterion(13, "repeated preset runs give byte-identical CSVs", 10.0):
        for name in presets:
            outputs = []
            for _ in range(2):
                with tempfile.TemporaryDirectory() as d:
                    cli.run(config_from_mapping({"preset": name}), d)
                    outputs.append(_csv_bytes(Path(d)))
            assert outputs[0] and outputs[0] == outputs[1], name
