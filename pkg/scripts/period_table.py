"""Oscillation periods of the four Lissajous rays on the centre-refined grid.

For each row the quadrature periods T1 (x axis) and T2 (y axis) are printed
next to the first-return times of the integrated axis rays.
"""

import math

from fdrays.mesh import tan_center_map
from fdrays.rays import integrate_ray
from fdrays.wave2d import AxisRaySystem, lambda_symbols, observed_period, trap_period

PI = math.pi
ROWS = {
    "a": (0.0, math.tan(math.acos(0.5**0.25)), PI / 2, PI),
    "b": (0.0, 0.0, PI / 2, 5 * PI / 6),
    "c": (0.0, 0.0, PI / 2, 7 * PI / 18),
    "d": (0.0, 0.0, PI / 2, 7 * PI / 12),
}


def main():
    g = tan_center_map()
    print(f"{'row':3s} {'r0':>8s} {'T1 quad':>9s} {'T1 ode':>9s} {'T2 quad':>9s} {'T2 ode':>9s} {'T2/T1':>8s}")
    for row, (x0, y0, xi0, eta0) in ROWS.items():
        l1, l2, lam = lambda_symbols(g, g, x0, y0, xi0, eta0)
        r0 = math.sqrt(float(lam))
        cols = []
        for p0, f0, r in ((x0, xi0, float(l1)), (y0, eta0, float(l2))):
            tq = trap_period(g, r0, r, p0, f0)
            to = observed_period(integrate_ray(AxisRaySystem(g, r0), p0, f0, 1.1 * tq))
            cols += [tq, to]
        print(f"{row:3s} {r0:8.4f} " + " ".join(f"{v:9.4f}" for v in cols) + f" {cols[2] / cols[0]:8.4f}")


if __name__ == "__main__":
    main()
