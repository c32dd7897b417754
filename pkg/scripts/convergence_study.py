"""Standing-mode errors of the 1D leapfrog scheme on each builtin grid.

The exact solution sin(pi (x+1)/2) cos(pi t/2) is compared with the scheme at
t = 1 in the dual-cell weighted l2 norm; observed orders use successive pairs.
"""

import argparse
import math

import numpy as np

from fdrays.mesh import MAP_NAMES, make_grid
from fdrays.solver1d import leapfrog_integrate


def standing_mode_error(n: int, name: str, T: float, cfl: float) -> tuple[float, float]:
    grid = make_grid(n, name)
    u0 = np.sin(math.pi * (grid.nodes + 1) / 2)
    final = leapfrog_integrate(grid, None, (u0, np.zeros_like(u0)), T, cfl=cfl).final
    err = final.u_curr[1:-1] - u0[1:-1] * math.cos(math.pi * final.time / 2)
    return math.sqrt(float(np.sum(grid.dual * np.abs(err) ** 2))), grid.h


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200, 400, 800])
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--cfl", type=float, default=0.1)
    args = ap.parse_args()
    print(f"{'map':14s} {'N':>5s} {'h':>10s} {'error':>12s} {'order':>7s}")
    for name in MAP_NAMES:
        prev = None
        for n in args.sizes:
            e, h = standing_mode_error(n, name, args.T, args.cfl)
            order = "" if prev is None else f"{math.log(prev[0] / e) / math.log(prev[1] / h):7.3f}"
            print(f"{name:14s} {n:5d} {h:10.3e} {e:12.4e} {order:>7s}")
            prev = (e, h)


if __name__ == "__main__":
    main()
