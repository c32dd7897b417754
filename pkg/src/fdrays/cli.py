"""Command-line experiment runner.

Every subcommand builds an :class:`ExperimentConfig` from an optional TOML file,
an optional preset and command-line overrides, runs it, and writes CSV/PGM
artifacts plus ``manifest.json`` into the output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import FLOAT_FMT, ArtifactWriter
from .coefficients import coefficients_from_spec
from .config import (
    KINDS,
    ConfigError,
    ConfigIssue,
    ExperimentConfig,
    config_from_mapping,
    eval_number,
    list_presets,
    parse_config,
    serialize,
    tomllib,
)
from .errors import FDRaysError, NotTrapped, NumericalError
from .mesh import get_map, make_grid
from .rays import (
    RaySystem1D,
    hamiltonian_residual,
    integrate_ray,
    phase_portrait,
)
from .solver1d import PacketSpec, gaussian_packet, leapfrog_integrate
from .wave2d import (
    centroid_2d,
    eigendecompose_axis,
    gaussian_packet_2d,
    integrate_ray_2d,
    lambda_symbols,
    leapfrog_integrate_2d,
    local_frequencies,
    make_grid_2d,
    observed_period,
    spectral_basis,
    spectral_energy,
    spectral_solution,
    spectral_velocity,
    trap_period,
    turning_point,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _path_rows(path):
    return zip(path.t, path.x, path.xi, itertools.repeat(path.branch))


def _write_ray(w: ArtifactWriter, path, stem="ray"):
    w.csv(f"{stem}.csv", ["t", "x", "xi", "branch"], _path_rows(path))
    w.csv(f"{stem}_reflections.csv", ["t", "endpoint", "xi_before", "xi_after"],
          [(r.t, r.endpoint, r.xi_before, r.xi_after) for r in path.reflections])


def _run_simulate1d(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    grid = make_grid(cfg.n, cfg.map)
    coeffs = coefficients_from_spec(cfg.rho, cfg.sigma)
    spec = PacketSpec(cfg.x0, cfg.xi0, cfg.gamma)
    stride = 1 if cfg.full_record else cfg.stride
    traj = leapfrog_integrate(grid, coeffs, gaussian_packet(grid, spec), cfg.T, cfg.cfl, stride)
    w.csv("spacetime.csv", ["t"] + [FLOAT_FMT % v for v in grid.nodes],
          ([t, *row] for t, row in zip(traj.times, traj.modulus)))
    w.pgm("spacetime.pgm", traj.modulus)
    w.columns("energy.csv", ["t", "E"], traj.energy_times, traj.energies)
    w.columns("centroid.csv", ["t", "x"], traj.times, traj.centroids)
    w.columns("nodes.csv", ["x"], grid.nodes)
    system = RaySystem1D(grid.map, coeffs, branch=cfg.branch)
    path = integrate_ray(system, cfg.x0, cfg.xi0, cfg.T, cfg.dt_ray)
    _write_ray(w, path)
    e = traj.energies
    return {
        "energy_drift": float(np.max(np.abs(e - e[0])) / e[0]) if e.size and e[0] > 0 else 0.0,
        "final_centroid": float(traj.centroids[-1]),
        "ray_reflections": len(path.reflections),
    }


def _run_ray1d(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    system = RaySystem1D(get_map(cfg.map), coefficients_from_spec(cfg.rho, cfg.sigma), branch=cfg.branch)
    path = integrate_ray(system, cfg.x0, cfg.xi0, cfg.T, cfg.dt_ray)
    _write_ray(w, path)
    return {
        "reflections": len(path.reflections),
        "max_abs_x": float(np.max(np.abs(path.x))),
        "hamiltonian_residual": hamiltonian_residual(system, path),
    }


DEFAULT_SEEDS = tuple(
    (x, k * math.pi / 4) for x in (-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75) for k in (2, 3, 4)
)


def _run_portrait(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    system = RaySystem1D(get_map(cfg.map), coefficients_from_spec(cfg.rho, cfg.sigma), branch=cfg.branch)
    seeds = cfg.seeds or DEFAULT_SEEDS
    portrait = phase_portrait(system, seeds, cfg.T, cfg.dt_ray, cfg.window)
    for i, orbit in enumerate(portrait.orbits):
        w.csv(f"orbits/orbit_{i:03d}.csv", ["t", "x", "xi", "branch"], _path_rows(orbit))
    rows = []
    for e in portrait.equilibria:
        lam = e.eigenvalues[-1]
        rows.append((e.x, e.xi, e.kind, lam.real, lam.imag))
    w.csv("equilibria.csv", ["x", "xi", "kind", "re_lambda", "im_lambda"], rows)
    return {"orbits": len(portrait.orbits), "equilibria": [(r[0], r[1], r[2]) for r in rows]}


def _run_simulate2d(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    map_y = cfg.map_y or cfg.map
    grid = make_grid_2d(cfg.n, cfg.m, cfg.map, map_y)
    u0 = gaussian_packet_2d(grid, cfg.x0, cfg.y0, cfg.xi0, cfg.eta0, cfg.gamma, cfg.reference_phase)
    basis = spectral_basis(grid)
    if cfg.solver == "spectral":
        times = np.linspace(0.0, cfg.T, cfg.snapshots + 1)
        fields = [spectral_solution(basis, u0, t) for t in times]
        energies = [spectral_energy(basis, u0)] * len(times)
    else:
        v0 = spectral_velocity(basis, u0)
        dt = cfg.cfl * min(grid.axis_x.h, grid.axis_y.h)
        steps = int(math.ceil(cfg.T / dt - 1e-9))
        stride = cfg.stride or max(1, steps // cfg.snapshots)
        traj = leapfrog_integrate_2d(grid, None, (u0, v0), cfg.T, cfg.cfl, stride)
        times, fields, energies = traj.times, traj.snapshots, [math.nan, *traj.energies]
    index = []
    for i, (t, f) in enumerate(zip(times, fields)):
        name = f"snapshots/snap_{i:04d}.pgm"
        w.pgm(name, np.abs(f))
        index.append((i, t, name))
    w.csv("snapshots.csv", ["index", "t", "filename"], index)
    cents = [centroid_2d(f, grid) for f in fields]
    w.csv("centroid.csv", ["t", "x", "y"], [(t, cx, cy) for t, (cx, cy) in zip(times, cents)])
    w.columns("energy.csv", ["t", "E"], times, energies)
    summary = {"snapshots": len(index)}
    fx, fy = local_frequencies(grid, cfg.x0, cfg.y0, cfg.xi0, cfg.eta0, cfg.reference_phase)
    try:
        ray = integrate_ray_2d(grid.axis_x.map, grid.axis_y.map, cfg.x0, cfg.y0, fx, fy, cfg.T,
                               cfg.dt_ray, cfg.branch)
    except NumericalError as exc:
        summary["ray"] = str(exc)
    else:
        w.csv("ray2d.csv", ["t", "x", "y", "xi", "eta"], zip(*ray.projection()))
        summary["r0_r1_r2"] = (ray.r0, ray.r1, ray.r2)
    return summary


def _run_ray2d(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    ray = integrate_ray_2d(get_map(cfg.map), get_map(cfg.map_y or cfg.map), cfg.x0, cfg.y0,
                           cfg.xi0, cfg.eta0, cfg.T, cfg.dt_ray, cfg.branch)
    w.csv("ray2d.csv", ["t", "x", "y", "xi", "eta"], zip(*ray.projection()))
    for stem, p in (("ray_x", ray.x_path), ("ray_y", ray.y_path)):
        w.csv(f"{stem}_reflections.csv", ["t", "endpoint", "xi_before", "xi_after"],
              [(r.t, r.endpoint, r.xi_before, r.xi_after) for r in p.reflections])
    return {"r0": ray.r0, "r1": ray.r1, "r2": ray.r2, "invariant_drift": ray.drift()}


def _run_spectrum(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    vals, _, _ = eigendecompose_axis(make_grid(cfg.n, cfg.map))
    w.columns("spectrum.csv", ["j", "eigenvalue"], np.arange(1, vals.size + 1), vals)
    return {"count": int(vals.size), "min": float(vals[0]), "max": float(vals[-1])}


def _run_period(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    mx, my = get_map(cfg.map), get_map(cfg.map_y or cfg.map)
    l1, l2, lam = lambda_symbols(mx, my, cfg.x0, cfg.y0, cfg.xi0, cfg.eta0)
    r0 = math.sqrt(float(lam))
    rows, periods = [], {}
    for axis, m, r, p0, f0 in (("x", mx, float(l1), cfg.x0, cfg.xi0), ("y", my, float(l2), cfg.y0, cfg.eta0)):
        try:
            zs = turning_point(m, p0, f0)
            periods[axis] = (zs, trap_period(m, r0, r, p0, f0))
        except NotTrapped as exc:
            periods[axis] = (math.nan, math.nan)
            rows.append((axis, math.nan, math.nan, math.nan, str(exc)))
    finite = [p for _, p in periods.values() if math.isfinite(p)]
    if not finite:
        raise NotTrapped("neither axis is trapped")
    ray = integrate_ray_2d(mx, my, cfg.x0, cfg.y0, cfg.xi0, cfg.eta0, 1.25 * max(finite), cfg.dt_ray, cfg.branch)
    for axis, path in (("x", ray.x_path), ("y", ray.y_path)):
        zs, tq = periods[axis]
        if math.isfinite(tq):
            rows.append((axis, zs, tq, observed_period(path), "trapped"))
    rows.sort(key=lambda r: r[0])
    w.csv("period.csv", ["axis", "turning_point", "period_quadrature", "period_observed", "status"], rows)
    return {r[0]: {"quadrature": r[2], "observed": r[3]} for r in rows}


RUNNERS = {
    "simulate1d": _run_simulate1d,
    "ray1d": _run_ray1d,
    "portrait": _run_portrait,
    "simulate2d": _run_simulate2d,
    "ray2d": _run_ray2d,
    "spectrum": _run_spectrum,
    "period": _run_period,
}


def run(cfg: ExperimentConfig, out: str | Path | None = None) -> dict:
    """Execute one configuration; returns the manifest written next to the artifacts."""
    if cfg.kind == "simulate2d" and cfg.sigma != "one":
        raise ConfigError([ConfigIssue(None, "sigma", "2D runs support constant coefficients only")])
    w = ArtifactWriter(out or cfg.out)
    start = time.perf_counter()
    summary = RUNNERS[cfg.kind](cfg, w)
    (w.root / "config.toml").write_text(serialize(cfg))
    w.files.append("config.toml")
    info = {
        "kind": cfg.kind,
        "inputs": cfg.to_dict(),
        "summary": summary,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    w.manifest(**info)
    info["files"] = list(w.files)
    return info


# command line ----------------------------------------------------------------


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        try:
            return eval_number(text)
        except (ValueError, SyntaxError):
            return text


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([ConfigIssue(None, key, "expected key=value")])
        out[key.strip()] = _parse_value(value.strip())
    if args.preset:
        out["preset"] = args.preset
    if args.stride is not None:
        out["stride"] = args.stride
    if args.out is not None:
        out["out"] = args.out
    return out


def build_config(kind: str, args) -> ExperimentConfig:
    over = _overrides(args)
    over["kind"] = kind
    if args.config:
        return parse_config(Path(args.config).read_text(), over)
    return config_from_mapping({}, "", over)


def _sweep_configs(cfg: ExperimentConfig, spec: str):
    key, sep, values = spec.partition("=")
    if not sep or not values:
        raise ConfigError([ConfigIssue(None, "sweep", "expected key=v1,v2,...")])
    base = cfg.to_dict()
    out = []
    for i, v in enumerate(values.split(",")):
        d = dict(base)
        d[key.strip()] = _parse_value(v.strip())
        d["out"] = str(Path(cfg.out) / f"sweep_{i:03d}")
        out.append(config_from_mapping(d))
    return out


def _run_one(cfg):
    return run(cfg)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML experiment file")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--preset", help="named parameter set, see `fdrays presets`")
    p.add_argument("--stride", type=int, help="snapshot stride for time stepping")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--sweep", metavar="KEY=V1,V2,...", help="run one config per value")
    p.add_argument("--workers", type=int, default=1, help="parallel workers for --sweep")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdrays", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fdrays {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    sub.add_parser("presets", help="list named parameter sets")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "presets":
        for p in list_presets():
            params = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in p.params.items())
            print(f"{p.name:22s} {p.figure}\n{'':22s} {params}")
        return EXIT_OK
    try:
        cfg = build_config(args.command, args)
        configs = _sweep_configs(cfg, args.sweep) if args.sweep else [cfg]
        if len(configs) > 1 and args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_run_one, configs))
        else:
            results = [run(c) for c in configs]
    except ConfigError as exc:
        for issue in exc.issues:
            print(f"config error: {issue}", file=sys.stderr)
        return EXIT_CONFIG
    except (tomllib.TOMLDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FDRaysError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        for c, r in zip(configs, results):
            print(f"{c.kind}: wrote {len(r['files'])} files to {c.out}")
            for k, v in r["summary"].items():
                print(f"  {k}: {v}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
