"""Experiment configuration: flat TOML files, named presets, located validation errors."""

from __future__ import annotations

import ast
import math
import operator
import re
import sys
from dataclasses import asdict, dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib
import tomli_w

from .errors import FDRaysError
from .mesh import MAP_NAMES

PI = math.pi
KINDS = ("simulate1d", "ray1d", "portrait", "simulate2d", "ray2d", "spectrum", "period")


@dataclass(frozen=True)
class ConfigIssue:
    line: int | None
    key: str | None
    message: str

    def __str__(self):
        where = f"line {self.line}" if self.line else "config"
        return f"{where}: {self.key + ': ' if self.key else ''}{self.message}"


class ConfigError(FDRaysError, ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    map: str = "identity"
    map_y: str | None = None  # None: same as map
    n: int = 200
    m: int | None = None
    rho: str = "one"
    sigma: object = "one"
    x0: float = 0.0
    y0: float = 0.0
    xi0: float = PI / 4
    eta0: float = PI / 4
    gamma: float | None = None
    T: float = 5.0
    cfl: float = 0.1
    dt_ray: float = 1e-3
    branch: int = 1
    stride: int | None = None
    full_record: bool = False
    seeds: tuple = ()
    window: float = 1.5
    solver: str = "spectral"
    snapshots: int = 8
    reference_phase: bool = False
    out: str = "out"
    preset: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = [list(s) for s in self.seeds]
        return {k: v for k, v in d.items() if v is not None}


FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


# presets ---------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    figure: str
    params: dict = field(default_factory=dict)


def _p(name, figure, **params):
    return Preset(name, figure, params)


_OSC = lambda A, k: {"kind": "oscillatory", "A": A, "kappa": k}  # noqa: E731

PRESETS = {
    p.name: p
    for p in [
        _p("fig-low", "low frequency packet on the centre-refined grid",
           kind="simulate1d", map="tan_center", x0=0.0, xi0=PI / 4, T=5.0),
        _p("fig-mirror-uniform", "mirrored frequency 2pi - pi/4, uniform grid",
           kind="simulate1d", map="identity", x0=0.0, xi0=7 * PI / 4, T=5.0),
        _p("fig-mirror-g1", "mirrored frequency 2pi - pi/4, centre-refined grid",
           kind="simulate1d", map="tan_center", x0=0.0, xi0=7 * PI / 4, T=5.0),
        _p("fig-mirror-g2", "mirrored frequency 2pi - pi/4, boundary-refined grid",
           kind="simulate1d", map="sin_boundary", x0=0.0, xi0=7 * PI / 4, T=5.0),
        _p("fig-nonprop-uniform", "non-propagating packet xi0 = pi, uniform grid",
           kind="simulate1d", map="identity", x0=0.0, xi0=PI, T=5.0),
        _p("fig-nonprop-g1", "non-propagating packet xi0 = pi, centre-refined grid",
           kind="simulate1d", map="tan_center", x0=0.0, xi0=PI, T=5.0),
        _p("fig-nonprop-g2", "non-propagating packet xi0 = pi, boundary-refined grid",
           kind="simulate1d", map="sin_boundary", x0=0.0, xi0=PI, T=5.0),
        _p("fig-internal-low", "internal reflection, xi0 = 7pi/15",
           kind="ray1d", map="tan_center", x0=0.0, xi0=7 * PI / 15, T=5.0),
        _p("fig-internal-mid", "internal reflection, xi0 = 10pi/15",
           kind="ray1d", map="tan_center", x0=0.0, xi0=10 * PI / 15, T=5.0),
        _p("fig-internal-high", "internal reflection, xi0 = 13pi/15",
           kind="ray1d", map="tan_center", x0=0.0, xi0=13 * PI / 15, T=5.0),
        _p("fig-trap-right", "saddle trapping on the boundary-refined grid, x0 = 1/2",
           kind="ray1d", map="sin_boundary", x0=0.5, xi0=PI, T=5.0),
        _p("fig-trap-left", "saddle trapping on the boundary-refined grid, x0 = -1/2",
           kind="ray1d", map="sin_boundary", x0=-0.5, xi0=PI, T=5.0),
        _p("fig-var-low", "oscillatory sigma, A = 1, kappa = 1, uniform grid",
           kind="simulate1d", map="identity", sigma=_OSC(1.0, 1), x0=0.0, xi0=PI / 7, T=5.0),
        _p("fig-var-low-a7", "oscillatory sigma, A = 7, kappa = 1, uniform grid",
           kind="simulate1d", map="identity", sigma=_OSC(7.0, 1), x0=0.0, xi0=PI / 7, T=5.0),
        _p("fig-var-freq-k1", "oscillatory sigma, A = 2, kappa = 1, uniform grid",
           kind="simulate1d", map="identity", sigma=_OSC(2.0, 1), x0=0.0, xi0=PI / 7, T=5.0),
        _p("fig-var-freq-k5", "oscillatory sigma, A = 2, kappa = 5, uniform grid",
           kind="simulate1d", map="identity", sigma=_OSC(2.0, 5), x0=0.0, xi0=PI / 7, T=5.0),
        _p("fig-portrait-g1", "phase portrait, centre-refined grid",
           kind="portrait", map="tan_center", T=10.0),
        _p("fig-portrait-g2", "phase portrait, boundary-refined grid",
           kind="portrait", map="sin_boundary", T=10.0),
        _p("fig-portrait-var-g1", "phase portrait, oscillatory sigma (A = 1, kappa = 1), centre-refined grid",
           kind="portrait", map="tan_center", sigma=_OSC(1.0, 1), T=10.0),
        _p("fig-portrait-var-g2", "phase portrait, oscillatory sigma (A = 1, kappa = 1), boundary-refined grid",
           kind="portrait", map="sin_boundary", sigma=_OSC(1.0, 1), T=10.0),
        _p("fig-low-2d", "2D low frequency packet",
           kind="simulate2d", map="tan_center", map_y="tan_center",
           x0=0.0, y0=0.5, xi0=PI / 4, eta0=PI / 4, T=5.0),
        _p("fig-np1", "2D packet bouncing between x = -1 and x = 1",
           kind="simulate2d", map="tan_center", map_y="tan_center",
           x0=1.0, y0=0.0, xi0=PI / 2, eta0=PI, T=10.0),
        _p("fig-np3", "2D packet trapped at the origin",
           kind="simulate2d", map="tan_center", map_y="tan_center",
           x0=0.0, y0=0.0, xi0=PI, eta0=PI, T=10.0),
        _p("fig-low-2d-uniform", "2D low frequency packet, uniform grid",
           kind="simulate2d", map="identity", map_y="identity",
           x0=0.0, y0=0.5, xi0=PI / 4, eta0=PI / 4, T=5.0),
        _p("fig-np1-uniform", "2D packet bouncing between x = -1 and x = 1, uniform grid",
           kind="simulate2d", map="identity", map_y="identity",
           x0=1.0, y0=0.0, xi0=PI / 2, eta0=PI, T=10.0),
        _p("fig-np3-uniform", "2D packet trapped at the origin, uniform grid",
           kind="simulate2d", map="identity", map_y="identity",
           x0=0.0, y0=0.0, xi0=PI, eta0=PI, T=10.0),
        _p("fig-u3a", "2D Lissajous ray, table row a",
           kind="ray2d", map="tan_center", map_y="tan_center",
           x0=0.0, y0=math.tan(math.acos(0.5**0.25)), xi0=PI / 2, eta0=PI, T=8.0),
        _p("fig-u3b", "2D Lissajous ray, table row b",
           kind="ray2d", map="tan_center", map_y="tan_center",
           x0=0.0, y0=0.0, xi0=PI / 2, eta0=5 * PI / 6, T=21.0),
        _p("fig-u3c", "2D Lissajous ray, table row c",
           kind="ray2d", map="tan_center", map_y="tan_center",
           x0=0.0, y0=0.0, xi0=PI / 2, eta0=7 * PI / 18, T=37.0),
        _p("fig-u3d", "2D Lissajous ray, table row d",
           kind="ray2d", map="tan_center", map_y="tan_center",
           x0=0.0, y0=0.0, xi0=PI / 2, eta0=7 * PI / 12, T=118.0),
    ]
}


def list_presets() -> list[Preset]:
    return [PRESETS[k] for k in sorted(PRESETS)]


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError([ConfigIssue(None, "preset", f"unknown preset {name!r}")]) from None


# numeric expressions ---------------------------------------------------------

_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos,
}


def eval_number(text: str) -> float:
    """Evaluate arithmetic like "7*pi/15"; only numbers, pi and + - * / ** are allowed."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return PI
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    return float(ev(ast.parse(text.strip(), mode="eval")))


# parsing and validation ------------------------------------------------------

_FLOATS = {"x0", "y0", "xi0", "eta0", "gamma", "T", "cfl", "dt_ray", "window"}
_INTS = {"n", "m", "branch", "stride", "snapshots"}
_BOOLS = {"full_record", "reference_phase"}
_STRS = {"kind", "map", "map_y", "rho", "solver", "out", "preset"}


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def _coerce(key, value, issues, line):
    try:
        if key in _FLOATS:
            if isinstance(value, bool):
                raise TypeError
            return eval_number(value) if isinstance(value, str) else float(value)
        if key in _INTS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if key in _BOOLS:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if key in _STRS:
            if not isinstance(value, str):
                raise TypeError
            return value
        if key == "sigma":
            return _coerce_sigma(value)
        if key == "seeds":
            return tuple(
                (eval_number(a) if isinstance(a, str) else float(a),
                 eval_number(b) if isinstance(b, str) else float(b))
                for a, b in value
            )
    except (TypeError, ValueError, SyntaxError) as exc:
        detail = f": {exc}" if str(exc) else ""
        issues.append(ConfigIssue(line, key, f"bad value {value!r}{detail}"))
        return None
    return value


def _coerce_sigma(value):
    if value in ("one", 1, 1.0):
        return "one"
    if isinstance(value, dict):
        extra = set(value) - {"kind", "A", "kappa"}
        if value.get("kind") != "oscillatory" or extra or not {"A", "kappa"} <= set(value):
            raise ValueError("sigma table needs kind = 'oscillatory', A and kappa only")
        k = value["kappa"]
        if isinstance(k, bool) or int(k) != k:
            raise ValueError("kappa must be an integer")
        return {"kind": "oscillatory", "A": float(value["A"]), "kappa": int(k)}
    raise ValueError("sigma must be 'one' or an oscillatory table")


def _validate(cfg: dict, text: str) -> list[ConfigIssue]:
    issues = []

    def bad(key, msg):
        issues.append(ConfigIssue(_line_of(text, key), key, msg))

    kind = cfg.get("kind")
    if "kind" in cfg and kind not in KINDS:
        bad("kind", f"must be one of {', '.join(KINDS)}; got {kind!r}")
    for key in ("map", "map_y"):
        if key in cfg and cfg[key] not in MAP_NAMES:
            bad(key, f"unknown mesh map {cfg[key]!r}")
    if cfg.get("rho", "one") != "one":
        bad("rho", "only 'one' is supported")
    if isinstance(cfg.get("sigma"), dict) and not cfg["sigma"]["A"] > 0:
        bad("sigma", "A must be positive")
    if isinstance(cfg.get("sigma"), dict) and cfg["sigma"]["kappa"] < 1:
        bad("sigma", "kappa must be at least 1")
    for key in ("xi0", "eta0"):
        if key in cfg and not 0.0 <= cfg[key] <= 2 * PI:
            bad(key, f"must lie in [0, 2pi]; got {cfg[key]}")
    open_interval = kind == "simulate1d"
    for key in ("x0", "y0"):
        if key in cfg:
            v = cfg[key]
            ok = -1.0 < v < 1.0 if open_interval else -1.0 <= v <= 1.0
            if not ok:
                rng = "(-1, 1)" if open_interval else "[-1, 1]"
                bad(key, f"must lie in {rng}; got {v}")
    positive = {"T": "horizon", "dt_ray": "ray step", "gamma": "gamma", "window": "window"}
    for key, what in positive.items():
        if cfg.get(key) is not None and not cfg[key] > 0:
            bad(key, f"{what} must be positive; got {cfg[key]}")
    if "cfl" in cfg and not 0.0 < cfg["cfl"] <= 0.5:
        bad("cfl", f"must lie in (0, 0.5]; got {cfg['cfl']}")
    for key in ("n", "m", "stride", "snapshots"):
        if cfg.get(key) is not None and cfg[key] < 1:
            bad(key, f"must be at least 1; got {cfg[key]}")
    if "branch" in cfg and cfg["branch"] not in (1, -1):
        bad("branch", f"must be 1 or -1; got {cfg['branch']}")
    if cfg.get("solver", "spectral") not in ("spectral", "leapfrog"):
        bad("solver", f"must be 'spectral' or 'leapfrog'; got {cfg['solver']!r}")
    for i, (a, b) in enumerate(cfg.get("seeds", ())):
        if not 0.0 <= b <= 2 * PI:
            bad("seeds", f"seed {i} frequency {b} outside [0, 2pi]")
    return issues


def config_from_mapping(raw: dict, text: str = "", overrides: dict | None = None) -> ExperimentConfig:
    """Expand the preset, apply overrides, coerce types and validate."""
    issues = []
    raw = dict(raw)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key in raw:
        if key not in FIELD_NAMES:
            issues.append(ConfigIssue(_line_of(text, key), key, "unknown key"))
    merged = {}
    name = raw.get("preset")
    if name is not None:
        if name not in PRESETS:
            issues.append(ConfigIssue(_line_of(text, "preset"), "preset", f"unknown preset {name!r}"))
        else:
            merged.update(PRESETS[name].params)
    merged.update({k: v for k, v in raw.items() if k in FIELD_NAMES})
    if "kind" not in merged:
        issues.append(ConfigIssue(None, "kind", "missing required field"))
    cfg = {}
    for key, value in merged.items():
        v = _coerce(key, value, issues, _line_of(text, key))
        if v is not None:
            cfg[key] = v
    issues += _validate(cfg, text)
    if issues:
        raise ConfigError(issues)
    return ExperimentConfig(**cfg)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError([ConfigIssue(int(m.group(1)) if m else None, None, str(exc))]) from None
    return config_from_mapping(raw, text, overrides)


def serialize(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
