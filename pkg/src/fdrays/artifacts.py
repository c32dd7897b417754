"""CSV, PGM and manifest writers shared by the CLI and the scripts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


class ArtifactWriter:
    """Writes files under one directory and remembers each of them for the manifest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.files:
            self.files.append(name)
        return p

    def csv(self, name: str, header, rows) -> Path:
        p = self._path(name)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return p

    def columns(self, name: str, header, *cols) -> Path:
        return self.csv(name, header, zip(*cols))

    def pgm(self, name: str, field: np.ndarray, max_side: int = 512) -> Path:
        p = self._path(name)
        write_pgm(p, downsample_max(np.asarray(field, dtype=float), max_side))
        return p

    def manifest(self, **info) -> Path:
        p = self.root / "manifest.json"
        body = dict(info)
        body["files"] = list(self.files)
        p.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")
        return p


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def downsample_max(a: np.ndarray, max_side: int = 512) -> np.ndarray:
    """Max-pool a 2D array so that neither side exceeds ``max_side``."""
    rows, cols = a.shape
    fr = -(-rows // max_side)
    fc = -(-cols // max_side)
    if fr == 1 and fc == 1:
        return a
    pr, pc = -rows % fr, -cols % fc
    padded = np.pad(a, ((0, pr), (0, pc)), constant_values=-np.inf)
    return padded.reshape(padded.shape[0] // fr, fr, padded.shape[1] // fc, fc).max(axis=(1, 3))


def to_gray(a: np.ndarray, vmax: float | None = None) -> np.ndarray:
    top = float(np.max(a)) if vmax is None else float(vmax)
    if not top > 0:
        return np.zeros(a.shape, dtype=np.uint8)
    return np.clip(np.rint(255.0 * a / top), 0, 255).astype(np.uint8)


def write_pgm(path: str | Path, a: np.ndarray, vmax: float | None = None) -> None:
    """Binary 8-bit PGM; row 0 is the top of the image."""
    img = to_gray(a, vmax)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read back a PGM written by :func:`write_pgm` (one header field per line)."""
    data = Path(path).read_bytes()
    magic, dims, depth, body = data.split(b"\n", 3)
    if magic != b"P5" or depth != b"255":
        raise ValueError(f"{path} is not an 8-bit binary PGM")
    w, h = map(int, dims.split())
    return np.frombuffer(body[: w * h], dtype=np.uint8).reshape(h, w)


def dump_nodes(path: str | Path, nodes: np.ndarray) -> None:
    """Single-column CSV of node coordinates."""
    with open(path, "w") as fh:
        fh.write("x\n")
        for v in nodes:
            fh.write(FLOAT_FMT % v + "\n")
