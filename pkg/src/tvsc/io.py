"""File formats.

Grid images
    ``name.csv``: one line per grid row, bottom row (smallest y) first.
    ``name.json`` sidecar: ``{"width", "height", "h", "min", "max", "origin"}``
    where ``min``/``max`` are the value range.
    ``name.pgm``: 8-bit binary P5, affinely quantised from ``[min, max]`` and
    flipped so that the top image row is the largest y.

Radial profiles
    CSV whose first line is ``# {"R": ..., "n": ..., "dim": ...}`` followed
    by ``r,value`` rows at cell centres.

Level sets
    PGM with values 0/255 plus JSON ``{"level", "energy", "area", "perimeter"}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import GridImage, LevelSet
from .radial import RadialProfile

__all__ = [
    "write_grid",
    "read_grid",
    "write_pgm",
    "read_pgm",
    "write_radial",
    "read_radial",
    "read_datum",
    "write_datum",
    "write_levelset",
    "rle_encode",
    "rle_decode",
    "sidecar_path",
]


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _sidecar(img: GridImage) -> dict:
    return {
        "width": img.width,
        "height": img.height,
        "h": img.h,
        "min": float(img.values.min()),
        "max": float(img.values.max()),
        "origin": list(img.origin),
    }


def write_grid(path, img: GridImage, sidecar: bool = True) -> Path:
    path = Path(path)
    np.savetxt(path, img.values, delimiter=",", fmt="%.17g")
    if sidecar:
        sidecar_path(path).write_text(json.dumps(_sidecar(img), indent=2))
    return path


def _meta(path):
    side = sidecar_path(path)
    if side.exists() and side != Path(path):
        return json.loads(side.read_text())
    return {}


def read_grid(path) -> GridImage:
    """Read a grid image from CSV or PGM, using the JSON sidecar when present."""
    path = Path(path)
    if _magic(path) == b"P5":
        return read_pgm(path)
    vals = np.loadtxt(path, delimiter=",", ndmin=2)
    meta = _meta(path)
    if meta and (meta.get("width"), meta.get("height")) != (vals.shape[1], vals.shape[0]):
        raise ValueError(f"{path}: sidecar size does not match the CSV")
    return GridImage(vals, meta.get("h", 1.0), tuple(meta.get("origin", (0.0, 0.0))))


def write_pgm(path, img: GridImage, vmin: float | None = None, vmax: float | None = None, sidecar: bool = True) -> Path:
    path = Path(path)
    v = img.values
    lo = float(v.min()) if vmin is None else vmin
    hi = float(v.max()) if vmax is None else vmax
    span = hi - lo if hi > lo else 1.0
    q = np.clip(np.rint((v - lo) / span * 255), 0, 255).astype(np.uint8)[::-1]
    with open(path, "wb") as f:
        f.write(f"P5\n{img.width} {img.height}\n255\n".encode())
        f.write(q.tobytes())
    if sidecar:
        meta = _sidecar(img)
        meta.update(min=lo, max=hi)
        sidecar_path(path).write_text(json.dumps(meta, indent=2))
    return path


def _tokens(data: bytes, count: int):
    out, pos = [], 0
    while len(out) < count:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        out.append(data[pos:end])
        pos = end
    return out, pos + 1


def read_pgm(path) -> GridImage:
    """Read a binary PGM; values are mapped back through the sidecar range if present."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _tokens(data, 4)
    if magic != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(w), int(h), int(maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)[::-1]
    meta = _meta(path)
    lo, hi = meta.get("min", 0.0), meta.get("max", 1.0)
    vals = lo + raw.astype(float) / maxval * (hi - lo)
    return GridImage(vals, meta.get("h", 1.0), tuple(meta.get("origin", (0.0, 0.0))))


def write_radial(path, prof: RadialProfile) -> Path:
    path = Path(path)
    header = json.dumps({"R": prof.R, "n": prof.n, "dim": prof.dim})
    with open(path, "w") as f:
        f.write(f"# {header}\n")
        np.savetxt(f, np.column_stack([prof.r, prof.values]), delimiter=",", fmt="%.17g")
    return path


def read_radial(path) -> RadialProfile:
    path = Path(path)
    with open(path) as f:
        first = f.readline()
    if not first.startswith("#"):
        raise ValueError(f"{path}: radial CSV needs a JSON header line")
    meta = json.loads(first[1:])
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[0] != meta["n"]:
        raise ValueError(f"{path}: header says n={meta['n']} but found {data.shape[0]} rows")
    return RadialProfile(data[:, 1], meta["R"], meta.get("dim", 2))


def _magic(path) -> bytes:
    with open(path, "rb") as f:
        return f.read(2)


def read_datum(path):
    """Read a grid image (CSV/PGM) or a radial profile, detected from the content."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    head = _magic(path)
    if head == b"P5":
        return read_pgm(path)
    if head.startswith(b"#"):
        return read_radial(path)
    return read_grid(path)


def write_datum(path, obj) -> Path:
    if isinstance(obj, RadialProfile):
        return write_radial(path, obj)
    if Path(path).suffix == ".pgm":
        return write_pgm(path, obj)
    return write_grid(path, obj)


def write_levelset(path, ls: LevelSet, sidecar: bool = True) -> Path:
    path = Path(path)
    m = np.asarray(ls.mask, dtype=bool)
    with open(path, "wb") as f:
        f.write(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode())
        f.write((m[::-1] * np.uint8(255)).astype(np.uint8).tobytes())
    if sidecar:
        meta = {"level": ls.level, "energy": ls.energy, "area": ls.area, "perimeter": ls.perimeter, "h": ls.h}
        sidecar_path(path).write_text(json.dumps(meta, indent=2))
    return path


def rle_encode(mask) -> list[list[int]]:
    """Row-major runs ``[start, length]`` of true cells."""
    flat = np.asarray(mask, dtype=bool).ravel()
    padded = np.concatenate([[False], flat, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [[int(a), int(b - a)] for a, b in zip(edges[::2], edges[1::2])]


def rle_decode(runs, shape) -> np.ndarray:
    flat = np.zeros(int(np.prod(shape)), dtype=bool)
    for start, length in runs:
        flat[start : start + length] = True
    return flat.reshape(shape)
