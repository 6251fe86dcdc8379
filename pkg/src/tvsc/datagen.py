"""Synthetic test data: indicator functions, ramps, bumps and noisy variants.

Grid data live on the square ``[-extent, extent]^2`` (or a centred rectangle
when ``shape`` and ``h`` are given) and are rasterised by pixel-centre
membership, with no antialiasing. Radial data live on ``(0, extent]``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import GridImage
from .radial import RadialProfile

__all__ = ["DatumSpec", "GeometryOutOfDomain", "generate", "gaussian_noise", "KINDS"]

KINDS = ("disc", "two_squares", "convex_polygon", "radial_profile", "ramp", "bumps", "noisy")


class GeometryOutOfDomain(ValueError):
    """The requested shape does not fit inside the sampling domain."""


@dataclass
class DatumSpec:
    """Recipe for one datum.

    ``params`` holds kind-specific geometry:

    - disc: ``center`` (x, y), ``radius``, ``amplitude``
    - two_squares: ``amplitude``; the squares are ``[0,1]x[-1,0]`` and ``[-1,0]x[0,1]``
    - convex_polygon: ``vertices`` in counter-clockwise order
    - radial_profile: ``radii`` (breakpoints) and ``levels`` (one more than
      radii); random when omitted, drawn from ``seed``
    - ramp: none (grid ramps run from 0 to 1 along x; radial ramp is ``1 - r/R``)
    - bumps: ``centers`` (grid points or radii), ``width``, ``heights``
    - noisy: ``base`` (another kind) plus ``base_params``; noise std is ``sigma``
    """

    kind: str
    n: int = 256
    extent: float = 2.0
    radial: bool = False
    dim: int = 2
    seed: int = 0
    sigma: float = 0.0
    shape: tuple[int, int] | None = None
    h: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown datum kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.n < 1 or not self.extent > 0:
            raise ValueError("n must be >= 1 and extent positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.kind in ("two_squares", "convex_polygon") and self.radial:
            raise ValueError(f"{self.kind} has no radial form")
        if self.kind == "radial_profile" and not self.radial:
            raise ValueError("radial_profile needs radial=True")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> DatumSpec:
        d = dict(d)
        if d.get("shape") is not None:
            d["shape"] = tuple(d["shape"])
        return cls(**d)


def gaussian_noise(shape, sigma: float, seed: int) -> np.ndarray:
    """Deterministic N(0, sigma^2) samples from a counter-based generator."""
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u = np.random.Generator(np.random.Philox(seed)).random((2, pairs))
    rad = np.sqrt(-2.0 * np.log1p(-u[0]))  # 1 - u > 0
    ang = 2.0 * np.pi * u[1]
    z = np.concatenate([rad * np.cos(ang), rad * np.sin(ang)])[:count]
    return sigma * z.reshape(shape)


def _grid(spec: DatumSpec):
    if spec.shape is not None:
        ny, nx = spec.shape
        h = spec.h if spec.h is not None else 2 * spec.extent / nx
    else:
        ny = nx = spec.n
        h = spec.h if spec.h is not None else 2 * spec.extent / spec.n
    x0, y0 = -nx * h / 2, -ny * h / 2
    x = x0 + (np.arange(nx) + 0.5) * h
    y = y0 + (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(x, y)
    return X, Y, h, (x0, y0), (x0, x0 + nx * h, y0, y0 + ny * h)


def _inside(box, xmin, xmax, ymin, ymax):
    bx0, bx1, by0, by1 = box
    if xmin < bx0 - 1e-12 or xmax > bx1 + 1e-12 or ymin < by0 - 1e-12 or ymax > by1 + 1e-12:
        raise GeometryOutOfDomain(
            f"shape [{xmin}, {xmax}] x [{ymin}, {ymax}] leaves the domain [{bx0}, {bx1}] x [{by0}, {by1}]"
        )


def _grid_values(kind, p, X, Y, box, rng_seed):
    if kind == "disc":
        cx, cy = p.get("center", (0.0, 0.0))
        r = float(p.get("radius", 1.0))
        _inside(box, cx - r, cx + r, cy - r, cy + r)
        return p.get("amplitude", 1.0) * ((X - cx) ** 2 + (Y - cy) ** 2 < r * r)
    if kind == "two_squares":
        _inside(box, -1, 1, -1, 1)
        a = (X > 0) & (X < 1) & (Y > -1) & (Y < 0)
        b = (X > -1) & (X < 0) & (Y > 0) & (Y < 1)
        return p.get("amplitude", 1.0) * (a | b)
    if kind == "convex_polygon":
        v = np.asarray(p.get("vertices", [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]), dtype=float)
        _inside(box, v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())
        m = np.ones(X.shape, dtype=bool)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            m &= (b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0]) > 0
        return p.get("amplitude", 1.0) * m
    if kind == "ramp":
        x0, x1 = box[0], box[1]
        return (X - x0) / (x1 - x0)
    if kind == "bumps":
        centers = np.asarray(p.get("centers", [(-0.8, 0.0), (0.8, 0.0)]), dtype=float)
        w = float(p.get("width", 0.3))
        heights = p.get("heights", [1.0] * len(centers))
        out = np.zeros(X.shape)
        for (cx, cy), a in zip(centers, heights):
            out += a * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * w * w))
        return out
    raise ValueError(f"{kind} has no grid form")


def _radial_values(kind, p, r, R, seed):
    if kind == "disc":
        rad = float(p.get("radius", 1.0))
        if rad > R:
            raise GeometryOutOfDomain(f"disc radius {rad} exceeds R = {R}")
        return p.get("amplitude", 1.0) * (r < rad)
    if kind == "ramp":
        return 1.0 - r / R
    if kind == "bumps":
        centers = np.asarray(p.get("centers", [0.0, 0.6 * R]), dtype=float)
        w = float(p.get("width", 0.1 * R))
        heights = p.get("heights", [1.0] * len(centers))
        return sum(a * np.exp(-((r - c) ** 2) / (2 * w * w)) for c, a in zip(centers, heights))
    if kind == "radial_profile":
        radii = p.get("radii")
        levels = p.get("levels")
        if radii is None:
            gen = np.random.Generator(np.random.Philox(seed))
            k = int(p.get("pieces", 6))
            radii = np.sort(gen.uniform(0, R, k - 1)).tolist()
            levels = gen.uniform(0, 1, k).tolist()
        radii = np.asarray(radii, dtype=float)
        if len(levels) != radii.size + 1:
            raise ValueError("radial_profile needs one more level than breakpoints")
        if radii.size and (radii.max() > R or radii.min() < 0):
            raise GeometryOutOfDomain("breakpoints must lie in [0, R]")
        return np.asarray(levels, dtype=float)[np.searchsorted(radii, r, side="right")]
    raise ValueError(f"{kind} has no radial form")


def generate(spec: DatumSpec):
    """Build the datum described by ``spec``.

    Returns a :class:`GridImage` or, for ``radial=True``, a
    :class:`RadialProfile`. Raises :class:`GeometryOutOfDomain` when the
    geometry does not fit.
    """
    kind, p = spec.kind, dict(spec.params)
    sigma = spec.sigma
    if kind == "noisy":
        kind = p.pop("base", "disc")
        p = dict(p.pop("base_params", {}), **p)
        if kind == "noisy":
            raise ValueError("noisy datum needs a non-noisy base")
    if spec.radial:
        R = spec.extent
        r = (np.arange(spec.n) + 0.5) * R / spec.n
        v = np.asarray(_radial_values(kind, p, r, R, spec.seed), dtype=float)
        if sigma:
            v = v + gaussian_noise(v.shape, sigma, spec.seed)
        return RadialProfile(v, R, spec.dim)
    X, Y, h, origin, box = _grid(spec)
    v = np.asarray(_grid_values(kind, p, X, Y, box, spec.seed), dtype=float)
    if sigma:
        v = v + gaussian_noise(v.shape, sigma, spec.seed)
    return GridImage(v, h, origin)
