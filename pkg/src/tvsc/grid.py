"""Uniform 2-D grids, Neumann difference operators and total variation.

Conventions
-----------
Arrays are indexed ``values[i, j]`` with ``i`` the row (y axis, increasing
upward) and ``j`` the column (x axis). Pixel ``(i, j)`` is centred at
``(x0 + (j + 1/2) h, y0 + (i + 1/2) h)``.

The gradient uses forward differences divided by ``h`` with a zero last
difference in each direction (Neumann closure). ``divergence`` is the exact
negative adjoint of ``gradient`` for the plain pixel inner product, so that
``<gradient(u), p> = -<u, divergence(p)>`` holds to rounding.

Total variations are measured in continuum units: a jump of height one across
a pixel edge of length ``h`` contributes ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridImage",
    "DualField",
    "LevelSet",
    "gradient",
    "divergence",
    "tv_iso",
    "tv_aniso",
    "perimeter_aniso",
    "boundary_edges",
]


@dataclass(frozen=True, eq=False)
class GridImage:
    """Scalar field sampled at the pixel centres of a uniform grid."""

    values: np.ndarray
    h: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"GridImage needs a non-empty 2-D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("GridImage values must be finite")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def area(self) -> float:
        return self.values.size * self.cell_area

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-centre coordinates ``(X, Y)`` as 2-D arrays."""
        x = self.origin[0] + (np.arange(self.width) + 0.5) * self.h
        y = self.origin[1] + (np.arange(self.height) + 0.5) * self.h
        return np.meshgrid(x, y)

    def like(self, values) -> GridImage:
        """A new image on the same grid."""
        return GridImage(values, self.h, self.origin)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.cell_area))


@dataclass(frozen=True, eq=False)
class DualField:
    """Vector field on the pixel grid with a pointwise bound.

    ``norm`` selects how the bound is measured: ``"iso"`` for the Euclidean
    norm of ``(x, y)``, ``"aniso"`` for the max of the absolute components.
    """

    x: np.ndarray
    y: np.ndarray
    bound: float
    h: float = 1.0
    norm: str = "iso"

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ValueError("dual field components must share a grid")
        if self.bound < 0:
            raise ValueError("dual bound must be non-negative")
        if self.norm not in ("iso", "aniso"):
            raise ValueError(f"unknown norm {self.norm!r}")

    def magnitude(self) -> np.ndarray:
        if self.norm == "iso":
            return np.hypot(self.x, self.y)
        return np.maximum(np.abs(self.x), np.abs(self.y))

    def max_norm(self) -> float:
        return float(self.magnitude().max()) if self.x.size else 0.0

    def is_feasible(self, rtol: float = 1e-9) -> bool:
        return self.max_norm() <= self.bound * (1 + rtol) + 1e-300

    @classmethod
    def zeros(cls, shape, bound, h=1.0, norm="iso") -> DualField:
        return cls(np.zeros(shape), np.zeros(shape), bound, h, norm)


@dataclass(eq=False)
class LevelSet:
    """Binary mask on a grid, typically a superlevel set ``{u > level}``."""

    mask: np.ndarray
    level: float = 0.0
    h: float = 1.0
    energy: float | None = field(default=None)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)

    @cached_property
    def perimeter(self) -> float:
        return perimeter_aniso(self.mask, self.h)

    @property
    def area(self) -> float:
        return float(self.mask.sum()) * self.h * self.h

    def __contains__(self, other: LevelSet) -> bool:
        return bool(np.all(self.mask | ~other.mask))


def _values(u) -> tuple[np.ndarray, float]:
    if isinstance(u, GridImage):
        return u.values, u.h
    return np.asarray(u, dtype=float), 1.0


def grad_arrays(u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = (u[:, 1:] - u[:, :-1]) / h
    gy[:-1, :] = (u[1:, :] - u[:-1, :]) / h
    return gx, gy


def div_arrays(px: np.ndarray, py: np.ndarray, h: float) -> np.ndarray:
    # negative adjoint of grad_arrays; the last column of px and last row of py
    # carry no flux (zero normal component on the boundary)
    d = np.zeros_like(px)
    if px.shape[1] > 1:
        d[:, :-1] += px[:, :-1]
        d[:, 1:] -= px[:, :-1]
    if py.shape[0] > 1:
        d[:-1, :] += py[:-1, :]
        d[1:, :] -= py[:-1, :]
    return d / h


def gradient(u) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference gradient ``(d/dx, d/dy)`` with Neumann closure."""
    v, h = _values(u)
    return grad_arrays(v, h)


def divergence(p: DualField) -> GridImage:
    """Discrete divergence, the negative adjoint of :func:`gradient`."""
    return GridImage(div_arrays(p.x, p.y, p.h), p.h)


def _diffs(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = np.zeros_like(v)
    dy = np.zeros_like(v)
    dx[:, :-1] = v[:, 1:] - v[:, :-1]
    dy[:-1, :] = v[1:, :] - v[:-1, :]
    return dx, dy


def tv_iso(u) -> float:
    """Isotropic total variation ``h * sum(sqrt(dx^2 + dy^2))``."""
    v, h = _values(u)
    dx, dy = _diffs(v)
    return float(h * np.sum(np.hypot(dx, dy)))


def tv_aniso(u) -> float:
    """Anisotropic total variation ``h * sum(|dx| + |dy|)``."""
    v, h = _values(u)
    dx, dy = _diffs(v)
    return float(h * (np.abs(dx).sum() + np.abs(dy).sum()))


def boundary_edges(mask: np.ndarray) -> int:
    """Number of 4-neighbour pixel pairs split by ``mask``."""
    m = np.asarray(mask, dtype=bool)
    return int(np.count_nonzero(m[:, 1:] != m[:, :-1]) + np.count_nonzero(m[1:, :] != m[:-1, :]))


def perimeter_aniso(mask: np.ndarray, h: float = 1.0) -> float:
    """Perimeter of ``mask`` relative to the grid: split edges times ``h``."""
    return boundary_edges(mask) * float(h)
