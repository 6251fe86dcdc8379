"""Flat zones, jumps and extinction thresholds of ROF minimisers.

Works on both 2-D grids and radial profiles. A cell is flat when its
forward-difference gradient magnitude is at most ``flat_tol``; flat zones are
4-connected components of flat cells (runs of cells for radial profiles).
Areas of radial zones are volumes of the corresponding shells in ``R^N``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.special import gamma

from .grid import GridImage, grad_arrays
from .radial import RadialProfile, RadialSolution, solve_radial_dual
from .rof import NonConvergence, SolverConfig, SolveResult, solve_rof

__all__ = [
    "FlatZone",
    "JumpSet",
    "StaircaseReport",
    "RangeExhausted",
    "analyze",
    "quantitative_bound_check",
    "extreme_level_bound_check",
    "find_lambda_star",
    "lambda_star_homogeneity",
    "crofton_perimeter",
    "cheeger_probe",
    "monotonicity_check",
    "staircase_set",
    "jump_set",
    "jump_inclusion_check",
    "local_extrema_flatness",
    "solve",
]

log = logging.getLogger(__name__)


class RangeExhausted(RuntimeError):
    """The minimiser is still non-constant at the top of the search range."""


@dataclass
class FlatZone:
    value: float
    area: float
    cells: int


@dataclass
class JumpSet:
    """Discontinuities above ``jump_tol``.

    Radial profiles: ``radii`` of faces and their ``magnitudes``. Grids:
    ``edges`` as ``(i, j, axis)`` rows, the edge between ``(i, j)`` and its
    right (axis 1) or upper (axis 0) neighbour.
    """

    magnitudes: np.ndarray
    jump_tol: float
    radii: np.ndarray | None = None
    edges: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.magnitudes.size)


@dataclass
class StaircaseReport:
    lam: float
    dim: int
    flat_zones: list[FlatZone]
    flat_area: float
    m_g: float
    m_u: float
    min_g: float
    min_u: float
    bound_value: float
    top_area: float
    bottom_area: float
    jumps: JumpSet
    flat_tol: float
    cell_size: float
    labels: np.ndarray = field(repr=False, default=None)
    checks: dict = field(default_factory=dict)
    top_on_boundary: bool = False
    bottom_on_boundary: bool = False

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _values(obj):
    if isinstance(obj, (SolveResult, RadialSolution)):
        return obj.u
    return obj


def _defaults(g, flat_tol, jump_tol):
    osc = float(np.ptp(g.values))
    cell = g.h if isinstance(g, GridImage) else g.dr
    if flat_tol is None:
        flat_tol = 1e-4 * osc / cell
    if jump_tol is None:
        jump_tol = 0.05 * osc
    return osc, cell, flat_tol, jump_tol


def _flat_mask(u, flat_tol):
    if isinstance(u, GridImage):
        gx, gy = grad_arrays(u.values, u.h)
        return np.hypot(gx, gy) <= flat_tol
    d = np.zeros(u.n)
    d[:-1] = np.abs(np.diff(u.values)) / u.dr
    return d <= flat_tol


def _measure(u):
    if isinstance(u, GridImage):
        return np.full(u.shape, u.cell_area)
    return u.cell_measures


def jump_set(u, jump_tol: float) -> JumpSet:
    """Edges (grid) or faces (radial) across which ``u`` changes by more than ``jump_tol``."""
    u = _values(u)
    if isinstance(u, RadialProfile):
        d = np.diff(u.values)
        idx = np.nonzero(np.abs(d) > jump_tol)[0]
        return JumpSet(np.abs(d[idx]), jump_tol, radii=u.faces[idx + 1])
    v = u.values
    dx = v[:, 1:] - v[:, :-1]
    dy = v[1:, :] - v[:-1, :]
    ex = np.argwhere(np.abs(dx) > jump_tol)
    ey = np.argwhere(np.abs(dy) > jump_tol)
    edges = np.vstack([np.column_stack([ex, np.ones(len(ex), int)]), np.column_stack([ey, np.zeros(len(ey), int)])])
    mags = np.concatenate([np.abs(dx[tuple(ex.T)]), np.abs(dy[tuple(ey.T)])])
    return JumpSet(mags, jump_tol, edges=edges.astype(int))


def analyze(g, result, lam: float, flat_tol: float | None = None, jump_tol: float | None = None, clip_tol: float | None = None) -> StaircaseReport:
    """Flat zones, extreme values and jumps of a minimiser.

    ``result`` is a solver result or the minimiser itself. The returned
    report carries boolean ``checks``: the top zone has positive area, and
    for non-constant data ``min g < min u <= max u < max g`` (strict up to
    ``clip_tol``, default ``1e-9 * osc``).
    """
    u = _values(result)
    if type(u) is not type(g) or u.values.shape != g.values.shape:
        raise ValueError("datum and minimiser must live on the same grid")
    osc, cell, flat_tol, jump_tol = _defaults(g, flat_tol, jump_tol)
    if clip_tol is None:
        clip_tol = 1e-9 * osc
    dim = 2 if isinstance(g, GridImage) else g.dim
    flat = _flat_mask(u, flat_tol)
    meas = _measure(u)
    if isinstance(u, GridImage):
        labels, count = ndimage.label(flat)
    else:
        labels, count = ndimage.label(flat[None, :])
        labels = labels[0]
    zones = []
    if count:
        idx = np.arange(1, count + 1)
        areas = ndimage.sum(meas, labels, idx)
        sizes = ndimage.sum(np.ones_like(meas), labels, idx)
        vals = ndimage.mean(u.values, labels, idx)
        zones = [FlatZone(float(v), float(a), int(c)) for v, a, c in zip(vals, areas, sizes)]
    m_g, min_g = float(g.values.max()), float(g.values.min())
    m_u, min_u = float(u.values.max()), float(u.values.min())
    band = flat_tol * cell
    top = u.values >= m_u - band
    bottom = u.values <= min_u + band
    rep = StaircaseReport(
        lam=float(lam),
        dim=dim,
        flat_zones=zones,
        flat_area=float(meas[flat].sum()),
        m_g=m_g,
        m_u=m_u,
        min_g=min_g,
        min_u=min_u,
        bound_value=2 * (lam / osc) ** dim if osc > 0 else 0.0,
        top_area=float(meas[top].sum()),
        bottom_area=float(meas[bottom].sum()),
        jumps=jump_set(u, jump_tol),
        flat_tol=flat_tol,
        cell_size=cell,
        labels=labels,
        top_on_boundary=_touches_boundary(top),
        bottom_on_boundary=_touches_boundary(bottom),
    )
    rep.checks["top_zone_positive"] = rep.top_area > 0
    if osc > 0 and lam > 0:
        rep.checks["strict_clipping"] = min_g < min_u - clip_tol and min_u <= m_u and m_u < m_g - clip_tol
    return rep


def _touches_boundary(mask) -> bool:
    if mask.ndim == 1:
        return bool(mask[-1])  # r = 0 is interior
    return bool(mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())


def quantitative_bound_check(rep: StaircaseReport, N: int | None = None, slack: float = 4.0) -> bool:
    """``flat_area >= 2 (lam / osc g)^N (1 - slack * h)``."""
    N = rep.dim if N is None else N
    osc = rep.m_g - rep.min_g
    if osc <= 0:
        return True
    bound = 2 * (rep.lam / osc) ** N
    return rep.flat_area >= bound * (1 - slack * rep.cell_size)


def extreme_level_bound_check(rep: StaircaseReport, slack: float = 4.0) -> bool:
    """Top and bottom zones: ``area >= (lam / (m_g - m_u))^N (1 - slack * h)`` and the mirror.

    The estimate relies on the isoperimetric inequality in the whole space,
    so zones touching the domain boundary are skipped.
    """
    c = 1 - slack * rep.cell_size
    ok = True
    if rep.m_g > rep.m_u and not rep.top_on_boundary:
        ok &= rep.top_area >= (rep.lam / (rep.m_g - rep.m_u)) ** rep.dim * c
    if rep.min_u > rep.min_g and not rep.bottom_on_boundary:
        ok &= rep.bottom_area >= (rep.lam / (rep.min_u - rep.min_g)) ** rep.dim * c
    return bool(ok)


def solve(g, lam: float, tol: float = 1e-6, tv_kind: str = "isotropic", max_iters: int = 50000, z0=None):
    """Minimiser for either kind of datum; grid solves that hit the budget return their last iterate."""
    if isinstance(g, RadialProfile):
        return solve_radial_dual(g, lam, tol=min(tol, 1e-10)).u
    cfg = SolverConfig(lam, tol=tol, tv_kind=tv_kind, max_iters=max_iters)
    try:
        return solve_rof(g, cfg, z0=z0).u
    except NonConvergence as exc:
        log.warning("solve at lam=%g stopped early: %s", lam, exc)
        return exc.result.u


def _is_constant(g, u, flat_tol):
    return bool(_flat_mask(u, flat_tol).all())


class _Bisector:
    """Constant-minimiser test that warm-starts grid solves from the nearest solved weight."""

    def __init__(self, g, flat_tol, solver_tol, tv_kind):
        self.g, self.flat_tol, self.tol, self.kind = g, flat_tol, solver_tol, tv_kind
        self.duals = {}

    def __call__(self, lam: float) -> bool:
        g = self.g
        if isinstance(g, RadialProfile):
            return _is_constant(g, solve(g, lam, self.tol), self.flat_tol)
        z0 = self.duals[min(self.duals, key=lambda k: abs(k - lam))] if self.duals else None
        cfg = SolverConfig(lam, tol=self.tol, tv_kind=self.kind, max_iters=50000)
        try:
            res = solve_rof(g, cfg, z0=z0)
        except NonConvergence as exc:
            log.warning("solve at lam=%g stopped early: %s", lam, exc)
            res = exc.result
        self.duals[lam] = res.z
        return _is_constant(g, res.u, self.flat_tol)


def find_lambda_star(
    g,
    lo: float = 0.0,
    hi: float | None = None,
    tol: float = 1e-3,
    flat_tol: float | None = None,
    solver_tol: float = 1e-6,
    tv_kind: str = "isotropic",
) -> float:
    """Smallest weight at which the minimiser is constant, by bisection.

    ``hi`` defaults to an upper bound from the datum's L2 norm and grows by
    doubling (at most 8 times) if needed. Raises :class:`RangeExhausted`
    when the minimiser is still non-constant at the final ``hi``.
    """
    osc, cell, flat_tol, _ = _defaults(g, flat_tol, None)
    if osc == 0:
        return 0.0
    constant = _Bisector(g, flat_tol, solver_tol, tv_kind)
    auto = hi is None
    if auto:
        meas = _measure(g)
        hi = max(float(np.sqrt(np.sum((g.values - np.sum(g.values * meas) / meas.sum()) ** 2 * meas))), 4 * tol)
    for _ in range(9 if auto else 1):
        if constant(hi):
            break
        if not auto:
            raise RangeExhausted(f"minimiser not constant at lambda = {hi}")
        lo, hi = hi, 2 * hi
    else:
        raise RangeExhausted(f"minimiser not constant at lambda = {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if constant(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lambda_star_homogeneity(g, alpha: float = 2.0, tol: float = 1e-3, **kw) -> tuple[float, float, bool]:
    """``find_lambda_star(alpha g)`` against ``alpha find_lambda_star(g)`` (within ``2 alpha tol``)."""
    a = find_lambda_star(g, tol=tol, **kw)
    b = find_lambda_star(g.like(alpha * g.values), tol=alpha * tol, **kw)
    return a, b, abs(b - alpha * a) <= 2 * alpha * tol


def crofton_perimeter(mask: np.ndarray, h: float = 1.0) -> float:
    """Cauchy-Crofton perimeter estimate from crossings along four line directions.

    Exact for discs in the limit of fine grids, unlike the 4-neighbour count
    which overestimates round boundaries by a factor ``4 / pi``.
    """
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    n0 = np.count_nonzero(m[:, 1:] != m[:, :-1])
    n90 = np.count_nonzero(m[1:, :] != m[:-1, :])
    n45 = np.count_nonzero(m[1:, 1:] != m[:-1, :-1])
    n135 = np.count_nonzero(m[1:, :-1] != m[:-1, 1:])
    return float(np.pi / 8 * h * (n0 + n90 + (n45 + n135) / np.sqrt(2)))


@dataclass
class CheegerReport:
    lams: list[float]
    masks: list[np.ndarray] = field(repr=False, default_factory=list)
    ratios: list[float] = field(default_factory=list)
    top_values: list[float] = field(default_factory=list)
    max_symdiff: float = 0.0
    symdiff_slack: float = 0.0

    @property
    def ratio(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def radius(self) -> float:
        """Radius of the free boundary arcs, ``1 / ratio``."""
        return 1.0 / self.ratio

    @property
    def stable(self) -> bool:
        return self.max_symdiff <= self.symdiff_slack


def staircase_set(u: GridImage, flat_tol: float | None = None) -> np.ndarray:
    """Top zone ``{u >= max u - flat_tol h}``."""
    u = _values(u)
    osc = float(np.ptp(u.values)) or 1.0
    cell = u.h if isinstance(u, GridImage) else u.dr
    if flat_tol is None:
        flat_tol = 1e-4 * osc / cell
    return u.values >= u.values.max() - flat_tol * cell


def cheeger_probe(g: GridImage, lams=(0.1, 0.2), slack: float = 3.0, tol: float = 1e-6) -> CheegerReport:
    """Top zones of the minimisers for several small weights.

    For ``g`` the indicator of a convex set these approximate its Cheeger
    set; the report gives perimeter/area (Crofton perimeter) and the largest
    pairwise symmetric-difference area, to be compared with
    ``slack * h * perimeter``.
    """
    osc = float(np.ptp(g.values)) or 1.0
    rep = CheegerReport(list(lams))
    for lam in lams:
        u = solve(g, lam, tol)
        mask = staircase_set(u, 1e-4 * osc / g.h)
        rep.masks.append(mask)
        rep.top_values.append(float(u.values.max()))
        area = mask.sum() * g.cell_area
        rep.ratios.append(crofton_perimeter(mask, g.h) / area if area else np.inf)
    diffs = [np.count_nonzero(a ^ b) * g.cell_area for i, a in enumerate(rep.masks) for b in rep.masks[i + 1:]]
    rep.max_symdiff = max(diffs, default=0.0)
    rep.symdiff_slack = slack * g.h * crofton_perimeter(rep.masks[0], g.h)
    return rep


@dataclass
class MonotonicityReport:
    lams: list[float]
    radial: bool
    nested: bool
    violations: list[float]  # per consecutive pair: faces (radial) or area (grid)
    details: dict = field(default_factory=dict)


def _grid_nonnested(small: np.ndarray, large: np.ndarray, h: float, band: int = 1) -> tuple[float, int]:
    """Area of ``small \\ large`` with ``large`` grown by ``band`` cells."""
    grown = ndimage.binary_dilation(large, iterations=band) if band else large
    extra = small & ~grown
    return float(extra.sum() * h * h), int(extra.sum())


def monotonicity_check(g, lams, sat_tol: float = 1e-3, band: int = 1, tol: float = 1e-6, slack: float = 0.0) -> MonotonicityReport:
    """Nesting of staircase sets along increasing weights.

    Radial data: the dual-slack sets ``{|z_lam| < lam (1 - sat_tol)}`` must be
    contained in ``{|z_mu| < mu - sat_tol lam}`` for every ``lam < mu``.
    Grid data: reports ``area(S_lam \\ S_mu)`` for consecutive weights, with
    ``S`` the top zone and a ``band``-cell tolerance; ``nested`` is true when
    every such area is at most ``slack``.
    """
    lams = sorted(float(v) for v in lams)
    if isinstance(g, RadialProfile):
        sols = [solve_radial_dual(g, v, tol=1e-12) for v in lams]
        viol = []
        for i in range(len(lams)):
            for j in range(i + 1, len(lams)):
                a, b = sols[i].z, sols[j].z
                inner = np.abs(a.values) < lams[i] * (1 - sat_tol)
                outer = np.abs(b.values) < lams[j] - sat_tol * lams[i]
                viol.append(float(np.count_nonzero(inner & ~outer)))
        return MonotonicityReport(lams, True, all(v == 0 for v in viol), viol)
    sets = [staircase_set(solve(g, v, tol)) for v in lams]
    viol, counts = [], []
    for a, b in zip(sets, sets[1:]):
        area, cnt = _grid_nonnested(a, b, g.h, band)
        viol.append(area)
        counts.append(cnt)
    return MonotonicityReport(lams, False, all(v <= slack for v in viol), viol, {"cells": counts, "sets": sets})


@dataclass
class JumpInclusionReport:
    lam: float
    mu: float
    jumps_g: np.ndarray
    jumps_lam: np.ndarray
    jumps_mu: np.ndarray
    ok: bool


def _within(a: np.ndarray, b: np.ndarray, dist: float) -> bool:
    if a.size == 0:
        return True
    if b.size == 0:
        return False
    return bool(np.all(np.min(np.abs(a[:, None] - b[None, :]), axis=1) <= dist + 1e-12))


def jump_inclusion_check(g: RadialProfile, lam: float, mu: float, jump_tol: float | None = None) -> JumpInclusionReport:
    """Jumps of ``u_mu`` within one cell of jumps of ``u_lam``, and those within one cell of jumps of ``g``."""
    if not lam < mu:
        raise ValueError("need lam < mu")
    _, cell, _, jump_tol = _defaults(g, None, jump_tol)
    ju = jump_set(g, jump_tol).radii
    jl = jump_set(solve_radial_dual(g, lam).u, jump_tol).radii
    jm = jump_set(solve_radial_dual(g, mu).u, jump_tol).radii
    ok = _within(jm, jl, cell) and _within(jl, ju, cell)
    return JumpInclusionReport(lam, mu, ju, jl, jm, ok)


@dataclass
class ExtremaReport:
    extrema: int
    failures: int
    floor_area: float

    @property
    def ok(self) -> bool:
        return self.failures == 0


def local_extrema_flatness(result, rho: int = 3, density_floor: float | None = None, flat_tol: float | None = None) -> ExtremaReport:
    """Every local extremum over a radius-``rho`` neighbourhood sits in a large flat zone.

    The zone (of the cell or a neighbour at equal value) must have area at
    least ``density_floor * |B(rho cells)|``; ``density_floor`` defaults to
    ``2^-N``.
    """
    u = _values(result)
    osc = float(np.ptp(u.values))
    if osc == 0:
        return ExtremaReport(0, 0, 0.0)
    grid = isinstance(u, GridImage)
    N = 2 if grid else u.dim
    cell = u.h if grid else u.dr
    if flat_tol is None:
        flat_tol = 1e-4 * osc / cell
    if density_floor is None:
        density_floor = 2.0**-N
    band = flat_tol * cell
    v = u.values
    flat = _flat_mask(u, flat_tol)
    meas = _measure(u)
    if grid:
        yy, xx = np.mgrid[-rho : rho + 1, -rho : rho + 1]
        foot = xx**2 + yy**2 <= rho * rho
        labels, count = ndimage.label(flat)
        ball = np.pi * (rho * cell) ** 2
    else:
        foot = np.ones(2 * rho + 1, bool)
        labels, count = ndimage.label(flat[None, :])
        labels = labels[0]
        ball = np.pi ** (N / 2) / gamma(N / 2 + 1) * (rho * cell) ** N
    mx = ndimage.maximum_filter(v, footprint=foot, mode="nearest")
    mn = ndimage.minimum_filter(v, footprint=foot, mode="nearest")
    # only genuine extrema: the neighbourhood is not itself flat
    spread = mx - mn > band
    ext = ((v >= mx - band) | (v <= mn + band)) & spread
    zone_area = ndimage.sum(meas, labels, np.arange(count + 1)) if count else np.zeros(1)
    zone_area[0] = 0.0
    floor = density_floor * ball
    fails = 0
    for idx in zip(*np.nonzero(ext)):
        best = zone_area[labels[idx]]
        for nb in _neighbours(idx, v.shape):
            if abs(v[nb] - v[idx]) <= band:
                best = max(best, zone_area[labels[nb]])
        fails += best < floor
    return ExtremaReport(int(ext.sum()), int(fails), float(floor))


def _neighbours(idx, shape):
    for axis in range(len(shape)):
        for step in (-1, 1):
            j = list(idx)
            j[axis] += step
            if 0 <= j[axis] < shape[axis]:
                yield tuple(j)

