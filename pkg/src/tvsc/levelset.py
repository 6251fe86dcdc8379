"""Exact binary level-set problems by minimum cut.

For a level ``t`` the problem

    min_E  lam * Per(E) + sum_{i in E} (t - g_i) h^2

with the 4-neighbour perimeter (split edges times ``h``) is a minimum s-t cut
on the pixel graph. The lattice of optimal sets has a smallest and a largest
element; both are read off the residual graph after a maximum flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .grid import GridImage, LevelSet, boundary_edges
from .rof import NonConvergence, SolverConfig, solve_rof

__all__ = [
    "CutProblem",
    "CutSolution",
    "cut_energy",
    "solve_cut",
    "threshold_consistency",
    "ThresholdReport",
    "monotone_levels",
    "isoperimetric_ok",
    "vanishing_level_bound",
]

EPS = 1e-12


@dataclass(frozen=True)
class CutProblem:
    g: GridImage
    lam: float
    level: float

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not np.isfinite(self.level):
            raise ValueError("level must be finite")


@dataclass
class CutSolution:
    minimal: LevelSet
    maximal: LevelSet
    energy: float
    flow: float = 0.0

    @property
    def unique(self) -> bool:
        return bool(np.array_equal(self.minimal.mask, self.maximal.mask))


def cut_energy(mask, g: GridImage, lam: float, level: float) -> float:
    """Energy of a binary mask for the level problem at ``level``."""
    m = np.asarray(mask, dtype=bool)
    a = g.cell_area
    return float(lam * g.h * boundary_edges(m) + a * np.sum(level - g.values[m]))


@nb.njit(cache=True)
def _dinic(n, start, adj, to, cap, s, t, eps):
    level = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    total = 0.0
    while True:
        level[:] = -1
        level[s] = 0
        qh, qt = 0, 1
        queue[0] = s
        while qh < qt:
            v = queue[qh]
            qh += 1
            for k in range(start[v], start[v + 1]):
                e = adj[k]
                w = to[e]
                if cap[e] > eps and level[w] < 0:
                    level[w] = level[v] + 1
                    queue[qt] = w
                    qt += 1
        if level[t] < 0:
            break
        for v in range(n):
            it[v] = start[v]
        depth = 0
        v = s
        while True:
            if v == t:
                b = np.inf
                for d in range(depth):
                    c = cap[path[d]]
                    if c < b:
                        b = c
                first = depth
                for d in range(depth):
                    e = path[d]
                    cap[e] -= b
                    cap[e ^ 1] += b
                    if cap[e] <= eps and d < first:
                        first = d
                total += b
                depth = first
                v = s if depth == 0 else to[path[depth - 1]]
                continue
            advanced = False
            while it[v] < start[v + 1]:
                e = adj[it[v]]
                w = to[e]
                if cap[e] > eps and level[w] == level[v] + 1:
                    path[depth] = e
                    depth += 1
                    v = w
                    advanced = True
                    break
                it[v] += 1
            if not advanced:
                if depth == 0:
                    break
                level[v] = -1
                depth -= 1
                v = to[path[depth] ^ 1]
                it[v] += 1
    return total


@nb.njit(cache=True)
def _reach(n, start, adj, to, cap, root, eps, backward):
    seen = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    seen[root] = True
    queue[0] = root
    qh, qt = 0, 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        for k in range(start[v], start[v + 1]):
            e = adj[k]
            w = to[e]
            # forward: residual v->w; backward: residual w->v lives on e^1
            c = cap[e ^ 1] if backward else cap[e]
            if c > eps and not seen[w]:
                seen[w] = True
                queue[qt] = w
                qt += 1
    return seen


def _graph(p: CutProblem):
    g = p.g
    ny, nx = g.shape
    npx = ny * nx
    s, t = npx, npx + 1
    a = ((p.level - g.values) * g.cell_area).ravel()
    w = p.lam * g.h
    idx = np.arange(npx).reshape(ny, nx)
    pix = np.arange(npx)
    pos = a > 0
    # each pair (tail, head, cap_forward, cap_backward) becomes edges 2k, 2k+1
    tails = [idx[:, :-1].ravel(), idx[:-1, :].ravel(), pix[pos], np.full((~pos).sum(), s)]
    heads = [idx[:, 1:].ravel(), idx[1:, :].ravel(), np.full(pos.sum(), t), pix[~pos]]
    fwd = [np.full(tails[0].size, w), np.full(tails[1].size, w), a[pos], -a[~pos]]
    bwd = [fwd[0], fwd[1], np.zeros(pos.sum()), np.zeros((~pos).sum())]
    tail = np.concatenate(tails).astype(np.int64)
    head = np.concatenate(heads).astype(np.int64)
    m = tail.size
    to = np.empty(2 * m, np.int64)
    to[0::2] = head
    to[1::2] = tail
    cap = np.empty(2 * m)
    cap[0::2] = np.concatenate(fwd)
    cap[1::2] = np.concatenate(bwd)
    owner = np.empty(2 * m, np.int64)
    owner[0::2] = tail
    owner[1::2] = head
    adj = np.argsort(owner, kind="stable").astype(np.int64)
    start = np.zeros(npx + 3, np.int64)
    np.cumsum(np.bincount(owner, minlength=npx + 2), out=start[1:])
    return npx + 2, start, adj, to, cap, s, t, float(np.abs(a).sum())


def solve_cut(p: CutProblem) -> CutSolution:
    """Minimal and maximal minimisers of the level problem ``p``."""
    n, start, adj, to, cap, s, t, _ = _graph(p)
    scale = max(float(cap.max(initial=0.0)), 1e-300)
    eps = EPS * scale
    flow = _dinic(n, start, adj, to, cap, s, t, eps)
    src = _reach(n, start, adj, to, cap, s, eps, False)
    snk = _reach(n, start, adj, to, cap, t, eps, True)
    shape = p.g.shape
    lo = src[: n - 2].reshape(shape)
    hi = ~snk[: n - 2].reshape(shape)
    e_lo = cut_energy(lo, p.g, p.lam, p.level)
    e_hi = cut_energy(hi, p.g, p.lam, p.level)
    return CutSolution(
        LevelSet(lo, p.level, p.g.h, e_lo),
        LevelSet(hi, p.level, p.g.h, e_hi),
        min(e_lo, e_hi),
        flow,
    )


@dataclass
class LevelCheck:
    level: float
    lower_ok: bool
    upper_ok: bool
    cut_energy: float
    threshold_energy: float
    ambiguous: int

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok


@dataclass
class ThresholdReport:
    lam: float
    checks: list[LevelCheck] = field(default_factory=list)
    energy_tol: float = 0.0

    @property
    def ok(self) -> bool:
        return all(
            c.ok and c.cut_energy - self.energy_tol <= c.threshold_energy <= c.cut_energy + self.energy_tol
            for c in self.checks
        )


def threshold_consistency(
    g: GridImage,
    lam: float,
    levels,
    level_tol: float | None = None,
    energy_tol: float | None = None,
    u: GridImage | None = None,
    tol: float = 1e-8,
) -> ThresholdReport:
    """Compare thresholds of the anisotropic ROF minimiser with exact cuts.

    For each level ``t`` checks ``minimal <= {u > t} <= maximal`` ignoring
    pixels with ``|u - t| <= level_tol``, and that ``{u > t}`` is optimal for
    the level problem up to ``energy_tol``. Near-ties are resolved by also
    trying the thresholds at ``t +- level_tol``. Pass ``u`` to skip the ROF
    solve.
    """
    osc = float(np.ptp(g.values)) or 1.0
    if u is None:
        cfg = SolverConfig(lam, tol=tol, tv_kind="anisotropic", max_iters=200000)
        try:
            u = solve_rof(g, cfg).u
        except NonConvergence as exc:
            u = exc.result.u
    if level_tol is None:
        level_tol = 1e-4 * osc
    if energy_tol is None:
        energy_tol = level_tol * g.area + 1e-12 * osc * g.area
    report = ThresholdReport(lam, energy_tol=energy_tol)
    uv = u.values
    for t in levels:
        sol = solve_cut(CutProblem(g, lam, t))
        sure = np.abs(uv - t) > level_tol
        thr = uv > t
        report.checks.append(
            LevelCheck(
                level=float(t),
                lower_ok=bool(np.all(~(sol.minimal.mask & sure) | thr)),
                upper_ok=bool(np.all(~(thr & sure) | sol.maximal.mask)),
                cut_energy=sol.energy,
                threshold_energy=min(
                    cut_energy(uv > t + s, g, lam, t) for s in (-level_tol, 0.0, level_tol)
                ),
                ambiguous=int(np.count_nonzero(~sure)),
            )
        )
    return report


def monotone_levels(g: GridImage, lam: float, t1: float, t2: float) -> bool:
    """Minimal solution at ``t2`` lies inside the maximal solution at ``t1 <= t2``."""
    if t1 > t2:
        raise ValueError("need t1 <= t2")
    upper = solve_cut(CutProblem(g, lam, t2)).minimal
    lower = solve_cut(CutProblem(g, lam, t1)).maximal
    return upper in lower


def isoperimetric_ok(ls: LevelSet) -> bool:
    """``sqrt(area) <= per / (2 sqrt(pi)) * (1 + 4h / diam)`` for a non-empty set.

    The diameter is that of the pixel-centre bounding box. Sets touching the
    grid boundary have a relative perimeter and are exempt.
    """
    m = ls.mask
    if not m.any():
        return True
    if m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any():
        return True
    ii, jj = np.nonzero(m)
    diam = ls.h * max(np.hypot(ii.max() - ii.min() + 1, jj.max() - jj.min() + 1), 1.0)
    return bool(np.sqrt(ls.area) <= ls.perimeter / (2 * np.sqrt(np.pi)) * (1 + 4 * ls.h / diam))


def vanishing_level_bound(ls: LevelSet, lam: float, g_max: float, slack: float = 4.0) -> bool:
    """``area >= (lam / (g_max - t))^2 (1 - slack h)`` for a non-empty optimal set."""
    if not ls.mask.any() or ls.level >= g_max:
        return True
    return bool(ls.area >= (lam / (g_max - ls.level)) ** 2 * (1 - slack * ls.h))
