"""Total variation flow by iterated resolvents (implicit Euler).

``flow(g, t, n)`` applies the ROF resolvent with weight ``t / n`` to ``g``
``n`` times. For radial data on a ball the result does not depend on ``n``
and equals a single resolvent with weight ``t``; for general 2-D data it
does. :func:`origin_trace` follows the ROF minimiser at the origin as the
weight grows, which makes that dependence visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridImage, tv_iso
from .radial import RadialProfile, solve_radial_dual
from .rof import NonConvergence, SolverConfig, solve_rof

__all__ = [
    "FlowState",
    "FlowTrajectory",
    "flow",
    "trajectory",
    "radial_equivalence_check",
    "origin_trace",
    "OriginTrace",
    "second_differences",
    "tv_decreasing",
]


@dataclass
class FlowState:
    u: GridImage | RadialProfile
    t: float
    substeps: int
    refinement: float | None = None  # ||u_n - u_2n||_2 when requested


@dataclass
class FlowTrajectory:
    times: list[float]
    states: list
    substeps: int
    defects: list[float] = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if self.times and self.times[0] < 0:
            raise ValueError("times must be non-negative")


def _norm(a, b) -> float:
    if isinstance(a, RadialProfile):
        return a.norm(a.values - b.values)
    return float(np.sqrt(np.sum((a.values - b.values) ** 2) * a.cell_area))


def _step(u, tau, cfg, z):
    if isinstance(u, RadialProfile):
        sol = solve_radial_dual(u, tau, tol=cfg.get("radial_tol", 1e-10))
        return sol.u, None
    c = replace(cfg["grid"], lam=tau)
    try:
        res = solve_rof(u, c, z0=z)
    except NonConvergence as exc:
        if not cfg.get("lenient", False):
            raise
        res = exc.result
    return res.u, res.z


def _config(g, tol, tv_kind, max_iters):
    cfg = {"radial_tol": min(tol, 1e-10) if tol else 1e-10}
    if isinstance(g, GridImage):
        cfg["grid"] = SolverConfig(1.0, tol=tol, tv_kind=tv_kind, max_iters=max_iters)
    return cfg


def _run(g, t, n, cfg):
    u, z = g, None
    if t == 0:
        return g
    tau = t / n
    for _ in range(n):
        u, z = _step(u, tau, cfg, z)
    return u


def flow(
    g,
    t: float,
    n: int = 1,
    tol: float = 1e-5,
    tv_kind: str = "isotropic",
    max_iters: int = 20000,
    estimate: bool = False,
) -> FlowState:
    """``T_{t/n}`` applied ``n`` times to ``g``.

    With ``estimate=True`` the flow is also run with ``2n`` substeps and
    ``||u_n - u_2n||_2`` is stored as ``refinement``.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cfg = _config(g, tol, tv_kind, max_iters)
    u = _run(g, t, n, cfg)
    ref = None
    if estimate:
        ref = _norm(u, _run(g, t, 2 * n, cfg))
    return FlowState(u, float(t), n, ref)


def trajectory(g, times, n: int = 8, tol: float = 1e-5, tv_kind: str = "isotropic") -> FlowTrajectory:
    """States at increasing ``times``, each interval split into ``n`` resolvent steps.

    ``defects[k]`` is ``||u_n - u_2n||_2`` over the interval ending at ``times[k]``
    (zero for ``t = 0``).
    """
    times = [float(s) for s in times]
    traj = FlowTrajectory(times, [], n)
    cfg = _config(g, tol, tv_kind, 20000)
    u, prev = g, 0.0
    for s in times:
        dt = s - prev
        if dt == 0:
            traj.states.append(u)
            traj.defects.append(0.0)
            continue
        fine = _run(u, dt, 2 * n, cfg)
        u = _run(u, dt, n, cfg)
        traj.states.append(u)
        traj.defects.append(_norm(u, fine))
        prev = s
    return traj


def radial_equivalence_check(g: RadialProfile, t: float, n_big: int = 64, tol: float = 1e-10) -> float:
    """``||flow(g, t, n_big) - T_t(g)||_2`` for a radial datum."""
    if not isinstance(g, RadialProfile):
        raise TypeError("radial_equivalence_check needs a RadialProfile")
    if t == 0:
        return 0.0
    stepped = flow(g, t, n_big, tol=tol).u
    direct = solve_radial_dual(g, t, tol=tol).u
    return g.norm(stepped.values - direct.values)


def origin_pixels(g: GridImage):
    """Pixels whose closure contains the point ``(0, 0)``; their mean is the origin value."""
    h = g.h
    cx = -g.origin[0] / h
    cy = -g.origin[1] / h
    jx = [int(np.floor(cx))] if abs(cx - round(cx)) > 1e-9 else [int(round(cx)) - 1, int(round(cx))]
    iy = [int(np.floor(cy))] if abs(cy - round(cy)) > 1e-9 else [int(round(cy)) - 1, int(round(cy))]
    pix = [(i, j) for i in iy for j in jx if 0 <= i < g.height and 0 <= j < g.width]
    if not pix:
        raise ValueError("the origin lies outside the grid")
    return pix


def _origin_value(u) -> float:
    if isinstance(u, RadialProfile):
        return float(u.values[0])
    pix = origin_pixels(u)
    return float(np.mean([u.values[p] for p in pix]))


def second_differences(times, values) -> np.ndarray:
    """``(v_{k+1} - 2 v_k + v_{k-1}) / dt^2`` on a uniform time grid."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    dt = np.diff(t)
    if dt.size and not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("second differences need uniform time steps")
    if v.size < 3:
        return np.zeros(0)
    return (v[2:] - 2 * v[1:-1] + v[:-2]) / dt[0] ** 2


@dataclass
class OriginTrace:
    times: list[float]
    values: list[float]
    second: list[float]
    pixels: list

    @property
    def curvature(self) -> float:
        return float(np.abs(self.second).max(initial=0.0))


def origin_trace(g, times, tol: float = 1e-6, tv_kind: str = "isotropic", max_iters: int = 50000) -> OriginTrace:
    """Value at the origin of the ROF minimiser with ``lam = t`` for each ``t``.

    On a grid where the origin is a pixel corner the four adjacent pixels are
    averaged; ``pixels`` lists the ones used. Radial data use the innermost cell.
    """
    times = [float(s) for s in times]
    values = []
    z = None
    for s in times:
        if s == 0:
            values.append(_origin_value(g))
            continue
        if isinstance(g, RadialProfile):
            values.append(float(solve_radial_dual(g, s, tol=min(tol, 1e-10)).u.values[0]))
            continue
        cfg = SolverConfig(s, tol=tol, tv_kind=tv_kind, max_iters=max_iters)
        try:
            res = solve_rof(g, cfg, z0=z)
        except NonConvergence as exc:
            res = exc.result
        z = res.z
        values.append(_origin_value(res.u))
    pix = [] if isinstance(g, RadialProfile) else origin_pixels(g)
    return OriginTrace(times, values, second_differences(times, values).tolist(), pix)


def tv_decreasing(traj: FlowTrajectory, tol: float = 1e-8) -> bool:
    """TV is non-increasing along a grid trajectory."""
    tvs = [tv_iso(s) for s in traj.states]
    return all(b <= a + tol * max(1.0, a) for a, b in zip(tvs, tvs[1:]))
