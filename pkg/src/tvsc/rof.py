"""ROF denoising on 2-D grids.

Minimises ``lam * TV(u) + 1/2 ||u - g||^2`` (both terms measured with the
pixel area ``h^2``) by accelerated projected gradient on the dual problem

    min_{|z| <= lam}  1/2 || g + div z ||^2,

recovering the primal as ``u = g + div z``. Every iterate therefore satisfies
``-div z + u = g`` and ``|z| <= lam`` exactly, and optimality is certified by
the complementarity defect ``lam * TV(u) - <z, grad u>``, which equals the
primal-dual gap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .grid import DualField, GridImage, div_arrays, grad_arrays

__all__ = [
    "SolverConfig",
    "SolveResult",
    "NonConvergence",
    "ELCertificate",
    "solve_rof",
    "rof_energy",
    "el_certificate",
    "scaling_check",
]

log = logging.getLogger(__name__)

_KINDS = {"isotropic": "iso", "iso": "iso", "anisotropic": "aniso", "aniso": "aniso"}


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of :func:`solve_rof`.

    ``tol`` bounds both the relative change of ``u`` between checkpoints and
    the relative primal-dual gap. ``multilevel`` warm-starts large even-sized
    grids from a solve on the 2x coarsened grid.
    """

    lam: float
    max_iters: int = 20000
    tol: float = 1e-5
    tv_kind: str = "isotropic"
    check_every: int = 50
    multilevel: bool = True

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tv_kind not in _KINDS:
            raise ValueError(f"tv_kind must be isotropic or anisotropic, got {self.tv_kind!r}")

    @property
    def norm(self) -> str:
        return _KINDS[self.tv_kind]


@dataclass
class SolveResult:
    u: GridImage
    z: DualField
    energy: float
    el_residual: float
    iters: int
    gap: float = 0.0
    converged: bool = True
    energies: list[float] = field(default_factory=list)


class NonConvergence(RuntimeError):
    """Iteration budget exhausted before the tolerance was met.

    The last (always dual-feasible) iterate is attached as ``result``.
    """

    def __init__(self, iters: int, residual: float, result=None):
        super().__init__(f"no convergence after {iters} iterations (residual {residual:.3e})")
        self.iters = iters
        self.residual = residual
        self.result = result


def _tv_density(gx, gy, norm):
    if norm == "iso":
        return np.hypot(gx, gy)
    return np.abs(gx) + np.abs(gy)


def rof_energy(u: GridImage, g: GridImage, lam: float, tv_kind: str = "isotropic") -> float:
    """``lam * TV(u) + 1/2 ||u - g||^2`` on the grid."""
    gx, gy = grad_arrays(u.values, u.h)
    a = u.cell_area
    tv = a * _tv_density(gx, gy, _KINDS[tv_kind]).sum()
    return float(lam * tv + 0.5 * a * np.sum((u.values - g.values) ** 2))


def _state(g, lam, h, p, norm):
    u = g + div_arrays(p[0], p[1], h)
    gx, gy = grad_arrays(u, h)
    a = h * h
    tv = a * _tv_density(gx, gy, norm).sum()
    energy = lam * tv + 0.5 * a * np.sum((u - g) ** 2)
    gap = lam * tv - a * np.sum(p[0] * gx + p[1] * gy)
    return u, float(energy), max(float(gap), 0.0), float(tv)


def _coarsen(v):
    ny, nx = v.shape
    return v.reshape(ny // 2, 2, nx // 2, 2).mean(axis=(1, 3))


def _warm_start(g: GridImage, cfg: SolverConfig):
    ny, nx = g.shape
    if not cfg.multilevel or ny % 2 or nx % 2 or min(ny, nx) < 64:
        return None
    coarse = GridImage(_coarsen(g.values), 2 * g.h, g.origin)
    ccfg = replace(cfg, tol=cfg.tol * 10, max_iters=max(cfg.max_iters // 2, 1))
    try:
        res = solve_rof(coarse, ccfg)
    except NonConvergence as exc:
        res = exc.result
    p = np.stack([res.z.x, res.z.y])
    p = np.repeat(np.repeat(p, 2, axis=1), 2, axis=2)
    p[0, :, -1] = 0.0
    p[1, -1, :] = 0.0
    return p


def solve_rof(g: GridImage, cfg: SolverConfig, z0: DualField | None = None) -> SolveResult:
    """Minimise the ROF energy of ``g`` with weight ``cfg.lam``.

    Parameters
    ----------
    g : GridImage
        Datum.
    cfg : SolverConfig
        Weight, tolerance and TV kind.
    z0 : DualField, optional
        Warm start; rescaled onto the constraint set if its bound differs.

    Returns
    -------
    SolveResult
        ``u``, a feasible dual field ``z`` with ``-div z + u = g``, the energy,
        the relative EL residual and the primal-dual gap.

    Raises
    ------
    NonConvergence
        When ``cfg.max_iters`` is reached first; the exception carries the
        last iterate, which is still dual feasible.
    """
    lam, norm, h = float(cfg.lam), cfg.norm, g.h
    gv = np.ascontiguousarray(g.values, dtype=float)
    scale = max(1.0, float(np.abs(gv).max()))

    if z0 is not None:
        p = np.stack([z0.x, z0.y]).astype(float)
        p[0, :, -1] = 0.0
        p[1, -1, :] = 0.0
        mag = np.hypot(p[0], p[1]) if norm == "iso" else np.maximum(np.abs(p[0]), np.abs(p[1]))
        over = mag.max(initial=0.0)
        if over > lam:
            p *= lam / over
    else:
        p = _warm_start(g, cfg)
        if p is None:
            p = np.zeros((2,) + gv.shape)
    pold = p.copy()
    work = np.empty_like(gv)
    t, beta = 1.0, 0.0

    u, energy, gap, tv = _state(gv, lam, h, p, norm)
    # the reported estimate is the checkpoint with the lowest primal energy;
    # the dual iteration itself is not monotone in the primal energy
    inc_p, inc_u, inc_e, inc_gap = p.copy(), u, energy, gap
    energies = [energy]
    u_prev = u
    iters = 0
    converged = gap <= cfg.tol * energy
    while not converged and iters < cfg.max_iters:
        k = min(cfg.check_every, cfg.max_iters - iters)
        p, pold, t, beta = _kernels.fista_dual_sweeps(gv, lam, h, k, p, pold, norm == "aniso", t, beta, work)
        iters += k
        u, energy, gap, tv = _state(gv, lam, h, p, norm)
        if energy <= inc_e:
            inc_p, inc_u, inc_e, inc_gap = p.copy(), u, energy, gap
        energies.append(inc_e)
        change = float(np.abs(inc_u - u_prev).max()) / scale
        u_prev = inc_u
        converged = change <= cfg.tol and inc_gap <= cfg.tol * inc_e

    p = inc_p
    u, energy, gap, tv = _state(gv, lam, h, p, norm)
    residual = float(np.abs(-div_arrays(p[0], p[1], h) + u - gv).max()) / scale
    result = SolveResult(
        u=g.like(u),
        z=DualField(p[0].copy(), p[1].copy(), lam, h, norm),
        energy=energy,
        el_residual=residual,
        iters=iters,
        gap=gap,
        converged=converged,
        energies=energies,
    )
    log.debug("solve_rof lam=%g iters=%d gap=%.3e energy=%.6g", lam, iters, gap, energy)
    if not converged:
        raise NonConvergence(iters, gap / max(energy, 1e-300), result)
    return result


@dataclass
class ELCertificate:
    """Residuals of the four optimality conditions for a pair ``(u, z)``."""

    residual: float
    feasibility_margin: float
    complementarity: float
    tv: float
    boundary_flux: float

    def ok(self, lam: float, tol: float) -> bool:
        return (
            self.residual <= tol
            and self.feasibility_margin <= 1e-9 * lam
            and self.complementarity <= tol * lam * self.tv + 1e-14
        )


def el_certificate(g: GridImage, result: SolveResult) -> ELCertificate:
    """Evaluate ``-div z + u = g``, ``|z| <= lam``, ``z . Du = lam |Du|`` and
    the Neumann condition for a (possibly modified) result."""
    z, u = result.z, result.u.values
    scale = max(1.0, float(np.abs(g.values).max()))
    residual = float(np.abs(-div_arrays(z.x, z.y, z.h) + u - g.values).max()) / scale
    gx, gy = grad_arrays(u, g.h)
    a = g.cell_area
    tvd = a * _tv_density(gx, gy, z.norm).sum()
    compl = z.bound * tvd - a * np.sum(z.x * gx + z.y * gy)
    flux = float(max(np.abs(z.x[:, -1]).max(), np.abs(z.y[-1, :]).max()))
    return ELCertificate(
        residual=residual,
        feasibility_margin=z.max_norm() - z.bound,
        complementarity=float(compl),
        tv=float(tvd),
        boundary_flux=flux,
    )


def scaling_check(g: GridImage, lam: float, alpha: float, cfg: SolverConfig | None = None, atol: float | None = None) -> bool:
    """Check ``solve(alpha g, alpha lam).u == alpha solve(g, lam).u``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    cfg = cfg or SolverConfig(lam)
    a = solve_rof(g, replace(cfg, lam=lam))
    b = solve_rof(g.like(alpha * g.values), replace(cfg, lam=alpha * lam))
    if atol is None:
        atol = 100 * cfg.tol * max(1.0, alpha) * max(1.0, float(np.abs(g.values).max()))
    return bool(np.abs(b.u.values - alpha * a.u.values).max() <= atol)
