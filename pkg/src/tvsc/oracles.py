"""Independent reference computations used to cross-check the solvers.

None of these share code with the production solvers. They are slow or
limited in size on purpose: the value is in deriving the same answer by a
different route.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "taut_string",
    "enumerate_cuts",
    "coarea_tv_aniso",
    "finite_difference_gradient",
]


def taut_string(g, lam: float, dr: float = 1.0) -> np.ndarray:
    """Exact 1-D ROF on a uniform interval with free (Neumann) ends.

    Minimises ``lam * sum|u_{i+1} - u_i| + dr/2 * sum (u_i - g_i)^2`` by
    pulling a string through the tube of half-width ``lam`` around the
    cumulative sum of ``g``. The minimiser is the slope of the string.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    x = np.arange(n + 1) * dr
    G = np.concatenate([[0.0], np.cumsum(g) * dr])
    hi = G + lam
    lo = G - lam
    hi[0] = lo[0] = 0.0
    hi[n] = lo[n] = G[n]

    u = np.empty(n)
    i0, y0 = 0, 0.0
    while i0 < n:
        smax, smin = np.inf, -np.inf
        kmax = kmin = i0
        bent = False
        for k in range(i0 + 1, n + 1):
            run = x[k] - x[i0]
            su = (hi[k] - y0) / run
            sl = (lo[k] - y0) / run
            if sl > smax:
                u[i0:kmax] = smax
                i0, y0 = kmax, hi[kmax]
                bent = True
                break
            if su < smin:
                u[i0:kmin] = smin
                i0, y0 = kmin, lo[kmin]
                bent = True
                break
            if su <= smax:
                smax, kmax = su, k
            if sl >= smin:
                smin, kmin = sl, k
        if not bent:
            u[i0:] = (G[n] - y0) / (x[n] - x[i0])
            break
    return u


def enumerate_cuts(unary: np.ndarray, weight: float, h: float = 1.0):
    """Brute-force minimisation of ``sum_{i in S} unary_i + weight * Per(S)``.

    ``Per`` counts 4-neighbour edges split by ``S`` times ``h``. Feasible for
    up to about 20 pixels. Returns ``(min_energy, minimisers)`` where
    ``minimisers`` is the list of all optimal boolean masks (within 1e-12).
    """
    a = np.asarray(unary, dtype=float)
    ny, nx = a.shape
    n = a.size
    if n > 22:
        raise ValueError("too many pixels for exhaustive enumeration")
    codes = np.arange(1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    energy = bits @ a.ravel()
    idx = np.arange(n).reshape(ny, nx)
    pairs = [(idx[:, :-1].ravel(), idx[:, 1:].ravel()), (idx[:-1, :].ravel(), idx[1:, :].ravel())]
    for p, q in pairs:
        if p.size:
            energy = energy + weight * h * np.count_nonzero(bits[:, p] != bits[:, q], axis=1)
    best = float(energy.min())
    winners = [bits[k].reshape(ny, nx) for k in np.nonzero(energy <= best + 1e-12)[0]]
    return best, winners


def coarea_tv_aniso(u: np.ndarray, h: float = 1.0) -> float:
    """Anisotropic TV of a piecewise-constant image as a sum over level sets."""
    u = np.asarray(u, dtype=float)
    levels = np.unique(u)
    total = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        m = u >= hi
        edges = np.count_nonzero(m[:, 1:] != m[:, :-1]) + np.count_nonzero(m[1:, :] != m[:-1, :])
        total += (hi - lo) * edges * h
    return total


def finite_difference_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e.flat[k] = eps
        out.flat[k] = (f(x + e) - f(x - e)) / (2 * eps)
    return out
