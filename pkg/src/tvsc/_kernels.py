"""Compiled inner loops for the grid ROF solver."""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def fista_dual_sweeps(g, lam, h, iters, p, pold, aniso, t, beta, u):
    """Run ``iters`` accelerated projected-gradient steps on the ROF dual.

    ``p`` holds the current dual iterate (shape ``(2, ny, nx)``) and ``pold``
    the previous one; the extrapolated point is ``p + beta * (p - pold)``.
    Restarts the momentum whenever the step direction disagrees with the
    momentum direction. Returns the (possibly swapped) buffers and the
    momentum state so a caller can resume.
    """
    ny, nx = g.shape
    s = h * h / 8.0
    ih = 1.0 / h
    for _ in range(iters):
        for i in range(ny):
            for j in range(nx):
                d = 0.0
                if j < nx - 1:
                    d += p[0, i, j] + beta * (p[0, i, j] - pold[0, i, j])
                if j > 0:
                    d -= p[0, i, j - 1] + beta * (p[0, i, j - 1] - pold[0, i, j - 1])
                if i < ny - 1:
                    d += p[1, i, j] + beta * (p[1, i, j] - pold[1, i, j])
                if i > 0:
                    d -= p[1, i - 1, j] + beta * (p[1, i - 1, j] - pold[1, i - 1, j])
                u[i, j] = g[i, j] + d * ih
        dot = 0.0
        for i in range(ny):
            for j in range(nx):
                qx = p[0, i, j] + beta * (p[0, i, j] - pold[0, i, j])
                qy = p[1, i, j] + beta * (p[1, i, j] - pold[1, i, j])
                ax = qx + s * (u[i, j + 1] - u[i, j]) * ih if j < nx - 1 else 0.0
                ay = qy + s * (u[i + 1, j] - u[i, j]) * ih if i < ny - 1 else 0.0
                if aniso:
                    ax = min(lam, max(-lam, ax))
                    ay = min(lam, max(-lam, ay))
                else:
                    nrm = np.sqrt(ax * ax + ay * ay)
                    if nrm > lam:
                        ax *= lam / nrm
                        ay *= lam / nrm
                dot += (qx - ax) * (ax - p[0, i, j]) + (qy - ay) * (ay - p[1, i, j])
                pold[0, i, j] = ax
                pold[1, i, j] = ay
        p, pold = pold, p
        if dot > 0.0:
            t = 1.0
            beta = 0.0
        else:
            tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / tn
            t = tn
    return p, pold, t, beta
