"""Named verification suites, runnable from the command line with ``tvsc verify``.

Each suite returns a :class:`SuiteResult` holding named measurements, each
compared against a fixed threshold. The thresholds live here and in the
acceptance tests, which restate them independently.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import flow as fl
from . import levelset as ls
from . import radial as rd
from . import staircase as sc
from .datagen import DatumSpec, generate
from .grid import GridImage, tv_aniso
from .oracles import coarea_tv_aniso, enumerate_cuts, finite_difference_gradient, taut_string
from .rof import SolverConfig, solve_rof

__all__ = ["Check", "SuiteResult", "SUITES", "RUNTIME_LIMITS", "run_suite"]


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    relation: str  # "<=", ">=", "<", ">", "=="

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        return {
            "<=": v <= t,
            ">=": v >= t,
            "<": v < t,
            ">": v > t,
            "==": v == t,
        }[self.relation]

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"  [{mark}] {self.name}: {self.value:.6g} {self.relation} {self.threshold:.6g}"


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, relation, threshold):
        self.checks.append(Check(name, float(value), float(threshold), relation))

    def summary(self) -> str:
        head = f"{'PASS' if self.passed else 'FAIL'} {self.name} ({self.seconds:.1f} s)"
        return "\n".join([head] + [c.line() for c in self.checks])


def disc_closed_form() -> SuiteResult:
    """Unit disc, lam = 0.1 on a 256^2 grid over [-4, 4]^2: u = 0.8 on the disc, 0 outside."""
    res = SuiteResult("disc-closed-form")
    lam = 0.1
    g = generate(DatumSpec("disc", n=256, extent=4.0))
    out = solve_rof(g, SolverConfig(lam, tol=1e-5))
    X, Y = g.coords()
    r = np.hypot(X, Y)
    exact = max(1 - 2 * lam, 0) * (r < 1)
    far = np.abs(r - 1) > 3 * g.h
    res.add("max |u - 0.8 chi_D| off the 3h band", np.abs(out.u.values - exact)[far].max(), "<=", 0.02)
    res.info.update(inside=float(out.u.values[r < 0.5].mean()), iters=out.iters)
    return res


def extinction() -> SuiteResult:
    """lam* of the padded unit disc (grid) and of the disc in B(0, 4) (radial)."""
    res = SuiteResult("extinction")
    padded = generate(DatumSpec("disc", n=512, extent=8.0))
    lstar = sc.find_lambda_star(padded, lo=0.40, hi=0.56, tol=2e-3, solver_tol=1e-5)
    res.add("|lam*(padded disc) - 1/2|", abs(lstar - 0.5), "<=", 0.02)
    ball = generate(DatumSpec("disc", n=4096, extent=4.0, radial=True))
    lball = sc.find_lambda_star(ball, tol=1e-4)
    res.add("|lam*(disc in B(0,4)) - 15/32|", abs(lball - 15 / 32), "<=", 0.01)
    res.info.update(padded=lstar, ball=lball)
    return res


def levelset_exact(draws: int = 200, seed: int = 7) -> SuiteResult:
    """Min-cut against exhaustive enumeration on 4x4 grids, and threshold consistency."""
    res = SuiteResult("levelset-exact")
    rng = np.random.default_rng(seed)
    worst, extremal_bad = 0.0, 0
    for _ in range(draws):
        g = GridImage(rng.random((4, 4)))
        lam, t = rng.uniform(0.02, 1.0), rng.uniform(-0.2, 1.2)
        sol = ls.solve_cut(ls.CutProblem(g, lam, t))
        best, winners = enumerate_cuts(t - g.values, lam)
        worst = max(worst, abs(sol.energy - best), abs(sol.minimal.energy - sol.maximal.energy))
        extremal_bad += not all(np.all(~sol.minimal.mask | w) and np.all(~w | sol.maximal.mask) for w in winners)
    res.add("max |cut energy - enumeration|", worst, "<=", 1e-12)
    res.add("optimal masks outside [minimal, maximal]", extremal_bad, "==", 0)
    levels = np.linspace(0.1, 0.9, 9)
    for kind, lam in (("disc", 0.1), ("two_squares", 7 / 32)):
        rep = ls.threshold_consistency(generate(DatumSpec(kind, n=64)), lam, levels)
        res.add(f"threshold-consistent levels, {kind}", sum(c.ok for c in rep.checks), "==", 9)
        res.add(f"max threshold energy excess, {kind}", max(c.threshold_energy - c.cut_energy for c in rep.checks), "<=", rep.energy_tol)
    return res


def staircase_bound() -> SuiteResult:
    """Flat-area lower bound and strict clipping."""
    res = SuiteResult("staircase-bound")
    for kind in ("disc", "two_squares"):
        g = generate(DatumSpec(kind, n=256))
        for lam in (0.05, 0.15):
            rep = sc.analyze(g, sc.solve(g, lam), lam)
            need = 2 * (lam / (rep.m_g - rep.min_g)) ** 2 * (1 - 4 * g.h)
            res.add(f"flat_area / bound, {kind} lam={lam}", rep.flat_area / need, ">=", 1.0)
    data = {
        "disc": generate(DatumSpec("disc", n=128)),
        "two_squares": generate(DatumSpec("two_squares", n=128)),
        "ramp": generate(DatumSpec("ramp", n=128)),
        "bumps": generate(DatumSpec("bumps", n=128)),
        "noisy": generate(DatumSpec("noisy", n=128, sigma=0.1, seed=3, params={"base": "disc"})),
        "radial disc": generate(DatumSpec("disc", n=2048, extent=4.0, radial=True)),
        "radial bumps": generate(DatumSpec("bumps", n=2048, extent=4.0, radial=True)),
    }
    for name, g in data.items():
        for lam in (0.05, 0.15):
            rep = sc.analyze(g, sc.solve(g, lam), lam)
            gap = min(rep.min_u - rep.min_g, rep.m_g - rep.m_u)
            res.add(f"clipping margin, {name} lam={lam}", gap, ">", 0.0)
    return res


def radial_profiles(count: int = 5, n: int = 4096, R: float = 1.0):
    return [generate(DatumSpec("radial_profile", n=n, extent=R, radial=True, seed=s)) for s in range(count)]


def radial_comparison() -> SuiteResult:
    """Comparison and Lipschitz bounds of the radial dual over a lam grid."""
    res = SuiteResult("radial-comparison")
    lams = [0.05 * k for k in range(1, 9)]
    margin, excess = np.inf, -np.inf
    for g in radial_profiles():
        rep = rd.comparison_check(g, lams)
        margin = min(margin, rep.min_margin)
        excess = max(excess, rep.max_lipschitz_excess)
    res.add("min (z_lam - lam) - (z_mu - mu)", margin, ">=", -1e-6)
    res.add("max |z_lam - z_mu| - |lam - mu|", excess, "<=", 1e-6)
    return res


def radial_semigroup() -> SuiteResult:
    """Semigroup identity and flow = resolvent for radial data."""
    res = SuiteResult("radial-semigroup")
    data = {
        "disc": generate(DatumSpec("disc", n=4096, extent=4.0, radial=True)),
        "ramp": generate(DatumSpec("ramp", n=4096, extent=4.0, radial=True)),
    }
    for name, g in data.items():
        d = max(rd.semigroup_check(g, lam, mu) for lam, mu in ((0.05, 0.15), (0.05, 0.2), (0.1, 0.3)))
        res.add(f"semigroup defect, {name}", d, "<=", 1e-3)
        e = max(fl.radial_equivalence_check(g, t) for t in (0.05, 0.1))
        res.add(f"flow vs resolvent (n=64), {name}", e, "<=", 1e-3)
    return res


def nonradial_flow(n: int = 128, tol: float = 1e-6) -> SuiteResult:
    """The flow differs from the resolvent on the two-squares datum; its origin trace bends."""
    res = SuiteResult("nonradial-flow")
    g = generate(DatumSpec("two_squares", n=n))
    one = fl.flow(g, 0.15, 1, tol=tol).u
    many = fl.flow(g, 0.15, 64, tol=tol).u
    gap = float(np.abs(one.values - many.values).max())
    res.add("max |flow(64) - T_0.15| / solver tol", gap / tol, ">", 10.0)
    times = np.round(np.linspace(0.0, 0.2, 21), 12)
    trace = fl.origin_trace(g, times, tol=tol)
    control = fl.origin_trace(generate(DatumSpec("disc", n=4096, extent=4.0, radial=True)), times)
    floor = max(control.curvature, 1e-12)
    res.add("origin-trace curvature / affine control floor", trace.curvature / floor, ">", 10.0)
    grid_control = fl.origin_trace(generate(DatumSpec("disc", n=n)), times, tol=tol)
    res.info.update(
        trace=trace.values,
        second=trace.second,
        control_floor=floor,
        grid_control_ratio=trace.curvature / max(grid_control.curvature, 1e-12),
    )
    return res


def nonmonotone_staircase(n: int = 512, tol: float = 1e-6, max_iters: int = 60000) -> SuiteResult:
    """Top zones of the two-squares minimisers at lam = 7/32 and 11/64; radial nesting."""
    res = SuiteResult("nonmonotone-staircase")
    g = generate(DatumSpec("two_squares", n=n))
    lam1, lam2 = 7 / 32, 11 / 64
    s1 = sc.staircase_set(sc.solve(g, lam1, tol, max_iters=max_iters))
    s2 = sc.staircase_set(sc.solve(g, lam2, tol, max_iters=max_iters))
    area = float(np.count_nonzero(s2 & ~s1)) * g.cell_area
    banded, cells = sc._grid_nonnested(s2, s1, g.h, 1)
    res.add("area(S_11/64 minus S_7/32) / (10 h^2 512)", area / (10 * g.cell_area * 512), ">", 1.0)
    res.info.update(area=area, cells=int(np.count_nonzero(s2 & ~s1)), banded_cells=cells, banded_area=banded)
    lams = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4]
    viol = 0.0
    for prof in radial_profiles(3, 2048) + [generate(DatumSpec("disc", n=2048, extent=4.0, radial=True))]:
        viol += sum(sc.monotonicity_check(prof, lams).violations)
    res.add("radial dual-slack nesting violations", viol, "==", 0)
    return res


def jump_inclusion() -> SuiteResult:
    """Jump radii of u_mu within one cell of those of u_lam, and those within one cell of jumps of g."""
    res = SuiteResult("jump-inclusion")
    g = generate(DatumSpec("disc", n=4096, extent=4.0, radial=True))
    for lam, mu in ((0.1, 0.3), (0.1, 0.48)):
        rep = sc.jump_inclusion_check(g, lam, mu)
        res.add(f"jump chain holds ({lam}, {mu})", float(rep.ok), "==", 1.0)
        res.info[f"{lam},{mu}"] = {"g": rep.jumps_g.tolist(), "lam": rep.jumps_lam.tolist(), "mu": rep.jumps_mu.tolist()}
    return res


def oracle_equivalences(seed: int = 11) -> SuiteResult:
    """Radial N=1 solver against the taut string, dual gradient against finite differences, coarea on integer images."""
    res = SuiteResult("oracles")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        pieces = rng.integers(1, 8)
        n = int(rng.integers(8, 200))
        cuts = np.sort(rng.choice(np.arange(1, n), size=min(pieces - 1, n - 1), replace=False))
        g = np.repeat(rng.normal(size=pieces), np.diff(np.concatenate([[0], cuts, [n]])))
        lam = rng.uniform(0.01, 2.0)
        prof = rd.RadialProfile(g, rng.uniform(0.5, 4.0), 1)
        u = rd.solve_radial_dual(prof, lam, tol=1e-12).u.values
        worst = max(worst, float(np.abs(u - taut_string(g, lam, prof.dr)).max()))
    res.add("max |radial N=1 - taut string|", worst, "<=", 1e-8)
    rel = 0.0
    for _ in range(100):
        n, dim = int(rng.integers(4, 40)), int(rng.integers(1, 4))
        prof = rd.RadialProfile(rng.normal(size=n), rng.uniform(0.5, 3.0), dim)
        lam = rng.uniform(0.05, 1.0)
        z = np.zeros(n + 1)
        z[1:-1] = rng.uniform(-lam, lam, n - 1)
        grad = rd.dual_gradient(z, prof)[1:-1]

        def obj(x, prof=prof, z=z):
            w = z.copy()
            w[1:-1] = x
            return rd.dual_objective(w, prof)

        fd = finite_difference_gradient(obj, z[1:-1], eps=1e-5)
        rel = max(rel, float(np.abs(fd - grad).max() / max(np.abs(grad).max(), 1e-300)))
    res.add("max relative |grad - finite differences|", rel, "<=", 1e-6)
    mism = 0
    for _ in range(50):
        img = rng.integers(-3, 4, size=(int(rng.integers(1, 12)), int(rng.integers(1, 12)))).astype(float)
        mism += tv_aniso(img) != coarea_tv_aniso(img)
    res.add("integer images with tv != coarea sum", mism, "==", 0)
    return res


SUITES = {
    "disc-closed-form": (1, disc_closed_form),
    "extinction": (2, extinction),
    "levelset-exact": (3, levelset_exact),
    "staircase-bound": (4, staircase_bound),
    "radial-comparison": (5, radial_comparison),
    "radial-semigroup": (6, radial_semigroup),
    "nonradial-flow": (7, nonradial_flow),
    "nonmonotone-staircase": (8, nonmonotone_staircase),
    "jump-inclusion": (9, jump_inclusion),
    "oracles": (10, oracle_equivalences),
}


# wall-clock budgets in seconds; suites without an entry are unbounded
RUNTIME_LIMITS = {
    "disc-closed-form": 60.0,
    "extinction": 300.0,
    "levelset-exact": 120.0,
    "radial-comparison": 60.0,
}


def run_suite(name: str) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    t0 = time.perf_counter()
    res = SUITES[name][1]()
    res.seconds = time.perf_counter() - t0
    if name in RUNTIME_LIMITS:
        res.add("runtime (s)", res.seconds, "<=", RUNTIME_LIMITS[name])
    return res
