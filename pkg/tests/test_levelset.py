import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvsc.datagen import DatumSpec, generate
from tvsc.grid import GridImage, LevelSet
from tvsc.levelset import (
    CutProblem,
    cut_energy,
    isoperimetric_ok,
    monotone_levels,
    solve_cut,
    threshold_consistency,
    vanishing_level_bound,
)
from tvsc.oracles import enumerate_cuts


def networkx_cut_value(g: GridImage, lam: float, level: float) -> float:
    """Min-cut energy via networkx on an independently built graph."""
    a = (level - g.values) * g.cell_area
    G = nx.DiGraph()
    ny, nx_ = g.shape
    for i in range(ny):
        for j in range(nx_):
            p = (i, j)
            if a[i, j] > 0:
                G.add_edge(p, "t", capacity=a[i, j])
            else:
                G.add_edge("s", p, capacity=-a[i, j])
            for q in ((i + 1, j), (i, j + 1)):
                if q[0] < ny and q[1] < nx_:
                    G.add_edge(p, q, capacity=lam * g.h)
                    G.add_edge(q, p, capacity=lam * g.h)
    G.add_node("s")
    G.add_node("t")
    value = nx.maximum_flow_value(G, "s", "t")
    return value + float(a[a < 0].sum())


def test_problem_validation():
    g = GridImage(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        CutProblem(g, 0.0, 0.5)
    with pytest.raises(ValueError):
        CutProblem(g, 1.0, np.nan)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_block_energy(k):
    v = np.zeros((k + 6, k + 6))
    v[3 : 3 + k, 3 : 3 + k] = 1.0
    g = GridImage(v)
    lam = 0.05 * k
    sol = solve_cut(CutProblem(g, lam, 0.5))
    assert np.array_equal(sol.minimal.mask, v > 0)
    assert sol.energy == pytest.approx(4 * k * lam - 0.5 * k**2, abs=1e-12)


def test_level_above_maximum_is_empty():
    g = generate(DatumSpec("bumps", n=24))
    sol = solve_cut(CutProblem(g, 0.1, float(g.values.max()) + 0.01))
    assert not sol.maximal.mask.any() and sol.energy == 0.0


def test_level_below_minimum_is_everything():
    g = generate(DatumSpec("bumps", n=24))
    sol = solve_cut(CutProblem(g, 0.1, float(g.values.min()) - 0.01))
    assert sol.minimal.mask.all()


@settings(max_examples=150, deadline=None)
@given(
    st.tuples(st.integers(1, 4), st.integers(1, 4)),
    st.integers(0, 2**31 - 1),
    st.floats(0.01, 2.0),
    st.sampled_from([0.5, 1.0, 0.25]),
)
def test_cut_matches_enumeration(shape, seed, lam, h):
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 4, size=shape) * 0.5 if seed % 2 else rng.uniform(0, 1, shape)
    g = GridImage(values, h)
    t = float(rng.uniform(0, 1.5))
    sol = solve_cut(CutProblem(g, lam, t))
    best, winners = enumerate_cuts((t - g.values) * g.cell_area, lam, h)
    assert abs(sol.energy - best) <= 1e-12 * max(1.0, abs(best))
    assert abs(cut_energy(sol.minimal.mask, g, lam, t) - best) <= 1e-12 * max(1.0, abs(best))
    assert abs(cut_energy(sol.maximal.mask, g, lam, t) - best) <= 1e-12 * max(1.0, abs(best))
    # extremal: every optimal set lies between the two
    for w in winners:
        assert not np.any(sol.minimal.mask & ~w)
        assert not np.any(w & ~sol.maximal.mask)


@pytest.mark.parametrize("seed", range(4))
def test_cut_value_matches_networkx(seed):
    g = generate(DatumSpec("noisy", n=12, sigma=0.2, seed=seed, params={"base": "two_squares"}))
    for t in (0.2, 0.5, 0.8):
        assert solve_cut(CutProblem(g, 0.15, t)).energy == pytest.approx(networkx_cut_value(g, 0.15, t), abs=1e-10)


def test_monotone_in_level():
    g = generate(DatumSpec("noisy", n=32, sigma=0.3, seed=5, params={"base": "disc"}))
    for t1, t2 in [(0.2, 0.4), (0.4, 0.41), (0.5, 0.9)]:
        assert monotone_levels(g, 0.05, t1, t2)
    with pytest.raises(ValueError):
        monotone_levels(g, 0.05, 0.5, 0.2)


def test_geometric_bounds_on_optimal_sets():
    g = generate(DatumSpec("disc", n=64))
    gmax = float(g.values.max())
    for lam in (0.05, 0.1, 0.2):
        for t in (0.2, 0.5, 0.7):
            ls = solve_cut(CutProblem(g, lam, t)).minimal
            assert isoperimetric_ok(ls)
            assert vanishing_level_bound(ls, lam, gmax)


def test_isoperimetric_bound_cases():
    m = np.zeros((20, 20), bool)
    m[5:15, 5:15] = True
    assert isoperimetric_ok(LevelSet(m, 0.0, 0.1))
    assert isoperimetric_ok(LevelSet(np.zeros((4, 4), bool), 0.0))
    # a set touching the border carries a relative perimeter and is exempt
    edge = np.zeros((20, 20), bool)
    edge[:, :10] = True
    assert isoperimetric_ok(LevelSet(edge, 0.0, 0.1))


def test_vanishing_bound_fails_for_tiny_sets():
    m = np.zeros((40, 40), bool)
    m[20, 20] = True
    assert not vanishing_level_bound(LevelSet(m, 0.5, 0.05), 0.2, 1.0)
    assert vanishing_level_bound(LevelSet(m, 1.0, 0.05), 0.2, 1.0)


def test_threshold_consistency_on_small_random_images():
    rng = np.random.default_rng(9)
    for _ in range(5):
        g = GridImage(rng.uniform(0, 1, (5, 5)), 0.2)
        rep = threshold_consistency(g, 0.05, np.linspace(0.1, 0.9, 9), tol=1e-10)
        assert rep.ok, rep


def test_threshold_consistency_disc():
    g = generate(DatumSpec("disc", n=48))
    rep = threshold_consistency(g, 0.1, [0.1, 0.3, 0.5, 0.7])
    assert rep.ok, rep
