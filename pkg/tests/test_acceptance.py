"""Acceptance criteria, one test each.

Every test runs the named suite, restates the thresholds here and records a
single PASS/FAIL line that is printed in the terminal summary.
"""

import operator

import pytest

from conftest import ACCEPTANCE_LINES
from tvsc.suites import run_suite

OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt, "==": operator.eq}


def evaluate(number, suite, expected):
    """Compare each named measurement of ``suite`` with the restated threshold.

    ``expected`` maps a check-name prefix to ``(relation, threshold)``; every
    measurement must be matched by exactly one prefix.
    """
    res = run_suite(suite)
    failures, parts = [], []
    for c in res.checks:
        keys = [k for k in expected if c.name.startswith(k)]
        assert len(keys) == 1, f"unmatched measurement {c.name!r}"
        rel, thr = expected[keys[0]]
        ok = OPS[rel](c.value, thr)
        parts.append(f"{c.name} = {c.value:.4g} ({rel} {thr:g})")
        if not ok:
            failures.append(parts[-1])
    for k in expected:
        assert any(c.name.startswith(k) for c in res.checks), f"missing measurement {k!r}"
    verdict = "PASS" if not failures else "FAIL"
    worst = failures[0] if failures else parts[0]
    ACCEPTANCE_LINES[number] = f"criterion {number:2d} [{verdict}] {suite} ({res.seconds:.0f} s): {worst}"
    assert not failures, "; ".join(failures)
    return res


def test_criterion_01_disc_closed_form():
    evaluate(1, "disc-closed-form", {"max |u - 0.8 chi_D|": ("<=", 0.02), "runtime": ("<=", 60.0)})


@pytest.mark.slow
def test_criterion_02_extinction():
    res = evaluate(
        2,
        "extinction",
        {"|lam*(padded disc) - 1/2|": ("<=", 0.02), "|lam*(disc in B(0,4)) - 15/32|": ("<=", 0.01), "runtime": ("<=", 300.0)},
    )
    assert res.info["ball"] == pytest.approx(15 / 32, abs=0.01)


def test_criterion_03_levelset_exact():
    evaluate(
        3,
        "levelset-exact",
        {
            "max |cut energy - enumeration|": ("<=", 1e-12),
            "optimal masks outside": ("==", 0),
            "threshold-consistent levels": ("==", 9),
            # level_tol * area + 1e-12 * osc * area on [-2, 2]^2 with unit oscillation
            "max threshold energy excess": ("<=", 1e-4 * 16 + 1e-12 * 16),
            "runtime": ("<=", 120.0),
        },
    )


@pytest.mark.slow
def test_criterion_04_staircase_bound():
    evaluate(4, "staircase-bound", {"flat_area / bound": (">=", 1.0), "clipping margin": (">", 0.0)})


def test_criterion_05_radial_comparison():
    evaluate(
        5,
        "radial-comparison",
        {"min (z_lam - lam) - (z_mu - mu)": (">=", -1e-6), "max |z_lam - z_mu| - |lam - mu|": ("<=", 1e-6), "runtime": ("<=", 60.0)},
    )


def test_criterion_06_radial_semigroup():
    evaluate(6, "radial-semigroup", {"semigroup defect": ("<=", 1e-3), "flow vs resolvent": ("<=", 1e-3)})


@pytest.mark.slow
def test_criterion_07_nonradial_flow():
    evaluate(7, "nonradial-flow", {"max |flow(64) - T_0.15| / solver tol": (">", 10.0), "origin-trace curvature": (">", 10.0)})


@pytest.mark.slow
def test_criterion_08_nonmonotone_staircase():
    evaluate(8, "nonmonotone-staircase", {"area(S_11/64 minus S_7/32)": (">", 1.0), "radial dual-slack nesting": ("==", 0)})


def test_criterion_09_jump_inclusion():
    evaluate(9, "jump-inclusion", {"jump chain holds": ("==", 1.0)})


def test_criterion_10_oracles():
    evaluate(
        10,
        "oracles",
        {
            "max |radial N=1 - taut string|": ("<=", 1e-8),
            "max relative |grad - finite differences|": ("<=", 1e-6),
            "integer images with tv != coarea sum": ("==", 0),
        },
    )
