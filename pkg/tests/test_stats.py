"""Exact binomial statistics tests; all expected values are exact rationals."""

import random
from fractions import Fraction

import pytest

from physmodels.encodings import pair
from physmodels.exact_arith import poly
from physmodels.model_core import Budget, ObservationLog, enumerate_range
from physmodels.stats import (
    algebraic_code,
    algebraic_decode,
    binom_pmf,
    bounds,
    bounds_grid_scan,
    build_piecewise,
    decay_restriction,
    interval_estimate,
    interval_estimate_decode,
    max_alpha,
    reject,
    tail_prob,
)

F = Fraction


def test_pmf_anchors():
    assert binom_pmf(0, F(1, 3), 0) == 1
    assert binom_pmf(0, F(0), 0) == 1  # 0**0 == 1 convention
    assert binom_pmf(0, F(1), 0) == 1
    assert binom_pmf(3, F(1, 3), 2) == F(2, 9)
    assert binom_pmf(2, F(1, 2), 1) == F(1, 2)
    with pytest.raises(ValueError):
        binom_pmf(2, F(1, 2), 3)
    with pytest.raises(ValueError):
        binom_pmf(2, F(3, 2), 1)


def test_pmf_normalization():
    rng = random.Random(13)
    ratios = [F(rng.randint(0, 50), 50) for _ in range(50)]
    for i in range(21):
        for b in ratios:
            assert sum(binom_pmf(i, b, j) for j in range(i + 1)) == 1


def test_tail_prob_anchors():
    assert tail_prob(3, 2, F(1, 3)) == F(5, 9)
    assert tail_prob(3, 2, F(0)) == 0
    assert tail_prob(3, 2, F(5, 6)) == 1
    for m, n in ((1, 1), (4, 2), (7, 3)):
        assert tail_prob(m, n, F(n, m)) == 1
    with pytest.raises(ValueError):
        tail_prob(2, 3, F(1, 2))


def test_reject_anchors():
    assert reject(3, 2, F(1, 3), F(1, 3)) is False  # 5/9 >= 1/3
    assert reject(3, 0, F(5, 6), F(1, 3)) is True  # 1/216 < 1/3
    assert reject(0, 0, F(1, 2), F(1, 2)) is False  # tail probability 1
    with pytest.raises(ValueError):
        reject(3, 2, F(1, 3), F(1))


def test_piecewise_anchor_polynomials():
    pw = build_piecewise(3, 2)
    assert pw.pieces[0] == poly(0, 0, 3, -2)  # 3b^2 - 2b^3
    assert pw.pieces[1] == poly(0, 0, 3, -2)
    assert pw.pieces[2] == poly(1, -3, 6, -3)  # 1 - 3b(1-b)^2
    assert pw.pieces[5] == poly(1, 0, 0, -1)  # 1 - b^3
    assert pw.breakpoint_values[2] == F(5, 9)


def test_piecewise_limits_and_discontinuities():
    pw = build_piecewise(3, 2)
    from physmodels.exact_arith import poly_eval

    assert poly_eval(pw.pieces[1], F(1, 3)) == F(7, 27)  # left limit at 1/3
    assert poly_eval(pw.pieces[2], F(1, 3)) == F(5, 9)  # right limit at 1/3
    assert pw.breakpoint_values[5] == 1  # value at 5/6
    assert poly_eval(pw.pieces[5], F(5, 6)) == F(91, 216)  # right limit at 5/6
    assert pw.discontinuities() == [F(1, 3), F(1, 2), F(5, 6)]


def test_piecewise_matches_direct_summation():
    rng = random.Random(2026)
    for m in range(1, 8):
        for n in range(m + 1):
            pw = build_piecewise(m, n)
            for i in range(2 * m):
                lo, hi = pw.breakpoint(i), pw.breakpoint(i + 1)
                for _ in range(4):
                    b = lo + (hi - lo) * F(rng.randint(1, 63), 64)
                    assert pw.evaluate(b) == tail_prob(m, n, b)
            for i in range(2 * m + 1):
                assert pw.evaluate(pw.breakpoint(i)) == tail_prob(m, n, pw.breakpoint(i))


def test_piecewise_matches_interpolation_oracle():
    """Each piece, rebuilt by exact Lagrange interpolation of the direct sum,
    equals the symbolically assembled polynomial coefficient for coefficient."""
    from physmodels.exact_arith import interpolate

    for m, n in ((1, 0), (2, 1), (3, 2), (4, 4), (5, 2)):
        pw = build_piecewise(m, n)
        for i in range(2 * m):
            lo, hi = pw.breakpoint(i), pw.breakpoint(i + 1)
            nodes = [lo + (hi - lo) * F(j, m + 3) for j in range(1, m + 2)]
            oracle = interpolate(lambda b: tail_prob(m, n, b), nodes)
            padded = oracle + (F(0),) * (len(pw.pieces[i]) - len(oracle))
            assert padded == pw.pieces[i]


def test_bounds_worked_example():
    glb, lub = bounds(3, 2, F(1, 3))
    assert glb.rational == F(1, 3)
    assert lub.polynomial == poly(-2, 0, 0, 3)  # 3x^3 - 2
    assert lub.isolating.lo >= 0 and lub.isolating.hi <= 1
    lo, hi = lub.decimal_enclosure(6)
    assert lo == "0.873580" and hi == "0.873581"


def test_bounds_zero_trials():
    for alpha in (F(1, 4), F(1, 2), F(3, 4)):
        glb, lub = bounds(0, 0, alpha)
        assert glb.rational == 0 and lub.rational == 1


def test_bounds_single_trial():
    glb, lub = bounds(1, 1, F(1, 2))
    assert glb.rational == F(1, 2) and lub.rational == 1
    # mirrored measurement
    glb, lub = bounds(1, 0, F(1, 2))
    assert glb.rational == 0 and lub.rational == F(1, 2)


def test_bounds_contain_the_observed_ratio():
    for m in range(1, 7):
        for n in range(m + 1):
            for alpha in (F(1, 4), F(1, 3), F(1, 2)):
                glb, lub = bounds(m, n, alpha)
                assert glb.compare(F(n, m)) <= 0
                assert lub.compare(F(n, m)) >= 0


def test_bounds_against_grid_oracle_small():
    cell = F(1, 256)
    for m in range(1, 6):
        for n in range(m + 1):
            for alpha in (F(1, 4), F(1, 2)):
                glb, lub = bounds(m, n, alpha)
                grid_lo, grid_hi = bounds_grid_scan(m, n, alpha, grid=256)
                assert glb.compare(grid_lo) <= 0
                assert glb.compare(grid_lo - cell) >= 0
                assert lub.compare(grid_hi) >= 0
                assert lub.compare(grid_hi + cell) <= 0


def test_bounds_with_high_significance_level():
    # only the plateau where the tail probability is exactly 1 survives,
    # so both endpoints are breakpoints
    glb, lub = bounds(3, 2, F(99, 100))
    assert glb.rational == F(1, 2) and lub.rational == F(5, 6)
    grid_lo, grid_hi = bounds_grid_scan(3, 2, F(99, 100), grid=240)
    assert grid_lo == F(1, 2) and grid_hi == F(5, 6)


def test_bounds_larger_degree_against_fine_grid():
    cell = F(1, 2048)
    for n in (0, 4, 10):
        glb, lub = bounds(10, n, F(1, 3))
        grid_lo, grid_hi = bounds_grid_scan(10, n, F(1, 3), grid=2048)
        assert glb.compare(grid_lo) <= 0 and glb.compare(grid_lo - cell) >= 0
        assert lub.compare(grid_hi) >= 0 and lub.compare(grid_hi + cell) <= 0


def test_algebraic_descriptor_roundtrip():
    glb, lub = bounds(3, 2, F(1, 3))
    for value in (glb, lub):
        decoded = algebraic_decode(algebraic_code(value))
        assert decoded.rational == value.rational
        assert decoded.polynomial == value.polynomial
        assert decoded.isolating == value.isolating


def test_interval_estimate_code():
    code = interval_estimate(3, 2, F(1, 3))
    glb, lub = interval_estimate_decode(code)
    assert glb.rational == F(1, 3)
    assert lub.polynomial == poly(-2, 0, 0, 3)
    refined = lub.refine(F(1, 10**6))
    assert refined.width <= F(1, 10**6)
    assert refined.lo < F(873581, 10**6) and refined.hi > F(873580, 10**6)

    code = interval_estimate(0, 0, F(1, 2))
    glb, lub = interval_estimate_decode(code)
    assert glb.rational == 0 and lub.rational == 1


def test_decay_restriction_membership():
    model = decay_restriction(F(1, 2), F(1))
    allowed = enumerate_range(model, "f", Budget(200))
    for m in range(6):
        assert pair(m, m) in allowed
    assert pair(3, 2) not in allowed

    allowed = enumerate_range(decay_restriction(F(1, 3), F(1, 3)), "f", Budget(200))
    assert pair(3, 2) in allowed  # 5/9 >= 1/3

    allowed = enumerate_range(decay_restriction(F(2, 3), F(1, 3)), "f", Budget(200))
    assert pair(3, 2) not in allowed  # 5/9 < 2/3


def test_reject_iff_absent_from_restriction_range():
    budget = Budget(256)
    for alpha in (F(1, 4), F(1, 3)):
        for b in (F(1, 3), F(1)):
            allowed = enumerate_range(decay_restriction(alpha, b), "f", budget)
            for m in range(7):
                for n in range(m + 1):
                    assert reject(m, n, b, alpha) == (pair(m, n) not in allowed)


def test_max_alpha():
    log = ObservationLog.from_pairs([("f", pair(m, m)) for m in range(11)])
    assert max_alpha(log, F(1)) == 1
    assert max_alpha(ObservationLog.from_pairs([("f", pair(3, 2))]), F(1, 3)) == F(5, 9)
    assert max_alpha(ObservationLog.from_pairs([]), F(1, 2)) is None
    with pytest.raises(ValueError):
        max_alpha(ObservationLog.from_pairs([("f", pair(2, 3))]), F(1, 2))
