import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obstacle_bbm.blocks import BlockDivision, optimal_blocks, random_landscape
from obstacle_bbm.errors import EmptyLandscape
from obstacle_bbm.foc import foc_residual
from obstacle_bbm.landscape import validate_landscape
from obstacle_bbm.oracle import TimeAllocation, prefix_gains
from obstacle_bbm.plan import block_constants, crossing_plan, f_of, feasibility, frontier, total_time

# mpmath references, 30 significant digits
F_TWO_NINTHS = 1.04662945494045968399713453617
X_SINGLE = 0.313988836482137905199140360852
Y_SINGLE = 0.117184085682602034193020127301
T_SINGLE = 0.431172922164739939392160488153
H_SINGLE = 0.804442968119680946046019946585
LIMIT_SINGLE = 1.30444296811968094604601994659
T_UNIT = 1.83711730708738357364796305796
B_STAR_UNIT = 0.280262105671736999
F_SMALL = 0.807325503615225983

widths = st.fractions(min_value=Fraction(1, 32), max_value=32, max_denominator=32)
landscapes = st.lists(st.tuples(widths, widths), min_size=1, max_size=6).map(validate_landscape)


def test_block_constants_single(single):
    k = block_constants(single, BlockDivision((0, 1)), 0)
    assert k.c_tilde == pytest.approx(2 / 9, abs=1e-15)
    assert k.f_value == pytest.approx(F_TWO_NINTHS, abs=1e-14)
    f, c = k.f_value, k.c_tilde
    assert f**4 - (1 + c) * f**2 + 0.25 - c / 2 == pytest.approx(0, abs=1e-14)


def test_block_constants_unit():
    k = block_constants(validate_landscape([(1, 1)]), BlockDivision((0, 1)), 0)
    assert k.c_tilde == 0.5
    assert k.f_value == pytest.approx(math.sqrt(1.5), abs=1e-15)


@settings(max_examples=200)
@given(st.floats(min_value=0, max_value=1e6))
def test_speed_factor_exceeds_inverse_sqrt2(c):
    assert f_of(c) > 1 / math.sqrt(2)


def test_single_obstacle_plan(single):
    p = crossing_plan(single)
    assert p.x_star[0] == pytest.approx(X_SINGLE, abs=1e-14)
    assert p.y_star[0] == pytest.approx(Y_SINGLE, abs=1e-14)
    assert p.total_time == pytest.approx(T_SINGLE, abs=1e-14)
    assert p.c_star == ()


def test_one_block_pair_is_proportional():
    L = validate_landscape([(1, Fraction(1, 10)), (1, Fraction(3, 10))])
    p = crossing_plan(L)
    assert p.division.cuts == (0, 2)
    assert p.constants[0].c_tilde == pytest.approx(0.02, abs=1e-15)
    assert p.x_star[0] == p.x_star[1] == pytest.approx(F_SMALL, abs=1e-14)
    assert p.y_star[1] / p.y_star[0] == pytest.approx(3, rel=1e-14)
    assert p.c_star[0] > 0


def test_equal_landscape_symmetric_times(equal3):
    p = crossing_plan(equal3)
    assert len(set(p.x_star)) == 1 and len(set(p.y_star)) == 1
    assert p.c_star == (0.0, 0.0)


def test_empty_landscape_rejected():
    with pytest.raises(EmptyLandscape):
        crossing_plan(validate_landscape([]))
    with pytest.raises(EmptyLandscape):
        feasibility(validate_landscape([]))


def test_feasibility_examples(single):
    t, ok = feasibility(single)
    assert ok and t == pytest.approx(T_SINGLE, abs=1e-14)
    t, ok = feasibility(validate_landscape([(1, 1)]))
    assert not ok and t == pytest.approx(T_UNIT, abs=1e-14)


def test_scaling_doubles_total_time(single):
    assert feasibility(single.scaled(2))[0] == pytest.approx(2 * T_SINGLE, rel=1e-15)


def test_frontier_single(single):
    fr = frontier(single)
    assert fr.feasible
    assert fr.h_star == pytest.approx(H_SINGLE, abs=1e-14)
    assert fr.limit_over_t == pytest.approx(LIMIT_SINGLE, abs=1e-14)


def test_frontier_homogeneous():
    fr = frontier(validate_landscape([]))
    assert fr.h_star == math.sqrt(2) and fr.limit_over_t == math.sqrt(2)


def test_frontier_unit_obstacle_partial_crossing():
    fr = frontier(validate_landscape([(1, 1)]))
    assert not fr.feasible and fr.h_star is None
    assert fr.partial.ell_hat_star == 0
    assert fr.partial.b_star == pytest.approx(B_STAR_UNIT, abs=1e-12)
    assert fr.limit_over_t == pytest.approx(1 + B_STAR_UNIT, abs=1e-12)
    assert fr.limit_over_t < 2


def test_frontier_stops_inside_branching_stretch():
    # first obstacle is easy, the second branching stretch is too long to finish
    L = validate_landscape([(Fraction(1, 10), Fraction(1, 10)), (4, 1)])
    fr = frontier(L)
    assert fr.partial.ell_hat_star == 1 and fr.partial.b_star is None
    expected = 0.2 + math.sqrt(2) * (1 - feasibility(L.truncated(1))[0])
    assert fr.limit_over_t == pytest.approx(expected, abs=1e-14)


def test_boundary_case_counts_as_feasible():
    # b chosen so the single obstacle is crossed in exactly the full budget
    L = validate_landscape([(1, 1)])
    fr = frontier(L)
    edge = L.truncated(1, last_b=Fraction(fr.partial.b_star))
    t, ok = feasibility(edge)
    assert ok and t == pytest.approx(1, abs=2e-12)


def _plan_allocation(p):
    return TimeAllocation(p.x_star, p.y_star)


@settings(max_examples=200, deadline=None)
@given(landscapes)
def test_plan_lies_on_the_equality_surface(L):
    p = crossing_plan(L)
    gains = prefix_gains(L, _plan_allocation(p))
    scale = max(1.0, float(L.height))
    assert abs(gains[-1]) < 1e-9 * scale
    cuts = set(p.division.cuts)
    for m, c in enumerate(p.c_star, start=1):
        assert gains[m - 1] == pytest.approx(c, abs=1e-9 * scale)
        if m in cuts:
            assert c == 0.0
        else:
            assert c > 0


@settings(max_examples=200, deadline=None)
@given(landscapes)
def test_plan_satisfies_first_order_condition(L):
    p = crossing_plan(L)
    e = p.exponents
    for m in range(L.ell):
        a, b = float(L.a[m]), float(L.b[m])
        res = foc_residual(a, b, e[m], e[m + 1], p.x_star[m])
        assert abs(res) < 1e-9 * max(1.0, a * a, b * b)
    for u, v in p.division.blocks:
        ratios = [float(L.a[m]) / p.x_star[m] for m in range(u, v)]
        assert max(ratios) - min(ratios) <= 1e-12 * max(ratios)


@settings(max_examples=100, deadline=None)
@given(landscapes, st.randoms(use_true_random=False))
def test_block_time_invariant_under_permutation(L, rnd):
    d = optimal_blocks(L)
    pairs = list(L.pairs)
    for u, v in d.blocks:
        chunk = pairs[u:v]
        rnd.shuffle(chunk)
        pairs[u:v] = chunk
    shuffled = validate_landscape(pairs)
    before = crossing_plan(L).constants
    after = crossing_plan(shuffled, d).constants
    for k0, k1 in zip(before, after):
        assert k0.block_time == pytest.approx(k1.block_time, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(landscapes)
def test_h_star_bounded(L):
    fr = frontier(L)
    if fr.feasible:
        assert 0 <= fr.h_star < math.sqrt(2)
        assert fr.limit_over_t == pytest.approx(float(L.height) + fr.h_star, rel=1e-14)
    else:
        assert fr.limit_over_t < float(L.height)


@settings(max_examples=60, deadline=None)
@given(landscapes, st.integers(min_value=0, max_value=5), st.fractions(min_value=Fraction(1, 20), max_value=1))
def test_frontier_nonincreasing_in_obstacle_width(L, i, shrink):
    i %= L.ell
    b = list(L.b)
    b[i] = b[i] * shrink
    smaller = validate_landscape(list(zip(L.a, b)))
    assert frontier(smaller).limit_over_t >= frontier(L).limit_over_t - 1e-9


def test_frontier_continuous_through_feasibility_boundary():
    base = [(Fraction(1, 5), Fraction(1, 5)), (Fraction(3, 10), Fraction(1, 1))]
    step = 1e-3
    values = []
    for k in range(1000):
        b = Fraction(1) - Fraction(k, 1000)
        L = validate_landscape([base[0], (base[1][0], b)])
        values.append(frontier(L))
    flags = [v.feasible for v in values]
    assert not flags[0] and flags[-1]
    lims = [v.limit_over_t for v in values]
    assert max(abs(u - w) for u, w in zip(lims, lims[1:])) <= 10 * step


def test_total_time_matches_plan_on_fuzz():
    rng = random.Random(2)
    for _ in range(300):
        L = random_landscape(rng, rng.randint(1, 6))
        assert total_time(L) == pytest.approx(crossing_plan(L).total_time, rel=1e-14)
        p = crossing_plan(L)
        assert p.total_time == pytest.approx(math.fsum(p.x_star) + math.fsum(p.y_star), rel=1e-12)
