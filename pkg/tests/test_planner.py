from __future__ import annotations

from fractions import Fraction
from math import ceil, comb, floor

import numpy as np
import pytest

from ktrees.constructions import ConstructionId, plus_graph
from ktrees.density import density_type1, density_type2, is_balanced, rooted_density
from ktrees.errors import InfeasibleParameters
from ktrees.graph_core import Graph, complete_graph, star_graph
from ktrees.planner import (
    as_fraction,
    classify_star_family,
    density_to_exponent,
    endpoint_families,
    exponent_to_density,
    is_subgraph,
    plan_family,
    plan_for_density,
    plan_star_family,
    random_admissible_rationals,
    solve_type1,
    solve_type2,
    type1_interval,
)


@pytest.mark.parametrize("t,r,d", [(2, Fraction(3, 2), 2), (3, 2, 3), (4, Fraction(7, 2), 12)])
def test_exponent_to_density(t, r, d):
    assert exponent_to_density(t, r) == d
    assert density_to_exponent(t, d) == r


@pytest.mark.parametrize("r", [1, 3, Fraction(1, 2)])
def test_exponent_out_of_range(r):
    with pytest.raises(InfeasibleParameters):
        exponent_to_density(3, r)


def test_floats_rejected():
    with pytest.raises(TypeError):
        as_fraction(0.5)


def test_solve_type1_examples():
    assert solve_type1(3, 1, 2) == (1, 2)
    assert solve_type1(4, 2, 4) == (4, 7)
    assert density_type1(4, 4, 7, 2) == 4
    with pytest.raises(InfeasibleParameters):
        solve_type1(3, 1, Fraction(3, 2))


def test_solve_type2_examples():
    assert solve_type2(3, Fraction(5, 2)) == (4, 10)
    assert solve_type2(3, 3) == (2, 6)
    a, b = solve_type2(5, Fraction(9, 2))
    assert density_type2(5, a, b) == Fraction(9, 2)


@pytest.mark.parametrize("t", [3, 4, 5, 6, 7])
def test_type1_round_trip(t):
    rng = np.random.default_rng(t)
    for s in range(1, t // 2 + 1):
        low, high = type1_interval(t, s)
        for d in random_admissible_rationals(rng, low, high, 40):
            a, b = solve_type1(t, s, d)
            assert 0 < a < b
            assert density_type1(t, a, b, s) == d


@pytest.mark.parametrize("t", [3, 5, 7])
def test_type2_round_trip(t):
    rng = np.random.default_rng(100 + t)
    for d in random_admissible_rationals(rng, Fraction(t - 1), None, 40):
        a, b = solve_type2(t, d)
        assert a > 0 and a % 2 == 0 and b >= 2 * a + 2
        assert density_type2(t, a, b) == d


@pytest.mark.parametrize("t,s", [(3, 1), (5, 1), (5, 2), (7, 3)])
def test_interval_endpoints(t, s):
    low, high = type1_interval(t, s)
    with pytest.raises(InfeasibleParameters):
        solve_type1(t, s, low)
    a, b = solve_type1(t, s, high)
    assert density_type1(t, a, b, s) == high


def test_plan_density_two():
    plan = plan_for_density(3, 2)
    assert [str(c) for c in plan.member_ids()] == ["T2(1,2)", "TYPE1(3,1,2,1)", "ROOTED_CLIQUE(3,2)"]
    top = plan.case_trace[-1]
    assert top["case"] == "1.1" and top["s"] == 1 and top["s_prime"] == 1
    assert plan_family(3, Fraction(3, 2)).member_ids() == plan.member_ids()


def test_plan_exponent_two_is_case_two():
    # exponent 2 gives density 3 > t - 1, which lands in the odd-t type 2 case
    plan = plan_family(3, 2)
    assert plan.density == 3
    assert plan.case_trace[-1]["case"] == "2"


def test_plan_seven_thirds():
    plan = plan_family(3, Fraction(7, 3))
    assert plan.density == Fraction(9, 2)
    assert plan.case_trace[-1]["case"] == "2"
    a, b = solve_type2(3, Fraction(9, 2))
    assert ConstructionId("TYPE2", (3, a, b)) in plan.member_ids()
    assert ConstructionId("T2", (2, 9)) in plan.member_ids()


def test_plan_base_case():
    plan = plan_family(2, Fraction(3, 2))
    assert [str(c) for c in plan.member_ids()] == ["T2(1,2)"]
    assert plan.density == 2


@pytest.mark.parametrize("t,r", [(4, Fraction(3, 2)), (4, Fraction(5, 2)), (5, Fraction(4, 3)), (5, Fraction(7, 2))])
def test_plan_members_sound(t, r):
    plan = plan_family(t, r)
    d = plan.density
    assert d == Fraction(comb(t, 2)) / (t - r)
    for c in plan.member_ids():
        f = c.build()
        assert rooted_density(f) >= d
        assert is_balanced(f, method="auto").balanced
    for step in plan.case_trace:
        i = step["level"]
        if step["case"] in ("1.1", "1.2"):
            assert step["s"] == min(ceil(2 * d - i), floor(i / 2))
        if step["case"] == "1.1":
            assert step["s_prime"] == ceil(2 * d - i)


def test_plan_json_has_trace():
    text = plan_family(3, Fraction(7, 3)).to_json()
    assert '"case_trace"' in text and '"power": "L"' in text


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_star_plan_boundary(t):
    if t == 1:
        with pytest.raises(InfeasibleParameters):
            plan_star_family(1, 1)
        return
    plan = plan_star_family(t, t)
    a, b = plan.case_trace[0]["a"], plan.case_trace[0]["b"]
    assert (a, b) == (1, t) and b == t * a


def test_star_plan_examples():
    plan = plan_star_family(3, Fraction(10, 3))
    assert [str(c) for c in plan.member_ids()] == ["STAR(1,2,9)", "STAR(2,2,9)", "STAR(3,2,9)"]
    plan = plan_star_family(2, Fraction(5, 2))
    assert [str(c) for c in plan.member_ids()] == ["STAR(1,1,4)", "STAR(2,1,4)"]


def test_star_plan_realizes_exponent():
    rng = np.random.default_rng(9)
    for t in range(2, 5):
        for r in random_admissible_rationals(rng, Fraction(t) - Fraction(1, 1000), Fraction(t + 1), 20, include_high=False):
            if r < t:
                continue
            plan = plan_star_family(t, r)
            a, b = plan.case_trace[0]["a"], plan.case_trace[0]["b"]
            assert t + 1 - Fraction(t * a, b) == r


def test_classify_star_families():
    assert classify_star_family([star_graph(4)], 3) == "linear"
    assert classify_star_family([star_graph(3)], 3) == "constant"
    assert classify_star_family([complete_graph(3)], 3) == "superpoly"
    # 2K_2 is not a star, so a large star avoids it and holds order n^t copies
    assert classify_star_family([Graph(4, ((0, 1), (2, 3)))], 3) == "superpoly"
    assert classify_star_family([star_graph(4), complete_graph(3)], 3) == "linear"


def test_endpoint_families():
    plan = endpoint_families(4, 1)
    assert len(plan.forbidden_graphs) == 1 and plan.forbidden_graphs[0].edges == plus_graph(4).edges
    assert endpoint_families(4, 4).forbidden_graphs == []
    stars = endpoint_families(3, 3, stars=True)
    assert stars.forbidden_graphs[0].num_edges == 2 and stars.forbidden_graphs[0].n == 4
    with pytest.raises(InfeasibleParameters):
        endpoint_families(4, 2)


def test_is_subgraph():
    assert is_subgraph(complete_graph(3), complete_graph(4))
    assert not is_subgraph(complete_graph(3), star_graph(5))
