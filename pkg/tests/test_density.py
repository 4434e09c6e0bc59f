from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ktrees.constructions import (
    ConstructionId,
    bc_tree,
    canonical_witness,
    ktree_type1,
    ktree_type2,
    star_tree,
    t3_glued,
    t3_spike,
)
from ktrees.density import (
    closed_form_density,
    density_type1,
    density_type2,
    is_balanced,
    mediant_bounds,
    min_density_brute,
    min_density_connected,
    min_density_flow,
    min_density_over_class_unions,
    rooted_density,
    rooted_density_of_set,
    subset_edge_counts,
    twin_classes,
    witness_counts,
)
from ktrees.errors import InfeasibleParameters
from ktrees.graph_core import Graph, RootedGraph


def naive_min_density(f):
    """Oracle: plain loops over all nonempty subsets of unrooted vertices."""
    best = None
    unrooted = list(f.unrooted)
    for k in range(1, len(unrooted) + 1):
        for s in itertools.combinations(unrooted, k):
            ss = set(s)
            e = sum(1 for u, v in f.graph.edges if u in ss or v in ss)
            d = Fraction(e, k)
            if best is None or d < best:
                best = d
    return best


@st.composite
def rooted_graphs(draw, max_n=9):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = Graph(n, [e for e, keep in zip(pairs, mask) if keep])
    k = draw(st.integers(0, n - 1))
    roots = draw(st.permutations(range(n)))[:k]
    return RootedGraph(g, frozenset(roots))


def test_density_of_spine_set():
    f = bc_tree(5, 7)
    assert rooted_density_of_set(f, f.unrooted) == Fraction(7, 5)


def test_density_of_spike_vertex():
    f = t3_spike(5, 7)
    spikes = [v for v in f.unrooted if f.graph.degree(v) == 2]
    assert spikes
    assert rooted_density_of_set(f, [spikes[0]]) == 2


def test_single_vertex_density_is_degree():
    f = t3_glued(4, 10)
    for v in f.unrooted:
        assert rooted_density_of_set(f, [v]) == f.graph.degree(v)


@pytest.mark.parametrize("bad", [[], [5], [99]])
def test_density_of_set_rejects(bad):
    f = bc_tree(5, 7)
    with pytest.raises(ValueError):
        rooted_density_of_set(f, bad)


@pytest.mark.parametrize("t,a,b", [(2, 3, 7), (3, 5, 9), (4, 2, 9)])
def test_star_tree_density(t, a, b):
    assert rooted_density(star_tree(t, a, b)) == Fraction(b, a)


@pytest.mark.parametrize("a,b", [(1, 2), (2, 3), (5, 7), (4, 9)])
def test_spike_density(a, b):
    assert rooted_density(t3_spike(a, b)) == Fraction(3 * b, a + b)


@pytest.mark.parametrize("t,a,b", [(3, 4, 10), (5, 4, 10), (5, 2, 7), (7, 2, 6)])
def test_type2_density(t, a, b):
    expect = Fraction(3 * t - 9, 4) + Fraction(t - 3, 2 * a) + Fraction(b, a)
    assert rooted_density(ktree_type2(t, a, b)) == expect == density_type2(t, a, b)


def test_closed_form_values():
    assert density_type1(4, 4, 7, 2) == 4
    assert density_type2(3, 4, 10) == Fraction(5, 2)
    assert density_type2(5, 4, 10) == Fraction(17, 4)
    for a, b in [(1, 2), (3, 5)]:
        assert density_type1(3, a, b, 1) == Fraction(3 * b, a + b)


@pytest.mark.parametrize("cid", [
    ConstructionId("T2", (3, 8)),
    ConstructionId("STAR", (3, 2, 7)),
    ConstructionId("T3_SPIKE", (3, 5)),
    ConstructionId("T3_GLUED", (4, 10)),
    ConstructionId("TYPE1", (4, 3, 5, 2)),
    ConstructionId("TYPE2", (5, 2, 6)),
    ConstructionId("ROOTED_CLIQUE", (4, 2)),
])
def test_closed_form_matches_graph(cid):
    assert rooted_density(cid.build()) == closed_form_density(cid.kind, cid.params)


def test_rooted_clique_density():
    assert closed_form_density("ROOTED_CLIQUE", (3, 2)) == 2
    assert closed_form_density("ROOTED_CLIQUE", (4, 2)) == Fraction(5, 2)
    assert closed_form_density("ROOTED_CLIQUE", (6, 5)) == 5


def test_spike_counterexample():
    res = is_balanced(t3_spike(1, 3))
    assert not res.balanced
    assert res.density == Fraction(9, 4) and res.min_density == 2
    f = t3_spike(1, 3)
    assert len(res.counterexample) == 1 and f.graph.degree(res.counterexample[0]) == 2
    assert res.as_dict()["verdict"] == "unbalanced"


@pytest.mark.parametrize("a,b", [(a, b) for b in range(2, 9) for a in range(1, b)])
def test_bc_tree_balanced(a, b):
    assert is_balanced(bc_tree(a, b)).balanced


def test_type2_balanced():
    assert is_balanced(ktree_type2(5, 4, 10)).balanced


@settings(max_examples=80, deadline=None)
@given(rooted_graphs())
def test_min_density_methods_agree(f):
    if not f.unrooted:
        return
    expect = naive_min_density(f)
    low, s = min_density_brute(f)
    assert low == expect and rooted_density_of_set(f, s) == low
    assert min_density_connected(f)[0] == expect
    low_flow, s_flow = min_density_flow(f)
    assert low_flow == expect and rooted_density_of_set(f, s_flow) == low_flow


@settings(max_examples=50, deadline=None)
@given(rooted_graphs())
def test_balance_methods_agree(f):
    if not f.unrooted:
        return
    verdicts = {is_balanced(f, method=m).balanced for m in ("brute", "connected", "flow")}
    assert len(verdicts) == 1


def test_subset_edge_counts_against_loops():
    rng = random.Random(5)
    g = Graph(9, [e for e in itertools.combinations(range(9), 2) if rng.random() < 0.4])
    f = RootedGraph(g, frozenset({0, 1, 2}))
    counts, sizes, order = subset_edge_counts(f)
    for mask in range(1, 1 << len(order)):
        s = {order[i] for i in range(len(order)) if mask >> i & 1}
        e = sum(1 for u, v in g.edges if u in s or v in s)
        assert counts[mask] == e and sizes[mask] == len(s)


def test_brute_cap():
    from ktrees.errors import CapExceeded

    with pytest.raises(CapExceeded):
        min_density_brute(t3_spike(5, 9), cap=10)


def test_flow_handles_large_instance():
    f = ktree_type1(5, 8, 13, 2)
    assert len(f.unrooted) > 22  # beyond the brute-force cap
    assert is_balanced(f, method="auto").balanced


def test_witness_counts_examples():
    assert witness_counts(3, [1]) == (5, 6)
    assert witness_counts(5, []) == (5, 10)
    assert witness_counts(3, [0, 1]) == (4, 5)
    with pytest.raises(InfeasibleParameters):
        witness_counts(3, [0, 0, 1])
    with pytest.raises(InfeasibleParameters):
        witness_counts(3, [-1])


@pytest.mark.parametrize("cid", [
    ConstructionId("TYPE1", (3, 2, 5, 1)),
    ConstructionId("TYPE1", (6, 2, 3, 3)),
    ConstructionId("TYPE2", (5, 4, 10)),
    ConstructionId("T3_GLUED", (6, 15)),
])
def test_witness_counts_match_graph(cid):
    w = canonical_witness(cid)
    g = w.to_graph()
    assert witness_counts(w.t, w.type_vector()) == (g.n, g.num_edges)


@pytest.mark.parametrize("t,a,b,s", [(4, 2, 3, 2), (5, 2, 3, 2), (6, 3, 4, 3)])
def test_block_respecting_minimizer(t, a, b, s):
    # twins can be merged: the minimum over unions of twin classes is the true minimum
    f = ktree_type1(t, a, b, s)
    assert min_density_over_class_unions(f, twin_classes(f)) == naive_min_density(f)


@settings(max_examples=60, deadline=None)
@given(rooted_graphs(), st.randoms(use_true_random=False))
def test_mediant_lies_between(f, rnd):
    u = list(f.unrooted)
    if len(u) < 2:
        return
    rnd.shuffle(u)
    k = rnd.randint(1, len(u) - 1)
    lo, mid, hi = mediant_bounds(f, u[:k], u[k:])
    assert lo <= mid <= hi


def test_density_of_unions_exact_boundary():
    # density exactly at the boundary value stays exact
    f = ktree_type1(5, 2, 3, 2)
    d = rooted_density(f)
    assert d == Fraction(2 * comb(2, 2) + 3 * (comb(5, 2) - 2), 2 * 2 + 3)
