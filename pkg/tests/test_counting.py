from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ktrees.complexes import BuilderParams, TComplex, clique_complex, strong_builder_thresholds
from ktrees.constructions import ConstructionId, canonical_witness, is_power_member
from ktrees.counting import (
    automorphism_count,
    check_certificate,
    check_star_prune,
    count_cliques,
    count_cliques_oracle,
    count_copies,
    count_embeddings,
    count_witness_copies,
    count_witness_copies_bruteforce,
    embedding_lower_bound,
    find_power_member,
    predicted_count,
    rooted_copies_by_root,
    star_prune,
    supersaturation_check,
)
from ktrees.errors import CapExceeded
from ktrees.graph_core import (
    Graph,
    RootedGraph,
    complete_graph,
    cycle_graph,
    path_graph,
    petersen_graph,
    star_graph,
)


def random_graph(n, p, rng):
    return Graph(n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p])


def brute_copies(g, f):
    """Oracle: distinct edge sets of injective images of f."""
    seen = set()
    for image in itertools.permutations(range(g.n), f.n):
        if all(g.has_edge(image[u], image[v]) for u, v in f.edges):
            seen.add(frozenset(tuple(sorted((image[u], image[v]))) for u, v in f.edges) | {frozenset(image)})
    return len(seen)


@pytest.mark.parametrize("seed", range(50))
def test_clique_counts_match_oracle(seed):
    rng = random.Random(seed)
    g = random_graph(rng.randint(1, 13), rng.uniform(0.2, 0.9), rng)
    for i in range(1, 6):
        assert count_cliques(g, i) == count_cliques_oracle(g, i)


def test_clique_count_closed_forms():
    assert count_cliques(complete_graph(8), 4) == comb(8, 4)
    assert count_cliques(petersen_graph(), 3) == 0
    assert count_cliques(cycle_graph(5), 0) == 1


def test_clique_cap():
    with pytest.raises(CapExceeded):
        count_cliques(complete_graph(12), 5, cap=10)


@pytest.mark.parametrize("f", [path_graph(3), path_graph(4), cycle_graph(4), star_graph(3), complete_graph(3),
                               Graph(5, [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)])])
def test_copy_counts_match_oracle(f):
    rng = random.Random(f.n * 31 + f.num_edges)
    for _ in range(4):
        g = random_graph(7, 0.5, rng)
        assert count_copies(g, f) == brute_copies(g, f)
        assert count_embeddings(g, f) == count_copies(g, f) * automorphism_count(f)


def test_automorphisms():
    assert automorphism_count(cycle_graph(5)) == 10
    assert automorphism_count(petersen_graph()) == 120
    assert automorphism_count(star_graph(3)) == 6


def test_copies_in_complete_graph_are_maximal():
    # every injective map is an embedding, so counts equal n!/(n-k)!/|Aut|
    n = 9
    g = complete_graph(n)
    for f in [path_graph(3), path_graph(4), star_graph(3), cycle_graph(4)]:
        expect = math.perm(n, f.n) // automorphism_count(f)
        assert count_copies(g, f) == expect


# --------------------------------------------------------------------------
# Witness copies
# --------------------------------------------------------------------------

WITNESSES = [ConstructionId("TYPE1", (3, 1, 2, 1)), ConstructionId("TYPE1", (3, 2, 3, 1)),
             ConstructionId("TYPE1", (4, 1, 2, 2))]


@pytest.mark.parametrize("cid", WITNESSES)
def test_witness_copies_match_bruteforce(cid):
    w = canonical_witness(cid)
    rng = random.Random(7)
    for _ in range(3):
        g = random_graph(7, 0.8, rng)
        c = clique_complex(g, w.t)
        assert count_witness_copies(c, w) == count_witness_copies_bruteforce(c, w)


def test_witness_copies_in_small_cliques():
    w = canonical_witness(ConstructionId("TYPE1", (3, 1, 2, 1)))
    assert count_witness_copies(clique_complex(complete_graph(5), 3), w) == 10 * 3
    assert count_witness_copies(clique_complex(complete_graph(6), 3), w) == 20 * 9
    assert count_witness_copies(clique_complex(complete_graph(4), 3), w) == 0
    # the witness graph itself: its two triangles in either order
    assert count_witness_copies(clique_complex(w.to_graph(), 3), w) == 2


def test_lower_bound_below_count():
    for cid in WITNESSES:
        w = canonical_witness(cid)
        r = cid.build().n
        for m in range(w.t + r, w.t + r + 2):
            c = clique_complex(complete_graph(m), w.t)
            s = max(1, w.glue_size())
            B, ell = strong_builder_thresholds(c, s, r)
            if min(B) <= 0:
                continue
            p = BuilderParams(w.t, s, ell, r, B)
            assert embedding_lower_bound(c, w, p) <= count_witness_copies(c, w)


def test_lower_bound_value():
    w = canonical_witness(ConstructionId("TYPE1", (4, 1, 2, 2)))
    c = clique_complex(complete_graph(7), 4)
    p = BuilderParams(4, 2, 5, 0, (Fraction(3), Fraction(5)))
    assert embedding_lower_bound(c, w, p) == 35 * 5


# --------------------------------------------------------------------------
# Star pruning
# --------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_star_prune_fixed_point(seed):
    rng = random.Random(seed)
    n = rng.randint(5, 60)
    g = random_graph(n, rng.uniform(0.05, 0.5), rng)
    t = rng.randint(1, 3)
    res = star_prune(g, t, rng.randint(1, 12))
    assert check_star_prune(res) == []


def test_star_prune_star_graph():
    res = star_prune(star_graph(5), 2, 3)
    assert res.initial_count == 10
    # the centre sits in 10 stars, each leaf in 4
    assert res.count == 10 and res.l1 >= {0} and res.l2 >= {1, 2, 3, 4, 5}
    res = star_prune(star_graph(5), 2, 5)
    assert res.count == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 14), st.floats(0.1, 0.9), st.integers(1, 3), st.integers(1, 6), st.randoms(use_true_random=False))
def test_star_prune_order_independent(n, p, t, theta, rnd):
    g = random_graph(n, p, rnd)
    perm = list(range(n))
    rnd.shuffle(perm)
    a = star_prune(g, t, theta)
    b = star_prune(g.relabel(perm), t, theta)
    assert {perm[v] for v in a.l1} == set(b.l1)
    assert a.count == b.count


def test_star_prune_listing_matches_count():
    g = random_graph(25, 0.3, random.Random(2))
    res = star_prune(g, 2, 4)
    assert sum(1 for _ in res.stars()) == res.count


# --------------------------------------------------------------------------
# Rooted copies and powers
# --------------------------------------------------------------------------

ROOTED_EDGE = RootedGraph(Graph(2, [(0, 1)]), frozenset({0}))


def test_rooted_copies_of_edge():
    assert rooted_copies_by_root(star_graph(2), ROOTED_EDGE) == {(0,): 2, (1,): 1, (2,): 1}
    assert rooted_copies_by_root(complete_graph(3), ROOTED_EDGE) == {(0,): 2, (1,): 2, (2,): 2}


def test_rooted_copies_of_cherry():
    f = ConstructionId("T2", (1, 2)).build()
    k23 = Graph(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])
    counts = rooted_copies_by_root(k23, f)
    roots = sorted(f.roots)
    assert counts[(0, 1)] == 3 and counts[(1, 0)] == 3
    assert len(roots) == 2


def test_find_power_member_examples():
    f = ConstructionId("T2", (1, 2)).build()
    cert = find_power_member(f.graph, f, 1)
    assert cert is not None and len(cert.copies) == 1
    assert find_power_member(f.graph, f, 2) is None
    g = complete_graph(7)
    cert = find_power_member(g, f, 3)
    assert cert is not None and check_certificate(g, f, 3, cert) == []
    assert is_power_member(cert.union_graph(f), f, 3)


@pytest.mark.parametrize("seed", range(15))
def test_pigeonhole(seed):
    rng = random.Random(seed)
    g = random_graph(rng.randint(5, 10), rng.uniform(0.3, 0.8), rng)
    f = rng.choice([ROOTED_EDGE, ConstructionId("T2", (1, 2)).build(), ConstructionId("ROOTED_CLIQUE", (3, 2)).build()])
    L = rng.randint(1, 3)
    by_root = rooted_copies_by_root(g, f)
    cert = find_power_member(g, f, L)
    if by_root and sum(by_root.values()) >= L * len(by_root):
        assert cert is not None
    assert (cert is not None) == any(v >= L for v in by_root.values())
    if cert is not None:
        assert check_certificate(g, f, L, cert) == []


def test_embedding_cap():
    with pytest.raises(CapExceeded):
        rooted_copies_by_root(complete_graph(10), ConstructionId("T2", (2, 4)).build(), cap=50)


# --------------------------------------------------------------------------
# Supersaturation report
# --------------------------------------------------------------------------

def test_predicted_count_log_space():
    assert predicted_count(10, 0.5, 3, 2) == pytest.approx(250)
    assert predicted_count(10, 0.0, 3, 2) == 0
    assert math.isfinite(predicted_count(10**6, 0.5, 40, 300))


def test_report_on_empty_graph():
    rep = supersaturation_check(Graph(20), 3, ConstructionId("T2", (1, 2)), 20, 0.3)
    assert all(r.ratio == 0 for r in rep.rows)
    assert rep.to_csv().splitlines()[0] == "quantity,actual,predicted,ratio"


def test_report_on_complete_graph():
    n = 12
    rep = supersaturation_check(complete_graph(n), 3, ConstructionId("T2", (1, 2)), n, 1.0)
    counts = {r.quantity: r.actual for r in rep.rows}
    assert counts["K2"] == comb(n, 2) and counts["K3"] == comb(n, 3)
    # the cherry count is the maximum possible in any n-vertex graph
    assert counts["T2(1,2)"] == n * comb(n - 1, 2)


def test_report_marks_capped_rows():
    rep = supersaturation_check(complete_graph(12), 3, ConstructionId("TYPE1", (3, 2, 3, 1)), 12, 1.0, cap=10)
    assert rep.rows[-1].capped and rep.rows[-1].actual is None
    assert "capped" in rep.to_csv()
