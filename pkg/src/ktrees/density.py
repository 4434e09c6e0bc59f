"""Exact rooted densities, closed-form density formulas and the balancedness oracle.

For a rooted graph (F, R) and a nonempty set S of unrooted vertices, e(S) is
the number of edges with at least one endpoint in S and d(S) = e(S)/|S|.
The graph is balanced when S = V(F) \\ R minimizes d.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import CapExceeded, InfeasibleParameters
from .graph_core import RootedGraph

DEFAULT_BALANCE_CAP = int(os.environ.get("KTREES_CAP_BALANCE", "22"))
DEFAULT_CONNECTED_CAP = int(os.environ.get("KTREES_CAP_CONNECTED", "2000000"))


def edges_incident(f: RootedGraph, s: Iterable[int]) -> int:
    s = set(s)
    return sum(1 for u, v in f.edges if u in s or v in s)


def rooted_density_of_set(f: RootedGraph, s: Iterable[int]) -> Fraction:
    s = set(s)
    if not s:
        raise ValueError("density of the empty set is undefined")
    if s & f.roots:
        raise ValueError(f"set contains root vertices {sorted(s & f.roots)}")
    if any(not 0 <= v < f.n for v in s):
        raise ValueError("vertex out of range")
    return Fraction(edges_incident(f, s), len(s))


def rooted_density(f: RootedGraph) -> Fraction:
    if not f.unrooted:
        raise ValueError("rooted graph has no unrooted vertices")
    return rooted_density_of_set(f, f.unrooted)


@dataclass(frozen=True)
class BalanceResult:
    balanced: bool
    density: Fraction
    min_density: Fraction
    counterexample: tuple[int, ...] | None
    method: str

    def __bool__(self) -> bool:
        return self.balanced

    def as_dict(self) -> dict:
        return {
            "verdict": "balanced" if self.balanced else "unbalanced",
            "density": str(self.density),
            "min_density": str(self.min_density),
            "counterexample": list(self.counterexample) if self.counterexample is not None else None,
            "method": self.method,
        }


def _local_structure(f: RootedGraph) -> tuple[list[int], list[int], list[int]]:
    """Unrooted vertex list, full degree per unrooted vertex, and in-U adjacency masks."""
    unrooted = list(f.unrooted)
    index = {v: i for i, v in enumerate(unrooted)}
    deg = [f.graph.degree(v) for v in unrooted]
    masks = [0] * len(unrooted)
    for u, v in f.edges:
        if u in index and v in index:
            masks[index[u]] |= 1 << index[v]
            masks[index[v]] |= 1 << index[u]
    return unrooted, deg, masks


def subset_edge_counts(f: RootedGraph) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """e(S) and |S| for every subset S of the unrooted vertices, indexed by bitmask.

    Built by doubling: the subsets containing vertex j are the subsets of the
    first j vertices with j added.
    """
    unrooted, deg, masks = _local_structure(f)
    m = len(unrooted)
    e = np.zeros(1 << m, dtype=np.int64)
    size = np.zeros(1 << m, dtype=np.int64)
    for j in range(m):
        half = 1 << j
        idx = np.arange(half, dtype=np.int64)
        inside = np.bitwise_count(idx & masks[j]).astype(np.int64)
        e[half:2 * half] = e[:half] + deg[j] - inside
        size[half:2 * half] = size[:half] + 1
    return e, size, unrooted


def _lex_smallest(masks: np.ndarray, unrooted: Sequence[int]) -> tuple[int, ...]:
    best = None
    for mask in masks.tolist():
        verts = tuple(unrooted[i] for i in range(len(unrooted)) if mask >> i & 1)
        if best is None or verts < best:
            best = verts
    return best


def min_density_brute(f: RootedGraph, cap: int | None = DEFAULT_BALANCE_CAP) -> tuple[Fraction, tuple[int, ...]]:
    """Minimum of d(S) over all nonempty S, with a canonical minimizer.

    Ties are broken by smallest |S|, then lexicographically smallest sorted
    vertex tuple.
    """
    m = len(f.unrooted)
    if m == 0:
        raise ValueError("rooted graph has no unrooted vertices")
    if cap is not None and m > cap:
        raise CapExceeded(f"brute-force balance check on {m} unrooted vertices exceeds cap {cap}")
    e, size, unrooted = subset_edge_counts(f)
    best_per_size = np.full(m + 1, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best_per_size, size[1:], e[1:])
    best = None
    best_k = 0
    for k in range(1, m + 1):
        val = Fraction(int(best_per_size[k]), k)
        if best is None or val < best:
            best, best_k = val, k
    hits = np.flatnonzero((size == best_k) & (e == best_per_size[best_k]))
    return best, _lex_smallest(hits, unrooted)


def connected_unrooted_subsets(f: RootedGraph, cap: int | None = DEFAULT_CONNECTED_CAP):
    """Yield every nonempty set of unrooted vertices inducing a connected subgraph of F - R.

    Each set is produced exactly once (extension by exclusive neighbours of
    vertices larger than the seed).
    """
    unrooted = list(f.unrooted)
    uset = set(unrooted)
    nbrs = {v: f.graph.adj[v] & uset for v in unrooted}
    count = 0
    for v in unrooted:
        stack = [(frozenset([v]), frozenset(w for w in nbrs[v] if w > v), frozenset(nbrs[v]) | {v})]
        while stack:
            sub, ext, closed = stack.pop()
            count += 1
            if cap is not None and count > cap:
                raise CapExceeded(f"connected subset enumeration exceeded cap {cap}")
            yield sub
            ext_list = sorted(ext)
            for i, w in enumerate(ext_list):
                rest = frozenset(ext_list[i + 1:])
                new = frozenset(u for u in nbrs[w] if u > v and u not in closed)
                stack.append((sub | {w}, rest | new, closed | nbrs[w]))


def min_density_connected(f: RootedGraph, cap: int | None = DEFAULT_CONNECTED_CAP) -> tuple[Fraction, tuple[int, ...]]:
    """Minimum of d(S) over sets inducing connected subgraphs of the unrooted part."""
    if not f.unrooted:
        raise ValueError("rooted graph has no unrooted vertices")
    deg = {v: f.graph.degree(v) for v in f.unrooted}
    best = None
    best_set: tuple[int, ...] = ()
    for sub in connected_unrooted_subsets(f, cap):
        inner = sum(1 for v in sub for w in f.graph.adj[v] if w in sub) // 2
        val = Fraction(sum(deg[v] for v in sub) - inner, len(sub))
        key = tuple(sorted(sub))
        if best is None or val < best or (val == best and (len(key), key) < (len(best_set), best_set)):
            best, best_set = val, key
    return best, best_set


def _min_cut_value(f: RootedGraph, p: int, q: int) -> tuple[int, frozenset[int]]:
    """min over S of 2q*e(S) - 2p*|S| and a minimizing S (possibly empty)."""
    unrooted = set(f.unrooted)
    g = nx.DiGraph()
    g.add_node("s")
    g.add_node("t")
    const = 0
    for v in unrooted:
        d_in = len(f.graph.adj[v] & unrooted)
        r = f.graph.degree(v) - d_in
        w = q * (2 * r + d_in) - 2 * p
        if w < 0:
            g.add_edge("s", v, capacity=-w)
            const += w
        elif w > 0:
            g.add_edge(v, "t", capacity=w)
        else:
            g.add_node(v)
    for u, v in f.edges:
        if u in unrooted and v in unrooted:
            g.add_edge(u, v, capacity=q)
            g.add_edge(v, u, capacity=q)
    cut, (source_side, _) = nx.minimum_cut(g, "s", "t")
    s = frozenset(x for x in source_side if x != "s")
    return int(cut) + const, s


def min_density_flow(f: RootedGraph) -> tuple[Fraction, tuple[int, ...]]:
    """Minimum rooted density via parametric minimum cut (Dinkelbach iteration).

    2e(S) = sum over v in S of (2 r(v) + d_U(v)) plus the number of U-edges
    leaving S, so e(S) - lam*|S| is a cut function plus a modular term.
    """
    if not f.unrooted:
        raise ValueError("rooted graph has no unrooted vertices")
    best_set = tuple(f.unrooted)
    lam = rooted_density_of_set(f, best_set)
    while True:
        value, s = _min_cut_value(f, lam.numerator, lam.denominator)
        if value >= 0 or not s:
            return lam, best_set
        best_set = tuple(sorted(s))
        lam = rooted_density_of_set(f, best_set)


def is_balanced(f: RootedGraph, cap: int | None = DEFAULT_BALANCE_CAP, method: str = "brute") -> BalanceResult:
    """Decide whether the full unrooted set minimizes rooted density.

    ``method`` is ``brute`` (all subsets, limited by ``cap``), ``connected``
    (connected subsets only), ``flow`` (parametric min cut) or ``auto``
    (brute below the cap, flow above).
    """
    d = rooted_density(f)
    if method == "auto":
        method = "brute" if cap is None or len(f.unrooted) <= cap else "flow"
    if method == "brute":
        low, witness = min_density_brute(f, cap)
    elif method == "connected":
        low, witness = min_density_connected(f)
    elif method == "flow":
        low, witness = min_density_flow(f)
    else:
        raise ValueError(f"unknown method {method!r}")
    balanced = low >= d
    return BalanceResult(balanced, d, min(low, d), None if balanced else witness, method)


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------

def density_t2(a: int, b: int) -> Fraction:
    if not 1 <= a < b:
        raise InfeasibleParameters(f"need 1 <= a < b, got a={a}, b={b}")
    return Fraction(b, a)


def density_t3_spike(a: int, b: int) -> Fraction:
    if not 1 <= a < b:
        raise InfeasibleParameters(f"need 1 <= a < b, got a={a}, b={b}")
    return Fraction(3 * b, a + b)


def density_type1(t: int, a: int, b: int, s: int) -> Fraction:
    if t < 3 or not 1 <= s <= t / 2 or not 1 <= a < b:
        raise InfeasibleParameters(f"type 1 parameters out of range: t={t}, a={a}, b={b}, s={s}")
    num = a * comb(s, 2) + b * (comb(t, 2) - 2 * comb(s, 2))
    den = a * s + b * (t - 2 * s)
    return Fraction(num, den)


def density_type2(t: int, a: int, b: int) -> Fraction:
    if t < 3 or t % 2 == 0 or a < 2 or a % 2 or b < 2 * a + 2:
        raise InfeasibleParameters(f"type 2 parameters out of range: t={t}, a={a}, b={b}")
    return Fraction(3 * t - 9, 4) + Fraction(t - 3, 2 * a) + Fraction(b, a)


def density_rooted_clique(t: int, k: int) -> Fraction:
    if not 1 <= k < t:
        raise InfeasibleParameters(f"need 1 <= k < t, got t={t}, k={k}")
    return Fraction(comb(t, 2) - comb(k, 2), t - k)


def closed_form_density(kind: str, params: Sequence[int]) -> Fraction:
    """Closed-form rooted density for a construction kind."""
    kind = kind.upper()
    if kind == "T2":
        return density_t2(*params)
    if kind == "STAR":
        _, a, b = params
        return density_t2(a, b)
    if kind == "T3_SPIKE":
        return density_t3_spike(*params)
    if kind == "T3_GLUED":
        a, b = params
        return density_type2(3, a, b)
    if kind == "TYPE1":
        return density_type1(*params)
    if kind == "TYPE2":
        return density_type2(*params)
    if kind == "ROOTED_CLIQUE":
        return density_rooted_clique(*params)
    raise ValueError(f"unknown construction kind {kind!r}")


def witness_counts(t: int, type_vector: Sequence[int]) -> tuple[int, int]:
    """Vertex and edge counts of a K_t-tree with the given type vector d_1..d_s."""
    if t < 1 or any(d < 0 for d in type_vector) or any(d for k, d in enumerate(type_vector, 1) if k >= t):
        raise InfeasibleParameters(f"bad type vector {list(type_vector)} for t={t}")
    vertices = t + sum(d * (t - k) for k, d in enumerate(type_vector, start=1))
    edges = comb(t, 2) + sum(d * (comb(t, 2) - comb(k, 2)) for k, d in enumerate(type_vector, start=1))
    return vertices, edges


# --------------------------------------------------------------------------
# Reduction helpers used as test-time cross-checks
# --------------------------------------------------------------------------

def twin_classes(f: RootedGraph) -> list[tuple[int, ...]]:
    """Classes of unrooted vertices with identical closed neighbourhoods."""
    groups: dict[frozenset[int], list[int]] = {}
    for v in f.unrooted:
        groups.setdefault(f.graph.adj[v] | {v}, []).append(v)
    return sorted(tuple(g) for g in groups.values())


def min_density_over_class_unions(f: RootedGraph, classes: Sequence[Sequence[int]]) -> Fraction:
    """Minimum of d(S) over nonempty unions of whole classes."""
    best = None
    for k in range(1, len(classes) + 1):
        for combo in itertools.combinations(classes, k):
            s = [v for c in combo for v in c]
            val = rooted_density_of_set(f, s)
            if best is None or val < best:
                best = val
    return best


def mediant_bounds(f: RootedGraph, x: Iterable[int], y: Iterable[int]) -> tuple[Fraction, Fraction, Fraction]:
    """(lower, d(X u Y), upper) for disjoint unrooted X, Y.

    The bounds are d(X) and (e(Y) - e(X, Y))/|Y|; the middle value always lies
    between them.
    """
    x, y = set(x), set(y)
    if x & y:
        raise ValueError("sets must be disjoint")
    cross = sum(1 for u, v in f.edges if (u in x and v in y) or (u in y and v in x))
    dx = rooted_density_of_set(f, x)
    dy = Fraction(edges_incident(f, y) - cross, len(y))
    return min(dx, dy), rooted_density_of_set(f, x | y), max(dx, dy)
