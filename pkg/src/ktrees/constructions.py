"""Deterministic generators for the rooted tree families and their clique witnesses.

Labeling convention: unrooted spine vertices first, in spine order, followed by
root vertices and spikes in construction order.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CapExceeded, InfeasibleParameters
from .graph_core import Graph, RootedGraph, invariant_key, rooted_isomorphic

DEFAULT_POWER_CAP = int(os.environ.get("KTREES_CAP_POWER", "14"))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InfeasibleParameters(msg)


# --------------------------------------------------------------------------
# Trees
# --------------------------------------------------------------------------

def leaf_positions(a: int, b: int) -> list[int]:
    """0-based spine index of each root leaf, in leaf-label order."""
    return [(k * a) // (b - a) for k in range(b - a)] + [a - 1]


def bc_tree(a: int, b: int) -> RootedGraph:
    """Spine path of ``a`` unrooted vertices with ``b - a + 1`` root leaves.

    The leaves hang off the spine at the positions ``floor(1 + k*a/(b-a))``
    for ``k < b - a`` plus one extra leaf at the far end, giving ``b`` edges.
    """
    _require(isinstance(a, int) and isinstance(b, int) and 1 <= a < b,
             f"bc_tree needs 1 <= a < b, got a={a}, b={b}")
    edges = [(i, i + 1) for i in range(a - 1)]
    pos = leaf_positions(a, b)
    for j, i in enumerate(pos):
        edges.append((i, a + j))
    n = a + len(pos)
    return RootedGraph(Graph(n, tuple(edges)), frozenset(range(a, n)))


def star_tree(t: int, a: int, b: int) -> RootedGraph:
    """bc_tree(a, b) with ``t - 1`` extra root leaves on every root next to an odd spine vertex."""
    _require(t >= 1, f"star_tree needs t >= 1, got {t}")
    base = bc_tree(a, b)
    edges = list(base.edges)
    n = base.n
    pos = leaf_positions(a, b)
    for j, i in enumerate(pos):
        if i % 2 == 0:  # 1-based index i+1 is odd
            root = a + j
            for _ in range(t - 1):
                edges.append((root, n))
                n += 1
    return RootedGraph(Graph(n, tuple(edges)), frozenset(range(a, n)))


def t3_spike(a: int, b: int) -> RootedGraph:
    """bc_tree(a, b) with a triangle erected on every edge."""
    return ktree_type1(3, a, b, 1)


def ktree_type1(t: int, a: int, b: int, s: int) -> RootedGraph:
    """Blow up each tree vertex to an s-clique and put a (t-2s)-clique of spikes on every edge."""
    _require(t >= 3, f"type 1 K_t-tree needs t >= 3, got {t}")
    _require(1 <= s and 2 * s <= t, f"type 1 K_t-tree needs 1 <= s <= t/2, got s={s}")
    _require(1 <= a and a + 1 <= b, f"type 1 K_t-tree needs 1 <= a < b, got a={a}, b={b}")
    tree = bc_tree(a, b)
    block = {v: list(range(v * s, (v + 1) * s)) for v in range(tree.n)}
    n = tree.n * s
    edges: list[tuple[int, int]] = []
    for v in range(tree.n):
        edges.extend(itertools.combinations(block[v], 2))
    k = t - 2 * s
    for u, v in tree.edges:
        edges.extend(itertools.product(block[u], block[v]))
        spikes = list(range(n, n + k))
        n += k
        edges.extend(itertools.combinations(spikes, 2))
        edges.extend(itertools.product(spikes, block[u] + block[v]))
    roots = frozenset(x for r in tree.roots for x in block[r])
    return RootedGraph(Graph(n, tuple(edges)), roots)


@dataclass(frozen=True)
class GluedLayout:
    """Where the cliques of a glued K_3-tree sit.

    ``path`` is the walk v_1, x_1..x_a, v_{a+2}; ``joints[k]`` is the root
    forming a triangle with ``path[k]`` and ``path[k+1]``; ``apexes`` lists
    (apex, x_{2i-1}, x_{2i}) for the rooted triangles added above 3a+1.
    """

    path: tuple[int, ...]
    joints: tuple[int, ...]
    apexes: tuple[tuple[int, int, int], ...] = ()


class _UnionFind:
    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def _t3_glued_base(a: int, b: int, spare: tuple[int, int] = (2, 2)) -> tuple[RootedGraph, GluedLayout]:
    """``spare`` picks which of the three rooted neighbours of x_1 and x_a is not
    used as z or w; the default leaves out the largest label."""
    tree = bc_tree(a, b)
    rooted_nbrs = [sorted(v for v in tree.graph.adj[i] if v in tree.roots) for i in range(a)]
    for i, nb in enumerate(rooted_nbrs):
        allowed = (2, 3) if i in (0, a - 1) else (1, 2)
        if len(nb) not in allowed:
            raise AssertionError(
                f"spine vertex x_{i + 1} of T2({a},{b}) has {len(nb)} rooted neighbours, expected {allowed}")

    left: dict[int, int] = {}   # l_i
    right: dict[int, int] = {}  # r_i
    single: dict[int, int] = {}  # y_i
    extra_edges = []
    ends = {}
    for i, nb in enumerate(rooted_nbrs):
        if len(nb) == 1:
            single[i] = nb[0]
        elif len(nb) == 2:
            left[i], right[i] = nb
            if i in (0, a - 1):
                extra_edges.append((nb[0], nb[1]))
                ends[i] = nb[0] if i == 0 else nb[1]
        else:
            third = nb[spare[0] if i == 0 else spare[1]]
            z, w = (v for v in nb if v != third)
            extra_edges.append((z, w))
            if i == 0:
                right[i] = third
                ends[i] = z
            else:
                left[i] = third
                ends[i] = w
    multi = [i for i in range(a) if len(rooted_nbrs[i]) >= 2]
    uf = _UnionFind(tree.roots)
    for j in range(len(multi) - 1):
        lo, hi = multi[j], multi[j + 1]
        uf.union(right[lo], left[hi])
        for i in range(lo + 1, hi):
            uf.union(right[lo], single[i])

    classes: dict[int, list[int]] = {}
    for r in sorted(tree.roots):
        classes.setdefault(uf.find(r), []).append(r)
    order = sorted(classes.values(), key=min)
    relabel = {i: i for i in range(a)}
    for k, members in enumerate(order):
        for r in members:
            relabel[r] = a + k
    n = a + len(order)
    edges = {tuple(sorted((relabel[u], relabel[v]))) for u, v in tree.edges}
    edges |= {tuple(sorted((relabel[u], relabel[v]))) for u, v in extra_edges}
    g = Graph(n, tuple(edges))
    f = RootedGraph(g, frozenset(range(a, n)))

    path = [relabel[ends[0]]] + list(range(a)) + [relabel[ends[a - 1]]]
    joints = []
    for k in range(len(path) - 1):
        common = sorted((g.adj[path[k]] & g.adj[path[k + 1]]) & f.roots)
        if len(common) != 1:
            raise AssertionError(f"expected one root closing a triangle on {path[k]}-{path[k + 1]}, got {common}")
        joints.append(common[0])
    return f, GluedLayout(tuple(path), tuple(joints))


def _t3_glued_layout(a: int, b: int, spare: tuple[int, int] = (2, 2)) -> tuple[RootedGraph, GluedLayout]:
    if b <= 3 * a + 1:
        return _t3_glued_base(a, b, spare)
    f, layout = _t3_glued_layout(a, b - a, spare)
    n = f.n
    edges = list(f.edges)
    apexes = list(layout.apexes)
    for i in range(a // 2):
        x1, x2 = 2 * i, 2 * i + 1
        edges += [(x1, n), (x2, n)]
        apexes.append((n, x1, x2))
        n += 1
    g = RootedGraph(Graph(n, tuple(edges)), f.roots | frozenset(range(f.n, n)))
    return g, GluedLayout(layout.path, layout.joints, tuple(apexes))


def t3_glued(a: int, b: int) -> RootedGraph:
    """Glue the root leaves of bc_tree(a, b) into a K_3-tree of density b/a."""
    _require(a >= 2 and a % 2 == 0, f"t3_glued needs a positive even a, got {a}")
    _require(2 * a + 2 <= b, f"t3_glued needs 2a+2 <= b, got a={a}, b={b}")
    return _t3_glued_layout(a, b)[0]


def ktree_type2(t: int, a: int, b: int) -> RootedGraph:
    """Blow up the spine path of t3_glued(a, b), with both ends, into (t-1)/2-cliques."""
    _require(t >= 3 and t % 2 == 1, f"type 2 K_t-tree needs odd t >= 3, got {t}")
    _require(a >= 2 and a % 2 == 0, f"type 2 K_t-tree needs a positive even a, got {a}")
    _require(2 * a + 2 <= b, f"type 2 K_t-tree needs 2a+2 <= b, got a={a}, b={b}")
    return _type2_with_blocks(t, a, b)[0]


def _type2_with_blocks(t: int, a: int, b: int):
    base, layout = _t3_glued_layout(a, b)
    h = (t - 1) // 2
    big = set(layout.path)
    blocks: dict[int, list[int]] = {}
    n = 0
    for v in range(base.n):
        size = h if v in big else 1
        blocks[v] = list(range(n, n + size))
        n += size
    edges: list[tuple[int, int]] = []
    for v in range(base.n):
        edges.extend(itertools.combinations(blocks[v], 2))
    for u, v in base.edges:
        edges.extend(itertools.product(blocks[u], blocks[v]))
    roots = frozenset(x for r in base.roots for x in blocks[r])
    return RootedGraph(Graph(n, tuple(edges)), roots), layout, blocks


def rooted_clique(t: int, k: int) -> RootedGraph:
    """K_t with its last ``k`` vertices rooted."""
    _require(1 <= k < t, f"rooted clique needs 1 <= k < t, got t={t}, k={k}")
    g = Graph(t, tuple(itertools.combinations(range(t), 2)))
    return RootedGraph(g, frozenset(range(t - k, t)))


def plus_graph(t: int) -> Graph:
    """K_t with one pendant vertex."""
    edges = list(itertools.combinations(range(t), 2)) + [(0, t)]
    return Graph(t + 1, tuple(edges))


# --------------------------------------------------------------------------
# Witnesses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Ordered clique sequence certifying a K_t-tree.

    ``attach[i - 1]`` is the 0-based index of the earlier clique that clique
    ``i`` is glued onto (so ``len(attach) == len(cliques) - 1``).
    """

    cliques: tuple[frozenset[int], ...]
    attach: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.cliques[0])

    @property
    def b(self) -> int:
        return len(self.cliques)

    def intersections(self) -> list[int]:
        return [len(self.cliques[i] & self.cliques[j]) for i, j in enumerate(self.attach, start=1)]

    def glue_size(self) -> int:
        return max(self.intersections(), default=0)

    def type_vector(self) -> list[int]:
        """d_k = number of gluing steps with intersection size k, for k = 1..glue size."""
        sizes = self.intersections()
        return [sizes.count(k) for k in range(1, max(sizes, default=0) + 1)]

    def vertices(self) -> frozenset[int]:
        return frozenset().union(*self.cliques)

    def edges(self) -> frozenset[tuple[int, int]]:
        out = set()
        for c in self.cliques:
            out.update(itertools.combinations(sorted(c), 2))
        return frozenset(out)

    def to_graph(self) -> Graph:
        """The union of the cliques, relabelled densely."""
        verts = sorted(self.vertices())
        index = {v: i for i, v in enumerate(verts)}
        return Graph(len(verts), tuple((index[u], index[v]) for u, v in self.edges()))

    def as_dict(self) -> dict:
        return {
            "cliques": [sorted(c) for c in self.cliques],
            "attach": list(self.attach),
            "glue_size": self.glue_size(),
            "type_vector": self.type_vector(),
        }

    def validate(self, host: Graph | None = None) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        if not self.cliques:
            return ["empty witness"]
        t = len(self.cliques[0])
        if any(len(c) != t for c in self.cliques):
            problems.append("cliques have different sizes")
        if len(self.attach) != len(self.cliques) - 1:
            problems.append("attach list has wrong length")
            return problems
        seen = set(self.cliques[0])
        for i in range(1, len(self.cliques)):
            j = self.attach[i - 1]
            cur = self.cliques[i]
            if not 0 <= j < i:
                problems.append(f"clique {i} attaches to later clique {j}")
                continue
            if cur & seen != cur & self.cliques[j]:
                problems.append(f"clique {i} meets earlier cliques outside clique {j}")
            inter = cur & self.cliques[j]
            if not inter or inter == cur:
                problems.append(f"clique {i} meets clique {j} in {len(inter)} vertices")
            seen |= cur
        if host is not None:
            verts = self.vertices()
            for c in self.cliques:
                for u, v in itertools.combinations(c, 2):
                    if not host.has_edge(u, v):
                        problems.append(f"missing host edge ({u}, {v})")
            host_edges = {e for e in host.edges if e[0] in verts and e[1] in verts}
            if host_edges != set(self.edges()):
                problems.append("clique edges differ from host edges on the clique vertices")
        return problems


def _type1_witness(t: int, a: int, b: int, s: int) -> Witness:
    tree = bc_tree(a, b)
    k = t - 2 * s
    block = {v: set(range(v * s, (v + 1) * s)) for v in range(tree.n)}
    spike_start = tree.n * s
    edge_cliques = {}
    for idx, (u, v) in enumerate(tree.edges):
        spikes = set(range(spike_start + idx * k, spike_start + (idx + 1) * k))
        edge_cliques[(u, v)] = frozenset(block[u] | block[v] | spikes)
    order: list[tuple[int, int]] = []
    for i in range(a):
        if i > 0:
            order.append((i - 1, i))
        order.extend(sorted((i, w) for w in tree.graph.adj[i] if w >= a))
    cliques = [edge_cliques[e] for e in order]
    attach = []
    for pos in range(1, len(order)):
        shared = order[pos][0]  # spine vertex this edge hangs from
        j = next(q for q in range(pos) if shared in order[q])
        attach.append(j)
    return Witness(tuple(cliques), tuple(attach))


def _type2_witness(t: int, a: int, b: int) -> Witness:
    _, layout, blocks = _type2_with_blocks(t, a, b)
    path, joints = layout.path, layout.joints
    cliques = []
    for k in range(len(path) - 1):
        c = set(blocks[path[k]]) | set(blocks[path[k + 1]]) | set(blocks[joints[k]])
        cliques.append(frozenset(c))
    attach = list(range(len(cliques) - 1))
    for apex, x1, x2 in layout.apexes:
        c = frozenset(set(blocks[x1]) | set(blocks[x2]) | set(blocks[apex]))
        # spine vertex x sits at path[x + 1], so this pair is clique x1 + 1
        attach.append(x1 + 1)
        cliques.append(c)
    return Witness(tuple(cliques), tuple(attach))


# --------------------------------------------------------------------------
# Construction ids
# --------------------------------------------------------------------------

PARAM_NAMES: dict[str, tuple[str, ...]] = {
    "T2": ("a", "b"),
    "STAR": ("t", "a", "b"),
    "T3_SPIKE": ("a", "b"),
    "T3_GLUED": ("a", "b"),
    "TYPE1": ("t", "a", "b", "s"),
    "TYPE2": ("t", "a", "b"),
    "ROOTED_CLIQUE": ("t", "k"),
}

_BUILDERS = {
    "T2": bc_tree,
    "STAR": star_tree,
    "T3_SPIKE": t3_spike,
    "T3_GLUED": t3_glued,
    "TYPE1": ktree_type1,
    "TYPE2": ktree_type2,
    "ROOTED_CLIQUE": rooted_clique,
}


@dataclass(frozen=True, order=True)
class ConstructionId:
    kind: str
    params: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        if kind not in PARAM_NAMES:
            raise InfeasibleParameters(f"unknown construction kind {self.kind!r}")
        if len(self.params) != len(PARAM_NAMES[kind]):
            raise InfeasibleParameters(
                f"{kind} takes parameters {PARAM_NAMES[kind]}, got {self.params}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(int(x) for x in self.params))

    def build(self) -> RootedGraph:
        return _BUILDERS[self.kind](*self.params)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(zip(PARAM_NAMES[self.kind], self.params))}

    @classmethod
    def from_dict(cls, doc: dict) -> ConstructionId:
        kind = str(doc["kind"]).upper()
        names = PARAM_NAMES.get(kind)
        if names is None:
            raise InfeasibleParameters(f"unknown construction kind {doc['kind']!r}")
        params = doc["params"]
        return cls(kind, tuple(params[k] for k in names))

    def __str__(self) -> str:
        return f"{self.kind}({','.join(map(str, self.params))})"


def canonical_witness(c: ConstructionId) -> Witness:
    if c.kind == "TYPE1":
        t, a, b, s = c.params
        ktree_type1(t, a, b, s)  # range checks
        return _type1_witness(t, a, b, s)
    if c.kind == "T3_SPIKE":
        a, b = c.params
        return canonical_witness(ConstructionId("TYPE1", (3, a, b, 1)))
    if c.kind == "TYPE2":
        t, a, b = c.params
        ktree_type2(t, a, b)
        return _type2_witness(t, a, b)
    if c.kind == "T3_GLUED":
        a, b = c.params
        return canonical_witness(ConstructionId("TYPE2", (3, a, b)))
    raise InfeasibleParameters(f"{c.kind} is not a K_t-tree construction")


# --------------------------------------------------------------------------
# Powers
# --------------------------------------------------------------------------

def _copy_key(f: RootedGraph, mapping: dict[int, int]) -> tuple:
    verts = frozenset(mapping[u] for u in f.unrooted)
    edges = frozenset(tuple(sorted((mapping[u], mapping[v]))) for u, v in f.edges)
    return verts, edges


def distinct_root_fixing_copies(h: RootedGraph, f: RootedGraph, limit: int | None = None) -> list[tuple]:
    """All distinct copies of ``f`` inside ``h`` fixing the roots pointwise.

    Copies are identified by (image of unrooted vertices, image edge set).
    """
    unrooted = list(f.unrooted)
    targets = [v for v in range(h.n) if v not in f.roots]
    seen: set[tuple] = set()
    out: list[tuple] = []
    mapping = {r: r for r in f.roots}
    for r in f.roots:
        if r >= h.n:
            return []
    # order unrooted vertices so each is adjacent to something placed if possible
    order: list[int] = []
    placed = set(f.roots)
    rest = set(unrooted)
    while rest:
        v = min(rest, key=lambda x: (-len(f.graph.adj[x] & placed), x))
        order.append(v)
        placed.add(v)
        rest.discard(v)
    used: set[int] = set()

    def extend(i: int) -> bool:
        if i == len(order):
            key = _copy_key(f, mapping)
            if key not in seen:
                seen.add(key)
                out.append(key)
                if limit is not None and len(out) >= limit:
                    return True
            return False
        v = order[i]
        for w in targets:
            if w in used:
                continue
            ok = all(h.graph.has_edge(mapping[u], w) for u in f.graph.adj[v] if u in mapping)
            if not ok:
                continue
            mapping[v] = w
            used.add(w)
            if extend(i + 1):
                return True
            del mapping[v]
            used.discard(w)
        return False

    extend(0)
    return out


def is_power_member(h: RootedGraph, f: RootedGraph, ell: int) -> bool:
    """Is ``h`` (with the same root labels as ``f``) a union of ``ell`` distinct copies of ``f``?

    A union of ``ell`` distinct copies exists iff some cover of the vertices
    and edges of ``h`` uses at most ``ell`` copies and at least ``ell``
    copies exist in total.
    """
    copies = distinct_root_fixing_copies(h, f)
    if len(copies) < ell:
        return False
    target_v = frozenset(v for v in range(h.n) if v not in f.roots)
    target_e = frozenset(h.edges)
    for k in range(1, ell + 1):
        for combo in itertools.combinations(copies, k):
            vs = frozenset().union(*(c[0] for c in combo))
            es = frozenset().union(*(c[1] for c in combo))
            if vs == target_v and es == target_e:
                return True
    return False


def power_members(f: RootedGraph, ell: int, cap: int | None = DEFAULT_POWER_CAP) -> list[RootedGraph]:
    """All graphs formed by ``ell`` distinct copies of ``f`` sharing the root set, up to isomorphism.

    Roots keep their labels; copy one uses the labels of ``f``; new vertices
    are numbered from ``f.n`` upwards. Results are sorted by (n, edges).
    """
    if ell < 1:
        raise InfeasibleParameters("ell must be at least 1")
    u = len(f.unrooted)
    if cap is not None and u * ell > cap:
        raise CapExceeded(f"power enumeration needs |U|*ell = {u * ell} > cap {cap}")
    if ell == 1:
        return [f]

    unrooted = list(f.unrooted)
    # state: (frozenset of edges, n). Copies are added one at a time; a copy
    # sends each unrooted vertex to an existing non-root vertex or a fresh one.
    start = (frozenset(f.edges), f.n)
    frontier = {start}
    for _ in range(ell - 1):
        nxt = set()
        for edges, n in frontier:
            existing = [v for v in range(n) if v not in f.roots]
            for choice in itertools.product(range(len(existing) + 1), repeat=len(unrooted)):
                # index len(existing) means "fresh"; fresh ones numbered in order
                mapping = {r: r for r in f.roots}
                fresh = n
                used = set()
                ok = True
                for v, c in zip(unrooted, choice):
                    if c == len(existing):
                        mapping[v] = fresh
                        fresh += 1
                    else:
                        w = existing[c]
                        if w in used:
                            ok = False
                            break
                        mapping[v] = w
                        used.add(w)
                if not ok:
                    continue
                new_edges = edges | {tuple(sorted((mapping[x], mapping[y]))) for x, y in f.edges}
                nxt.add((frozenset(new_edges), fresh))
        frontier = _dedupe_states(nxt, f)

    result = []
    for edges, n in frontier:
        h = RootedGraph(Graph(n, tuple(edges)), f.roots)
        if is_power_member(h, f, ell):
            result.append(h)
    return _dedupe_rooted(sorted(result, key=lambda g: (g.n, g.edges)), fix_roots=True)


def _fix_colors(f: RootedGraph) -> list[int]:
    return [r + 1 if r in f.roots else 0 for r in range(f.n)]


def _dedupe_states(states: set, f: RootedGraph) -> set:
    graphs = [RootedGraph(Graph(n, tuple(e)), f.roots) for e, n in states]
    graphs.sort(key=lambda g: (g.n, g.edges))
    kept = _dedupe_rooted(graphs, fix_roots=True)
    return {(frozenset(g.edges), g.n) for g in kept}


def _dedupe_rooted(graphs: Sequence[RootedGraph], fix_roots: bool) -> list[RootedGraph]:
    buckets: dict[tuple, list[RootedGraph]] = {}
    out = []
    for g in graphs:
        colors = _fix_colors(g) if fix_roots else [int(v in g.roots) for v in range(g.n)]
        key = invariant_key(g.graph, colors)
        bucket = buckets.setdefault(key, [])
        if any(rooted_isomorphic(g, h, fix_roots=fix_roots, cap=None) for h in bucket):
            continue
        bucket.append(g)
        out.append(g)
    return out
