"""Clique and copy counting, witness-copy counting, star pruning and power detection.

All counters count copies (injective images), never homomorphisms.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterator, Sequence

from .complexes import BuilderParams, TComplex
from .constructions import ConstructionId, Witness
from .errors import CapExceeded, InfeasibleParameters
from .graph_core import Graph, RootedGraph, complete_graph

DEFAULT_COUNT_CAP = int(os.environ.get("KTREES_CAP_COUNT", "20000000"))
DEFAULT_EMBED_CAP = int(os.environ.get("KTREES_CAP_EMBED", "5000000"))


# --------------------------------------------------------------------------
# Cliques
# --------------------------------------------------------------------------

def count_cliques(g: Graph, i: int, cap: int | None = DEFAULT_COUNT_CAP) -> int:
    """Number of i-cliques, by extending cliques through higher-numbered neighbours."""
    if i < 0:
        raise ValueError("clique size must be non-negative")
    if i == 0:
        return 1
    if i == 1:
        return g.n
    if i == 2:
        return g.num_edges
    forward = [frozenset(w for w in g.adj[v] if w > v) for v in range(g.n)]
    work = 0

    def grow(cands: frozenset[int], depth: int) -> int:
        nonlocal work
        if depth == 1:
            return len(cands)
        total = 0
        for v in cands:
            work += 1
            if cap is not None and work > cap:
                raise CapExceeded(f"clique counting exceeded work cap {cap}")
            nxt = cands & forward[v]
            if len(nxt) >= depth - 1:
                total += grow(nxt, depth - 1)
        return total

    return sum(grow(forward[v], i - 1) for v in range(g.n) if len(forward[v]) >= i - 1)


def count_cliques_oracle(g: Graph, i: int) -> int:
    """Independent check: test every i-subset for completeness."""
    return sum(1 for s in itertools.combinations(range(g.n), i)
               if all(g.has_edge(u, v) for u, v in itertools.combinations(s, 2)))


def count_stars(g: Graph, k: int) -> int:
    """Copies of the star S_k (k >= 2); for k = 1 this is the edge count."""
    if k == 1:
        return g.num_edges
    return sum(comb(g.degree(v), k) for v in range(g.n))


# --------------------------------------------------------------------------
# Witness copies in a complex
# --------------------------------------------------------------------------

def _signatures(w: Witness) -> list[tuple[int, ...]]:
    """For clique i: sorted membership masks over cliques 0..i-1 of its vertices."""
    sigs = []
    for i, clique in enumerate(w.cliques):
        masks = []
        for v in clique:
            m = 0
            for j in range(i):
                if v in w.cliques[j]:
                    m |= 1 << j
            masks.append(m)
        sigs.append(tuple(sorted(masks)))
    return sigs


def count_witness_copies(c: TComplex, w: Witness, cap: int | None = DEFAULT_COUNT_CAP) -> int:
    """Number of sequences (L_1, ..., L_b) of top sets of ``c`` that copy the witness.

    A sequence is a copy when some bijection maps clique i of the witness to
    L_i for every i; this holds exactly when every prefix has the same
    membership pattern (Venn region sizes) as the witness prefix.
    """
    if len(w.cliques[0]) != c.t:
        raise InfeasibleParameters(f"witness cliques have size {len(w.cliques[0])}, complex has t={c.t}")
    sigs = _signatures(w)
    tops = list(c.top)
    through: dict[int, list[tuple[int, ...]]] = {}
    for top in tops:
        for v in top:
            through.setdefault(v, []).append(top)
    meeting: dict[tuple[int, ...], list[tuple[int, ...]]] = {}

    def meets(anchor: tuple[int, ...]) -> list[tuple[int, ...]]:
        if anchor not in meeting:
            meeting[anchor] = sorted({top for v in anchor for top in through[v]})
        return meeting[anchor]

    b = len(w.cliques)
    chosen: list[tuple[int, ...]] = []
    member: dict[int, int] = {}  # vertex -> mask of chosen indices containing it
    work = 0

    def rec(i: int) -> int:
        nonlocal work
        if i == b:
            return 1
        cands = tops if i == 0 else meets(chosen[w.attach[i - 1]])
        work += len(cands)
        if cap is not None and work > cap:
            raise CapExceeded(f"witness copy counting exceeded work cap {cap}")
        sig = sigs[i]
        total = 0
        for cand in cands:
            if tuple(sorted([member.get(v, 0) for v in cand])) != sig:
                continue
            if i + 1 == b:
                total += 1
                continue
            chosen.append(cand)
            for v in cand:
                member[v] = member.get(v, 0) | (1 << i)
            total += rec(i + 1)
            for v in cand:
                member[v] &= ~(1 << i)
                if member[v] == 0:
                    del member[v]
            chosen.pop()
        return total

    return rec(0)


def count_witness_copies_bruteforce(c: TComplex, w: Witness) -> int:
    """Oracle: try every bijection from the witness vertices onto every vertex set of the right size."""
    verts = sorted(w.vertices())
    tops = set(c.top)
    seqs = set()
    for image in itertools.permutations(c.ground, len(verts)):
        mapping = dict(zip(verts, image))
        seq = tuple(tuple(sorted(mapping[v] for v in clique)) for clique in w.cliques)
        if all(s in tops for s in seq):
            seqs.add(seq)
    return len(seqs)


def embedding_lower_bound(c: TComplex, w: Witness, p: BuilderParams) -> Fraction:
    """|top level| times the product of B_k^(d_k) over the witness type vector."""
    d = w.type_vector()
    if len(d) > p.s:
        raise InfeasibleParameters(f"witness glue size {len(d)} exceeds s={p.s}")
    bound = Fraction(len(c.top))
    for k, dk in enumerate(d, start=1):
        bound *= p.B[k - 1] ** dk
    return bound


# --------------------------------------------------------------------------
# Star pruning
# --------------------------------------------------------------------------

@dataclass
class StarPruneResult:
    graph: Graph
    t: int
    threshold: int
    l1: frozenset[int]
    l2: frozenset[int]
    initial_count: int
    removed_count: int
    passes: int

    @property
    def count(self) -> int:
        return sum(comb(len(self.graph.adj[v] & self.l2), self.t) for v in self.l1)

    def stars(self) -> Iterator[tuple[int, tuple[int, ...]]]:
        """(center, sorted leaves) for every star of the final collection."""
        for v in sorted(self.l1):
            for leaves in itertools.combinations(sorted(self.graph.adj[v] & self.l2), self.t):
                yield v, leaves

    def center_counts(self) -> dict[int, int]:
        return {v: comb(len(self.graph.adj[v] & self.l2), self.t) for v in self.l1}

    def leaf_counts(self) -> dict[int, int]:
        out = {u: 0 for u in self.l2}
        for v, leaves in self.stars():
            for u in leaves:
                out[u] += 1
        return out


def star_prune(g: Graph, t: int, threshold: int) -> StarPruneResult:
    """Peel centers and leaves that lie in fewer than ``threshold`` surviving stars.

    Starts from all copies of S_t with L1 = L2 = V(g). Vertices are scanned in
    ascending order, repeatedly, until a full pass removes nothing.
    """
    if t < 1:
        raise InfeasibleParameters("t must be positive")
    if threshold < 1:
        raise InfeasibleParameters("threshold must be at least 1")
    initial = sum(comb(g.degree(v), t) for v in range(g.n))
    l1 = set(range(g.n))
    l2 = set(range(g.n))
    m = [g.degree(v) for v in range(g.n)]  # |N(v) & L2|
    removed = 0
    passes = 0

    def leaf_count(u: int) -> int:
        return sum(comb(m[v] - 1, t - 1) for v in g.adj[u] if v in l1)

    changed = True
    while changed:
        changed = False
        passes += 1
        for v in range(g.n):
            if v in l1:
                cc = comb(m[v], t)
                if cc < threshold:
                    l1.discard(v)
                    removed += cc
                    changed = True
            if v in l2:
                lc = leaf_count(v)
                if lc < threshold:
                    l2.discard(v)
                    removed += lc
                    for w in g.adj[v]:
                        m[w] -= 1
                    changed = True
    return StarPruneResult(g, t, threshold, frozenset(l1), frozenset(l2), initial, removed, passes)


def check_star_prune(res: StarPruneResult) -> list[str]:
    """Re-derive the fixed-point properties by scanning the explicit star list."""
    problems = []
    centers: Counter = Counter()
    leaves_of: Counter = Counter()
    total = 0
    for v, leaves in res.stars():
        total += 1
        if v not in res.l1 or not set(leaves) <= res.l2:
            problems.append(f"star at {v} leaves L1/L2")
        centers[v] += 1
        for u in leaves:
            leaves_of[u] += 1
    for v in res.l1:
        if centers[v] < res.threshold:
            problems.append(f"center {v} in {centers[v]} stars")
    for u in res.l2:
        if leaves_of[u] < res.threshold:
            problems.append(f"leaf {u} in {leaves_of[u]} stars")
    if total + res.removed_count != res.initial_count:
        problems.append("star count not conserved")
    if total < res.initial_count - 2 * res.graph.n * res.threshold:
        problems.append("too many stars removed")
    return problems


# --------------------------------------------------------------------------
# Embeddings and rooted copies
# --------------------------------------------------------------------------

def _search_order(f: Graph, first: Sequence[int] = ()) -> list[int]:
    order = list(first)
    placed = set(order)
    rest = set(range(f.n)) - placed
    while rest:
        v = min(rest, key=lambda x: (-len(f.adj[x] & placed), -f.degree(x), x))
        order.append(v)
        placed.add(v)
        rest.discard(v)
    return order


def iter_embeddings(g: Graph, f: Graph, cap: int | None = DEFAULT_EMBED_CAP,
                    order: Sequence[int] | None = None) -> Iterator[dict[int, int]]:
    """Injective edge-preserving maps f -> g (yields a shared dict; copy it to keep)."""
    order = list(order) if order is not None else _search_order(f)
    mapping: dict[int, int] = {}
    used: set[int] = set()
    work = 0

    def rec(i: int):
        nonlocal work
        if i == len(order):
            yield mapping
            return
        v = order[i]
        placed_nbrs = [mapping[u] for u in f.adj[v] if u in mapping]
        if placed_nbrs:
            cands = set(g.adj[placed_nbrs[0]])
            for x in placed_nbrs[1:]:
                cands &= g.adj[x]
            cands = sorted(cands)
        else:
            cands = range(g.n)
        for w in cands:
            if w in used:
                continue
            work += 1
            if cap is not None and work > cap:
                raise CapExceeded(f"embedding search exceeded work cap {cap}")
            mapping[v] = w
            used.add(w)
            yield from rec(i + 1)
            del mapping[v]
            used.discard(w)

    yield from rec(0)


def count_embeddings(g: Graph, f: Graph, cap: int | None = DEFAULT_EMBED_CAP) -> int:
    """Number of injective homomorphisms; the last vertex is counted, not enumerated."""
    if f.n == 0:
        return 1
    if f.n > g.n:
        return 0
    order = _search_order(f)
    last = order[-1]
    head = order[:-1]
    sub = Graph(f.n, tuple(e for e in f.edges if last not in e))
    last_nbrs = list(f.adj[last])
    total = 0
    for mp in iter_embeddings(g, sub, cap, head) if head else [dict()]:
        if last_nbrs:
            cands = set(g.adj[mp[last_nbrs[0]]])
            for u in last_nbrs[1:]:
                cands &= g.adj[mp[u]]
            total += len(cands) - sum(1 for w in mp.values() if w in cands)
        else:
            total += g.n - len(mp)
    return total


def automorphism_count(f: Graph) -> int:
    return sum(1 for _ in iter_embeddings(f, f, cap=None))


def count_copies(g: Graph, f: Graph, cap: int | None = DEFAULT_EMBED_CAP) -> int:
    """Number of subgraphs of g isomorphic to f."""
    core = _fast_copy_count(g, f)
    if core is not None:
        return core
    return count_embeddings(g, f, cap) // automorphism_count(f)


def _fast_copy_count(g: Graph, f: Graph) -> int | None:
    if f.n == 0:
        return 1
    degs = sorted(f.degrees())
    if f.num_edges == comb(f.n, 2):
        return count_cliques(g, f.n)
    if f.n >= 3 and degs[-1] == f.n - 1 and all(d == 1 for d in degs[:-1]):
        return count_stars(g, f.n - 1)
    return None


def _copy_identity(f: RootedGraph, mapping: dict[int, int]) -> tuple:
    verts = frozenset(mapping[u] for u in f.unrooted)
    edges = frozenset(tuple(sorted((mapping[u], mapping[v]))) for u, v in f.edges)
    return verts, edges


def _rooted_order(f: RootedGraph) -> list[int]:
    return _search_order(f.graph)


def rooted_copies_by_root(g: Graph, f: RootedGraph, cap: int | None = DEFAULT_EMBED_CAP) -> dict[tuple[int, ...], int]:
    """For each ordered image of the sorted root tuple, the number of distinct copies of f on it."""
    roots = sorted(f.roots)
    seen: dict[tuple[int, ...], set] = {}
    for mp in iter_embeddings(g, f.graph, cap, _rooted_order(f)):
        key = tuple(mp[r] for r in roots)
        seen.setdefault(key, set()).add(_copy_identity(f, mp))
    return {k: len(v) for k, v in sorted(seen.items())}


@dataclass
class PowerCertificate:
    root_image: tuple[int, ...]
    copies: list[dict[int, int]] = field(default_factory=list)

    def union_graph(self, f: RootedGraph) -> RootedGraph:
        """The union of the copies as a rooted graph that keeps f's root labels."""
        label = {img: r for r, img in zip(sorted(f.roots), self.root_image)}
        free = iter(i for i in itertools.count() if i not in f.roots)
        for mp in self.copies:
            for u in sorted(f.unrooted):
                if mp[u] not in label:
                    label[mp[u]] = next(free)
        edges = {tuple(sorted((label[mp[u]], label[mp[v]]))) for mp in self.copies for u, v in f.edges}
        return RootedGraph(Graph(len(label), tuple(edges)), f.roots)

    def as_dict(self) -> dict:
        return {"root_image": list(self.root_image),
                "copies": [{str(k): v for k, v in sorted(mp.items())} for mp in self.copies]}


def find_power_member(g: Graph, f: RootedGraph, L: int, cap: int | None = DEFAULT_EMBED_CAP) -> PowerCertificate | None:
    """Return L distinct copies of f sharing one root image, or None."""
    if L < 1:
        raise InfeasibleParameters("L must be at least 1")
    roots = sorted(f.roots)
    found: dict[tuple[int, ...], dict[tuple, dict[int, int]]] = {}
    for mp in iter_embeddings(g, f.graph, cap, _rooted_order(f)):
        key = tuple(mp[r] for r in roots)
        bucket = found.setdefault(key, {})
        ident = _copy_identity(f, mp)
        if ident not in bucket:
            bucket[ident] = dict(mp)
            if len(bucket) >= L:
                return PowerCertificate(key, list(bucket.values()))
    return None


def check_certificate(g: Graph, f: RootedGraph, L: int, cert: PowerCertificate) -> list[str]:
    """Structural validation: L distinct genuine copies with the shared root image."""
    problems = []
    if len(cert.copies) != L:
        problems.append(f"expected {L} copies, got {len(cert.copies)}")
    roots = sorted(f.roots)
    idents = set()
    for mp in cert.copies:
        if tuple(mp[r] for r in roots) != cert.root_image:
            problems.append("copy does not use the shared root image")
        if len(set(mp.values())) != f.n:
            problems.append("copy is not injective")
        for u, v in f.edges:
            if not g.has_edge(mp[u], mp[v]):
                problems.append(f"copy misses host edge ({mp[u]}, {mp[v]})")
        idents.add(_copy_identity(f, mp))
    if len(idents) != len(cert.copies):
        problems.append("copies are not distinct")
    return problems


# --------------------------------------------------------------------------
# Supersaturation report
# --------------------------------------------------------------------------

@dataclass
class CountRow:
    quantity: str
    actual: int | None
    predicted: float
    ratio: float | None
    capped: bool = False

    def as_dict(self) -> dict:
        return {"quantity": self.quantity, "actual": self.actual, "predicted": self.predicted,
                "ratio": self.ratio, "capped": self.capped}


def predicted_count(n: int, p: float, vertices: int, edges: int) -> float:
    """n^vertices * p^edges computed in log space."""
    if n <= 0:
        return 0.0 if vertices > 0 else 1.0
    if p <= 0:
        return 0.0 if edges > 0 else float(n) ** vertices
    return math.exp(vertices * math.log(n) + edges * math.log(p))


def _ratio(actual: int | None, predicted: float) -> float | None:
    if actual is None:
        return None
    if actual == 0:
        return 0.0
    if predicted == 0:
        return math.inf
    return actual / predicted


@dataclass
class SupersaturationReport:
    n: int
    p: float
    rows: list[CountRow]

    def as_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "rows": [r.as_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "actual", "predicted", "ratio"])
        for r in self.rows:
            w.writerow([r.quantity, "" if r.actual is None else r.actual, f"{r.predicted:.17g}",
                        "capped" if r.ratio is None else f"{r.ratio:.17g}"])
        return buf.getvalue()


def _count_row(name: str, g: Graph, f: Graph, n: int, p: float, cap: int | None) -> CountRow:
    pred = predicted_count(n, p, f.n, f.num_edges)
    try:
        actual = count_copies(g, f, cap)
    except CapExceeded:
        return CountRow(name, None, pred, None, capped=True)
    return CountRow(name, actual, pred, _ratio(actual, pred))


def supersaturation_check(g: Graph, t: int, plan_member: ConstructionId | None, n: int, p: float,
                          cap: int | None = DEFAULT_EMBED_CAP, extra: Sequence[tuple[str, Graph]] = ()) -> SupersaturationReport:
    """Compare copy counts against n^|V| p^|E| for K_2..K_t, any extra graphs and the member."""
    rows = []
    for i in range(2, t + 1):
        rows.append(_count_row(f"K{i}", g, complete_graph(i), n, p, cap))
    for name, h in extra:
        rows.append(_count_row(name, g, h, n, p, cap))
    if plan_member is not None:
        f = plan_member.build().graph
        rows.append(_count_row(str(plan_member), g, f, n, p, cap))
    return SupersaturationReport(n, p, rows)
