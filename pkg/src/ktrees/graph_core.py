"""Finite simple graphs, rooted graphs, small-graph isomorphism and serialization.

Vertices are dense integer ids ``0..n-1``. Graphs are immutable; edges are kept
as a sorted tuple of ``(u, v)`` pairs with ``u < v`` so that equality and JSON
output are bit-exact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import CapExceeded, FormatError

DEFAULT_ISO_CAP = int(os.environ.get("KTREES_CAP_ISO", "16"))


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            norm.add((u, v) if u < v else (v, u))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return tuple(frozenset(s) for s in nbrs)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adj]

    def relabel(self, mapping: Mapping[int, int], n: int | None = None) -> Graph:
        n = self.n if n is None else n
        return Graph(n, tuple((mapping[u], mapping[v]) for u, v in self.edges))

    def disjoint_union(self, other: Graph) -> Graph:
        off = self.n
        return Graph(self.n + other.n,
                     self.edges + tuple((u + off, v + off) for u, v in other.edges))


@dataclass(frozen=True)
class RootedGraph:
    """A graph with a designated root set."""

    graph: Graph
    roots: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        roots = frozenset(int(r) for r in self.roots)
        bad = [r for r in roots if not 0 <= r < self.graph.n]
        if bad:
            raise ValueError(f"root ids out of range: {sorted(bad)}")
        object.__setattr__(self, "roots", roots)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.graph.edges

    @cached_property
    def unrooted(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.graph.n) if v not in self.roots)

    def root_subgraph(self) -> Graph:
        return induced_subgraph(self.graph, self.roots)


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def star_graph(k: int) -> Graph:
    """S_k: centre 0 joined to leaves 1..k."""
    return Graph(k + 1, tuple((0, i) for i in range(1, k + 1)))


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, tuple(outer + spokes + inner))


def induced_subgraph(g: Graph, s: Iterable[int]) -> Graph:
    """Subgraph induced on ``s``, relabelled ``0..|s|-1`` by ascending original id."""
    verts = sorted(set(s))
    for v in verts:
        if not 0 <= v < g.n:
            raise ValueError(f"vertex {v} out of range for n={g.n}")
    index = {v: i for i, v in enumerate(verts)}
    edges = tuple((index[u], index[v]) for u, v in g.edges if u in index and v in index)
    return Graph(len(verts), edges)


# --------------------------------------------------------------------------
# Isomorphism
# --------------------------------------------------------------------------

def _refine(adj: Sequence[Iterable[int]], colors: Sequence[int]) -> list[int]:
    """Colour refinement (1-dimensional Weisfeiler-Leman) to a stable partition."""
    cur = list(colors)
    n_classes = len(set(cur))
    while True:
        sigs = [(cur[v], tuple(sorted(cur[u] for u in adj[v]))) for v in range(len(cur))]
        palette = {s: i for i, s in enumerate(sorted(set(sigs)))}
        nxt = [palette[s] for s in sigs]
        if len(palette) == n_classes:
            return nxt
        cur, n_classes = nxt, len(palette)


def find_isomorphism(
    g: Graph,
    h: Graph,
    g_colors: Sequence[int] | None = None,
    h_colors: Sequence[int] | None = None,
) -> dict[int, int] | None:
    """Colour-preserving isomorphism g -> h, or None.

    Initial colours are refined jointly so the two graphs share one palette;
    the search then backtracks inside colour classes.
    """
    if g.n != h.n or g.num_edges != h.num_edges:
        return None
    if sorted(g.degrees()) != sorted(h.degrees()):
        return None
    n = g.n
    gc = list(g_colors) if g_colors is not None else [0] * n
    hc = list(h_colors) if h_colors is not None else [0] * n
    union = g.disjoint_union(h)
    init = [(c, len(union.adj[v])) for v, c in enumerate(gc + hc)]
    palette = {c: i for i, c in enumerate(sorted(set(init), key=repr))}
    colors = _refine(union.adj, [palette[c] for c in init])
    cg, ch = colors[:n], colors[n:]
    if sorted(cg) != sorted(ch):
        return None

    by_color: dict[int, list[int]] = {}
    for v, c in enumerate(ch):
        by_color.setdefault(c, []).append(v)
    class_size = {c: len(vs) for c, vs in by_color.items()}

    # most constrained first, then stay connected to already-placed vertices
    order: list[int] = []
    placed: set[int] = set()
    remaining = set(range(n))
    while remaining:
        def key(v: int) -> tuple[int, int, int]:
            return (-len(g.adj[v] & placed), class_size[cg[v]], v)
        v = min(remaining, key=key)
        order.append(v)
        placed.add(v)
        remaining.discard(v)

    mapping: dict[int, int] = {}
    used: set[int] = set()

    def extend(i: int) -> bool:
        if i == n:
            return True
        v = order[i]
        for w in by_color[cg[v]]:
            if w in used:
                continue
            ok = True
            for u, x in mapping.items():
                if (u in g.adj[v]) != (x in h.adj[w]):
                    ok = False
                    break
            if not ok:
                continue
            mapping[v] = w
            used.add(w)
            if extend(i + 1):
                return True
            del mapping[v]
            used.discard(w)
        return False

    return dict(mapping) if extend(0) else None


def are_isomorphic(g: Graph, h: Graph, cap: int | None = DEFAULT_ISO_CAP) -> bool:
    """True iff an edge-preserving bijection exists.

    Cheap invariant mismatches are decided without search; the size cap only
    guards the backtracking step.
    """
    if g.n != h.n or g.num_edges != h.num_edges or sorted(g.degrees()) != sorted(h.degrees()):
        return False
    if cap is not None and g.n > cap:
        raise CapExceeded(f"isomorphism test on {g.n} vertices exceeds cap {cap}")
    return find_isomorphism(g, h) is not None


def _root_colors(f: RootedGraph, fix_roots: bool) -> list[int]:
    if fix_roots:
        return [r + 1 if r in f.roots else 0 for r in range(f.n)]
    return [1 if v in f.roots else 0 for v in range(f.n)]


def rooted_isomorphic(
    f1: RootedGraph,
    f2: RootedGraph,
    fix_roots: bool = False,
    cap: int | None = DEFAULT_ISO_CAP,
) -> bool:
    """Root-respecting isomorphism test.

    With ``fix_roots`` the bijection must be the identity on the (equal) root
    sets; otherwise it only has to send roots to roots.
    """
    if fix_roots and f1.roots != f2.roots:
        return False
    if len(f1.roots) != len(f2.roots):
        return False
    g, h = f1.graph, f2.graph
    if g.n != h.n or g.num_edges != h.num_edges or sorted(g.degrees()) != sorted(h.degrees()):
        return False
    if cap is not None and g.n > cap:
        raise CapExceeded(f"isomorphism test on {g.n} vertices exceeds cap {cap}")
    return find_isomorphism(g, h, _root_colors(f1, fix_roots), _root_colors(f2, fix_roots)) is not None


def invariant_key(g: Graph, colors: Sequence[int] | None = None) -> tuple:
    """Isomorphism-invariant hash key (refined colour histogram)."""
    init = list(colors) if colors is not None else [0] * g.n
    refined = _refine(g.adj, [hash((c, len(g.adj[v]))) for v, c in enumerate(init)])
    # refined ids depend on the palette of this graph only, so summarise by
    # class sizes and per-class degree, which are invariant
    summary: dict[int, list[int]] = {}
    for v, c in enumerate(refined):
        summary.setdefault(c, []).append(len(g.adj[v]))
    shape = sorted((len(vs), vs[0]) for vs in summary.values())
    return (g.n, g.num_edges, tuple(sorted(g.degrees())), tuple(shape),
            tuple(sorted(init)))


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def to_json(f: RootedGraph | Graph) -> bytes:
    """Canonical compact JSON: {"n":..,"edges":[[u,v],..],"roots":[..]}."""
    if isinstance(f, Graph):
        f = RootedGraph(f)
    doc = {"n": f.n, "edges": [list(e) for e in f.edges], "roots": sorted(f.roots)}
    return json.dumps(doc, separators=(",", ":")).encode()


def to_dot(f: RootedGraph | Graph, name: str = "G") -> bytes:
    """DOT export; roots are drawn as squares."""
    if isinstance(f, Graph):
        f = RootedGraph(f)
    lines = [f"graph {name} {{"]
    for v in range(f.n):
        shape = "square" if v in f.roots else "circle"
        lines.append(f"  {v} [shape={shape}];")
    for u, v in f.edges:
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode()


def _as_int(x: object, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise FormatError(f"{what} must be an integer, got {x!r}")
    return x


def from_json(data: bytes | str) -> RootedGraph:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise FormatError("expected an object with keys 'n', 'edges' and optional 'roots'")
    n = _as_int(doc["n"], "n")
    if n < 0:
        raise FormatError("n must be non-negative")
    seen: set[tuple[int, int]] = set()
    edges = []
    if not isinstance(doc["edges"], list):
        raise FormatError("'edges' must be a list")
    for e in doc["edges"]:
        if not isinstance(e, list) or len(e) != 2:
            raise FormatError(f"edge {e!r} is not a pair")
        u, v = _as_int(e[0], "edge endpoint"), _as_int(e[1], "edge endpoint")
        if u == v:
            raise FormatError(f"loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise FormatError(f"edge ({u}, {v}) out of range for n={n}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise FormatError(f"duplicate edge {list(key)}")
        seen.add(key)
        edges.append(key)
    roots_raw = doc.get("roots", [])
    if not isinstance(roots_raw, list):
        raise FormatError("'roots' must be a list")
    roots = [_as_int(r, "root") for r in roots_raw]
    if len(set(roots)) != len(roots):
        raise FormatError("duplicate root id")
    for r in roots:
        if not 0 <= r < n:
            raise FormatError(f"root id {r} out of range for n={n}")
    return RootedGraph(Graph(n, tuple(edges)), frozenset(roots))


def serialize(f: RootedGraph | Graph, fmt: str = "json") -> bytes:
    if fmt == "json":
        return to_json(f)
    if fmt == "dot":
        return to_dot(f)
    raise ValueError(f"unknown format {fmt!r}")


def deserialize(data: bytes | str) -> RootedGraph:
    return from_json(data)
