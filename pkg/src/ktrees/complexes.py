"""t-complexes of cliques, degree-threshold pruning and builder certification.

A t-complex is a downward-closed family of nonempty sets of size at most t.
The degree of a set K is the number of size-t sets containing it.
"""

from __future__ import annotations

import heapq
import itertools
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, FormatError, InfeasibleParameters
from .graph_core import Graph

DEFAULT_CLIQUE_CAP = int(os.environ.get("KTREES_CAP_CLIQUES", "5000000"))
DEFAULT_STRONG_CAP = int(os.environ.get("KTREES_CAP_STRONG", "2000000"))

Face = tuple[int, ...]


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


@dataclass(frozen=True)
class TComplex:
    """Leveled set system; ``levels[i - 1]`` holds the sorted size-i sets."""

    t: int
    levels: tuple[tuple[Face, ...], ...]

    @classmethod
    def from_sets(cls, t: int, sets: Iterable[Iterable[int]]) -> TComplex:
        """Downward closure of ``sets`` (each of size 1..t)."""
        if t < 1:
            raise InfeasibleParameters("t must be positive")
        faces: list[set[Face]] = [set() for _ in range(t)]
        for s in sets:
            s = tuple(sorted(set(s)))
            if not 1 <= len(s) <= t:
                raise ValueError(f"set {s} has size outside 1..{t}")
            if s in faces[len(s) - 1]:
                continue
            for k in range(1, len(s) + 1):
                faces[k - 1].update(itertools.combinations(s, k))
        return cls(t, tuple(tuple(sorted(f)) for f in faces))

    def level(self, i: int) -> tuple[Face, ...]:
        return self.levels[i - 1]

    @property
    def top(self) -> tuple[Face, ...]:
        return self.levels[self.t - 1]

    @property
    def ground(self) -> tuple[int, ...]:
        return tuple(v for (v,) in self.levels[0])

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(lv) for lv in self.levels)

    def __contains__(self, k) -> bool:
        k = tuple(sorted(k))
        return 1 <= len(k) <= self.t and k in self._face_sets[len(k) - 1]

    @cached_property
    def _face_sets(self) -> tuple[frozenset[Face], ...]:
        return tuple(frozenset(lv) for lv in self.levels)

    @cached_property
    def degrees(self) -> Mapping[Face, int]:
        """Degree of every face (number of top sets containing it)."""
        deg: dict[Face, int] = {f: 0 for lv in self.levels for f in lv}
        for top in self.top:
            for k in range(1, self.t + 1):
                for sub in itertools.combinations(top, k):
                    deg[sub] += 1
        return deg

    def degree(self, k: Iterable[int]) -> int:
        k = tuple(sorted(k))
        if len(k) > self.t:
            return 0
        if len(k) == 0:
            return len(self.top)
        return self.degrees.get(k, 0)

    def maximal_sets(self) -> list[Face]:
        out = []
        for i in range(self.t, 0, -1):
            higher = self._face_sets[i] if i < self.t else frozenset()
            covered = set()
            for f in higher:
                covered.update(itertools.combinations(f, i))
            out.extend(f for f in self.levels[i - 1] if f not in covered)
        return sorted(out)

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "sets": [list(s) for s in self.maximal_sets()]},
                          separators=(",", ":"))

    @classmethod
    def from_json(cls, data: str | bytes) -> TComplex:
        try:
            doc = json.loads(data)
            return cls.from_sets(int(doc["t"]), doc["sets"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad complex JSON: {exc}") from exc


def clique_complex(g: Graph, t: int, cap: int | None = DEFAULT_CLIQUE_CAP) -> TComplex:
    """All cliques of g with at most t vertices."""
    if t < 1:
        raise InfeasibleParameters("t must be positive")
    levels: list[list[Face]] = [[] for _ in range(t)]
    count = 0

    def grow(clique: list[int], cands: list[int]) -> None:
        nonlocal count
        for idx, v in enumerate(cands):
            nxt = clique + [v]
            levels[len(nxt) - 1].append(tuple(nxt))
            count += 1
            if cap is not None and count > cap:
                raise CapExceeded(f"clique complex exceeds {cap} faces")
            if len(nxt) < t:
                grow(nxt, [w for w in cands[idx + 1:] if w in g.adj[v]])

    grow([], list(range(g.n)))
    return TComplex(t, tuple(tuple(sorted(lv)) for lv in levels))


def remove_vertices(c: TComplex, s: Iterable[int]) -> TComplex:
    """{K \\ S : K in c, K not inside S}; for a downward-closed c these are the faces missing S."""
    s = set(s)
    if not s:
        return c
    shrunk: list[set[Face]] = [set() for _ in range(c.t)]
    for lv in c.levels:
        for f in lv:
            rest = tuple(v for v in f if v not in s)
            if rest:
                shrunk[len(rest) - 1].add(rest)
    return TComplex(c.t, tuple(tuple(sorted(lv)) for lv in shrunk))


def normalize_thresholds(t: int, thresholds: Sequence | Mapping) -> dict[int, Fraction]:
    """Thresholds for levels 1..t-1 as exact rationals."""
    if isinstance(thresholds, Mapping):
        items = {int(k): Fraction(v) for k, v in thresholds.items()}
    else:
        items = {i: Fraction(v) for i, v in enumerate(thresholds, start=1)}
    for i, v in items.items():
        if not 1 <= i < t:
            raise ValueError(f"threshold level {i} outside 1..{t - 1}")
        if v <= 0:
            raise ValueError("thresholds must be positive")
    return items


def prune(c: TComplex, thresholds: Sequence | Mapping) -> TComplex:
    """Remove low-degree faces below the top level, with all their supersets, to a fixed point.

    A face K with |K| = i < t survives only if deg(K) >= ceil(threshold_i).
    Violations are handled lowest level first, lexicographically within a
    level; the surviving complex does not depend on this order.
    """
    theta = {i: _ceil(v) for i, v in normalize_thresholds(c.t, thresholds).items()}
    alive: list[set[Face]] = [set(lv) for lv in c.levels]
    deg = dict(c.degrees)
    # top sets through each vertex, and faces through each vertex per level
    through: dict[int, list[Face]] = {}
    for lv in c.levels:
        for f in lv:
            for v in f:
                through.setdefault(v, []).append(f)

    heap = [(len(f), f) for lv in c.levels[:-1] for f in lv
            if len(f) in theta and deg[f] < theta[len(f)]]
    heapq.heapify(heap)
    while heap:
        _, k = heapq.heappop(heap)
        if k not in alive[len(k) - 1]:
            continue
        kset = set(k)
        doomed = [f for f in through[k[0]] if len(f) >= len(k) and f in alive[len(f) - 1] and kset.issubset(f)]
        for f in doomed:
            alive[len(f) - 1].discard(f)
            if len(f) == c.t:
                for j in range(1, c.t):
                    for sub in itertools.combinations(f, j):
                        deg[sub] -= 1
                        if (j in theta and deg[sub] < theta[j] and sub in alive[j - 1]):
                            heapq.heappush(heap, (j, sub))
    return TComplex(c.t, tuple(tuple(sorted(lv)) for lv in alive))


def check_prune_postcondition(c: TComplex, thresholds: Sequence | Mapping) -> list[str]:
    """Independent re-check of the pruning contract; returns violations."""
    problems = []
    theta = normalize_thresholds(c.t, thresholds)
    for i, v in theta.items():
        for f in c.level(i):
            if c.degree(f) < v:
                problems.append(f"face {f} has degree {c.degree(f)} < {v}")
    for i in range(2, c.t + 1):
        for f in c.level(i):
            for sub in itertools.combinations(f, i - 1):
                if sub not in c:
                    problems.append(f"face {f} is missing subset {sub}")
    return problems


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BuilderParams:
    t: int
    s: int
    ell: int
    r: int = 0
    B: tuple[Fraction, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "B", tuple(Fraction(b) for b in self.B))
        if not 0 < self.s < self.t:
            raise InfeasibleParameters(f"need 0 < s < t, got s={self.s}, t={self.t}")
        if len(self.B) != self.s:
            raise InfeasibleParameters(f"need {self.s} thresholds, got {len(self.B)}")
        if any(b <= 0 for b in self.B):
            raise InfeasibleParameters("thresholds must be positive")
        if self.ell < 0 or self.r < 0:
            raise InfeasibleParameters("ell and r must be non-negative")

    def scaled(self, factor) -> BuilderParams:
        return BuilderParams(self.t, self.s, self.ell, self.r, tuple(b * Fraction(factor) for b in self.B))

    def with_r(self, r: int) -> BuilderParams:
        return BuilderParams(self.t, self.s, self.ell, r, self.B)


@dataclass(frozen=True)
class BuilderReport:
    ok: bool
    violation: str | None = None
    face: Face | None = None
    removed: tuple[int, ...] | None = None
    rounding: str = "deg >= ceil(B_i)"

    def __bool__(self) -> bool:
        return self.ok


def is_weak_builder(c: TComplex, p: BuilderParams) -> BuilderReport:
    if p.t != c.t:
        raise InfeasibleParameters(f"params are for t={p.t}, complex has t={c.t}")
    for i in range(1, p.s + 1):
        need = _ceil(p.B[i - 1])
        for f in c.level(i):
            if c.degree(f) < need:
                return BuilderReport(False, f"degree {c.degree(f)} < B_{i} = {p.B[i - 1]}", f)
    for f in c.level(p.s + 1):
        if c.degree(f) > p.ell:
            return BuilderReport(False, f"degree {c.degree(f)} > ell = {p.ell}", f)
    return BuilderReport(True)


def _max_cover(sets: list[int], candidates: list[int], r: int, cap: int | None) -> tuple[int, tuple[int, ...]]:
    """Most bitmask ``sets`` hit by choosing at most r ``candidates`` (exhaustive).

    Choosing more vertices never hits fewer sets, so only r-subsets are tried.
    Subsets are scored in vectorized chunks against a set/candidate incidence
    matrix.
    """
    if not sets or r == 0:
        return 0, ()
    k = min(r, len(candidates))
    if cap is not None and comb(len(candidates), k) > cap:
        raise CapExceeded(f"strong-builder check needs C({len(candidates)},{k}) removal sets > cap {cap}")
    inc = np.array([[(m >> c) & 1 for c in candidates] for m in sets], dtype=bool)
    chunk = max(1, 4_000_000 // (len(sets) * k))
    combos = itertools.combinations(range(len(candidates)), k)
    best, best_s = -1, ()
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        hits = inc[:, block].any(axis=2).sum(axis=0)
        j = int(hits.argmax())
        if hits[j] > best:
            best, best_s = int(hits[j]), tuple(candidates[i] for i in block[j])
            if best == len(sets):
                break
    return best, best_s


def is_strong_builder(c: TComplex, p: BuilderParams, cap: int | None = DEFAULT_STRONG_CAP,
                      method: str = "link") -> BuilderReport:
    """Is c minus S a weak builder for every S with |S| <= r?

    ``link`` (default): deleting vertices only lowers degrees and removes
    faces, so it suffices to check the upper bound at S = {} and, for each
    face K at a level <= s, the worst deletion of r vertices outside K, which
    is a max-coverage problem on the top sets through K. ``literal``
    enumerates every S and calls is_weak_builder.
    """
    if method == "literal":
        return _strong_literal(c, p, cap)
    base = is_weak_builder(c, p)
    if not base:
        return BuilderReport(False, base.violation, base.face, ())
    index = {v: i for i, v in enumerate(c.ground)}
    tops_through: dict[int, list[Face]] = {}
    for top in c.top:
        for v in top:
            tops_through.setdefault(v, []).append(top)
    for i in range(1, p.s + 1):
        need = _ceil(p.B[i - 1])
        for f in c.level(i):
            fset = set(f)
            link = [tuple(v for v in top if v not in fset) for top in tops_through.get(f[0], []) if fset.issubset(top)]
            masks = [sum(1 << index[v] for v in rest) for rest in link]
            cands = sorted({index[v] for rest in link for v in rest})
            hit, chosen = _max_cover(masks, cands, p.r, cap)
            if len(link) - hit < need:
                ground = c.ground
                removed = tuple(ground[j] for j in chosen)
                return BuilderReport(False, f"degree {len(link) - hit} < B_{i} = {p.B[i - 1]} after removal", f, removed)
    return BuilderReport(True)


def _strong_literal(c: TComplex, p: BuilderParams, cap: int | None) -> BuilderReport:
    ground = c.ground
    total = sum(comb(len(ground), k) for k in range(min(p.r, len(ground)) + 1))
    if cap is not None and total > cap:
        raise CapExceeded(f"strong-builder check needs {total} removal sets > cap {cap}")
    for k in range(min(p.r, len(ground)) + 1):
        for s in itertools.combinations(ground, k):
            rep = is_weak_builder(remove_vertices(c, s), p)
            if not rep:
                return BuilderReport(False, rep.violation, rep.face, s)
    return BuilderReport(True)


def strong_builder_thresholds(c: TComplex, s: int, r: int) -> tuple[tuple[int, ...], int]:
    """Largest B and smallest ell making c a (t, s, ell, r, B)-strong builder.

    B_i is the minimum over faces K of level i of the worst-case degree after
    deleting r vertices outside K; ell is the maximum degree at level s+1.
    """
    index = {v: i for i, v in enumerate(c.ground)}
    tops_through: dict[int, list[Face]] = {}
    for top in c.top:
        for v in top:
            tops_through.setdefault(v, []).append(top)
    bs = []
    for i in range(1, s + 1):
        worst = None
        for f in c.level(i):
            fset = set(f)
            link = [tuple(v for v in top if v not in fset) for top in tops_through.get(f[0], []) if fset.issubset(top)]
            masks = [sum(1 << index[v] for v in rest) for rest in link]
            cands = sorted({index[v] for rest in link for v in rest})
            hit, _ = _max_cover(masks, cands, r, None)
            val = len(link) - hit
            worst = val if worst is None else min(worst, val)
        bs.append(worst if worst is not None else 0)
    ell = max((c.degree(f) for f in c.level(s + 1)), default=0)
    return tuple(bs), ell


def weak_to_strong_condition(p: BuilderParams, variant: str = "statement") -> bool:
    """Exact test of X >= 1/(1 - 2^(-1/r)).

    ``statement``: X = (B_s - ell) / (C(t,s) ell).
    ``proof``: X = (2 B_s - ell) / (C(t,s) - ell).
    With X >= 1 the inequality is equivalent to 2 (X - 1)^r >= X^r, which is
    evaluated in exact rationals.
    """
    if p.r < 1:
        raise InfeasibleParameters("the condition needs r >= 1")
    b_s = p.B[p.s - 1]
    c = comb(p.t, p.s)
    if variant == "statement":
        num, den = b_s - p.ell, Fraction(c * p.ell)
    elif variant == "proof":
        num, den = 2 * b_s - p.ell, Fraction(c - p.ell)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if den <= 0:
        return variant == "statement" and num > 0
    x = num / den
    if x < 1:
        return False
    return 2 * (x - 1) ** p.r >= x ** p.r


# --------------------------------------------------------------------------
# Pruning hypotheses (clique counts in a host graph)
# --------------------------------------------------------------------------

def pruning_thresholds(n: int, p: Fraction, t: int) -> dict[int, Fraction]:
    """threshold_i = n^(t-i) p^(C(t,2) - C(i,2)) for i < t."""
    p = Fraction(p)
    return {i: Fraction(n) ** (t - i) * p ** (comb(t, 2) - comb(i, 2)) for i in range(1, t)}


def pruning_hypotheses(clique_counts: Mapping[int, int], n: int, p: Fraction, t: int) -> dict:
    """Check: at least t n^t p^C(t,2) top cliques and at most n^i p^C(i,2) i-cliques for i < t."""
    p = Fraction(p)
    need_top = t * Fraction(n) ** t * p ** comb(t, 2)
    out = {"top_required": need_top, "top_ok": clique_counts.get(t, 0) >= need_top, "levels_ok": True}
    for i in range(1, t):
        if clique_counts.get(i, 0) > Fraction(n) ** i * p ** comb(i, 2):
            out["levels_ok"] = False
    out["ok"] = out["top_ok"] and out["levels_ok"]
    out["retained_bound"] = Fraction(n) ** t * p ** comb(t, 2)
    return out


def kruskal_katona_shadow(m: int, k: int) -> int:
    """Minimum size of the (k-1)-shadow of m k-sets (cascade form)."""
    if m <= 0 or k <= 0:
        return 0
    shadow = 0
    while m > 0 and k > 0:
        a = k
        while comb(a + 1, k) <= m:
            a += 1
        m -= comb(a, k)
        shadow += comb(a, k - 1)
        k -= 1
    return shadow
