"""Exact parameter solvers and family assembly for target exponents.

For K_t the target exponent r in (1, t) corresponds to the rooted density
d = C(t,2)/(t - r). Families are assembled level by level: a Bukh-Conlon tree
at level 2, then a type 1 or type 2 K_i-tree (plus a rooted clique when
needed) for each 3 <= i <= t.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

import networkx as nx
from networkx.algorithms import isomorphism

from .constructions import ConstructionId, plus_graph
from .density import closed_form_density, is_balanced, rooted_density
from .errors import InfeasibleParameters
from .graph_core import Graph, star_graph


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("exact rationals only; pass a Fraction, int or 'p/q' string")
    return Fraction(x)


def exponent_to_density(t: int, r) -> Fraction:
    r = as_fraction(r)
    if not 1 < r < t:
        raise InfeasibleParameters(f"exponent {r} is outside (1, {t})")
    return Fraction(comb(t, 2)) / (t - r)


def density_to_exponent(t: int, d) -> Fraction:
    d = as_fraction(d)
    return t - Fraction(comb(t, 2)) / d


def type1_interval(t: int, s: int) -> tuple[Fraction, Fraction | None]:
    """Admissible densities for a type 1 tree: (low, high] with high None meaning unbounded."""
    if 2 * s == t:
        return Fraction(3 * t - 2, 4), None
    return Fraction(t + s - 1, 2), Fraction(t + 2 * s - 1, 2)


def solve_type1(t: int, s: int, d) -> tuple[int, int]:
    """(a, b) with density_type1(t, a, b, s) == d, from d = x/y in lowest terms."""
    d = as_fraction(d)
    if t < 3 or s < 1 or 2 * s > t:
        raise InfeasibleParameters(f"no type 1 tree for t={t}, s={s}")
    low, high = type1_interval(t, s)
    if not (d > low and (high is None or d <= high)):
        hi = "inf)" if high is None else f"{high}]"
        raise InfeasibleParameters(f"density {d} outside ({low}, {hi} for t={t}, s={s}")
    x, y = d.numerator, d.denominator
    a = y * (comb(t, 2) - 2 * comb(s, 2)) - x * (t - 2 * s)
    b = s * x - y * comb(s, 2)
    if not 0 < a < b:
        raise AssertionError(f"solver produced a={a}, b={b} for t={t}, s={s}, d={d}")
    return a, b


def solve_type2(t: int, d) -> tuple[int, int]:
    """(a, b) with density_type2(t, a, b) == d using the smallest admissible scaling."""
    d = as_fraction(d)
    if t < 3 or t % 2 == 0:
        raise InfeasibleParameters(f"type 2 trees need odd t >= 3, got {t}")
    if d <= t - 1:
        raise InfeasibleParameters(f"type 2 trees need density above {t - 1}, got {d}")
    q = d - Fraction(3 * t - 9, 4)
    x0, y0 = q.numerator, q.denominator
    # need x/y > 2 + (t+1)/(4y) i.e. m*(x0 - 2*y0) >= (t+1)/4 (strict on the
    # original rational form; with integers 4*m*(x0-2*y0) >= t+1 suffices since
    # 2a+2 <= b  <=>  4my0 + 2 <= 2mx0 - (t-3)/2  <=>  4m(x0 - 2y0) >= t + 1)
    m = max(1, math.ceil(Fraction(t + 1, 4 * (x0 - 2 * y0))))
    a = 2 * m * y0
    b = 2 * m * x0 - (t - 3) // 2
    if not (a > 0 and a % 2 == 0 and b >= 2 * a + 2):
        raise AssertionError(f"solver produced a={a}, b={b} for t={t}, d={d}")
    return a, b


@dataclass
class FamilyPlan:
    t: int
    target_exponent: Fraction
    density: Fraction | None
    members: list[tuple[ConstructionId, str]] = field(default_factory=list)
    case_trace: list[dict] = field(default_factory=list)
    forbidden_graphs: list[Graph] = field(default_factory=list)
    power: int | None = None  # the power L stays symbolic unless set by the caller

    def member_ids(self) -> list[ConstructionId]:
        return [c for c, _ in self.members]

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "target_exponent": str(self.target_exponent),
            "density": None if self.density is None else str(self.density),
            "power": "L" if self.power is None else self.power,
            "members": [dict(c.as_dict(), role=role) for c, role in self.members],
            "forbidden_graphs": [{"n": g.n, "edges": [list(e) for e in g.edges]} for g in self.forbidden_graphs],
            "case_trace": self.case_trace,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False)


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _level_plan(i: int, d: Fraction) -> tuple[list[tuple[ConstructionId, str]], dict]:
    if i == 2:
        a, b = d.denominator, d.numerator
        return [(ConstructionId("T2", (a, b)), "level-2")], {
            "level": 2, "case": "base", "a": a, "b": b, "d": str(d)}
    if i % 2 == 0 or d <= i - 1:
        s_prime = _ceil(2 * d - i)
        s = min(s_prime, i // 2)
        a, b = solve_type1(i, s, d)
        members = [(ConstructionId("TYPE1", (i, a, b, s)), f"level-{i} type 1")]
        trace = {"level": i, "case": "1", "s": s, "a": a, "b": b, "d": str(d)}
        if d <= i - 1:
            members.append((ConstructionId("ROOTED_CLIQUE", (i, s_prime + 1)), f"level-{i} rooted clique"))
            trace["case"] = "1.1"
            trace["s_prime"] = s_prime
        else:
            trace["case"] = "1.2"
        return members, trace
    a, b = solve_type2(i, d)
    return [(ConstructionId("TYPE2", (i, a, b)), f"level-{i} type 2")], {
        "level": i, "case": "2", "a": a, "b": b, "d": str(d)}


def plan_for_density(t: int, d, check: bool = True, balance_cap: int = 20) -> FamilyPlan:
    """Family of balanced rooted K_i-trees of density >= d for all 2 <= i <= t."""
    d = as_fraction(d)
    if t < 2:
        raise InfeasibleParameters(f"t must be at least 2, got {t}")
    if d <= Fraction(t, 2):
        raise InfeasibleParameters(f"density {d} must exceed t/2 = {Fraction(t, 2)}")
    plan = FamilyPlan(t, density_to_exponent(t, d), d)
    seen: set[ConstructionId] = set()
    for i in range(2, t + 1):
        members, trace = _level_plan(i, d)
        if i < t:
            trace["note"] = "lower level reuses the top-level density"
        plan.case_trace.append(trace)
        for c, role in members:
            if c not in seen:
                seen.add(c)
                plan.members.append((c, role))
    if check:
        verify_plan(plan, balance_cap=balance_cap)
    return plan


def plan_family(t: int, r, check: bool = True, balance_cap: int = 20) -> FamilyPlan:
    """Plan for the exponent r in (1, t): density C(t,2)/(t-r) at every level."""
    r = as_fraction(r)
    d = exponent_to_density(t, r)
    plan = plan_for_density(t, d, check=check, balance_cap=balance_cap)
    plan.target_exponent = r
    return plan


def verify_plan(plan: FamilyPlan, balance_cap: int = 20) -> None:
    """Re-derive every member's density and balancedness; raise on any failure."""
    for c, _ in plan.members:
        f = c.build()
        d = rooted_density(f)
        if d != closed_form_density(c.kind, c.params):
            raise AssertionError(f"{c}: density {d} differs from closed form")
        if plan.density is not None and d < plan.density:
            raise AssertionError(f"{c}: density {d} below plan density {plan.density}")
        res = is_balanced(f, cap=balance_cap, method="auto")
        if not res.balanced:
            raise AssertionError(f"{c}: not balanced, counterexample {res.counterexample}")


# --------------------------------------------------------------------------
# Stars
# --------------------------------------------------------------------------

def plan_star_family(t: int, r) -> FamilyPlan:
    """Star-tree family for S_t with exponent r in [t, t+1)."""
    r = as_fraction(r)
    if t < 1:
        raise InfeasibleParameters(f"t must be positive, got {t}")
    if not t <= r < t + 1:
        raise InfeasibleParameters(f"exponent {r} is outside [{t}, {t + 1})")
    ratio = (t + 1 - r) / t
    a, b = ratio.numerator, ratio.denominator
    if a >= b:
        raise InfeasibleParameters(f"exponent {r} needs a/b = {ratio}, which has no tree with a < b")
    if b < t * a:
        raise AssertionError("b >= ta holds for every r >= t")
    plan = FamilyPlan(t, r, Fraction(b, a))
    for i in range(1, t + 1):
        plan.members.append((ConstructionId("STAR", (i, a, b)), f"star level {i}"))
    plan.case_trace.append({"case": "stars", "a": a, "b": b, "realized": str(t + 1 - Fraction(t * a, b))})
    return plan


def _strip_isolated(g: Graph) -> Graph:
    used = sorted({v for e in g.edges for v in e})
    index = {v: i for i, v in enumerate(used)}
    return Graph(len(used), tuple((index[u], index[v]) for u, v in g.edges))


def _to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def is_subgraph(small: Graph, big: Graph) -> bool:
    """Is there an injective edge-preserving map small -> big (not necessarily induced)?"""
    if small.n > big.n or small.num_edges > big.num_edges:
        return False
    matcher = isomorphism.GraphMatcher(_to_nx(big), _to_nx(small))
    return matcher.subgraph_is_monomorphic()


def _is_star_like(g: Graph) -> bool:
    core = _strip_isolated(g)
    if core.num_edges == 0:
        return True
    return any(core.degree(v) == core.num_edges for v in range(core.n))


def classify_star_family(family: Sequence[Graph], t: int, max_copies: int = 8) -> str:
    """Growth class of ex(n, S_t, family): 'constant', 'linear' or 'superpoly'.

    superpoly when no member is a star (a huge star is then family-free);
    otherwise degrees are bounded, and the count is constant exactly when
    some member fits inside a disjoint union of at most ``max_copies`` stars S_t.
    """
    if not any(_is_star_like(g) for g in family):
        return "superpoly"
    for g in family:
        core = _strip_isolated(g)
        for c in range(1, max_copies + 1):
            host = Graph(0)
            for _ in range(c):
                host = host.disjoint_union(star_graph(t))
            # isolated vertices of g can use any unused host vertex
            if g.n <= host.n and is_subgraph(core, host):
                return "constant"
    return "linear"


def endpoint_families(t: int, r, stars: bool = False) -> FamilyPlan:
    """Forbidden families realizing the endpoint exponents.

    Cliques: exponent 1 via K_t plus a pendant vertex, exponent t via the
    empty family. Stars: exponents 0, 1, t, t+1 via {S_t}, {S_t+1}, {2K_2}
    and the empty family.
    """
    r = as_fraction(r)
    plan = FamilyPlan(t, r, None)
    if stars:
        table = {
            Fraction(0): [star_graph(t)],
            Fraction(1): [star_graph(t + 1)],
            Fraction(t): [Graph(4, ((0, 1), (2, 3)))],
            Fraction(t + 1): [],
        }
    else:
        table = {Fraction(1): [plus_graph(t)], Fraction(t): []}
    if r not in table:
        raise InfeasibleParameters(f"{r} is not an endpoint exponent for {'S' if stars else 'K'}_{t}")
    plan.forbidden_graphs = table[r]
    plan.case_trace.append({"case": "endpoint", "stars": stars, "exponent": str(r)})
    return plan


def random_admissible_rationals(rng, low: Fraction, high: Fraction | None, count: int,
                                max_den: int = 12, include_high: bool = True) -> list[Fraction]:
    """Sample rationals in (low, high] (or (low, low+8] when unbounded) with small denominators."""
    top = high if high is not None else low + 8
    out = []
    while len(out) < count:
        den = int(rng.integers(1, max_den + 1))
        lo_num = low.numerator * den // low.denominator
        hi_num = top.numerator * den // top.denominator
        if hi_num <= lo_num:
            continue
        num = int(rng.integers(lo_num, hi_num + 1))
        x = Fraction(num, den)
        if x > low and (x < top or (include_high and x == top)):
            out.append(x)
    return out

