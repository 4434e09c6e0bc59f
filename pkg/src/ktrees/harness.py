"""Random graphs and end-to-end supersaturation experiments."""

from __future__ import annotations

import csv
import io
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .constructions import ConstructionId
from .counting import (
    DEFAULT_EMBED_CAP,
    count_copies,
    find_power_member,
    predicted_count,
)
from .errors import CapExceeded, FormatError
from .graph_core import Graph, complete_graph

PRNG_NAME = "philox4x64-v1"

CSV_COLUMNS = ["repetition", "seed", "n", "p", "quantity", "actual", "predicted", "ratio", "power_member_found"]


def _rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, stream); independent of thread scheduling."""
    key = np.array([seed & (2**64 - 1), stream & (2**64 - 1)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gnp(n: int, p: float, seed: int, stream: int = 0) -> Graph:
    """Erdos-Renyi G(n, p): one uniform draw per pair of the upper triangle, row-major."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if n < 0:
        raise ValueError("n must be non-negative")
    iu, ju = np.triu_indices(n, k=1)
    draws = _rng(seed, stream).random(len(iu))
    keep = draws < p
    edges = tuple(zip(iu[keep].tolist(), ju[keep].tolist()))
    return Graph(n, edges)


@dataclass(frozen=True)
class EdgeProbability:
    """Either a fixed probability or the rule p = c * n^(-1/d) with rational c, d."""

    value: Fraction | None = None
    c: Fraction | None = None
    d: Fraction | None = None

    @classmethod
    def parse(cls, text: str) -> "EdgeProbability":
        """Accepts '0.25', '1/4', or a rule such as '2*n^(-1/2)' or '3/2*n^(-2/3)'."""
        s = text.replace(" ", "")
        m = re.fullmatch(r"([0-9./]+)\*n\^\(?-1/([0-9./]+)\)?", s)
        if m:
            return cls(c=Fraction(m.group(1)), d=Fraction(m.group(2)))
        m = re.fullmatch(r"([0-9./]+)\*n\^\(?-([0-9]+)/([0-9]+)\)?", s)
        if m:
            return cls(c=Fraction(m.group(1)), d=Fraction(int(m.group(3)), int(m.group(2))))
        try:
            value = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"cannot parse edge probability {text!r}") from exc
        if not 0 <= value <= 1:
            raise FormatError(f"edge probability {text!r} outside [0, 1]")
        return cls(value=value)

    def at(self, n: int) -> float:
        if self.value is not None:
            return float(self.value)
        if n == 0:
            return 0.0
        return min(1.0, float(self.c) * n ** (-1.0 / float(self.d)))

    def __str__(self) -> str:
        if self.value is not None:
            return str(self.value)
        return f"{self.c}*n^(-1/{self.d})"


@dataclass
class ExperimentConfig:
    n: int
    p: EdgeProbability
    seed: int
    t: int
    members: list[ConstructionId] = field(default_factory=list)
    repetitions: int = 1
    power_level: int = 2
    count_cap: int | None = DEFAULT_EMBED_CAP
    power_cap: int | None = DEFAULT_EMBED_CAP
    workers: int = 1

    @classmethod
    def from_plan(cls, plan, n: int, p: EdgeProbability, seed: int, **kw) -> "ExperimentConfig":
        members = [cid for cid, _ in plan.members]
        return cls(n=n, p=p, seed=seed, t=plan.t, members=members, **kw)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _run_one(cfg: ExperimentConfig, rep: int) -> list[list[str]]:
    p = cfg.p.at(cfg.n)
    g = gnp(cfg.n, p, cfg.seed, rep)
    quantities: list[tuple[str, Graph, object]] = [(f"K{i}", complete_graph(i), None) for i in range(2, cfg.t + 1)]
    for cid in cfg.members:
        f = cid.build()
        quantities.append((str(cid), f.graph, f))
    rows = []
    for name, h, rooted in quantities:
        predicted = predicted_count(cfg.n, p, h.n, h.num_edges)
        try:
            actual = count_copies(g, h, cfg.count_cap)
            actual_s = str(actual)
            if actual == 0:
                ratio_s = _fmt(0.0)
            elif predicted == 0:
                ratio_s = "inf"
            else:
                ratio_s = _fmt(actual / predicted)
        except CapExceeded:
            actual_s, ratio_s = "", "capped"
        found = ""
        if rooted is not None:
            try:
                found = "1" if find_power_member(g, rooted, cfg.power_level, cfg.power_cap) else "0"
            except CapExceeded:
                found = "capped"
        rows.append([str(rep), str(cfg.seed), str(cfg.n), _fmt(p), name, actual_s, _fmt(predicted), ratio_s, found])
    return rows


def run_experiment_rows(cfg: ExperimentConfig) -> list[list[str]]:
    """Rows in (repetition, quantity) order regardless of the worker count."""
    if cfg.n == 0:
        return []
    reps = range(cfg.repetitions)
    if cfg.workers <= 1:
        chunks = [_run_one(cfg, r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(lambda r: _run_one(cfg, r), reps))
    return [row for chunk in chunks for row in chunk]


def run_experiment(cfg: ExperimentConfig) -> str:
    """CSV text with a mandatory header row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(run_experiment_rows(cfg))
    return buf.getvalue()


def default_workers() -> int:
    return int(os.environ.get("KTREES_WORKERS", "1"))
