"""Command-line interface.

Exit codes: 0 success, 2 usage or malformed input, 3 cap exceeded,
4 infeasible parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from fractions import Fraction

from . import complexes, constructions, counting, density, graph_core
from .constructions import PARAM_NAMES, ConstructionId, canonical_witness
from .errors import CapExceeded, FormatError, InfeasibleParameters
from .harness import EdgeProbability, ExperimentConfig, default_workers, run_experiment
from .planner import plan_family, plan_star_family

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_INFEASIBLE = 0, 2, 3, 4

KIND_ALIASES = {
    "t2": "T2",
    "star": "STAR",
    "t3_spike": "T3_SPIKE",
    "t3_glued": "T3_GLUED",
    "type1": "TYPE1",
    "type2": "TYPE2",
    "clique": "ROOTED_CLIQUE",
}


class UsageError(Exception):
    pass


def parse_construction_id(text: str) -> ConstructionId:
    """Parse 'TYPE1(3,1,2,1)' (kind names are case-insensitive, aliases allowed)."""
    m = re.fullmatch(r"\s*([A-Za-z0-9_]+)\s*\(([-0-9,\s]*)\)\s*", text)
    if not m:
        raise UsageError(f"cannot parse construction {text!r}")
    kind = KIND_ALIASES.get(m.group(1).lower(), m.group(1).upper())
    params = tuple(int(x) for x in m.group(2).split(",") if x.strip())
    return ConstructionId(kind, params)


def _construction_from_args(args) -> ConstructionId:
    if args.kind is None:
        raise UsageError("--kind is required")
    kind = KIND_ALIASES[args.kind]
    values = []
    for name in PARAM_NAMES[kind]:
        v = getattr(args, name)
        if v is None:
            raise UsageError(f"--{name} is required for --kind {args.kind}")
        values.append(v)
    return ConstructionId(kind, tuple(values))


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _rooted_from_args(args) -> graph_core.RootedGraph:
    if getattr(args, "input", None):
        return graph_core.deserialize(_read_input(args.input))
    return _construction_from_args(args).build()


def _emit(args, payload: bytes | str) -> None:
    if isinstance(payload, str):
        payload = payload.encode()
    if not payload.endswith(b"\n"):
        payload += b"\n"
    if args.out == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    else:
        with open(args.out, "wb") as fh:
            fh.write(payload)


def _require_format(args, allowed: tuple[str, ...]) -> str:
    fmt = args.format or allowed[0]
    if fmt not in allowed:
        raise UsageError(f"{args.command} supports --format {'|'.join(allowed)}, got {fmt}")
    return fmt


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cap(value, default):
    return default if value is None else value


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_construct(args) -> int:
    fmt = _require_format(args, ("json", "dot"))
    f = _construction_from_args(args).build()
    _emit(args, graph_core.serialize(f, fmt))
    return EXIT_OK


def cmd_density(args) -> int:
    _require_format(args, ("json",))
    f = _rooted_from_args(args)
    res = density.is_balanced(f, cap=_cap(args.cap_balance, density.DEFAULT_BALANCE_CAP), method=args.method)
    doc = {"n": f.n, "roots": sorted(f.roots)}
    doc.update(res.as_dict())
    _emit(args, _dumps(doc))
    return EXIT_OK


def cmd_plan(args) -> int:
    _require_format(args, ("json",))
    r = Fraction(args.exponent)
    if args.stars:
        plan = plan_star_family(args.t, r)
    else:
        plan = plan_family(args.t, r, check=not args.no_check)
    _emit(args, plan.to_json())
    return EXIT_OK


def cmd_witness(args) -> int:
    _require_format(args, ("json",))
    cid = _construction_from_args(args)
    w = canonical_witness(cid)
    doc = {"construction": cid.as_dict()}
    doc.update(w.as_dict())
    _emit(args, _dumps(doc))
    return EXIT_OK


def cmd_power(args) -> int:
    fmt = _require_format(args, ("json", "dot"))
    f = _rooted_from_args(args)
    members = constructions.power_members(f, args.ell, cap=_cap(args.cap_power, constructions.DEFAULT_POWER_CAP))
    if fmt == "dot":
        _emit(args, b"".join(graph_core.to_dot(h, name=f"M{i}") for i, h in enumerate(members)))
    else:
        docs = [json.loads(graph_core.to_json(h)) for h in members]
        _emit(args, _dumps({"ell": args.ell, "count": len(members), "members": docs}))
    return EXIT_OK


def cmd_count(args) -> int:
    fmt = _require_format(args, ("json", "csv"))
    g = graph_core.deserialize(_read_input(args.input)).graph
    cap = _cap(args.cap_count, counting.DEFAULT_COUNT_CAP)
    modes = [args.cliques is not None, args.witness is not None, args.rooted is not None]
    if sum(modes) != 1:
        raise UsageError("give exactly one of --cliques, --witness, --rooted")
    if args.cliques is not None:
        value = counting.count_cliques(g, args.cliques, cap)
        doc = {"quantity": f"K{args.cliques}", "count": value}
        rows = [[doc["quantity"], value]]
        header = ["quantity", "count"]
    elif args.witness is not None:
        cid = parse_construction_id(args.witness)
        w = canonical_witness(cid)
        c = complexes.clique_complex(g, w.t)
        value = counting.count_witness_copies(c, w, cap)
        doc = {"quantity": f"witness {cid}", "count": value}
        rows = [[doc["quantity"], value]]
        header = ["quantity", "count"]
    else:
        if re.fullmatch(r"[A-Za-z0-9_]+\(.*\)", args.rooted):
            f = parse_construction_id(args.rooted).build()
        else:
            f = graph_core.deserialize(_read_input(args.rooted))
        by_root = counting.rooted_copies_by_root(g, f, _cap(args.cap_embed, counting.DEFAULT_EMBED_CAP))
        doc = {"quantity": "rooted copies",
               "roots": sorted(f.roots),
               "by_root": [{"image": list(k), "copies": v} for k, v in by_root.items()],
               "total": sum(by_root.values())}
        header = ["image", "copies"]
        rows = [[" ".join(map(str, k)), v] for k, v in by_root.items()]
    _emit(args, _csv(header, rows) if fmt == "csv" else _dumps(doc))
    return EXIT_OK


def _parse_thresholds(text: str) -> list[Fraction]:
    try:
        return [Fraction(x) for x in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad thresholds {text!r}") from exc


def cmd_prune(args) -> int:
    _require_format(args, ("json",))
    raw = _read_input(args.input)
    doc = json.loads(raw) if raw.strip() else {}
    if isinstance(doc, dict) and "sets" in doc:
        c = complexes.TComplex.from_json(raw)
    else:
        if args.t is None:
            raise UsageError("--t is required when the input is a graph")
        g = graph_core.deserialize(raw).graph
        c = complexes.clique_complex(g, args.t, _cap(args.cap_cliques, complexes.DEFAULT_CLIQUE_CAP))
    thresholds = _parse_thresholds(args.thresholds)
    if len(thresholds) != c.t - 1:
        raise UsageError(f"need {c.t - 1} thresholds (levels 1..t-1), got {len(thresholds)}")
    out = complexes.prune(c, thresholds)
    _emit(args, _dumps({"t": out.t, "sizes": list(out.sizes()), "sets": [list(s) for s in out.maximal_sets()]}))
    return EXIT_OK


def cmd_experiment(args) -> int:
    _require_format(args, ("csv",))
    if args.members:
        members = [parse_construction_id(x) for x in args.members.split(";") if x.strip()]
        t = args.t
    elif args.exponent is not None:
        plan = plan_family(args.t, Fraction(args.exponent), check=False)
        members = plan.member_ids()
        t = plan.t
    else:
        members, t = [], args.t
    cfg = ExperimentConfig(
        n=args.n,
        p=EdgeProbability.parse(args.p),
        seed=args.seed,
        t=t,
        members=members,
        repetitions=args.repetitions,
        power_level=args.power_level,
        count_cap=_cap(args.cap_embed, counting.DEFAULT_EMBED_CAP),
        power_cap=_cap(args.cap_embed, counting.DEFAULT_EMBED_CAP),
        workers=args.workers if args.workers is not None else default_workers(),
    )
    _emit(args, run_experiment(cfg))
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["json", "dot", "csv"], default=None)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--seed", type=int, default=0)
    for name in ("balance", "power", "count", "embed", "cliques"):
        p.add_argument(f"--cap-{name}", type=int, default=None, dest=f"cap_{name}")


def _construction_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=sorted(KIND_ALIASES))
    for name in ("t", "a", "b", "s", "k"):
        p.add_argument(f"--{name}", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ktrees", description="Balanced rooted trees and K_t-trees toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="emit a construction as JSON or DOT")
    _common(p)
    _construction_args(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("density", help="rooted density and balance verdict")
    _common(p)
    _construction_args(p)
    p.add_argument("--in", dest="input", help="rooted graph JSON ('-' for stdin)")
    p.add_argument("--method", choices=["auto", "brute", "connected", "flow"], default="auto")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("plan", help="family plan for an exponent")
    _common(p)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--exponent", required=True, help="rational, e.g. 7/3")
    p.add_argument("--stars", action="store_true", help="plan a star family instead")
    p.add_argument("--no-check", action="store_true", help="skip member verification")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("witness", help="canonical witness of a K_t-tree")
    _common(p)
    _construction_args(p)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("power", help="enumerate members of a power")
    _common(p)
    _construction_args(p)
    p.add_argument("--in", dest="input", help="rooted graph JSON")
    p.add_argument("--ell", type=int, required=True)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("count", help="count cliques, witness copies or rooted copies")
    _common(p)
    p.add_argument("--in", dest="input", required=True, help="host graph JSON")
    p.add_argument("--cliques", type=int)
    p.add_argument("--witness", help="construction id, e.g. TYPE1(3,1,2,1)")
    p.add_argument("--rooted", help="construction id or rooted graph JSON path")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("prune", help="prune a complex to degree thresholds")
    _common(p)
    p.add_argument("--in", dest="input", required=True, help="complex JSON or graph JSON")
    p.add_argument("--t", type=int)
    p.add_argument("--thresholds", required=True, help="comma-separated, one per level 1..t-1")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("experiment", help="supersaturation experiment, CSV output")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True, help="probability or rule like 2*n^(-1/2)")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--exponent", help="use the members of plan(t, exponent)")
    p.add_argument("--members", help="';'-separated construction ids")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--power-level", type=int, default=2)
    p.add_argument("--workers", type=int, default=None, help="threads (default KTREES_WORKERS or 1)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except InfeasibleParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
