"""Command-line interface.

Every command reads one instance file and writes JSON (DOT for
``export-dot``, instance text for ``gen``) to standard output. Exit codes:
0 success, 1 negative answer (``verify`` violation, ``solve`` without a
solution), 2 I/O error or bad usage, 3 malformed instance, 4 internal
invariant breach; ``decide --exit-status`` maps the verdict to 10
(solvable), 11 (unsolvable) or 12 (unknown).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .classify import classify
from .decide import DecideOptions, InvariantError, decide
from .gfcode import CodeConstructionError, RegionCode, code_from_json, verify_edge_code, verify_region_code
from .netmodel import (
    Network,
    NetworkError,
    RegionGraphSpec,
    generate_random_network,
    generate_random_region_graph,
    generate_separable_region_graph,
    load_instance,
    normalize,
    validate,
)
from .oracle import SearchBudget, run_oracle
from .partition import character_partition, is_compatible, witness_json
from .regions import RegionGraph, basic_decompose, is_basic, region_graph_from_json, region_graph_of, to_dot

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_NO, EXIT_IO, EXIT_PARSE, EXIT_INVARIANT = 0, 1, 2, 3, 4
STATUS_EXIT = {"solvable": 10, "unsolvable": 11, "unknown": 12}

GRAMMAR = """\
instance grammar (one declaration per line, '#' starts a comment):

  network:       sources: <id>+
                 terminals: <id>+
                 node: <id>
                 edge: <tail> <head>

  region graph:  regiongraph
                 source <name> <i>
                 region <name> : <parent> <parent>+
                 terminal <name> <j> : <parent> <parent>+

JSON instances (*.json) use {"sources", "terminals", "nodes", "edges"} for
networks and {"regions": [{"name", "kind", "index", "parents"}]} for region
graphs; the output of 'decompose' is accepted as a region graph as well.
"""


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path: str) -> Network | RegionGraphSpec | RegionGraph:
    p = Path(path)
    if p.suffix == ".json":
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise NetworkError(f"syntax error: {exc.msg} (line {exc.lineno})") from exc
        if isinstance(data, dict) and data.get("regions") and "edges" in data["regions"][0]:
            return region_graph_from_json(data)
    return load_instance(p)


def _region_graph(inst: Network | RegionGraphSpec | RegionGraph) -> RegionGraph:
    if isinstance(inst, RegionGraph):
        return inst
    if isinstance(inst, RegionGraphSpec):
        return region_graph_of(inst)
    aug = normalize(inst)
    validate(aug)
    return basic_decompose(aug)


def _emit(obj: object) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_decompose(args: argparse.Namespace) -> int:
    inst = _load(args.instance)
    rg = _region_graph(inst)
    out = rg.to_json()
    aug = normalize(inst) if isinstance(inst, Network) else None
    out["basic"] = is_basic(rg, aug)[0]
    _emit(out)
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    rg = _region_graph(_load(args.instance))
    _emit(classify(rg).to_json(rg))
    return EXIT_OK


def cmd_partition(args: argparse.Namespace) -> int:
    rg = _region_graph(_load(args.instance))
    profile = classify(rg)
    part, halt = character_partition(rg, profile)
    compat = is_compatible(part, literal=args.literal)
    _emit(
        {
            "partition": part.to_json(),
            "halt_reason": halt,
            "merges": [
                {
                    "classes": [rg.names(step.first), rg.names(step.second)],
                    "witness": witness_json(step.witness, rg),
                }
                for step in part.history
            ],
            "compatibility": compat.to_json(part),
        }
    )
    return EXIT_OK


def _options(args: argparse.Namespace) -> DecideOptions:
    return DecideOptions(oracle_budget=SearchBudget(fields=(2, 3, 5), time_limit=args.time_limit))


def cmd_decide(args: argparse.Namespace) -> int:
    inst = _load(args.instance)
    d = decide(inst, _options(args))
    _emit(d.to_json())
    return STATUS_EXIT[d.status] if args.exit_status else EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load(args.instance)
    d = decide(inst, _options(args))
    if d.status != "solvable":
        _emit(d.to_json())
        return EXIT_NO
    if isinstance(d.code, RegionCode) or (args.region and d.region_code is not None):
        out = d.region_code.to_json(d.rg)
    else:
        out = d.code.to_json()
    _emit(out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    inst = _load(args.instance)
    try:
        data = json.loads(Path(args.code).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise NetworkError(f"syntax error in code file: {exc.msg}") from exc
    if isinstance(data, dict) and "certificate" in data:
        data = data["certificate"].get("code", data)
    if not isinstance(data, dict):
        raise NetworkError("code file must hold a JSON object")
    if data.get("level") == "edge":
        if not isinstance(inst, Network):
            raise NetworkError("edge codes need a network instance")
        try:
            code = code_from_json(data)
        except ValueError as exc:
            raise NetworkError(str(exc)) from exc
        bad = verify_edge_code(normalize(inst), code)
    else:
        rg = _region_graph(inst)
        try:
            code = code_from_json(data, rg)
        except ValueError as exc:
            raise NetworkError(str(exc)) from exc
        bad = verify_region_code(rg, code)
    if bad is None:
        sys.stdout.write("ok\n")
        return EXIT_OK
    sys.stdout.write(f"violation: {bad.describe()}\n")
    return EXIT_NO


def cmd_oracle(args: argparse.Namespace) -> int:
    inst = _load(args.instance)
    try:
        fields = tuple(int(x) for x in args.fields.split(","))
        budget = SearchBudget(fields, args.node_limit, args.time_limit, args.level)
    except ValueError as exc:
        raise _Fail(EXIT_IO, f"bad option: {exc}") from exc
    rg = _region_graph(inst)
    aug = normalize(inst) if isinstance(inst, Network) else None
    results = run_oracle(rg, aug, budget)
    _emit({"level": args.level, "results": [r.to_json(rg) for r in results]})
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.kind == "network":
        inst = generate_random_network(args.seed, args.nodes, args.edges, args.terminals, args.sources)
    elif args.kind == "regiongraph":
        inst = generate_random_region_graph(args.seed, args.coding, args.terminals)
    else:
        inst = generate_separable_region_graph(args.seed, args.coding, args.terminals)
    sys.stdout.write(inst.to_text())
    return EXIT_OK


def cmd_export_dot(args: argparse.Namespace) -> int:
    sys.stdout.write(to_dot(_region_graph(_load(args.instance))))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumnet",
        description="Decide and solve three-source sum-networks.",
        epilog=GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, func, help_text: str, instance: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=GRAMMAR,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        if instance:
            p.add_argument("instance", help="instance file (network, region graph or JSON)")
        p.set_defaults(func=func)
        return p

    add("decompose", cmd_decompose, "print the basic region graph as JSON")
    add("classify", cmd_classify, "print Pi, terminal labels, Omega/Lambda and separability")
    p = add("partition", cmd_partition, "print the character partition and its compatibility")
    p.add_argument("--literal", action="store_true",
                   help="use the plane test without the third source class's subclass")
    for name, func, text in (
        ("decide", cmd_decide, "decide solvability and print the certificate"),
        ("solve", cmd_solve, "print a verified code, or the negative decision (exit 1)"),
    ):
        p = add(name, func, text)
        p.add_argument("--time-limit", type=float, default=20.0,
                       help="seconds per field for the search fallback (default 20)")
        if name == "decide":
            p.add_argument("--exit-status", action="store_true",
                           help="exit 10/11/12 for solvable/unsolvable/unknown")
        else:
            p.add_argument("--region", action="store_true", help="print the region-level code for networks")
    p = add("verify", cmd_verify, "check a code JSON against an instance; prints ok or the violation")
    p.add_argument("code", help="code JSON (output of 'solve' or a decision)")
    p = add("oracle", cmd_oracle, "exhaustive code search over small prime fields")
    p.add_argument("--fields", default="2,3,5", help="comma-separated primes (default 2,3,5)")
    p.add_argument("--level", choices=("region", "edge"), default="region")
    p.add_argument("--time-limit", type=float, default=60.0, help="seconds per field (default 60)")
    p.add_argument("--node-limit", type=int, default=5_000_000, help="search nodes per field")
    p = add("gen", cmd_gen, "print a random instance", instance=False)
    p.add_argument("--kind", choices=("network", "regiongraph", "separable"), default="network")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--edges", type=int, default=16)
    p.add_argument("--sources", type=int, default=3)
    p.add_argument("--terminals", type=int, default=3)
    p.add_argument("--coding", type=int, default=5, help="coding regions for region-graph kinds")
    add("export-dot", cmd_export_dot, "print the region graph in DOT")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        sys.stderr.write(f"sumnet: {exc}\n")
        return exc.code
    except OSError as exc:
        sys.stderr.write(f"sumnet: {exc}\n")
        return EXIT_IO
    except (InvariantError, CodeConstructionError, AssertionError) as exc:
        sys.stderr.write(f"sumnet: internal error: {exc}\n")
        return EXIT_INVARIANT
    except (NetworkError, ValueError) as exc:
        sys.stderr.write(f"sumnet: {exc}\n")
        return EXIT_PARSE
