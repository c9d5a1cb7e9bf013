"""The decision pipeline: prechecks, partition calculus, reductions and certificates.

Flow for a three-source instance:

1. every source must reach every terminal (otherwise unsolvable);
2. networks are reduced to their basic region graph;
3. a terminal region inside Pi is unsolvable;
4. terminal-separable graphs are decided by the character partition
   (compatible: build and verify a code; otherwise unsolvable), and with
   three terminals the verdict is cross-checked against the direct
   (P1, P2) pattern test;
5. other graphs are reduced by promoting a region Q of some Omega_I with
   |I| >= 2 to a terminal in place of the terminals of I; a solution of the
   reduced graph lifts by giving every descendant of Q the all-ones vector.
   With at most three terminals the first reduction always succeeds; with
   more, every Omega_I is tried and the exhaustive search settles what the
   reductions cannot (``unknown`` if it also fails).

One- and two-source networks are decided by connectivity alone and solved
by relaying the all-ones vector greedily.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

from .classify import PLANES, TerminalProfile, check_assumption1, classify
from .gfcode import (
    EdgeCode,
    RegionCode,
    Vec,
    alpha,
    assign_pi_code,
    choose_prime,
    extend_code,
    generate_B,
    in_span,
    lift_to_edges,
    ones,
    span_basis,
    verify_edge_code,
    verify_region_code,
)
from .netmodel import AugmentedNetwork, Network, NetworkError, RegionGraphSpec, normalize, validate
from .oracle import SearchBudget, edge_order, run_oracle
from .partition import (
    PiPartition,
    character_partition,
    contract,
    is_compatible,
    trivial_partition,
    witness_json,
)
from .regions import RegionGraph, basic_decompose, region_graph_of, super_region, super_region_open

__all__ = [
    "CIRWitness",
    "Decision",
    "DecideOptions",
    "InvariantError",
    "Reduction",
    "check_cir",
    "decide",
    "decide_3s3t",
    "decide_region_graph",
    "decide_terminal_separable",
    "lift_reduction",
    "recheck",
    "simple_case_conditions",
    "super_terminal_reduce",
    "verify_cir_witness",
]


class InvariantError(RuntimeError):
    """An internal consistency check failed (a bug, never an input problem)."""


@dataclass(frozen=True)
class DecideOptions:
    oracle_budget: SearchBudget = SearchBudget(fields=(2, 3, 5), time_limit=20.0)
    cross_check: bool = True


@dataclass(frozen=True)
class CIRWitness:
    """``terminal_naming[m-1]`` / ``source_naming[m-1]``: actual index named m."""

    terminal_naming: tuple[int, int, int]
    source_naming: tuple[int, int, int]
    p1: int
    p2: int

    def to_json(self, rg: RegionGraph) -> dict:
        return {
            "terminal_naming": list(self.terminal_naming),
            "source_naming": list(self.source_naming),
            "P1": rg.name(self.p1),
            "P2": rg.name(self.p2),
        }


@dataclass(frozen=True)
class Reduction:
    terminals: frozenset[int]
    region: int

    def to_json(self, rg: RegionGraph) -> dict:
        return {"terminals": sorted(self.terminals), "region": rg.name(self.region)}


@dataclass
class Decision:
    status: str
    certificate: dict
    diagnostics: dict = field(default_factory=dict)
    code: RegionCode | EdgeCode | None = None
    region_code: RegionCode | None = None
    rg: RegionGraph | None = None
    evidence: object = None

    def to_json(self) -> dict:
        return {"status": self.status, "certificate": self.certificate, "diagnostics": self.diagnostics}


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _key(s: frozenset[int]) -> str:
    return ",".join(map(str, sorted(s)))


def _profile_summary(rg: RegionGraph, profile: TerminalProfile) -> dict:
    data = profile.to_json(rg)
    return {"separable": profile.separable, "omega": data["omega"], "lambda": data["lambda"]}


def _relay(dim: int, parents: Sequence[Sequence[int]], pinned: dict[int, Vec], p: int) -> dict[int, Vec]:
    """Carry the all-ones vector wherever the parents span it, else a spanning vector (or zero)."""
    target = ones(dim)
    out: dict[int, Vec] = {}
    for x, ps in enumerate(parents):
        if x in pinned:
            out[x] = pinned[x]
            continue
        basis = span_basis([out[y] for y in ps], p)
        if not basis:
            out[x] = (0,) * dim
        elif in_span(target, basis, p)[0]:
            out[x] = target
        else:
            out[x] = basis[0]
    return out


def _region_disconnected(rg: RegionGraph) -> list[tuple[int, int]]:
    bad = []
    for i, s in enumerate(rg.sources, 1):
        below = rg.descendants(s) | {s}
        for j, t in enumerate(rg.terminals, 1):
            if t not in below:
                bad.append((i, j))
    return bad


def _unsolvable_connectivity(pairs: list[tuple[int, int]], diagnostics: dict) -> Decision:
    cert = {"kind": "connectivity", "disconnected": [list(x) for x in pairs]}
    return Decision("unsolvable", cert, diagnostics, evidence=tuple(pairs))


# ---------------------------------------------------------------------------
# The (P1, P2) pattern for three terminals
# ---------------------------------------------------------------------------


def verify_cir_witness(rg: RegionGraph, profile: TerminalProfile, w: CIRWitness) -> bool:
    """Check the pattern under the witness's naming."""
    if sorted(w.terminal_naming) != [1, 2, 3] or sorted(w.source_naming) != [1, 2, 3] or rg.n != 3:
        return False
    s = [rg.sources[i - 1] for i in w.source_naming]
    lam = [profile.lambda_j(j) for j in w.terminal_naming]
    return (
        profile.separable
        and w.p1 in super_region_open(rg, (s[1], s[2]))
        and w.p2 in super_region_open(rg, (s[0], s[1]))
        and lam[0] == frozenset((s[0], w.p1))
        and lam[1] == frozenset((w.p1, w.p2))
        and lam[2] <= super_region(rg, (s[0], w.p2)) | super_region(rg, (s[0], s[2]))
    )


def check_cir(rg: RegionGraph, profile: TerminalProfile) -> CIRWitness | None:
    """First naming (terminal permutations outer, source permutations inner) showing the pattern."""
    if rg.n != 3:
        raise ValueError("the pattern test needs exactly three terminals")
    for tn in permutations((1, 2, 3)):
        lam1, lam2 = profile.lambda_j(tn[0]), profile.lambda_j(tn[1])
        for sn in permutations((1, 2, 3)):
            s1 = rg.sources[sn[0] - 1]
            if len(lam1) != 2 or s1 not in lam1:
                continue
            (p1,) = lam1 - {s1}
            if len(lam2) != 2 or p1 not in lam2:
                continue
            (p2,) = lam2 - {p1}
            w = CIRWitness(tn, sn, p1, p2)
            if verify_cir_witness(rg, profile, w):
                return w
    return None


def simple_case_conditions(rg: RegionGraph, profile: TerminalProfile) -> tuple[int, ...]:
    """Which of four sufficient conditions for solvability hold (three separable terminals).

    1. two of the Lambda_j have at least three regions;
    2. any two Lambda_j of size two are disjoint;
    3. no source lies in any Lambda_j;
    4. some open pairwise source super region meets every Lambda_j.
    """
    if rg.n != 3 or not profile.separable:
        raise ValueError("conditions apply to terminal-separable graphs with three terminals")
    lam = [profile.lambda_j(j) for j in (1, 2, 3)]
    held = []
    if sum(1 for x in lam if len(x) >= 3) >= 2:
        held.append(1)
    if all(not (a & b) for a, b in ((lam[0], lam[1]), (lam[0], lam[2]), (lam[1], lam[2]))
           if len(a) == 2 and len(b) == 2):
        held.append(2)
    if not any(set(rg.sources) & x for x in lam):
        held.append(3)
    for a, b in PLANES:
        inner = super_region_open(rg, (rg.sources[a - 1], rg.sources[b - 1]))
        if all(inner & x for x in lam):
            held.append(4)
            break
    return tuple(held)


# ---------------------------------------------------------------------------
# Terminal-separable graphs
# ---------------------------------------------------------------------------


def _history_json(part: PiPartition) -> list[dict]:
    rg = part.rg
    return [
        {"classes": [rg.names(step.first), rg.names(step.second)], "witness": witness_json(step.witness, rg)}
        for step in part.history
    ]


def decide_terminal_separable(rg: RegionGraph, profile: TerminalProfile | None = None) -> Decision:
    """Decide via the character partition; solvable verdicts carry a verified region code."""
    profile = profile or classify(rg)
    if not profile.separable:
        raise ValueError("region graph is not terminal-separable")
    j = check_assumption1(rg, profile)
    if j is not None:
        raise ValueError(f"terminal {j} lies in Pi")
    part, halt = character_partition(rg, profile)
    base = {"partition": part.to_json(), "merges": _history_json(part), "halt_reason": halt}
    if halt == "source-classes-merged":
        cert = {"kind": "incompatible", **base}
        return Decision("unsolvable", cert, rg=rg, evidence=part)
    compat = is_compatible(part)
    if not compat.ok:
        cert = {"kind": "incompatible", **base, "violations": compat.to_json(part)}
        return Decision("unsolvable", cert, rg=rg, evidence=part)
    K = 3 + sum(1 for c in range(len(part.classes)) if not part.sources_in(c))
    p = choose_prime(K)
    fam = generate_B(K, p)
    if fam is None:
        raise InvariantError(f"no B-family with {K} sets over GF({p})")
    code = extend_code(rg, profile, assign_pi_code(part, fam))
    bad = verify_region_code(rg, code)
    if bad is not None:
        raise InvariantError("constructed code fails verification: " + bad.describe())
    cert = {"kind": "region-code", "code": code.to_json(rg), "reductions": [], **base}
    return Decision("solvable", cert, code=code, region_code=code, rg=rg, evidence=part)


# ---------------------------------------------------------------------------
# Super-terminal reductions
# ---------------------------------------------------------------------------


def super_terminal_reduce(
    rg: RegionGraph, profile: TerminalProfile, terminals: Sequence[int] | frozenset[int], q: int
) -> tuple[RegionGraph, Reduction]:
    """Replace the terminals in ``terminals`` by the single terminal region ``q``.

    ``q`` must reach exactly those terminals from outside Pi. The remaining
    terminals keep their relative order and ``q`` takes the place of the
    smallest replaced index.
    """
    group = frozenset(terminals)
    if len(group) < 2 or not group <= set(range(1, rg.n + 1)):
        raise ValueError("a reduction replaces at least two existing terminals")
    if q not in profile.omega.get(group, frozenset()):
        raise ValueError(f"region {rg.name(q)} is not in Omega_{{{_key(group)}}}")
    first = min(group)
    new = [q if j == first else t for j, t in enumerate(rg.terminals, 1) if j not in group or j == first]
    return rg.with_terminals(new), Reduction(group, q)


def lift_reduction(rg: RegionGraph, reduction: Reduction, code: RegionCode) -> RegionCode:
    """Give every descendant of the promoted region the all-ones vector."""
    vectors = dict(code.vectors)
    for r in rg.descendants(reduction.region):
        vectors[r] = ones(rg.k)
    return RegionCode(code.prime, vectors)


def _reduction_candidates(profile: TerminalProfile) -> list[tuple[frozenset[int], int]]:
    groups = sorted(profile.multi_omega(), key=lambda kv: (-len(kv[0]), sorted(kv[0])))
    return [(group, min(members)) for group, members in groups]


def _decide_by_reduction(
    rg: RegionGraph, profile: TerminalProfile, options: DecideOptions, depth: int
) -> Decision | None:
    for group, q in _reduction_candidates(profile):
        reduced, red = super_terminal_reduce(rg, profile, group, q)
        sub = decide_region_graph(reduced, options, depth + 1)
        if sub.status != "solvable":
            continue
        code = lift_reduction(rg, red, sub.region_code)
        bad = verify_region_code(rg, code)
        if bad is not None:
            raise InvariantError("lifted code fails verification: " + bad.describe())
        inner = sub.certificate
        cert = {
            "kind": "region-code",
            "code": code.to_json(rg),
            "reductions": [red.to_json(rg)] + inner.get("reductions", []),
        }
        for key in ("partition", "merges", "halt_reason", "source"):
            if key in inner:
                cert[key] = inner[key]
        return Decision("solvable", cert, code=code, region_code=code, rg=rg, evidence=(red, sub))
    return None


def decide_3s3t(rg: RegionGraph, profile: TerminalProfile | None = None, options: DecideOptions | None = None) -> Decision:
    """Three-terminal decision: reductions when not separable, else partition plus pattern cross-check."""
    if rg.n != 3:
        raise ValueError(f"exactly three terminals required, got {rg.n}")
    return decide_region_graph(rg, options, profile=profile)


# ---------------------------------------------------------------------------
# Region-graph level entry point
# ---------------------------------------------------------------------------


def decide_region_graph(
    rg: RegionGraph,
    options: DecideOptions | None = None,
    depth: int = 0,
    profile: TerminalProfile | None = None,
) -> Decision:
    """Decide a three-source region graph (assumed basic)."""
    options = options or DecideOptions()
    if rg.k != 3:
        raise ValueError(f"three sources required, got {rg.k}")
    bad = _region_disconnected(rg)
    if bad:
        d = _unsolvable_connectivity(bad, {})
        d.rg = rg
        return d
    profile = profile or classify(rg)
    diagnostics = _profile_summary(rg, profile)
    j = check_assumption1(rg, profile)
    if j is not None:
        plane = next(pl for pl in PLANES if rg.terminals[j - 1] in profile.plane(*pl))
        cert = {"kind": "assumption1", "terminal": j, "plane": list(plane)}
        return Decision("unsolvable", cert, diagnostics, rg=rg, evidence=(j, plane))
    if profile.separable:
        d = decide_terminal_separable(rg, profile)
        d.diagnostics = diagnostics
        if rg.n == 3 and options.cross_check:
            w = check_cir(rg, profile)
            if (w is None) != (d.status == "solvable"):
                raise InvariantError("partition verdict and pattern test disagree")
            held = simple_case_conditions(rg, profile)
            if held and d.status != "solvable":
                raise InvariantError(f"sufficient conditions {held} hold on an unsolvable verdict")
            d.diagnostics["simple_case"] = list(held)
            if w is not None:
                d.certificate = {"kind": "cir", "witness": w.to_json(rg), "incompatibility": d.certificate}
                d.evidence = w
        return d
    if depth > rg.n:
        raise InvariantError("reduction depth exceeded")
    d = _decide_by_reduction(rg, profile, options, depth)
    if d is not None:
        d.diagnostics = diagnostics
        return d
    if rg.n <= 3:
        raise InvariantError("no reduction succeeded on an instance with at most three terminals")
    results = run_oracle(rg, None, SearchBudget(
        fields=options.oracle_budget.fields,
        node_limit=options.oracle_budget.node_limit,
        time_limit=options.oracle_budget.time_limit,
        level="region",
    ))
    for res in results:
        if res.status == "found":
            cert = {"kind": "region-code", "code": res.code.to_json(rg), "reductions": [], "source": "oracle"}
            return Decision("solvable", cert, diagnostics, code=res.code, region_code=res.code, rg=rg)
    cert = {"kind": "oracle-bounds", "results": [r.to_json(rg) for r in results]}
    return Decision("unknown", cert, diagnostics, rg=rg, evidence=tuple(results))


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------


def _relay_network(aug: AugmentedNetwork, p: int = 2) -> EdgeCode:
    order = edge_order(aug)
    pos = {e: x for x, e in enumerate(order)}
    parents = [[pos[f] for f in aug.inputs[e]] for e in order]
    pinned = {pos[e.id]: alpha(e.index, aug.k) for e in aug.edges if e.kind == "source-link"}
    values = _relay(aug.k, parents, pinned, p)
    return EdgeCode(p, {order[x]: v for x, v in values.items()})


def _relay_regions(rg: RegionGraph, p: int = 2) -> RegionCode:
    pinned = {r: alpha(i, rg.k) for i, r in enumerate(rg.sources, 1)}
    return RegionCode(p, _relay(rg.k, rg.parents, pinned, p))


def decide(instance: Network | RegionGraphSpec | RegionGraph, options: DecideOptions | None = None) -> Decision:
    """Decide solvability and attach a certificate.

    Networks get an edge code (and the region code it was lifted from);
    region-graph instances get a region code.
    """
    options = options or DecideOptions()
    if isinstance(instance, (RegionGraphSpec, RegionGraph)):
        rg = region_graph_of(instance) if isinstance(instance, RegionGraphSpec) else instance
        if rg.k > 3:
            raise NetworkError(f"at most three sources are supported, got {rg.k}")
        if rg.k < 3:
            bad = _region_disconnected(rg)
            if bad:
                return _unsolvable_connectivity(bad, {"out_of_theory": True})
            code = _relay_regions(rg)
            if verify_region_code(rg, code) is not None:
                raise InvariantError("relay code fails verification")
            cert = {"kind": "region-code", "code": code.to_json(rg), "reductions": [], "source": "relay"}
            return Decision("solvable", cert, {"out_of_theory": True}, code, code, rg)
        return decide_region_graph(rg, options)
    if instance.k > 3:
        raise NetworkError(f"at most three sources are supported, got {instance.k}")
    aug = normalize(instance)
    report = validate(aug)
    if report.trivially_unsolvable:
        return _unsolvable_connectivity(report.disconnected, {"validation": report.to_json()})
    if instance.k < 3:
        code = _relay_network(aug)
        if verify_edge_code(aug, code) is not None:
            raise InvariantError("relay code fails verification")
        cert = {"kind": "edge-code", "code": code.to_json(), "source": "relay"}
        return Decision("solvable", cert, {"out_of_theory": True, "validation": report.to_json()}, code)
    rg = basic_decompose(aug)
    d = decide_region_graph(rg, options)
    d.diagnostics = {"validation": report.to_json(), "regions": len(rg), **d.diagnostics}
    if d.status == "solvable":
        edge_code = lift_to_edges(rg, d.region_code)
        bad = verify_edge_code(aug, edge_code)
        if bad is not None:
            raise InvariantError("lifted edge code fails verification: " + bad.describe())
        d.certificate = {"kind": "edge-code", "code": edge_code.to_json(), "region_certificate": d.certificate}
        d.code = edge_code
    return d


# ---------------------------------------------------------------------------
# Certificate re-checking
# ---------------------------------------------------------------------------


def _replay(rg: RegionGraph, profile: TerminalProfile, part: PiPartition) -> PiPartition:
    cur = trivial_partition(rg, profile)
    for step in part.history:
        c1, c2 = cur.classes.index(step.first), cur.classes.index(step.second)
        cur = contract(cur, c1, c2, step.witness)
    return cur


def recheck(instance: Network | RegionGraphSpec | RegionGraph, decision: Decision) -> bool:
    """Independently re-derive what the decision's certificate claims."""
    aug = None
    if isinstance(instance, Network):
        aug = normalize(instance)
    if decision.status == "unknown":
        return decision.certificate.get("kind") == "oracle-bounds"
    if decision.status == "solvable":
        if aug is not None:
            return isinstance(decision.code, EdgeCode) and verify_edge_code(aug, decision.code) is None
        rg = region_graph_of(instance) if isinstance(instance, RegionGraphSpec) else instance
        return isinstance(decision.code, RegionCode) and verify_region_code(rg, decision.code) is None
    kind = decision.certificate.get("kind")
    if kind == "connectivity":
        if aug is not None:
            return set(validate(aug).disconnected) == set(decision.evidence) != set()
        rg = region_graph_of(instance) if isinstance(instance, RegionGraphSpec) else instance
        return set(_region_disconnected(rg)) == set(decision.evidence) != set()
    if aug is not None:
        rg = basic_decompose(aug)
    else:
        rg = region_graph_of(instance) if isinstance(instance, RegionGraphSpec) else instance
    profile = classify(rg)
    if kind == "assumption1":
        j, plane = decision.evidence
        return rg.terminals[j - 1] in profile.plane(*plane)
    if kind == "cir":
        return verify_cir_witness(rg, profile, decision.evidence)
    if kind == "incompatible":
        part = decision.evidence
        replayed = _replay(rg, profile, part)
        if replayed.classes != part.classes:
            return False
        return replayed.source_merge or not is_compatible(replayed).ok
    return False
