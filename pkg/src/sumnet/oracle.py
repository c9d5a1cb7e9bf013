"""Exhaustive linear-code search over small prime fields.

The search walks the items (regions or edges) in topological order and
assigns each one a 1-dimensional subspace of its parents' span; scaling a
non-terminal vector never changes which vectors its children can reach, so
one representative per subspace suffices. Terminals are pinned to the
all-ones vector. Two prunings keep this tractable:

* an upper bound on what every unassigned item can still reach (the span
  of its parents' values or bounds) must contain the all-ones vector at
  every terminal;
* the outcome below step ``t`` depends only on the values of already
  assigned items that still feed unassigned ones, so failing states are
  memoized on that frontier.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from sympy import isprime

from .gfcode import (
    EdgeCode,
    RegionCode,
    Vec,
    alpha,
    ones,
    projective_points,
    span_basis,
    verify_edge_code,
    verify_region_code,
)
from .netmodel import AugmentedNetwork
from .regions import RegionGraph

__all__ = ["OracleResult", "SearchBudget", "brute_force_edges", "brute_force_region", "edge_order", "run_oracle"]


@dataclass(frozen=True)
class SearchBudget:
    fields: tuple[int, ...] = (2, 3, 5)
    node_limit: int = 5_000_000
    time_limit: float = 60.0
    level: str = "region"

    def __post_init__(self) -> None:
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("search limits must be positive")
        if not self.fields or not all(isprime(q) for q in self.fields):
            raise ValueError(f"fields must be primes, got {self.fields}")
        if self.level not in ("region", "edge"):
            raise ValueError(f"unknown level {self.level}")


@dataclass(frozen=True)
class OracleResult:
    """``status`` is "found", "infeasible" (exact for this field) or "exhausted" (budget hit)."""

    status: str
    prime: int
    code: RegionCode | EdgeCode | None
    nodes: int
    elapsed: float

    def to_json(self, rg: RegionGraph | None = None) -> dict:
        out = {"status": self.status, "prime": self.prime, "nodes": self.nodes}
        if self.code is not None:
            out["code"] = self.code.to_json(rg) if isinstance(self.code, RegionCode) else self.code.to_json()
        return out


class _OutOfBudget(Exception):
    pass


@lru_cache(maxsize=200_000)
def _join(a: tuple[Vec, ...], b: tuple[Vec, ...], q: int) -> tuple[Vec, ...]:
    if not a:
        return b
    if not b:
        return a
    return span_basis(a + b, q)


@lru_cache(maxsize=20_000)
def _points(basis: tuple[Vec, ...], q: int) -> tuple[Vec, ...]:
    return tuple(projective_points(basis, q))


@lru_cache(maxsize=20_000)
def _contains(basis: tuple[Vec, ...], v: Vec, q: int) -> bool:
    return len(span_basis(basis + (v,), q)) == len(basis)


def _search(
    dim: int,
    parents: Sequence[Sequence[int]],
    pinned: dict[int, Vec],
    terminals: frozenset[int],
    q: int,
    budget: SearchBudget,
) -> tuple[str, dict[int, Vec] | None, int]:
    """Core search; items are 0..N-1 in topological order."""
    count = len(parents)
    target = ones(dim)
    zero = (0,) * dim
    children: list[list[int]] = [[] for _ in range(count)]
    for x, ps in enumerate(parents):
        for y in ps:
            children[y].append(x)
    useful = [False] * count
    for x in range(count - 1, -1, -1):
        useful[x] = x in terminals or any(useful[c] for c in children[x])
    for x, v in pinned.items():
        if x in terminals and v != target:
            return "infeasible", None, 0
    order = [x for x in range(count) if useful[x] and x not in pinned]
    step_of = {x: t for t, x in enumerate(order)}
    last_use = {}
    for x in range(count):
        uses = [step_of[c] for c in children[x] if c in step_of]
        last_use[x] = max(uses) if uses else -1
    frontiers = []
    for t in range(len(order) + 1):
        frontiers.append(
            tuple(x for x in range(count) if (x in pinned or (x in step_of and step_of[x] < t)) and last_use[x] >= t)
        )
    value: dict[int, Vec] = dict(pinned)
    single = {x: ((v,) if any(v) else ()) for x, v in pinned.items()}
    failed: set[tuple] = set()
    nodes = 0
    deadline = time.monotonic() + budget.time_limit

    def bound_ok(t: int) -> bool:
        bound: dict[int, tuple[Vec, ...]] = {}
        for x in order[t:]:
            b: tuple[Vec, ...] = ()
            for y in parents[x]:
                b = _join(b, bound[y] if y in bound else single.get(y, ()), q)
            bound[x] = b
            if x in terminals and not _contains(b, target, q):
                return False
        return True

    def dfs(t: int) -> bool:
        nonlocal nodes
        if t == len(order):
            return True
        key = (t,) + tuple(value[x] for x in frontiers[t])
        if key in failed:
            return False
        x = order[t]
        span: tuple[Vec, ...] = ()
        for y in parents[x]:
            span = _join(span, single[y], q)
        if x in terminals:
            options: Sequence[Vec] = (target,) if _contains(span, target, q) else ()
        elif not span:
            options = (zero,)
        else:
            pts = _points(span, q)
            options = ((target,) + tuple(v for v in pts if v != target)) if target in pts else pts
        for v in options:
            nodes += 1
            if nodes > budget.node_limit or (nodes & 1023 == 0 and time.monotonic() > deadline):
                raise _OutOfBudget
            value[x] = v
            single[x] = (v,) if any(v) else ()
            if bound_ok(t + 1) and dfs(t + 1):
                return True
        del value[x]
        del single[x]
        failed.add(key)
        return False

    try:
        if not bound_ok(0) or not dfs(0):
            return "infeasible", None, nodes
    except _OutOfBudget:
        return "exhausted", None, nodes
    for x in range(count):
        if x not in value:
            value[x] = value[parents[x][0]] if parents[x] else zero
    return "found", value, nodes


def brute_force_region(rg: RegionGraph, q: int, budget: SearchBudget | None = None) -> OracleResult:
    """Search for a region code over GF(q); found codes are re-checked by the verifier."""
    budget = budget or SearchBudget()
    start = time.monotonic()
    pinned = {r: alpha(i, rg.k) for i, r in enumerate(rg.sources, 1)}
    status, value, nodes = _search(rg.k, rg.parents, pinned, frozenset(rg.terminals), q, budget)
    code = None
    if status == "found":
        code = RegionCode(q, value)
        bad = verify_region_code(rg, code)
        if bad is not None:
            raise AssertionError("oracle produced an invalid code: " + bad.describe())
    return OracleResult(status, q, code, nodes, time.monotonic() - start)


def edge_order(aug: AugmentedNetwork) -> list[int]:
    """Edge ids in topological order of the In(e) relation, smallest id first among ready edges."""
    ids = [e.id for e in aug.edges]
    indeg = {e: len(aug.inputs[e]) for e in ids}
    out: dict[int, list[int]] = {e: [] for e in ids}
    for e in ids:
        for f in aug.inputs[e]:
            out[f].append(e)
    ready = [e for e in ids if indeg[e] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        e = heapq.heappop(ready)
        order.append(e)
        for g in out[e]:
            indeg[g] -= 1
            if indeg[g] == 0:
                heapq.heappush(ready, g)
    if len(order) != len(ids):
        raise ValueError("edge graph contains a cycle")
    return order


def brute_force_edges(aug: AugmentedNetwork, q: int, budget: SearchBudget | None = None) -> OracleResult:
    """Same search directly over the augmented edges (each constrained by In(e))."""
    budget = budget or SearchBudget(level="edge")
    start = time.monotonic()
    order = edge_order(aug)
    pos = {e: x for x, e in enumerate(order)}
    parents = [tuple(pos[f] for f in aug.inputs[e]) for e in order]
    pinned = {}
    terminals = set()
    for e in aug.edges:
        if e.kind == "source-link":
            pinned[pos[e.id]] = alpha(e.index, aug.k)
        elif e.kind == "terminal-link":
            terminals.add(pos[e.id])
    status, value, nodes = _search(aug.k, parents, pinned, frozenset(terminals), q, budget)
    code = None
    if status == "found":
        code = EdgeCode(q, {order[x]: v for x, v in value.items()})
        bad = verify_edge_code(aug, code)
        if bad is not None:
            raise AssertionError("oracle produced an invalid code: " + bad.describe())
    return OracleResult(status, q, code, nodes, time.monotonic() - start)


def run_oracle(
    rg: RegionGraph | None,
    aug: AugmentedNetwork | None,
    budget: SearchBudget,
) -> list[OracleResult]:
    """Run the search over every field in the budget at the budget's level.

    The time limit applies per field.
    """
    out = []
    for q in budget.fields:
        if budget.level == "edge":
            if aug is None:
                raise ValueError("edge-level search needs a network instance")
            out.append(brute_force_edges(aug, q, budget))
        else:
            out.append(brute_force_region(rg, q, budget))
    return out
