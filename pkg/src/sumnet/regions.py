"""Region decomposition, region graphs and super regions."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .netmodel import AugmentedNetwork, Network, NetworkError, ParseError, RegionGraphSpec, make_network

__all__ = [
    "BasicViolation",
    "Region",
    "RegionGraph",
    "basic_decompose",
    "is_basic",
    "region_graph_from_blocks",
    "region_graph_from_json",
    "region_graph_of",
    "realize_network",
    "super_region",
    "super_region_open",
    "to_dot",
]


@dataclass(frozen=True)
class Region:
    name: str
    edges: frozenset[int]
    leader: int | None


@dataclass(frozen=True)
class RegionGraph:
    """Regions in a fixed topological order, addressed by position.

    ``parents[r]`` holds the positions of the parents of region ``r``;
    ``sources[i-1]`` is the region of source ``i`` and ``terminals[j-1]``
    the region holding terminal ``j`` (one region may hold several).
    """

    regions: tuple[Region, ...]
    parents: tuple[tuple[int, ...], ...]
    sources: tuple[int, ...]
    terminals: tuple[int, ...]

    def __post_init__(self) -> None:
        for r, ps in enumerate(self.parents):
            if any(p >= r for p in ps):
                raise NetworkError("region order is not topological")

    def __len__(self) -> int:
        return len(self.regions)

    @property
    def k(self) -> int:
        return len(self.sources)

    @property
    def n(self) -> int:
        return len(self.terminals)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.regions]
        for r, ps in enumerate(self.parents):
            for p in ps:
                out[p].append(r)
        return tuple(tuple(c) for c in out)

    @cached_property
    def _by_name(self) -> dict[str, int]:
        return {reg.name: r for r, reg in enumerate(self.regions)}

    def index(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown region {name}") from None

    def indices(self, names: Iterable[str]) -> frozenset[int]:
        return frozenset(self.index(x) for x in names)

    def name(self, r: int) -> str:
        return self.regions[r].name

    def names(self, rs: Iterable[int]) -> list[str]:
        return [self.regions[r].name for r in sorted(rs)]

    @cached_property
    def source_index(self) -> dict[int, int]:
        return {r: i for i, r in enumerate(self.sources, 1)}

    @cached_property
    def terminal_indices(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for j, r in enumerate(self.terminals, 1):
            out.setdefault(r, []).append(j)
        return {r: tuple(js) for r, js in out.items()}

    def kind(self, r: int) -> str:
        if r in self.source_index:
            return "source"
        if r in self.terminal_indices:
            return "terminal"
        return "coding"

    def with_terminals(self, terminals: Sequence[int]) -> "RegionGraph":
        """Same regions and arcs, different designated terminal regions."""
        return RegionGraph(self.regions, self.parents, self.sources, tuple(terminals))

    def descendants(self, r: int) -> frozenset[int]:
        seen = {r}
        stack = [r]
        while stack:
            for c in self.children[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(seen - {r})

    def to_json(self) -> dict:
        regions = []
        for r, reg in enumerate(self.regions):
            kind = self.kind(r)
            if kind == "source":
                index = [self.source_index[r]]
            else:
                index = list(self.terminal_indices.get(r, ()))
            regions.append(
                {
                    "name": reg.name,
                    "kind": kind,
                    "index": index,
                    "leader": reg.leader,
                    "edges": sorted(reg.edges),
                    "parents": [self.regions[p].name for p in self.parents[r]],
                }
            )
        return {
            "regions": regions,
            "sources": [self.regions[r].name for r in self.sources],
            "terminals": [self.regions[r].name for r in self.terminals],
        }


def _topological(count: int, parents: list[set[int]], priority: list[int]) -> list[int]:
    """Kahn's algorithm, always releasing the ready item of least priority."""
    indeg = [len(ps) for ps in parents]
    kids: list[list[int]] = [[] for _ in range(count)]
    for x, ps in enumerate(parents):
        for p in ps:
            kids[p].append(x)
    ready = [(priority[x], x) for x in range(count) if indeg[x] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        _, x = heapq.heappop(ready)
        out.append(x)
        for c in kids[x]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, (priority[c], c))
    if len(out) != count:
        raise NetworkError("region graph contains a cycle")
    return out


def _assemble(
    names: list[str],
    edge_sets: list[frozenset[int]],
    leaders: list[int | None],
    parents: list[set[int]],
    source_of: dict[int, int],
    terminal_of: dict[int, int],
    priority: list[int],
) -> RegionGraph:
    """Reorder raw regions canonically: sources by index, then topological by priority."""
    pri = [(0, source_of[x]) if x in source_of else (1, priority[x]) for x in range(len(names))]
    order = _topological(len(names), parents, pri)
    pos = {x: p for p, x in enumerate(order)}
    regions = tuple(Region(names[x], edge_sets[x], leaders[x]) for x in order)
    parent_tuple = tuple(tuple(sorted(pos[p] for p in parents[x])) for x in order)
    sources = tuple(pos[x] for x, _ in sorted(source_of.items(), key=lambda kv: kv[1]))
    terminals = tuple(pos[x] for x, _ in sorted(terminal_of.items(), key=lambda kv: kv[1]))
    return RegionGraph(regions, parent_tuple, sources, terminals)


def _name_regions(aug: AugmentedNetwork, blocks: list[frozenset[int]], ordered: list[int]) -> list[str]:
    names = [""] * len(blocks)
    coding = 0
    for x in ordered:
        kinds = [aug.edge(e) for e in sorted(blocks[x])]
        src = [e.index for e in kinds if e.kind == "source-link"]
        trm = [e.index for e in kinds if e.kind == "terminal-link"]
        if src:
            names[x] = "S" + "_".join(map(str, src))
        elif trm:
            names[x] = "T" + "_".join(map(str, sorted(trm)))
        else:
            coding += 1
            names[x] = f"R{coding}"
    return names


def region_graph_from_blocks(aug: AugmentedNetwork, blocks: Iterable[Iterable[int]]) -> RegionGraph:
    """Build the region graph induced by an arbitrary partition of the augmented edges.

    The leader of a block is its smallest edge with no input inside the
    block; parents are the blocks holding inputs of the leader.
    """
    blocks = [frozenset(b) for b in blocks]
    owner: dict[int, int] = {}
    for x, b in enumerate(blocks):
        for e in b:
            if e in owner:
                raise NetworkError(f"edge {e} lies in two regions")
            owner[e] = x
    if set(owner) != {e.id for e in aug.edges}:
        raise NetworkError("regions do not partition the edge set")
    leaders: list[int | None] = []
    parents: list[set[int]] = []
    for x, b in enumerate(blocks):
        roots = [e for e in sorted(b) if not any(owner[f] == x for f in aug.inputs[e])]
        lead = roots[0] if roots else min(b)
        leaders.append(lead)
        parents.append({owner[f] for f in aug.inputs[lead]} - {x})
    source_of = {owner[aug.source_link(i)]: i for i in range(1, aug.k + 1)}
    terminal_of = {j: owner[aug.terminal_link(j)] for j in range(1, aug.n + 1)}
    pri = [leaders[x] for x in range(len(blocks))]
    order = _topological(
        len(blocks), parents, [(0, source_of[x]) if x in source_of else (1, pri[x]) for x in range(len(blocks))]
    )
    names = _name_regions(aug, blocks, order)
    rg = _assemble(names, blocks, leaders, parents, source_of, {}, pri)
    by_name = {reg.name: r for r, reg in enumerate(rg.regions)}
    terms = [by_name[names[terminal_of[j]]] for j in range(1, aug.n + 1)]
    return rg.with_terminals(terms)


def basic_decompose(aug: AugmentedNetwork, order: Sequence[int] | None = None) -> RegionGraph:
    """Compute the basic region decomposition.

    Starting from singleton regions, a non-source region whose leader's
    inputs all sit in a single region is absorbed into that region; this
    repeats until no such region remains. ``order`` permutes the scan over
    edge ids and must not change the result.
    """
    scan = list(order) if order is not None else [e.id for e in aug.edges]
    owner = {e.id: e.id for e in aug.edges}
    members = {e.id: [e.id] for e in aug.edges}
    is_source = {e.id for e in aug.edges if e.kind == "source-link"}
    changed = True
    while changed:
        changed = False
        for lead in scan:
            if lead not in members or lead in is_source:
                continue
            ups = {owner[f] for f in aug.inputs[lead]}
            if len(ups) == 1:
                (target,) = ups
                for e in members[lead]:
                    owner[e] = target
                members[target].extend(members.pop(lead))
                changed = True
    return region_graph_from_blocks(aug, [frozenset(m) for m in members.values()])


@dataclass(frozen=True)
class BasicViolation:
    condition: int
    region: str
    edge: int | None = None
    outside: int | None = None

    def describe(self) -> str:
        if self.condition == 1:
            return f"edge {self.edge} of {self.region} has incoming link {self.outside} outside its region"
        return f"region {self.region} has fewer than two parents"


def is_basic(rg: RegionGraph, aug: AugmentedNetwork | None = None) -> tuple[bool, BasicViolation | None]:
    """Check the two defining conditions of a basic decomposition.

    (1) every non-leader edge has all of its inputs inside its own region;
    (2) every non-source region has at least two parents. Condition (1) is
    checked over all regions first. Region-level graphs (no edges) pass ``aug=None``.
    """
    if aug is not None:
        owner: dict[int, int] = {}
        for r, reg in enumerate(rg.regions):
            for e in reg.edges:
                owner[e] = r
        if set(owner) != {e.id for e in aug.edges} or sum(len(reg.edges) for reg in rg.regions) != len(owner):
            raise NetworkError("regions do not partition the edge set")
        for r, reg in enumerate(rg.regions):
            for e in sorted(reg.edges):
                if e == reg.leader:
                    continue
                for f in aug.inputs[e]:
                    if owner[f] != r:
                        return False, BasicViolation(1, reg.name, e, f)
    for r, reg in enumerate(rg.regions):
        if rg.kind(r) != "source" and len(rg.parents[r]) < 2:
            return False, BasicViolation(2, reg.name)
    return True, None


def region_graph_from_json(data: dict) -> RegionGraph:
    """Rebuild a region graph from :meth:`RegionGraph.to_json` output (regions listed topologically)."""
    try:
        items = data["regions"]
        pos = {str(item["name"]): r for r, item in enumerate(items)}
        regions = tuple(
            Region(str(item["name"]), frozenset(int(e) for e in item["edges"]), item.get("leader"))
            for item in items
        )
        parents = tuple(tuple(pos[str(p)] for p in item["parents"]) for item in items)
        sources = tuple(pos[str(x)] for x in data["sources"])
        terminals = tuple(pos[str(x)] for x in data["terminals"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"syntax error: bad region graph: {exc}") from exc
    if len(pos) != len(items):
        raise ParseError("duplicate region name")
    try:
        return RegionGraph(regions, parents, sources, terminals)
    except NetworkError as exc:
        raise ParseError(str(exc)) from exc


def region_graph_of(spec: RegionGraphSpec) -> RegionGraph:
    """Lift a direct region-graph declaration; regions carry no edges."""
    entries = spec.entries
    pos = {e.name: x for x, e in enumerate(entries)}
    parents = [{pos[p] for p in e.parents} for e in entries]
    source_of = {x: e.index for x, e in enumerate(entries) if e.kind == "source"}
    terminal_of = {e.index: x for x, e in enumerate(entries) if e.kind == "terminal"}
    rg = _assemble(
        [e.name for e in entries],
        [frozenset()] * len(entries),
        [None] * len(entries),
        parents,
        source_of,
        {},
        list(range(len(entries))),
    )
    by_name = {reg.name: r for r, reg in enumerate(rg.regions)}
    return rg.with_terminals([by_name[entries[terminal_of[j]].name] for j in sorted(terminal_of)])


def super_region(rg: RegionGraph, theta: Iterable[int], empty_ok: bool = False) -> frozenset[int]:
    """Least superset of ``theta`` closed under adding regions whose parents all lie inside.

    Only regions with at least one parent are added by the closure, so a
    source region belongs to the result only when it is in ``theta``.
    """
    inside = set(theta)
    if not inside:
        if empty_ok:
            return frozenset()
        raise ValueError("super region of an empty set")
    start = min(inside)
    for r in range(start + 1, len(rg.regions)):
        ps = rg.parents[r]
        if r not in inside and ps and all(p in inside for p in ps):
            inside.add(r)
    return frozenset(inside)


def super_region_open(rg: RegionGraph, theta: Iterable[int], empty_ok: bool = False) -> frozenset[int]:
    theta = frozenset(theta)
    return super_region(rg, theta, empty_ok) - theta


def realize_network(rg: RegionGraph) -> Network:
    """A network whose basic region graph is isomorphic to ``rg``.

    Every non-source region R becomes one edge ``R.in -> R.out`` fed by one
    edge from each parent's output node. A region with a single child sends
    its edge straight into that child's input node, and a terminal region
    without children feeds the terminal node directly, which keeps the
    network small. Each terminal must sit in its own region.
    """
    if len(set(rg.terminals)) != rg.n or any(rg.kind(r) == "source" for r in rg.terminals):
        raise ValueError("every terminal needs its own non-source region")
    name = [reg.name for reg in rg.regions]
    terminal = set(rg.terminals)
    sources = set(rg.sources)

    def inlet(r: int) -> str:
        return name[r] if r in terminal and not rg.children[r] else f"{name[r]}.in"

    outlet: dict[int, str] = {}
    edges: list[tuple[str, str]] = []
    direct: set[tuple[int, int]] = set()
    for r in range(len(rg)):
        if r in sources:
            outlet[r] = name[r]
            continue
        if r in terminal and not rg.children[r]:
            continue
        if r in terminal:
            head = name[r]
        elif len(rg.children[r]) == 1:
            (c,) = rg.children[r]
            head = inlet(c)
            direct.add((r, c))
        else:
            head = f"{name[r]}.out"
        edges.append((inlet(r), head))
        outlet[r] = head
    for r, ps in enumerate(rg.parents):
        for p in ps:
            if (p, r) not in direct:
                edges.append((outlet[p], inlet(r)))
    nodes = sorted({v for e in edges for v in e})
    return make_network([name[r] for r in rg.sources], [name[t] for t in rg.terminals], edges, nodes)


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(rg: RegionGraph) -> str:
    """Graphviz rendering: one node per region labeled ``name [kind] {edge ids}``."""
    lines = ["digraph regions {"]
    for r, reg in enumerate(rg.regions):
        kind = rg.kind(r)
        if kind == "source":
            kind = f"source {rg.source_index[r]}"
        elif kind == "terminal":
            kind = "terminal " + ",".join(map(str, rg.terminal_indices[r]))
        label = f"{reg.name} [{kind}] {{{','.join(map(str, sorted(reg.edges)))}}}"
        lines.append(f"  {_dot_quote(reg.name)} [label={_dot_quote(label)}];")
    for r, ps in enumerate(rg.parents):
        for p in ps:
            lines.append(f"  {_dot_quote(rg.regions[p].name)} -> {_dot_quote(rg.regions[r].name)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
