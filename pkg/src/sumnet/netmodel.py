"""Sum-network instances: parsing, normalization, validation and random generation.

Two instance kinds are supported. A :class:`Network` is a directed acyclic
multigraph with designated source and terminal nodes. A
:class:`RegionGraphSpec` describes a region graph directly, which is how
hand-built fixtures bypass edge-level decomposition.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

__all__ = [
    "AugEdge",
    "AugmentedNetwork",
    "CycleError",
    "Edge",
    "GenerationError",
    "Network",
    "NetworkError",
    "ParseError",
    "RegionEntry",
    "RegionGraphSpec",
    "ValidationReport",
    "generate_random_network",
    "generate_random_region_graph",
    "generate_separable_region_graph",
    "load_instance",
    "make_network",
    "make_region_graph_spec",
    "normalize",
    "parse_instance",
    "parse_network",
    "parse_region_graph",
    "validate",
]


class NetworkError(ValueError):
    """An instance violates a structural invariant."""


class ParseError(NetworkError):
    """Malformed instance text. ``line`` is 1-based, or ``None`` for JSON input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CycleError(NetworkError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle))


class GenerationError(NetworkError):
    """The random generator could not meet its budget."""


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    id: int
    tail: str
    head: str


@dataclass(frozen=True)
class Network:
    """Directed multigraph with ordered source and terminal lists.

    ``nodes`` is canonical: sources first, then terminals, then the remaining
    nodes in declaration order. Edge ids are dense, 1..|E|, in declaration order.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    sources: tuple[str, ...]
    terminals: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.sources)

    @property
    def n(self) -> int:
        return len(self.terminals)

    def to_text(self) -> str:
        lines = ["sources: " + " ".join(self.sources), "terminals: " + " ".join(self.terminals)]
        listed = set(self.sources) | set(self.terminals)
        lines += [f"node: {v}" for v in self.nodes if v not in listed]
        lines += [f"edge: {e.tail} {e.head}" for e in self.edges]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "sources": list(self.sources),
            "terminals": list(self.terminals),
            "nodes": list(self.nodes),
            "edges": [[e.tail, e.head] for e in self.edges],
        }


def make_network(
    sources: list[str],
    terminals: list[str],
    edges: list[tuple[str, str]],
    nodes: list[str] | None = None,
) -> Network:
    """Build a :class:`Network`, checking every invariant except acyclicity."""
    seen: set[str] = set()
    for kind, names in (("source", sources), ("terminal", terminals)):
        for v in names:
            if v in seen:
                raise NetworkError(f"duplicate {kind} declaration: {v}")
            seen.add(v)
    order = list(sources) + list(terminals)
    for v in nodes or []:
        if v not in seen:
            seen.add(v)
            order.append(v)
    built = []
    for eid, (tail, head) in enumerate(edges, start=1):
        for v in (tail, head):
            if v not in seen:
                raise NetworkError(f"unknown node: {v}")
        built.append(Edge(eid, tail, head))
    return Network(tuple(order), tuple(built), tuple(sources), tuple(terminals))


_ID = re.compile(r"^[A-Za-z0-9_.\-']+$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_network(text: str) -> Network:
    """Parse the line-oriented instance grammar.

    ``sources: <id>+``, ``terminals: <id>+``, ``node: <id>`` and
    ``edge: <tail> <head>``; ``#`` starts a comment. Nodes may be declared
    after the edges that use them.
    """
    sources: list[str] = []
    terminals: list[str] = []
    nodes: list[str] = []
    edges: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        args = rest.split()
        if not sep or key not in ("sources", "terminals", "node", "edge"):
            raise ParseError(f"syntax error: {raw.strip()!r}", lineno)
        for a in args:
            if not _ID.match(a):
                raise ParseError(f"syntax error: bad identifier {a!r}", lineno)
        if key == "sources" or key == "terminals":
            if not args:
                raise ParseError(f"syntax error: empty {key} list", lineno)
            target = sources if key == "sources" else terminals
            for a in args:
                if a in sources or a in terminals:
                    raise ParseError(f"duplicate source/terminal declaration: {a}", lineno)
                target.append(a)
        elif key == "node":
            if len(args) != 1:
                raise ParseError("syntax error: node takes one identifier", lineno)
            nodes.append(args[0])
        else:
            if len(args) != 2:
                raise ParseError("syntax error: edge takes two identifiers", lineno)
            edges.append((args[0], args[1], lineno))
    declared = set(sources) | set(terminals) | set(nodes)
    for tail, head, lineno in edges:
        for v in (tail, head):
            if v not in declared:
                raise ParseError(f"unknown node: {v}", lineno)
    if not sources:
        raise ParseError("syntax error: no sources declared")
    if not terminals:
        raise ParseError("syntax error: no terminals declared")
    return make_network(sources, terminals, [(t, h) for t, h, _ in edges], nodes)


def _network_from_json(data: dict) -> Network:
    try:
        sources = [str(v) for v in data["sources"]]
        terminals = [str(v) for v in data["terminals"]]
        edges = [(str(t), str(h)) for t, h in data.get("edges", [])]
        nodes = [str(v) for v in data.get("nodes", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"syntax error: {exc}") from exc
    declared = set(sources) | set(terminals) | set(nodes)
    for t, h in edges:
        for v in (t, h):
            if v not in declared:
                raise ParseError(f"unknown node: {v}")
    try:
        return make_network(sources, terminals, edges, nodes)
    except NetworkError as exc:
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Augmented networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugEdge:
    id: int
    tail: str | None
    head: str | None
    kind: str  # "source-link" | "internal" | "terminal-link"
    index: int | None = None  # source index for source links, terminal index for terminal links


@dataclass(frozen=True)
class AugmentedNetwork:
    """A network with one imaginary link per source and per terminal.

    Ids: source links ``1..k``, real edges ``k+1..k+|E|`` in declaration
    order, terminal links after them. ``inputs[e]`` lists In(e), the edges
    entering the tail of ``e`` (for source links, nothing).
    """

    base: Network
    edges: tuple[AugEdge, ...]
    inputs: dict[int, tuple[int, ...]] = field(compare=False)

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def n(self) -> int:
        return self.base.n

    def edge(self, eid: int) -> AugEdge:
        return self.edges[eid - 1]

    def source_link(self, i: int) -> int:
        return i

    def terminal_link(self, j: int) -> int:
        return self.k + len(self.base.edges) + j

    def strip(self) -> Network:
        """Drop the imaginary links, recovering the underlying network."""
        internal = [(e.tail, e.head) for e in self.edges if e.kind == "internal"]
        b = self.base
        return make_network(list(b.sources), list(b.terminals), internal, list(b.nodes))


def normalize(net: Network) -> AugmentedNetwork:
    k = net.k
    edges: list[AugEdge] = [AugEdge(i, None, s, "source-link", i) for i, s in enumerate(net.sources, 1)]
    edges += [AugEdge(k + e.id, e.tail, e.head, "internal") for e in net.edges]
    base = len(edges)
    edges += [AugEdge(base + j, t, None, "terminal-link", j) for j, t in enumerate(net.terminals, 1)]
    entering: dict[str, list[int]] = {v: [] for v in net.nodes}
    for e in edges:
        if e.head is not None:
            entering[e.head].append(e.id)
    inputs = {e.id: (tuple(entering[e.tail]) if e.tail is not None else ()) for e in edges}
    return AugmentedNetwork(net, tuple(edges), inputs)


@dataclass(frozen=True)
class ValidationReport:
    acyclic: bool
    connected: dict[tuple[int, int], bool]
    trivially_unsolvable: bool

    @property
    def disconnected(self) -> list[tuple[int, int]]:
        return sorted(p for p, ok in self.connected.items() if not ok)

    def to_json(self) -> dict:
        return {
            "acyclic": self.acyclic,
            "disconnected": [list(p) for p in self.disconnected],
            "trivially_unsolvable": self.trivially_unsolvable,
        }


def _node_graph(net: Network) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(net.nodes)
    g.add_edges_from((e.tail, e.head) for e in net.edges)
    return g


def validate(net: AugmentedNetwork | Network) -> ValidationReport:
    """Check acyclicity and source-to-terminal connectivity.

    Raises :class:`CycleError` on a directed cycle and :class:`NetworkError`
    when a non-source node emits edges without receiving any (such edges
    could only ever carry the zero vector).
    """
    base = net.base if isinstance(net, AugmentedNetwork) else net
    g = _node_graph(base)
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle is not None:
        raise CycleError([u for u, *_ in cycle] + [cycle[0][0]])
    sources = set(base.sources)
    for v in base.nodes:
        if v not in sources and g.in_degree(v) == 0 and (g.out_degree(v) > 0 or v in base.terminals):
            raise NetworkError(f"node {v} has no incoming edges and is not a source")
    connected: dict[tuple[int, int], bool] = {}
    for i, s in enumerate(base.sources, 1):
        reach = nx.descendants(g, s) | {s}
        for j, t in enumerate(base.terminals, 1):
            connected[(i, j)] = t in reach
    return ValidationReport(True, connected, not all(connected.values()))


# ---------------------------------------------------------------------------
# Region-graph descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionEntry:
    name: str
    kind: str  # "source" | "coding" | "terminal"
    index: int | None
    parents: tuple[str, ...]


@dataclass(frozen=True)
class RegionGraphSpec:
    entries: tuple[RegionEntry, ...]

    def to_text(self) -> str:
        lines = ["regiongraph"]
        for e in self.entries:
            if e.kind == "source":
                lines.append(f"source {e.name} {e.index}")
            elif e.kind == "terminal":
                lines.append(f"terminal {e.name} {e.index} : " + " ".join(e.parents))
            else:
                lines.append(f"region {e.name} : " + " ".join(e.parents))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "regions": [
                {"name": e.name, "kind": e.kind, "index": e.index, "parents": list(e.parents)}
                for e in self.entries
            ]
        }


def make_region_graph_spec(entries: list[RegionEntry]) -> RegionGraphSpec:
    """Check a region-graph declaration and freeze it.

    Rules: unique names, known parents, sources parentless, every other
    entry with at least two distinct parents, unique source and terminal
    indices, and an acyclic parent relation.
    """
    names: set[str] = set()
    indices: dict[str, set[int]] = {"source": set(), "terminal": set()}
    for e in entries:
        if e.name in names:
            raise NetworkError(f"duplicate region name: {e.name}")
        names.add(e.name)
        if e.kind in indices:
            if e.index is None or e.index < 1:
                raise NetworkError(f"{e.kind} {e.name} needs a positive index")
            if e.index in indices[e.kind]:
                raise NetworkError(f"duplicate {e.kind} index {e.index}")
            indices[e.kind].add(e.index)
    g = nx.DiGraph()
    g.add_nodes_from(names)
    for e in entries:
        for p in e.parents:
            if p not in names:
                raise NetworkError(f"unknown node: parent {p} of {e.name}")
            g.add_edge(p, e.name)
        if e.kind == "source":
            if e.parents:
                raise NetworkError(f"source {e.name} cannot have parents")
        elif len(set(e.parents)) < 2:
            raise NetworkError(f"region {e.name} has fewer than two parents")
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle is not None:
        raise CycleError([u for u, _ in cycle] + [cycle[0][0]])
    for kind in ("source", "terminal"):
        got = sorted(indices[kind])
        if got != list(range(1, len(got) + 1)):
            raise NetworkError(f"{kind} indices must be 1..{len(got)}, got {got}")
    if not indices["terminal"]:
        raise NetworkError("no terminal declared")
    deduped = [RegionEntry(e.name, e.kind, e.index, tuple(dict.fromkeys(e.parents))) for e in entries]
    return RegionGraphSpec(tuple(deduped))


def parse_region_graph(text: str) -> RegionGraphSpec:
    """Parse the ``regiongraph`` grammar.

    After the header line: ``source <name> <i>``, ``region <name> : <parent>+``
    or ``terminal <name> <j> : <parent>+``.
    """
    entries: list[RegionEntry] = []
    header_seen = False
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if not header_seen:
            if line != "regiongraph":
                raise ParseError("syntax error: expected 'regiongraph' header", lineno)
            header_seen = True
            continue
        head, sep, tail = line.partition(":")
        words = head.split()
        parents = tail.split()
        try:
            if words[0] == "source" and len(words) == 3 and not sep:
                entry = RegionEntry(words[1], "source", int(words[2]), ())
            elif words[0] == "region" and len(words) == 2 and sep:
                entry = RegionEntry(words[1], "coding", None, tuple(parents))
            elif words[0] == "terminal" and len(words) == 3 and sep:
                entry = RegionEntry(words[1], "terminal", int(words[2]), tuple(parents))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise ParseError(f"syntax error: {raw.strip()!r}", lineno) from None
        for name in (entry.name, *entry.parents):
            if not _ID.match(name):
                raise ParseError(f"syntax error: bad identifier {name!r}", lineno)
        lines.setdefault(entry.name, lineno)
        entries.append(entry)
    if not header_seen:
        raise ParseError("syntax error: empty region graph")
    try:
        return make_region_graph_spec(entries)
    except CycleError:
        raise
    except NetworkError as exc:
        raise ParseError(str(exc)) from exc


def _region_graph_from_json(data: dict) -> RegionGraphSpec:
    try:
        entries = []
        for item in data["regions"]:
            kind = item.get("kind", "coding")
            if kind == "region":
                kind = "coding"
            if kind not in ("source", "coding", "terminal"):
                raise ValueError(f"bad kind {kind!r}")
            index = item.get("index")
            entries.append(
                RegionEntry(str(item["name"]), kind, None if index is None else int(index),
                            tuple(str(p) for p in item.get("parents", [])))
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"syntax error: {exc}") from exc
    try:
        return make_region_graph_spec(entries)
    except CycleError:
        raise
    except NetworkError as exc:
        raise ParseError(str(exc)) from exc


def load_instance(path: str | Path) -> Network | RegionGraphSpec:
    """Read an instance file, dispatching on content (and ``.json`` extension)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"syntax error: {exc.msg}", exc.lineno) from exc
        if not isinstance(data, dict):
            raise ParseError("syntax error: expected a JSON object")
        return _region_graph_from_json(data) if "regions" in data else _network_from_json(data)
    return parse_instance(text)


def parse_instance(text: str) -> Network | RegionGraphSpec:
    for raw in text.splitlines():
        line = _strip_comment(raw)
        if line:
            return parse_region_graph(text) if line == "regiongraph" else parse_network(text)
    raise ParseError("syntax error: empty instance")


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------


def generate_random_network(
    seed: int,
    nodes: int,
    edges: int,
    n: int,
    k: int = 3,
    attempts: int = 2000,
) -> Network:
    """Draw a random acyclic k-source network in which every source reaches every terminal.

    Nodes are laid out in a random order (sources first); every non-source
    node receives at least one edge from an earlier node, remaining edges
    join random ordered pairs (parallel edges allowed). Draws that leave a
    source-terminal pair disconnected are rejected and redrawn.
    """
    if nodes < k + n or edges < nodes - k:
        raise GenerationError(f"budget infeasible: {nodes} nodes, {edges} edges, k={k}, n={n}")
    rng = random.Random(seed)
    srcs = [f"s{i}" for i in range(1, k + 1)]
    terms = [f"t{j}" for j in range(1, n + 1)]
    inner = [f"v{m}" for m in range(1, nodes - k - n + 1)]
    for _ in range(attempts):
        rest = inner + terms
        rng.shuffle(rest)
        order = srcs + rest
        pairs: list[tuple[str, str]] = []
        for pos in range(k, nodes):
            pairs.append((order[rng.randrange(pos)], order[pos]))
        for _ in range(edges - len(pairs)):
            head = rng.randrange(k, nodes)
            pairs.append((order[rng.randrange(head)], order[head]))
        rng.shuffle(pairs)
        net = make_network(srcs, terms, pairs, inner)
        if not validate(net).trivially_unsolvable:
            return net
    raise GenerationError(f"no connected instance after {attempts} attempts")


def generate_random_region_graph(
    seed: int,
    coding: int,
    n: int,
    max_parents: int = 3,
    terminal_children: bool = False,
) -> RegionGraphSpec:
    """Draw a random 3-source region graph.

    Coding regions ``R1..R<coding>`` pick 2..``max_parents`` distinct
    earlier regions as parents; terminals do the same over sources and
    coding regions (and over earlier terminals when ``terminal_children``).
    """
    rng = random.Random(seed)
    entries = [RegionEntry(f"S{i}", "source", i, ()) for i in (1, 2, 3)]
    pool = [e.name for e in entries]
    for m in range(1, coding + 1):
        count = rng.randint(2, min(max_parents, len(pool)))
        entries.append(RegionEntry(f"R{m}", "coding", None, tuple(rng.sample(pool, count))))
        pool.append(f"R{m}")
    for j in range(1, n + 1):
        count = rng.randint(2, min(max_parents, len(pool)))
        entries.append(RegionEntry(f"T{j}", "terminal", j, tuple(rng.sample(pool, count))))
        if terminal_children:
            pool.append(f"T{j}")
    return make_region_graph_spec(entries)


def generate_separable_region_graph(
    seed: int,
    coding: int,
    n: int,
    private: int = 2,
    attempts: int = 200,
) -> RegionGraphSpec:
    """Draw a random terminal-separable 3-source region graph.

    Each of the ``coding`` shared regions ``R<m>`` lies in one coordinate
    plane: it draws two or three parents among the sources and earlier
    regions of that plane. Terminal ``j`` then gets up to ``private``
    regions ``U<j>_<m>`` of its own and draws its parents from the shared
    regions and its own private ones, so every region outside the planes
    reaches exactly one terminal. Draws where some source misses some
    terminal are rejected.
    """
    rng = random.Random(seed)
    planes = ((1, 2), (1, 3), (2, 3))
    for _ in range(attempts):
        entries = [RegionEntry(f"S{i}", "source", i, ()) for i in (1, 2, 3)]
        members = {pl: [f"S{pl[0]}", f"S{pl[1]}"] for pl in planes}
        shared = [e.name for e in entries]
        for m in range(1, coding + 1):
            pl = planes[rng.randrange(3)]
            pool = members[pl]
            count = rng.randint(2, min(3, len(pool)))
            entries.append(RegionEntry(f"R{m}", "coding", None, tuple(rng.sample(pool, count))))
            pool.append(f"R{m}")
            shared.append(f"R{m}")
        for j in range(1, n + 1):
            pool = list(shared)
            for m in range(1, rng.randint(0, private) + 1):
                count = rng.randint(2, min(3, len(pool)))
                name = f"U{j}_{m}"
                entries.append(RegionEntry(name, "coding", None, tuple(rng.sample(pool, count))))
                pool.append(name)
            count = rng.randint(2, min(3, len(pool)))
            entries.append(RegionEntry(f"T{j}", "terminal", j, tuple(rng.sample(pool, count))))
        spec = make_region_graph_spec(entries)
        if _spec_connected(spec):
            return spec
    raise GenerationError(f"no connected instance after {attempts} attempts")


def _spec_connected(spec: RegionGraphSpec) -> bool:
    g = nx.DiGraph()
    for e in spec.entries:
        g.add_node(e.name)
        g.add_edges_from((p, e.name) for p in e.parents)
    terms = [e.name for e in spec.entries if e.kind == "terminal"]
    for e in spec.entries:
        if e.kind == "source":
            reach = nx.descendants(g, e.name)
            if any(t not in reach for t in terms):
                return False
    return True
