"""Partitions of Pi: classes, subclasses, connectivity, contraction and compatibility."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Union

from .classify import PLANES, TerminalProfile
from .regions import RegionGraph, super_region

__all__ = [
    "Compatibility",
    "LambdaContainment",
    "MergeStep",
    "PiPartition",
    "RegOverlap",
    "character_partition",
    "classes_connected",
    "contract",
    "is_compatible",
    "partition_from_classes",
    "source_subclass",
    "subclass_of",
    "subclasses",
    "trivial_partition",
]

# A subclass label is (i,) for the merged source view [S_i]_i, or (a, b) for a plane.
Label = tuple[int, ...]


def _label_text(label: Label) -> str:
    return f"[{label[0]}]" if len(label) == 1 else f"{{{label[0]},{label[1]}}}"


@dataclass(frozen=True)
class LambdaContainment:
    """Lambda_j lies in one subclass of each class and meets both."""

    j: int
    first: Label
    second: Label

    def to_json(self) -> dict:
        return {"kind": "lambda-containment", "j": self.j, "subclasses": [list(self.first), list(self.second)]}


@dataclass(frozen=True)
class RegOverlap:
    """The super regions of the two plane subclasses share ``region``."""

    plane: tuple[int, int]
    region: int

    def to_json(self, rg: RegionGraph | None = None) -> dict:
        name = rg.name(self.region) if rg is not None else self.region
        return {"kind": "reg-overlap", "plane": list(self.plane), "region": name}


Witness = Union[LambdaContainment, RegOverlap]


def witness_json(w: Witness, rg: RegionGraph) -> dict:
    return w.to_json(rg) if isinstance(w, RegOverlap) else w.to_json()


@dataclass(frozen=True)
class MergeStep:
    first: frozenset[int]
    second: frozenset[int]
    witness: Witness


@dataclass(frozen=True)
class PiPartition:
    """A partition of Pi. Classes are ordered by their smallest region position."""

    classes: tuple[frozenset[int], ...]
    rg: RegionGraph = field(compare=False, repr=False)
    profile: TerminalProfile = field(compare=False, repr=False)
    history: tuple[MergeStep, ...] = ()
    source_merge: bool = False

    def class_of(self, r: int) -> int:
        for c, members in enumerate(self.classes):
            if r in members:
                return c
        raise KeyError(f"region {r} is not in Pi")

    def sources_in(self, c: int) -> list[int]:
        members = self.classes[c]
        return [i for i, s in enumerate(self.rg.sources, 1) if s in members]

    def source_class(self, i: int) -> int:
        return self.class_of(self.rg.sources[i - 1])

    def to_json(self) -> list[dict]:
        out = []
        for c, members in enumerate(self.classes):
            srcs = self.sources_in(c)
            out.append(
                {
                    "members": self.rg.names(members),
                    "sources": srcs,
                    "subclasses": {_label_text(lab): self.rg.names(sub) for lab, sub in subclasses(self, c)},
                }
            )
        return out


def _sorted_classes(classes: Iterable[frozenset[int]]) -> tuple[frozenset[int], ...]:
    return tuple(sorted((frozenset(c) for c in classes), key=min))


def trivial_partition(rg: RegionGraph, profile: TerminalProfile) -> PiPartition:
    if not profile.pi:
        raise ValueError("empty Pi")
    return PiPartition(_sorted_classes({r} for r in profile.pi), rg, profile)


def partition_from_classes(rg: RegionGraph, profile: TerminalProfile, classes: Iterable[Iterable[int]]) -> PiPartition:
    classes = _sorted_classes(frozenset(c) for c in classes)
    flat = [r for c in classes for r in c]
    if len(flat) != len(set(flat)) or set(flat) != set(profile.pi) or any(not c for c in classes):
        raise ValueError("classes do not partition Pi")
    merged = any(len([s for s in rg.sources if s in c]) > 1 for c in classes)
    return PiPartition(classes, rg, profile, (), merged)


def subclass_of(part: PiPartition, c: int, plane: tuple[int, int]) -> frozenset[int]:
    """[R]_{a,b}: the class intersected with reg(S_a, S_b)."""
    if not 0 <= c < len(part.classes):
        raise KeyError(f"unknown class {c}")
    return part.classes[c] & part.profile.plane(*plane)


def source_subclass(part: PiPartition, i: int) -> frozenset[int]:
    """[S_i]_i: union of the two plane subclasses of [S_i] through coordinate i."""
    c = part.source_class(i)
    others = [x for x in (1, 2, 3) if x != i]
    return subclass_of(part, c, (i, others[0])) | subclass_of(part, c, (i, others[1]))


def subclasses(part: PiPartition, c: int) -> list[tuple[Label, frozenset[int]]]:
    """The subclasses of class ``c``: ([S_i]_i, [S_i]_{j1,j2}) for a source class, the three planes otherwise."""
    srcs = part.sources_in(c)
    if len(srcs) == 1:
        i = srcs[0]
        j1, j2 = (x for x in (1, 2, 3) if x != i)
        return [((i,), source_subclass(part, i)), ((j1, j2), subclass_of(part, c, (j1, j2)))]
    return [(plane, subclass_of(part, c, plane)) for plane in PLANES]


def _lambda_split(part: PiPartition, c: int, lam: frozenset[int]) -> list[Label]:
    return [lab for lab, sub in subclasses(part, c) if sub & lam]


def classes_connected(part: PiPartition, c1: int, c2: int) -> Witness | None:
    """First connection between two classes, or ``None``.

    Lambda-containment is tried first (terminal index ascending): Lambda_j
    must lie in the union of one subclass of each class and meet both.
    Then, for planes (1,2), (1,3), (2,3), the super regions of the two
    plane subclasses are intersected; the smallest shared region is reported.
    """
    if c1 == c2:
        raise ValueError("a class is not connected to itself")
    union = part.classes[c1] | part.classes[c2]
    for j in range(1, part.profile.n + 1):
        lam = part.profile.lambda_j(j)
        if not lam or not lam <= union:
            continue
        first = _lambda_split(part, c1, lam)
        second = _lambda_split(part, c2, lam)
        if len(first) == 1 and len(second) == 1:
            return LambdaContainment(j, first[0], second[0])
    rg = part.rg
    for plane in PLANES:
        a = subclass_of(part, c1, plane)
        b = subclass_of(part, c2, plane)
        if not a or not b:
            continue
        shared = super_region(rg, a) & super_region(rg, b)
        if shared:
            return RegOverlap(plane, min(shared))
    return None


def _witness_holds(part: PiPartition, c1: int, c2: int, w: Witness) -> bool:
    if isinstance(w, LambdaContainment):
        lam = part.profile.lambda_j(w.j)
        subs1 = dict(subclasses(part, c1))
        subs2 = dict(subclasses(part, c2))
        if w.first not in subs1 or w.second not in subs2:
            return False
        x, y = subs1[w.first], subs2[w.second]
        return bool(lam) and lam <= (x | y) and bool(lam & x) and bool(lam & y)
    a = subclass_of(part, c1, w.plane)
    b = subclass_of(part, c2, w.plane)
    if not a or not b:
        return False
    return w.region in (super_region(part.rg, a) & super_region(part.rg, b))


def contract(part: PiPartition, c1: int, c2: int, witness: Witness) -> PiPartition:
    """Combine two connected classes; the witness is re-checked first."""
    if not _witness_holds(part, c1, c2, witness):
        raise ValueError("invalid connection witness")
    first, second = part.classes[c1], part.classes[c2]
    rest = [c for x, c in enumerate(part.classes) if x not in (c1, c2)]
    merged = first | second
    srcs = [s for s in part.rg.sources if s in merged]
    step = MergeStep(first, second, witness)
    return PiPartition(
        _sorted_classes(rest + [merged]),
        part.rg,
        part.profile,
        part.history + (step,),
        part.source_merge or len(srcs) > 1,
    )


def character_partition(
    rg: RegionGraph, profile: TerminalProfile, seed: int | None = None
) -> tuple[PiPartition, str]:
    """Contract connected classes from the trivial partition until none remain.

    Pairs are scanned in lexicographic order of class position (or in an
    order shuffled per round from ``seed``) and the scan restarts after
    every contraction. A contraction that joins two source classes is
    carried out and ends the run with ``source-classes-merged``; otherwise
    the run ends with ``no-connections``.
    """
    rng = random.Random(seed) if seed is not None else None
    part = trivial_partition(rg, profile)
    while True:
        pairs = list(combinations(range(len(part.classes)), 2))
        if rng is not None:
            rng.shuffle(pairs)
        for c1, c2 in pairs:
            w = classes_connected(part, c1, c2)
            if w is not None:
                part = contract(part, c1, c2, w)
                break
        else:
            return part, "no-connections"
        if part.source_merge:
            return part, "source-classes-merged"


@dataclass(frozen=True)
class Compatibility:
    ok: bool
    source_merge: bool = False
    connected: tuple[tuple[int, int, Witness], ...] = ()
    trapped: tuple[tuple[int, tuple[int, int]], ...] = ()

    def to_json(self, part: PiPartition) -> dict:
        rg = part.rg
        return {
            "compatible": self.ok,
            "source_classes_merged": self.source_merge,
            "connected_pairs": [
                {"classes": [rg.names(part.classes[a]), rg.names(part.classes[b])], "witness": witness_json(w, rg)}
                for a, b, w in self.connected
            ],
            "trapped": [{"j": j, "plane": list(plane)} for j, plane in self.trapped],
        }


def plane_union(part: PiPartition, plane: tuple[int, int], literal: bool = False) -> frozenset[int]:
    """Pi regions that any solution built on this partition confines to the plane.

    That is [S_a]_a, [S_b]_b and every other class's {a,b} subclass. With
    ``literal=True`` the third source class's {a,b} subclass is left out.
    """
    a, b = plane
    (c,) = (x for x in (1, 2, 3) if x not in plane)
    out = set(source_subclass(part, a)) | source_subclass(part, b)
    for k in range(len(part.classes)):
        srcs = part.sources_in(k)
        if not srcs or (not literal and srcs == [c]):
            out |= subclass_of(part, k, plane)
    return frozenset(out)


def is_compatible(part: PiPartition, literal: bool = False) -> Compatibility:
    """Test that no two classes are connected and no Lambda_j is confined to a plane.

    The plane test uses :func:`plane_union`; ``literal=True`` omits the
    {a,b} subclass of the third source class, which admits infeasible
    instances (see the GAP-1 fixture).
    """
    if any(len(part.sources_in(c)) > 1 for c in range(len(part.classes))):
        return Compatibility(False, source_merge=True)
    connected = []
    for c1, c2 in combinations(range(len(part.classes)), 2):
        w = classes_connected(part, c1, c2)
        if w is not None:
            connected.append((c1, c2, w))
    trapped = []
    for j in range(1, part.profile.n + 1):
        lam = part.profile.lambda_j(j)
        for plane in PLANES:
            if lam <= plane_union(part, plane, literal):
                trapped.append((j, plane))
    return Compatibility(not connected and not trapped, False, tuple(connected), tuple(trapped))
