"""Prime-field vectors, the B-family, code construction and code verification.

Vectors are plain tuples of residues mod ``p``. Regions are addressed by
their position in a :class:`~sumnet.regions.RegionGraph`; edges by their
augmented id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from sympy import isprime, nextprime

from .classify import PLANES, TerminalProfile
from .netmodel import AugmentedNetwork
from .partition import PiPartition, is_compatible, source_subclass, subclass_of
from .regions import RegionGraph

__all__ = [
    "BFamily",
    "CodeConstructionError",
    "CodeViolation",
    "EdgeCode",
    "RegionCode",
    "alpha",
    "assign_pi_code",
    "base_family",
    "canonical",
    "check_B_conditions",
    "choose_prime",
    "code_from_json",
    "det3",
    "extend_code",
    "family_with",
    "generate_B",
    "in_span",
    "lift_to_edges",
    "ones",
    "plane_intersection",
    "projective_points",
    "rank",
    "span_basis",
    "verify_edge_code",
    "verify_region_code",
]

Vec = tuple[int, ...]


class CodeConstructionError(RuntimeError):
    """A construction step produced something its own checks reject."""


def alpha(i: int, k: int = 3) -> Vec:
    return tuple(1 if x == i else 0 for x in range(1, k + 1))


def ones(k: int = 3) -> Vec:
    return (1,) * k


def vec(coords: Iterable[int], p: int) -> Vec:
    return tuple(c % p for c in coords)


def add(u: Vec, v: Vec, p: int) -> Vec:
    return tuple((a + b) % p for a, b in zip(u, v))


def scale(c: int, u: Vec, p: int) -> Vec:
    return tuple((c * a) % p for a in u)


def canonical(v: Vec, p: int) -> Vec:
    """Scale so the first nonzero coordinate is 1 (zero stays zero)."""
    for a in v:
        if a % p:
            inv = pow(a, -1, p)
            return tuple((inv * b) % p for b in v)
    return tuple(0 for _ in v)


def span_basis(vectors: Iterable[Vec], p: int) -> tuple[Vec, ...]:
    """Reduced row echelon basis of the span; equal spans give equal bases."""
    rows = [list(x % p for x in v) for v in vectors]
    if not rows:
        return ()
    width = len(rows[0])
    basis: list[list[int]] = []
    col = 0
    while rows and col < width:
        pivot = next((r for r in rows if r[col]), None)
        if pivot is None:
            col += 1
            continue
        rows.remove(pivot)
        inv = pow(pivot[col], -1, p)
        pivot = [(inv * a) % p for a in pivot]
        for group in (rows, basis):
            for r in group:
                f = r[col]
                if f:
                    for x in range(width):
                        r[x] = (r[x] - f * pivot[x]) % p
        basis.append(pivot)
        col += 1
    basis.sort(key=lambda r: next(x for x, a in enumerate(r) if a))
    return tuple(tuple(r) for r in basis)


def rank(vectors: Iterable[Vec], p: int) -> int:
    return len(span_basis(vectors, p))


def in_span(v: Vec, basis: Sequence[Vec], p: int) -> tuple[bool, tuple[int, ...] | None]:
    """Whether ``v`` lies in the span of ``basis``; if so, coefficients c with sum c_i basis_i = v.

    ``basis`` need not be independent; free coefficients are set to zero.
    """
    m = len(basis)
    width = len(v)
    # Columns are the given vectors; solve A c = v by elimination on [A | v].
    rows = [[basis[x][r] % p for x in range(m)] + [v[r] % p] for r in range(width)]
    pivots: list[int] = []
    row = 0
    for col in range(m):
        pr = next((r for r in range(row, width) if rows[r][col]), None)
        if pr is None:
            continue
        rows[row], rows[pr] = rows[pr], rows[row]
        inv = pow(rows[row][col], -1, p)
        rows[row] = [(inv * a) % p for a in rows[row]]
        for r in range(width):
            if r != row and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(a - f * b) % p for a, b in zip(rows[r], rows[row])]
        pivots.append(col)
        row += 1
    if any(rows[r][m] for r in range(row, width)):
        return False, None
    coeffs = [0] * m
    for r, col in enumerate(pivots):
        coeffs[col] = rows[r][m]
    return True, tuple(coeffs)


def det3(a: Vec, b: Vec, c: Vec, p: int) -> int:
    return (
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
    ) % p


def _independent2(u: Vec, v: Vec, p: int) -> bool:
    return any((u[x] * v[y] - u[y] * v[x]) % p for x, y in ((0, 1), (0, 2), (1, 2)))


def _in_plane(v: Vec, plane: tuple[int, int]) -> bool:
    (c,) = (x for x in (1, 2, 3) if x not in plane)
    return v[c - 1] == 0


def plane_intersection(u1: Vec, u2: Vec, plane: tuple[int, int], p: int) -> Vec:
    """Canonical nonzero vector spanning <u1, u2> intersected with <alpha_a, alpha_b>."""
    if not _independent2(u1, u2, p):
        raise ValueError("the two vectors do not span a plane")
    (c,) = (x for x in (1, 2, 3) if x not in plane)
    m = c - 1
    w = add(scale(u2[m], u1, p), scale(-u1[m], u2, p), p)
    if not any(w):
        raise ValueError("intersection is not one-dimensional")
    return canonical(w, p)


def projective_points(basis: Sequence[Vec], p: int) -> list[Vec]:
    """One canonical representative of every 1-dimensional subspace of span(basis), sorted."""
    d = len(basis)
    if d == 0:
        return []
    out = set()
    for lead in range(d):
        for tail in range(p ** (d - lead - 1)):
            coeffs = [0] * lead + [1]
            t = tail
            for _ in range(d - lead - 1):
                coeffs.append(t % p)
                t //= p
            v = tuple(0 for _ in basis[0])
            for c, b in zip(coeffs, basis):
                if c:
                    v = add(v, scale(c, b, p), p)
            out.add(canonical(v, p))
    return sorted(out)


# ---------------------------------------------------------------------------
# B-family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BFamily:
    """Sets B_1..B_K over GF(p).

    ``sets[l-1]`` is B_l. B_1..B_3 are (alpha_l, sum of the other two unit
    vectors); for l >= 4, B_l holds the representatives in planes (1,2),
    (1,3), (2,3) in that order and ``seeds[l-1]`` the vector that generated them.
    """

    prime: int
    sets: tuple[tuple[Vec, ...], ...]
    seeds: tuple[Vec | None, ...]

    @property
    def K(self) -> int:
        return len(self.sets)

    def plane_vector(self, ell: int, plane: tuple[int, int]) -> Vec:
        """The member of B_ell assigned to subclass plane ``plane``."""
        p = self.prime
        if ell <= 3:
            if ell in plane:
                return alpha(ell)
            return add(alpha(plane[0]), alpha(plane[1]), p)
        return self.sets[ell - 1][PLANES.index(plane)]

    def to_json(self) -> dict:
        return {
            "prime": self.prime,
            "sets": [[list(v) for v in s] for s in self.sets],
            "seeds": [None if s is None else list(s) for s in self.seeds],
        }


def base_family(p: int) -> BFamily:
    sets = tuple((alpha(i), vec(add(alpha(a), alpha(b), p), p)) for i, (a, b) in ((1, (2, 3)), (2, (1, 3)), (3, (1, 2))))
    return BFamily(p, sets, (None, None, None))


def family_with(p: int, extra: Sequence[Sequence[Sequence[int]]]) -> BFamily:
    """B_1..B_3 followed by explicitly given sets (each ordered by plane (1,2), (1,3), (2,3))."""
    base = base_family(p)
    more = tuple(tuple(vec(v, p) for v in s) for s in extra)
    return BFamily(p, base.sets + more, base.seeds + (None,) * len(more))


def _pool(fam: BFamily) -> list[Vec]:
    return [v for s in fam.sets for v in s]


def _triple_exempt(fam: BFamily, triple: tuple[Vec, Vec, Vec]) -> bool:
    if any(all(_in_plane(v, plane) for v in triple) for plane in PLANES):
        return True
    return any(len(s) == 3 and sorted(s) == sorted(triple) for s in fam.sets[3:])


def check_B_conditions(fam: BFamily) -> tuple[bool, str | None]:
    """Check the four defining conditions of a B-family exhaustively.

    (1) for l >= 4 each representative lies in its plane; (2) any two
    members of one set span a space containing the all-ones vector; (3)
    three members from the union are independent unless they share a
    coordinate plane or form one B_l with l >= 4; (4) any two members from
    the union are independent.
    """
    p = fam.prime
    for ell, s in enumerate(fam.sets[3:], start=4):
        for v, plane in zip(s, PLANES):
            if not _in_plane(v, plane):
                return False, f"condition 1: B_{ell} member {v} outside plane {plane}"
    for ell, s in enumerate(fam.sets, start=1):
        for u, v in combinations(s, 2):
            if not _independent2(u, v, p) or not in_span(ones(), [u, v], p)[0]:
                return False, f"condition 2: B_{ell} pair {u}, {v}"
    pool = _pool(fam)
    for u, v in combinations(pool, 2):
        if not _independent2(u, v, p):
            return False, f"condition 4: {u}, {v} dependent"
    for triple in combinations(pool, 3):
        if det3(*triple, p) == 0 and not _triple_exempt(fam, triple):
            return False, f"condition 3: {triple} dependent"
    return True, None


def _psi(pool: Sequence[Vec], p: int) -> set[Vec]:
    out = set()
    for u, v in combinations(pool, 2):
        if any(_in_plane(u, pl) and _in_plane(v, pl) for pl in PLANES):
            continue
        for pl in PLANES:
            out.add(plane_intersection(u, v, pl, p))
    return out


def _plane_key(u: Vec, p: int) -> Vec:
    """Canonical normal of <u, all-ones>; identifies the plane through the all-ones vector."""
    n = ((u[1] - u[2]) % p, (u[2] - u[0]) % p, (u[0] - u[1]) % p)
    return canonical(n, p)


def _extension_ok(fam: BFamily, new: tuple[Vec, Vec, Vec]) -> bool:
    p = fam.prime
    pool = _pool(fam)
    for v in new:
        for u in pool:
            if not _independent2(u, v, p):
                return False
    for u, v in combinations(new, 2):
        if not _independent2(u, v, p):
            return False
    candidate = BFamily(p, fam.sets + (new,), fam.seeds + (None,))
    for a in new:
        for b, c in combinations(pool, 2):
            if det3(a, b, c, p) == 0 and not _triple_exempt(candidate, (a, b, c)):
                return False
    for a, b in combinations(new, 2):
        for c in pool:
            if det3(a, b, c, p) == 0 and not _triple_exempt(candidate, (a, b, c)):
                return False
    return True


@lru_cache(maxsize=None)
def generate_B(K: int, p: int) -> BFamily | None:
    """Extend B_1..B_3 greedily to B_1..B_K over GF(p), or ``None`` when GF(p) is too small.

    For each new set, candidate seeds are the vectors (0,1,0), (1,0,0),
    (1,1,0), ..., (1,p-1,0) in lexicographic order; together they meet
    every plane through the all-ones vector exactly once. A seed is
    rejected when its plane with the all-ones vector contains an element of
    Psi (the plane intersections of earlier pairs) or when the resulting set
    breaks a condition. Earlier sets are never revisited.

    Over GF(2) even B_1..B_3 fail (alpha_1+alpha_2, alpha_1+alpha_3 and
    alpha_2+alpha_3 sum to zero), so ``None`` is returned for p = 2.
    """
    if K < 3:
        raise ValueError("K must be at least 3")
    fam = base_family(p)
    if not check_B_conditions(fam)[0]:
        return None
    for _ in range(4, K + 1):
        pool = _pool(fam)
        banned = {_plane_key(g, p) for g in _psi(pool, p)}
        chosen = None
        for seed in [(0, 1, 0)] + [(1, t, 0) for t in range(p)]:
            if _plane_key(seed, p) in banned:
                continue
            new = tuple(plane_intersection(seed, ones(), pl, p) for pl in PLANES)
            if _extension_ok(fam, new):
                chosen = (seed, new)
                break
        if chosen is None:
            return None
        fam = BFamily(p, fam.sets + (chosen[1],), fam.seeds + (chosen[0],))
    return fam


PRIME_FLOOR = 5


@lru_cache(maxsize=None)
def choose_prime(K: int) -> int:
    """Smallest prime from 5 upward for which :func:`generate_B` succeeds."""
    if K < 3:
        raise ValueError("K must be at least 3")
    p = PRIME_FLOOR
    while generate_B(K, p) is None:
        p = int(nextprime(p))
    return p


# ---------------------------------------------------------------------------
# Codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodeViolation:
    """``clause``: "source", "span", "terminal" or "missing"."""

    clause: str
    where: str

    def describe(self) -> str:
        return f"{self.clause} clause fails at {self.where}"

    def to_json(self) -> dict:
        return {"clause": self.clause, "at": self.where}


@dataclass(frozen=True)
class RegionCode:
    prime: int
    vectors: dict[int, Vec] = field(hash=False)

    def to_json(self, rg: RegionGraph) -> dict:
        return {
            "prime": self.prime,
            "level": "region",
            "vectors": {rg.name(r): list(v) for r, v in sorted(self.vectors.items())},
        }


@dataclass(frozen=True)
class EdgeCode:
    prime: int
    vectors: dict[int, Vec] = field(hash=False)

    def to_json(self) -> dict:
        return {
            "prime": self.prime,
            "level": "edge",
            "vectors": {str(e): list(v) for e, v in sorted(self.vectors.items())},
        }


def code_from_json(data: dict, rg: RegionGraph | None = None) -> RegionCode | EdgeCode:
    """Read a code written by ``to_json``; region names are resolved against ``rg``."""
    try:
        prime = int(data["prime"])
        if not isprime(prime):
            raise ValueError(f"{prime} is not prime")
        level = data.get("level", "region")
        raw = data["vectors"]
        if level == "edge":
            return EdgeCode(prime, {int(e): vec(v, prime) for e, v in raw.items()})
        if level != "region":
            raise ValueError(f"unknown level {level!r}")
        if rg is None:
            raise ValueError("a region code needs its region graph")
        return RegionCode(prime, {rg.index(name): vec(v, prime) for name, v in raw.items()})
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValueError(f"malformed code: {exc}") from exc


def verify_region_code(rg: RegionGraph, code: RegionCode) -> CodeViolation | None:
    """Check a region code; the lowest offending region is reported.

    Sources must carry alpha_i, every other region must lie in the span of
    its parents, and every terminal region must carry the all-ones vector.
    """
    p, k = code.prime, rg.k
    for r in range(len(rg.regions)):
        name = rg.name(r)
        v = code.vectors.get(r)
        if v is None or len(v) != k:
            return CodeViolation("missing", name)
        v = vec(v, p)
        if r in rg.source_index:
            if v != alpha(rg.source_index[r], k):
                return CodeViolation("source", name)
        elif not in_span(v, [vec(code.vectors[q], p) for q in rg.parents[r]], p)[0]:
            return CodeViolation("span", name)
        if r in rg.terminal_indices and v != ones(k):
            return CodeViolation("terminal", name)
    return None


def verify_edge_code(aug: AugmentedNetwork, code: EdgeCode) -> CodeViolation | None:
    """Edge-level mirror of :func:`verify_region_code`, over In(e) for each edge."""
    p, k = code.prime, aug.k
    for e in aug.edges:
        v = code.vectors.get(e.id)
        if v is None or len(v) != k:
            return CodeViolation("missing", str(e.id))
        v = vec(v, p)
        if e.kind == "source-link":
            if v != alpha(e.index, k):
                return CodeViolation("source", str(e.id))
            continue
        if not in_span(v, [vec(code.vectors[f], p) for f in aug.inputs[e.id]], p)[0]:
            return CodeViolation("span", str(e.id))
        if e.kind == "terminal-link" and v != ones(k):
            return CodeViolation("terminal", str(e.id))
    return None


def lift_to_edges(rg: RegionGraph, code: RegionCode) -> EdgeCode:
    """Give every edge the vector of its region."""
    out = {}
    for r, reg in enumerate(rg.regions):
        for e in reg.edges:
            out[e] = code.vectors[r]
    return EdgeCode(code.prime, out)


def _pi_vector(part: PiPartition, fam: BFamily, ell_of: dict[int, int], r: int) -> Vec:
    c = part.class_of(r)
    srcs = part.sources_in(c)
    p = fam.prime
    if srcs:
        (i,) = srcs
        if r in source_subclass(part, i):
            return alpha(i)
        j1, j2 = (x for x in (1, 2, 3) if x != i)
        return add(alpha(j1), alpha(j2), p)
    for plane in PLANES:
        if r in subclass_of(part, c, plane):
            return fam.plane_vector(ell_of[c], plane)
    raise CodeConstructionError(f"region {part.rg.name(r)} lies in no plane subclass")


def assign_pi_code(part: PiPartition, fam: BFamily) -> RegionCode:
    """Code on Pi from a compatible partition and a B-family.

    [S_i]_i gets alpha_i, the other subclass of [S_i] gets the sum of the
    two remaining unit vectors, and the plane subclasses of the l-th
    non-source class (l = 4, 5, ... by class order) get the B_l
    representative of that plane. The result is checked: sources carry
    alpha_i, every non-source region of Pi lies in its parents' span, and
    every Lambda_j spans the all-ones vector.
    """
    compat = is_compatible(part)
    if not compat.ok:
        raise CodeConstructionError("partition is not compatible")
    ell_of: dict[int, int] = {}
    for c in range(len(part.classes)):
        if not part.sources_in(c):
            ell_of[c] = 4 + len(ell_of)
    if fam.K < 3 + len(ell_of):
        raise CodeConstructionError(f"B-family has {fam.K} sets, {3 + len(ell_of)} needed")
    rg, profile, p = part.rg, part.profile, fam.prime
    vectors = {r: _pi_vector(part, fam, ell_of, r) for r in sorted(profile.pi)}
    for r in sorted(profile.pi):
        if r in rg.source_index:
            continue
        if not in_span(vectors[r], [vectors[q] for q in rg.parents[r]], p)[0]:
            raise CodeConstructionError(f"region {rg.name(r)} is outside its parents' span")
    for j in range(1, profile.n + 1):
        lam = sorted(profile.lambda_j(j))
        if not in_span(ones(), [vectors[q] for q in lam], p)[0]:
            raise CodeConstructionError(f"Lambda_{j} does not span the all-ones vector")
    return RegionCode(p, vectors)


def extend_code(rg: RegionGraph, profile: TerminalProfile, pi_code: RegionCode) -> RegionCode:
    """Extend a code on Pi to every region of a terminal-separable graph.

    For each terminal j an in-tree inside Omega_j is grown backwards from
    T_j (breadth first, smallest position first). Each Q in Lambda_j with a
    nonzero coefficient in the all-ones combination feeds c_Q d_Q into its
    child nearest to T_j; tree regions add what their tree predecessors
    carry. Regions off every tree copy their first parent.
    """
    p = pi_code.prime
    vectors = dict(pi_code.vectors)
    inject: dict[int, list[tuple[int, int]]] = {}
    feeds: dict[int, list[int]] = {}
    active: set[int] = set()
    for j in range(1, profile.n + 1):
        omega = profile.omega_j(j)
        lam = sorted(profile.lambda_j(j))
        target = rg.terminals[j - 1]
        if target not in omega:
            raise CodeConstructionError(f"terminal {j} is not in Omega_{j}")
        ok, coeffs = in_span(ones(), [vectors[q] for q in lam], p)
        if not ok:
            raise CodeConstructionError(f"Lambda_{j} does not span the all-ones vector")
        dist = {target: 0}
        nxt: dict[int, int] = {}
        queue = [target]
        for x in queue:
            for q in rg.parents[x]:
                if q in omega and q not in dist:
                    dist[q] = dist[x] + 1
                    nxt[q] = x
                    queue.append(q)
        for q, c in zip(lam, coeffs):
            if not c:
                continue
            entry = min((x for x in rg.children[q] if x in omega), key=lambda x: (dist[x], x))
            inject.setdefault(entry, []).append((q, c))
            x = entry
            while x not in active:
                active.add(x)
                if x == target:
                    break
                feeds.setdefault(nxt[x], []).append(x)
                x = nxt[x]
    for r in range(len(rg.regions)):
        if r in profile.pi:
            continue
        if r in active:
            v = (0, 0, 0)
            for q, c in inject.get(r, ()):
                v = add(v, scale(c, vectors[q], p), p)
            for x in feeds.get(r, ()):
                v = add(v, vectors[x], p)
            vectors[r] = v
        else:
            vectors[r] = vectors[rg.parents[r][0]]
    code = RegionCode(p, vectors)
    bad = verify_region_code(rg, code)
    if bad is not None:
        raise CodeConstructionError("extended code fails verification: " + bad.describe())
    return code
