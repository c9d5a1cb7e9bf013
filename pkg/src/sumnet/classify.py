"""Terminal labels, the set Pi, the Omega/Lambda tables and terminal separability."""

from __future__ import annotations

from dataclasses import dataclass

from .regions import RegionGraph, super_region

__all__ = [
    "PLANES",
    "TerminalProfile",
    "check_assumption1",
    "classify",
    "compute_pi",
    "is_terminal_separable",
    "label_terminals",
    "omega_lambda",
    "pair_regions",
]

PLANES: tuple[tuple[int, int], ...] = ((1, 2), (1, 3), (2, 3))


def _require_three_sources(rg: RegionGraph) -> None:
    if rg.k != 3:
        raise ValueError(f"three sources required, got {rg.k}")


def pair_regions(rg: RegionGraph) -> dict[tuple[int, int], frozenset[int]]:
    """reg(S_a, S_b) for the three source pairs."""
    _require_three_sources(rg)
    return {(a, b): super_region(rg, (rg.sources[a - 1], rg.sources[b - 1])) for a, b in PLANES}


def compute_pi(rg: RegionGraph) -> frozenset[int]:
    planes = pair_regions(rg)
    return planes[(1, 2)] | planes[(1, 3)] | planes[(2, 3)]


def label_terminals(rg: RegionGraph) -> tuple[frozenset[int], ...]:
    """For each region, the indices of the terminals it reaches (itself included)."""
    labels: list[frozenset[int]] = [frozenset()] * len(rg.regions)
    own = rg.terminal_indices
    for r in range(len(rg.regions) - 1, -1, -1):
        acc = set(own.get(r, ()))
        for c in rg.children[r]:
            acc |= labels[c]
        labels[r] = frozenset(acc)
    return tuple(labels)


def omega_lambda(
    rg: RegionGraph, pi: frozenset[int], labels: tuple[frozenset[int], ...]
) -> tuple[dict[frozenset[int], frozenset[int]], dict[frozenset[int], frozenset[int]]]:
    """Omega_I: regions outside Pi reaching exactly I. Lambda_I: Pi regions with a child in Omega_I."""
    omega: dict[frozenset[int], set[int]] = {}
    for r, lab in enumerate(labels):
        if r not in pi and lab:
            omega.setdefault(lab, set()).add(r)
    lam: dict[frozenset[int], frozenset[int]] = {}
    for key, members in omega.items():
        q = {p for r in members for p in rg.parents[r] if p in pi}
        if q:
            lam[key] = frozenset(q)
    return {k: frozenset(v) for k, v in omega.items()}, lam


def _key_order(key: frozenset[int]) -> tuple[int, tuple[int, ...]]:
    return len(key), tuple(sorted(key))


@dataclass(frozen=True)
class TerminalProfile:
    pi: frozenset[int]
    labels: tuple[frozenset[int], ...]
    omega: dict[frozenset[int], frozenset[int]]
    lam: dict[frozenset[int], frozenset[int]]
    planes: dict[tuple[int, int], frozenset[int]]
    separable: bool
    n: int

    def lambda_j(self, j: int) -> frozenset[int]:
        return self.lam.get(frozenset((j,)), frozenset())

    def omega_j(self, j: int) -> frozenset[int]:
        return self.omega.get(frozenset((j,)), frozenset())

    def plane(self, a: int, b: int) -> frozenset[int]:
        return self.planes[(min(a, b), max(a, b))]

    def multi_omega(self) -> list[tuple[frozenset[int], frozenset[int]]]:
        """Non-empty Omega_I with |I| >= 2, ordered by size then indices."""
        return sorted(((k, v) for k, v in self.omega.items() if len(k) > 1), key=lambda kv: _key_order(kv[0]))

    def to_json(self, rg: RegionGraph) -> dict:
        def key(k: frozenset[int]) -> str:
            return ",".join(map(str, sorted(k)))

        violation = check_assumption1(rg, self)
        return {
            "pi": rg.names(self.pi),
            "labels": {rg.name(r): sorted(lab) for r, lab in enumerate(self.labels)},
            "omega": {key(k): rg.names(self.omega[k]) for k in sorted(self.omega, key=_key_order)},
            "lambda": {key(k): rg.names(self.lam[k]) for k in sorted(self.lam, key=_key_order)},
            "separable": self.separable,
            "assumption1": {"ok": violation is None, "terminal": violation},
        }


def is_terminal_separable(profile: TerminalProfile) -> bool:
    return all(len(k) == 1 for k in profile.omega)


def classify(rg: RegionGraph) -> TerminalProfile:
    planes = pair_regions(rg)
    pi = planes[(1, 2)] | planes[(1, 3)] | planes[(2, 3)]
    labels = label_terminals(rg)
    omega, lam = omega_lambda(rg, pi, labels)
    separable = all(len(k) == 1 for k in omega)
    return TerminalProfile(pi, labels, omega, lam, planes, separable, rg.n)


def check_assumption1(rg: RegionGraph, profile: TerminalProfile) -> int | None:
    """Smallest terminal index whose region lies in Pi, or ``None`` when every terminal is outside."""
    for j, r in enumerate(rg.terminals, 1):
        if r in profile.pi:
            return j
    return None
