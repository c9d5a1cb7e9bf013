"""Named instances shipped with the package.

Region-graph fixtures (``.rg``): FEAS-1, CIR-1, FIG2-R, FIG3-R, FIG4A-R,
GAP-1. Network fixtures (``.net``): PATH-1, DIAMOND-1, FIG1.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..netmodel import Network, RegionGraphSpec, parse_instance

__all__ = ["NAMES", "fixture_path", "fixture_text", "load_fixture"]

NAMES = ("FEAS-1", "CIR-1", "FIG2-R", "FIG3-R", "FIG4A-R", "GAP-1", "PATH-1", "DIAMOND-1", "FIG1")


def fixture_path(name: str) -> Path:
    root = resources.files(__name__)
    for suffix in (".rg", ".net"):
        candidate = root / (name + suffix)
        if candidate.is_file():
            return Path(str(candidate))
    raise KeyError(f"unknown fixture {name}")


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def load_fixture(name: str) -> Network | RegionGraphSpec:
    return parse_instance(fixture_text(name))
