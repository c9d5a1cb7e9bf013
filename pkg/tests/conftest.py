from __future__ import annotations

import pytest

from sumnet.fixtures import load_fixture
from sumnet.netmodel import Network, normalize
from sumnet.regions import basic_decompose, region_graph_of


def region_graph(inst):
    if isinstance(inst, Network):
        return basic_decompose(normalize(inst))
    return region_graph_of(inst)


@pytest.fixture
def rg_of():
    return lambda name: region_graph(load_fixture(name))


@pytest.fixture
def instances():
    return load_fixture


def names(rg, positions):
    return set(rg.names(positions))
