import networkx as nx
import pytest

from sumnet.classify import (
    check_assumption1,
    classify,
    compute_pi,
    is_terminal_separable,
    label_terminals,
)
from sumnet.netmodel import generate_random_region_graph, generate_separable_region_graph, parse_region_graph
from sumnet.regions import region_graph_of, super_region, super_region_open

from conftest import names


def by_name(rg, table):
    return {",".join(map(str, sorted(k))): names(rg, v) for k, v in table.items()}


def test_fig2_profile(rg_of):
    rg = rg_of("FIG2-R")
    prof = classify(rg)
    assert names(rg, prof.pi) == {"S1", "S2", "S3", "R1", "R2", "R3", "R4"}
    assert by_name(rg, prof.omega) == {"1": {"T1"}, "2": {"T2"}, "3": {"T3"}, "2,3": {"R5"}}
    assert by_name(rg, prof.lam) == {"1": {"R1", "R3"}, "2": {"R4"}, "3": {"R3"}, "2,3": {"R2", "R3"}}
    assert not prof.separable and not is_terminal_separable(prof)
    labels = label_terminals(rg)
    assert labels[rg.index("R5")] == {2, 3}
    assert labels[rg.index("S1")] == {1, 2, 3}


def test_feas_profile(rg_of):
    rg = rg_of("FEAS-1")
    prof = classify(rg)
    assert names(rg, compute_pi(rg)) == {"S1", "S2", "S3", "R1"}
    assert label_terminals(rg)[rg.index("R1")] == {1, 2, 3}
    for j in (1, 2, 3):
        assert names(rg, prof.omega_j(j)) == {f"T{j}"}
        assert names(rg, prof.lambda_j(j)) == {"R1", "S3"}
    assert prof.separable
    assert check_assumption1(rg, prof) is None


def test_cir_profile(rg_of):
    rg = rg_of("CIR-1")
    prof = classify(rg)
    assert names(rg, prof.pi) == {"S1", "S2", "S3", "P1", "P2", "P3"}
    assert [names(rg, prof.lambda_j(j)) for j in (1, 2, 3)] == [{"S1", "P1"}, {"P1", "P2"}, {"P2", "P3"}]
    assert prof.separable


def test_assumption1_violation():
    rg = region_graph_of(parse_region_graph(
        "regiongraph\nsource S1 1\nsource S2 2\nsource S3 3\nregion R : S1 S2\n"
        "terminal T1 1 : S1 S3\nterminal T2 2 : R S3\n"
    ))
    assert check_assumption1(rg, classify(rg)) == 1


def test_requires_three_sources():
    rg = region_graph_of(parse_region_graph("regiongraph\nsource S1 1\nsource S2 2\nterminal T1 1 : S1 S2\n"))
    with pytest.raises(ValueError):
        classify(rg)


def test_profile_json(rg_of):
    rg = rg_of("FIG2-R")
    data = classify(rg).to_json(rg)
    assert data["omega"]["2,3"] == ["R5"] and data["separable"] is False
    assert data["assumption1"] == {"ok": True, "terminal": None}


def random_graphs(count, seed0=0):
    for seed in range(seed0, seed0 + count):
        spec = generate_random_region_graph(seed, 2 + seed % 10, 1 + seed % 4, terminal_children=seed % 3 == 0)
        yield region_graph_of(spec)


def test_labels_match_forward_reachability():
    for rg in random_graphs(200):
        g = nx.DiGraph()
        g.add_nodes_from(range(len(rg)))
        g.add_edges_from((p, r) for r, ps in enumerate(rg.parents) for p in ps)
        labels = label_terminals(rg)
        for r in range(len(rg)):
            reach = nx.descendants(g, r) | {r}
            assert labels[r] == {j for j, t in enumerate(rg.terminals, 1) if t in reach}


def test_omega_lambda_invariants():
    for rg in random_graphs(200, 400):
        prof = classify(rg)
        keys = list(prof.omega)
        for a in range(len(keys)):
            assert not prof.omega[keys[a]] & prof.pi
            for b in range(a + 1, len(keys)):
                assert not prof.omega[keys[a]] & prof.omega[keys[b]]
        for key, lam in prof.lam.items():
            assert lam <= prof.pi
            assert all(any(c in prof.omega[key] for c in rg.children[q]) for q in lam)


def test_lambda_structure_on_separable_graphs():
    count = 0
    for seed in range(300):
        rg = region_graph_of(generate_separable_region_graph(seed, seed % 7, 1 + seed % 4))
        prof = classify(rg)
        assert prof.separable
        s = rg.sources
        for j in range(1, rg.n + 1):
            lam = prof.lambda_j(j)
            assert len(lam) >= 2
            assert rg.terminals[j - 1] in super_region_open(rg, lam)
            for a, b in ((0, 1), (0, 2), (1, 2)):
                assert not lam <= super_region(rg, (s[a], s[b]))
            count += 1
    assert count > 500
