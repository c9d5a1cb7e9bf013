import pytest

import sumnet.decide as decide_mod
from sumnet.classify import classify
from sumnet.decide import (
    DecideOptions,
    InvariantError,
    check_cir,
    decide,
    decide_3s3t,
    decide_region_graph,
    decide_terminal_separable,
    lift_reduction,
    recheck,
    simple_case_conditions,
    super_terminal_reduce,
)
from sumnet.gfcode import verify_edge_code, verify_region_code
from sumnet.netmodel import (
    generate_random_network,
    generate_random_region_graph,
    generate_separable_region_graph,
    normalize,
    parse_network,
    validate,
)
from sumnet.oracle import OracleResult, SearchBudget, brute_force_region
from sumnet.regions import region_graph_of

from conftest import names

EXPECTED = {
    "FEAS-1": "solvable",
    "CIR-1": "unsolvable",
    "FIG2-R": "solvable",
    "FIG3-R": "solvable",
    "FIG4A-R": "unsolvable",
    "GAP-1": "unsolvable",
    "PATH-1": "solvable",
    "DIAMOND-1": "solvable",
    "FIG1": "solvable",
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_fixture_verdicts(instances, name):
    inst = instances(name)
    d = decide(inst)
    assert d.status == EXPECTED[name]
    assert recheck(inst, d)
    assert set(d.to_json()) == {"status", "certificate", "diagnostics"}


def test_cir_certificate(instances):
    d = decide(instances("CIR-1"))
    cert = d.certificate
    assert cert["kind"] == "cir"
    assert cert["witness"] == {"terminal_naming": [1, 2, 3], "source_naming": [1, 2, 3], "P1": "P1", "P2": "P2"}
    assert cert["incompatibility"]["kind"] == "incompatible"


def test_fig4a_certificate(instances):
    cert = decide(instances("FIG4A-R")).certificate
    assert cert["kind"] == "incompatible" and cert["halt_reason"] == "source-classes-merged"


def test_fig2_reduction(rg_of):
    rg = rg_of("FIG2-R")
    prof = classify(rg)
    group = frozenset({2, 3})
    reduced, red = super_terminal_reduce(rg, prof, group, rg.index("R5"))
    assert names(reduced, reduced.terminals) == {"T1", "R5"}
    sub = decide_region_graph(reduced)
    assert sub.status == "solvable"
    code = lift_reduction(rg, red, sub.region_code)
    assert verify_region_code(rg, code) is None
    assert code.vectors[rg.index("R5")] == (1, 1, 1)
    d = decide(rg)
    assert d.certificate["reductions"] == [{"terminals": [2, 3], "region": "R5"}]
    with pytest.raises(ValueError):
        super_terminal_reduce(rg, prof, group, rg.index("R1"))
    with pytest.raises(ValueError):
        decide_terminal_separable(rg, prof)


def test_decide_3s3t_requires_three_terminals(rg_of):
    with pytest.raises(ValueError):
        decide_3s3t(region_graph_of(generate_random_region_graph(0, 3, 2)))
    assert decide_3s3t(rg_of("FEAS-1")).status == "solvable"


def test_disconnected_network():
    net = parse_network("sources: s1 s2 s3\nterminals: t\nnode: a\nedge: s1 a\nedge: s2 a\nedge: a t\n")
    d = decide(net)
    assert d.status == "unsolvable" and d.certificate["kind"] == "connectivity"
    assert recheck(net, d)


@pytest.mark.parametrize("k", [1, 2])
def test_fewer_sources(k):
    for seed in range(20):
        net = generate_random_network(seed, 6, 9, 2, k=k)
        d = decide(net)
        assert d.status == "solvable" and d.diagnostics["out_of_theory"]
        assert verify_edge_code(normalize(net), d.code) is None


def test_more_sources_rejected():
    from sumnet.netmodel import NetworkError

    net = parse_network("sources: a b c d\nterminals: t\nedge: a t\nedge: b t\nedge: c t\nedge: d t\n")
    with pytest.raises(NetworkError):
        decide(net)


def four_terminal_nonseparable():
    for seed in range(2000):
        rg = region_graph_of(generate_random_region_graph(seed, 6, 4, terminal_children=True))
        prof = classify(rg)
        if not prof.separable and not decide_mod._region_disconnected(rg):
            return rg
    raise AssertionError("no instance found")


def test_search_fallback_unknown(monkeypatch):
    rg = four_terminal_nonseparable()
    monkeypatch.setattr(decide_mod, "_decide_by_reduction", lambda *a: None)
    monkeypatch.setattr(decide_mod, "check_assumption1", lambda *a: None)
    fake = [OracleResult("exhausted", q, None, 10, 0.0) for q in (2, 3, 5)]
    monkeypatch.setattr(decide_mod, "run_oracle", lambda *a: fake)
    d = decide_region_graph(rg)
    assert d.status == "unknown" and d.certificate["kind"] == "oracle-bounds"
    assert [r["status"] for r in d.certificate["results"]] == ["exhausted"] * 3
    assert recheck(rg, d)


def test_search_fallback_solvable(monkeypatch):
    rg = four_terminal_nonseparable()
    if brute_force_region(rg, 5).status != "found":
        pytest.skip("instance has no code over GF(5)")
    monkeypatch.setattr(decide_mod, "_decide_by_reduction", lambda *a: None)
    monkeypatch.setattr(decide_mod, "check_assumption1", lambda *a: None)
    d = decide_region_graph(rg, DecideOptions(SearchBudget(fields=(5,))))
    assert d.status == "solvable" and d.certificate["source"] == "oracle"
    assert verify_region_code(rg, d.region_code) is None


def test_invariant_on_three_terminals(monkeypatch, rg_of):
    monkeypatch.setattr(decide_mod, "_decide_by_reduction", lambda *a: None)
    with pytest.raises(InvariantError):
        decide_region_graph(rg_of("FIG2-R"))


def separable_three(count, seed0=0):
    for seed in range(seed0, seed0 + count):
        rg = region_graph_of(generate_separable_region_graph(seed, seed % 7, 3))
        yield rg, classify(rg)


def test_pattern_matches_partition_verdict():
    unsolvable = 0
    for rg, prof in separable_three(400):
        d = decide_terminal_separable(rg, prof)
        assert (check_cir(rg, prof) is None) == (d.status == "solvable")
        if simple_case_conditions(rg, prof):
            assert d.status == "solvable"
        unsolvable += d.status == "unsolvable"
    assert unsolvable > 0


def test_two_terminal_networks_solvable():
    for seed in range(100):
        net = generate_random_network(seed, 8 + seed % 4, 12 + seed % 5, 2)
        if validate(normalize(net)).trivially_unsolvable:
            continue
        d = decide(net)
        assert d.status == "solvable" and recheck(net, d)


def test_decide_against_oracle():
    for seed in range(120):
        n = 1 + seed % 3
        if seed % 2:
            rg = region_graph_of(generate_separable_region_graph(seed, seed % 6, n))
        else:
            rg = region_graph_of(generate_random_region_graph(seed, 2 + seed % 6, n))
        d = decide(rg)
        assert recheck(rg, d)
        for q in (2, 3):
            found = brute_force_region(rg, q).status == "found"
            if d.status == "unsolvable":
                assert not found
