import json

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumnet.fixtures import fixture_text, load_fixture
from sumnet.netmodel import (
    CycleError,
    GenerationError,
    Network,
    NetworkError,
    ParseError,
    RegionGraphSpec,
    generate_random_network,
    generate_random_region_graph,
    generate_separable_region_graph,
    load_instance,
    make_network,
    normalize,
    parse_instance,
    parse_network,
    parse_region_graph,
    validate,
)

DIAMOND = "sources: s1 s2 s3\nterminals: t1\nnode: a\nedge: s1 a\nedge: s2 a\nedge: a t1\nedge: s3 t1\n"


def test_path_counts():
    net = load_fixture("PATH-1")
    assert (len(net.nodes), len(net.edges), net.k, net.n) == (2, 1, 1, 1)
    assert len(normalize(net).edges) == 3


def test_diamond_counts():
    net = parse_network(DIAMOND)
    assert (len(net.nodes), len(net.edges)) == (5, 4)
    assert [(e.id, e.tail, e.head) for e in net.edges] == [(1, "s1", "a"), (2, "s2", "a"), (3, "a", "t1"), (4, "s3", "t1")]
    assert len(normalize(net).edges) == 8


def test_fig1_augmented_numbering():
    aug = normalize(load_fixture("FIG1"))
    assert len(aug.base.edges) == 14 and len(aug.edges) == 20
    for i in (1, 2, 3):
        e = aug.edge(i)
        assert e.kind == "source-link" and e.index == i and e.head == f"s{i}"
    assert [aug.terminal_link(j) for j in (1, 2, 3)] == [18, 19, 20]


def test_input_links():
    aug = normalize(parse_network(DIAMOND))
    # source links 1..3, real edges 4..7 (s1a, s2a, at1, s3t1), terminal link 8
    assert aug.inputs[1] == () and aug.inputs[4] == (1,)
    assert set(aug.inputs[6]) == {4, 5}
    assert set(aug.inputs[8]) == {6, 7}


def test_unknown_node():
    with pytest.raises(ParseError, match="unknown node") as exc:
        parse_network("sources: s1\nterminals: t1\nedge: s1 zzz\n")
    assert exc.value.line == 3


def test_duplicate_declaration():
    with pytest.raises(ParseError, match="duplicate"):
        parse_network("sources: s1 s2\nterminals: s2\n")


def test_syntax_error_line_number():
    with pytest.raises(ParseError) as exc:
        parse_network("sources: s1\nterminals: t1\n\nedge s1 t1\n")
    assert exc.value.line == 4


def test_validate_diamond():
    rep = validate(normalize(parse_network(DIAMOND)))
    assert rep.acyclic and not rep.trivially_unsolvable
    assert all(rep.connected[(i, 1)] for i in (1, 2, 3))


def test_validate_disconnected():
    rep = validate(parse_network(DIAMOND.replace("edge: s3 t1\n", "")))
    assert rep.trivially_unsolvable and rep.disconnected == [(3, 1)]


def test_validate_cycle():
    with pytest.raises(CycleError):
        validate(parse_network(fixture_text("PATH-1") + "edge: t1 s1\n"))


def test_validate_orphan_node():
    with pytest.raises(NetworkError, match="no incoming"):
        validate(parse_network("sources: s1\nterminals: t1\nnode: x\nedge: s1 t1\nedge: x t1\n"))


def test_region_graph_specs():
    feas = load_fixture("FEAS-1")
    assert isinstance(feas, RegionGraphSpec) and len(feas.entries) == 7
    assert len(load_fixture("CIR-1").entries) == 9


def test_region_graph_errors():
    with pytest.raises(ParseError, match="fewer than two parents"):
        parse_region_graph("regiongraph\nsource S1 1\nregion R1 : S1\nterminal T1 1 : R1 S1\n")
    with pytest.raises(ParseError, match="duplicate region name"):
        parse_region_graph("regiongraph\nsource S1 1\nsource S1 2\n")
    with pytest.raises(ParseError, match="unknown node"):
        parse_region_graph("regiongraph\nsource S1 1\nsource S2 2\nterminal T1 1 : S1 Q\n")
    with pytest.raises(CycleError):
        parse_region_graph(
            "regiongraph\nsource S1 1\nsource S2 2\nregion A : S1 B\nregion B : S2 A\nterminal T1 1 : A B\n"
        )


def test_json_mirror(tmp_path):
    net = parse_network(DIAMOND)
    p = tmp_path / "d.json"
    p.write_text(json.dumps(net.to_json()))
    assert load_instance(p) == net
    spec = load_fixture("CIR-1")
    q = tmp_path / "c.json"
    q.write_text(json.dumps(spec.to_json()))
    assert load_instance(q) == spec


def test_text_round_trip_of_fixtures():
    for name in ("PATH-1", "DIAMOND-1", "FIG1", "FEAS-1", "CIR-1", "FIG2-R"):
        inst = load_fixture(name)
        assert parse_instance(inst.to_text()) == inst


def test_normalize_strip_identity():
    for name in ("PATH-1", "DIAMOND-1", "FIG1"):
        net = load_fixture(name)
        assert normalize(net).strip() == net


def test_generator_examples():
    a = generate_random_network(1, 8, 14, 2)
    assert a == generate_random_network(1, 8, 14, 2)
    with pytest.raises(GenerationError):
        generate_random_network(2, 5, 4, 3)
    net = generate_random_network(7, 12, 25, 4)
    assert not validate(net).trivially_unsolvable and net.n == 4


def test_generator_thousand_seeds():
    for seed in range(1000):
        nodes = 6 + seed % 8
        net = generate_random_network(seed, nodes, nodes + 4 + seed % 10, 1 + seed % 4)
        rep = validate(net)
        assert rep.acyclic and not rep.trivially_unsolvable
        g = nx.MultiDiGraph([(e.tail, e.head) for e in net.edges])
        assert nx.is_directed_acyclic_graph(g)
        assert parse_network(net.to_text()) == net


def test_region_graph_generators_are_wellformed():
    for seed in range(100):
        spec = generate_random_region_graph(seed, seed % 7, 1 + seed % 4)
        assert parse_region_graph(spec.to_text()) == spec
        sep = generate_separable_region_graph(seed, seed % 6, 1 + seed % 4)
        assert parse_region_graph(sep.to_text()) == sep


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), min_size=1, max_size=20))
def test_parse_print_round_trip(pairs):
    nodes = [f"v{i}" for i in range(8)]
    edges = [(nodes[min(a, b)], nodes[max(a, b)]) for a, b in pairs if a != b]
    net = make_network(["v0"], ["v7"], edges, nodes)
    assert isinstance(net, Network)
    again = parse_network(net.to_text())
    assert again == net
    assert [e.id for e in again.edges] == list(range(1, len(edges) + 1))
