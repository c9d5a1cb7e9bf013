import pytest

from sumnet.gfcode import verify_edge_code, verify_region_code
from sumnet.netmodel import generate_random_network, normalize
from sumnet.oracle import SearchBudget, brute_force_edges, brute_force_region, edge_order, run_oracle
from sumnet.regions import basic_decompose


@pytest.mark.parametrize("name", ["FEAS-1", "FIG2-R", "FIG3-R"])
def test_found_codes_verify(rg_of, name):
    rg = rg_of(name)
    res = brute_force_region(rg, 3)
    assert res.status == "found"
    assert verify_region_code(rg, res.code) is None


@pytest.mark.parametrize("name", ["CIR-1", "FIG4A-R", "GAP-1"])
def test_infeasible_fixtures(rg_of, name):
    rg = rg_of(name)
    for res in run_oracle(rg, None, SearchBudget(fields=(2, 3, 5))):
        assert res.status == "infeasible"


@pytest.mark.parametrize("name", ["PATH-1", "DIAMOND-1", "FIG1"])
def test_edge_level_networks(instances, name):
    aug = normalize(instances(name))
    res = brute_force_edges(aug, 2)
    assert res.status == "found" and verify_edge_code(aug, res.code) is None


def test_edge_order_is_topological(instances):
    aug = normalize(instances("FIG1"))
    order = edge_order(aug)
    seen = set()
    for e in order:
        assert set(aug.inputs[e]) <= seen
        seen.add(e)
    assert sorted(order) == sorted(e.id for e in aug.edges)


def test_budget_exhaustion(rg_of):
    res = brute_force_region(rg_of("CIR-1"), 5, SearchBudget(node_limit=1))
    assert res.status == "exhausted" and res.code is None


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(fields=(4,))
    with pytest.raises(ValueError):
        SearchBudget(node_limit=0)
    with pytest.raises(ValueError):
        SearchBudget(level="node")


def test_edge_level_needs_network(rg_of):
    with pytest.raises(ValueError):
        run_oracle(rg_of("FEAS-1"), None, SearchBudget(level="edge"))


def test_json(rg_of):
    rg = rg_of("FEAS-1")
    data = brute_force_region(rg, 2).to_json(rg)
    assert data["status"] == "found" and data["prime"] == 2 and "code" in data


def test_levels_agree_on_small_networks():
    for seed in range(40):
        net = generate_random_network(seed, 7 + seed % 3, 11 + seed % 4, 1 + seed % 3)
        aug = normalize(net)
        rg = basic_decompose(aug)
        for q in (2, 3):
            assert brute_force_region(rg, q).status == brute_force_edges(aug, q).status
