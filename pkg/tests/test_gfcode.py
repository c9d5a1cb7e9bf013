from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Matrix

from sumnet.classify import classify
from sumnet.gfcode import (
    EdgeCode,
    RegionCode,
    alpha,
    assign_pi_code,
    base_family,
    canonical,
    check_B_conditions,
    choose_prime,
    code_from_json,
    extend_code,
    family_with,
    generate_B,
    in_span,
    lift_to_edges,
    ones,
    plane_intersection,
    projective_points,
    rank,
    verify_edge_code,
    verify_region_code,
)
from sumnet.netmodel import normalize
from sumnet.partition import character_partition
from sumnet.regions import basic_decompose

B4 = [(1, 3, 0), (2, 0, 3), (0, 2, -1)]


def same_line(u, v, p):
    return canonical(tuple(x % p for x in u), p) == canonical(tuple(x % p for x in v), p)


def test_in_span_examples():
    assert in_span((1, 1, 1), [(1, 0, 0), (0, 1, 1)], 2) == (True, (1, 1))
    assert in_span((1, 1, 0), [(1, 0, 0), (0, 0, 1)], 5) == (False, None)
    ok, c = in_span((0, 2, 6), [(1, 3, 0), (2, 0, 3)], 7)
    assert ok and tuple((c[0] * a + c[1] * b) % 7 for a, b in zip((1, 3, 0), (2, 0, 3))) == (0, 2, 6)
    assert in_span((1, 1, 1), [], 3) == (False, None)


def test_plane_intersection_example():
    p = 7
    u1, u2 = (1, 3, 0), (1, 1, 1)
    assert same_line(plane_intersection(u1, u2, (1, 3), p), (2, 0, 3), p)
    assert same_line(plane_intersection(u1, u2, (2, 3), p), (0, 2, -1), p)
    with pytest.raises(ValueError):
        plane_intersection((1, 0, 0), (2, 0, 0), (1, 2), p)


def independent_check(sets, p):
    """Integer-determinant reading of the four family conditions."""
    pool = [v for s in sets for v in s]
    if len({canonical(tuple(x % p for x in v), p) for v in pool}) != len(pool):
        return False
    allones = (1, 1, 1)
    for s in sets[3:]:
        if any(v[c] % p for v, c in zip(s, (2, 1, 0))):
            return False
    for s in sets:
        for a, b in combinations(s, 2):
            if Matrix([list(a), list(b), list(allones)]).det() % p:
                return False
    for tri in combinations(pool, 3):
        if any(all(v[c] % p == 0 for v in tri) for c in range(3)):
            continue
        if any(sorted(tri) == sorted(s) for s in sets[3:]):
            continue
        if Matrix([list(v) for v in tri]).det() % p == 0:
            return False
    return True


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13])
def test_example_family_admissible_primes(p):
    fam = family_with(p, [B4])
    ok, _ = check_B_conditions(fam)
    assert ok == (p >= 7)
    assert independent_check([list(s) for s in fam.sets], p) == ok


def test_base_family_needs_odd_prime():
    assert not check_B_conditions(base_family(2))[0]
    assert check_B_conditions(base_family(3))[0]
    assert generate_B(3, 2) is None


def test_duplicate_vector_rejected():
    fam = family_with(7, [B4, B4])
    ok, why = check_B_conditions(fam)
    assert not ok and why


@pytest.mark.parametrize("K", range(3, 13))
def test_generated_families(K):
    p = choose_prime(K)
    fam = generate_B(K, p)
    assert fam is not None and fam.K == K
    assert check_B_conditions(fam)[0]


def test_choose_prime_values():
    assert [choose_prime(K) for K in range(3, 13)] == [5, 7, 7, 17, 17, 31, 31, 37, 61, 71]
    with pytest.raises(ValueError):
        choose_prime(2)


def test_generated_seed_matches_example():
    fam = generate_B(4, 7)
    assert same_line(fam.sets[3][0], (1, 3, 0), 7)


def test_projective_points_count():
    for p in (2, 3, 5):
        assert len(projective_points([alpha(1), alpha(2), alpha(3)], p)) == p * p + p + 1
        assert len(projective_points([alpha(1), alpha(2)], p)) == p + 1


def test_feas_code(rg_of):
    rg = rg_of("FEAS-1")
    prof = classify(rg)
    part, _ = character_partition(rg, prof)
    pi_code = assign_pi_code(part, generate_B(3, 5))
    assert pi_code.vectors[rg.index("R1")] == (1, 1, 0)
    code = extend_code(rg, prof, pi_code)
    assert verify_region_code(rg, code) is None


def test_fig3_code_uses_example_family(rg_of):
    rg = rg_of("FIG3-R")
    prof = classify(rg)
    part, _ = character_partition(rg, prof)
    pi_code = assign_pi_code(part, family_with(7, [B4]))
    assert same_line(pi_code.vectors[rg.index("R2")], (2, 0, 3), 7)
    assert same_line(pi_code.vectors[rg.index("R6")], (0, 2, -1), 7)
    code = extend_code(rg, prof, pi_code)
    assert verify_region_code(rg, code) is None


def fig2_code(rg, p=3):
    a1, s23 = alpha(1), (0, 1, 1)
    v = {"S1": alpha(1), "S2": alpha(2), "S3": alpha(3), "R1": a1, "R2": a1, "R3": s23, "R4": a1, "R5": ones()}
    v.update({f"T{j}": ones() for j in (1, 2, 3)})
    return RegionCode(p, {rg.index(k): x for k, x in v.items()})


def test_fig2_reduction_code(rg_of):
    rg = rg_of("FIG2-R")
    assert verify_region_code(rg, fig2_code(rg)) is None


def test_violations(rg_of):
    rg = rg_of("FIG2-R")
    code = fig2_code(rg)
    bad = dict(code.vectors)
    bad[rg.index("R4")] = alpha(3)
    assert verify_region_code(rg, RegionCode(3, bad)).clause == "span"
    bad = dict(code.vectors)
    bad[rg.index("S1")] = alpha(2)
    assert verify_region_code(rg, RegionCode(3, bad)).clause == "source"
    bad = dict(code.vectors)
    del bad[rg.index("R5")]
    assert verify_region_code(rg, RegionCode(3, bad)).clause == "missing"
    bad = dict(code.vectors)
    bad[rg.index("T3")] = (0, 1, 1)
    assert verify_region_code(rg, RegionCode(3, bad)).clause == "terminal"


def test_lift_and_json(instances):
    net = instances("FIG1")
    aug = normalize(net)
    rg = basic_decompose(aug)
    from sumnet.decide import decide

    d = decide(net)
    assert d.status == "solvable"
    edge = lift_to_edges(rg, d.region_code)
    assert verify_edge_code(aug, edge) is None
    again = code_from_json(edge.to_json())
    assert isinstance(again, EdgeCode) and again.vectors == edge.vectors
    back = code_from_json(d.region_code.to_json(rg), rg)
    assert back.vectors == d.region_code.vectors
    with pytest.raises(ValueError):
        code_from_json({"prime": 4, "level": "edge", "vectors": {}})


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.lists(st.tuples(*[st.integers(0, 6)] * 3), min_size=1, max_size=4))
def test_rank_and_span_agree(p, vectors):
    vectors = [tuple(x % p for x in v) for v in vectors]
    r = rank(vectors, p)
    inside = 0
    for v in projective_points([alpha(1), alpha(2), alpha(3)], p):
        ok, c = in_span(v, vectors, p)
        assert ok == (rank(vectors + [v], p) == r)
        if ok:
            inside += 1
            assert tuple(sum(ci * b[t] for ci, b in zip(c, vectors)) % p for t in range(3)) == v
    assert inside == (p**r - 1) // (p - 1)
