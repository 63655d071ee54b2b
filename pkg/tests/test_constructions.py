from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from ncg.core import (
    GameParams,
    build_graph,
    graph_properties,
    is_rational,
    player_cost,
    shortest_path_distances,
)
from ncg.constructions import (
    BuyerPattern,
    Example1Params,
    InvalidParams,
    InvalidPattern,
    cfip3_cycle_moves,
    make_cfip3_profile,
    make_example1,
    make_hoffman_singleton,
    make_standard,
    star_profile,
)
from ncg.equilibrium import recompute_deltas
from ncg.equilibrium import DeviationWitness


def test_make_standard_examples():
    star = make_standard("star", 4, "leaves-buy")
    assert star.strategies == (frozenset(), frozenset({0}), frozenset({0}), frozenset({0}))

    cyc = make_standard("cycle", 4, "each-buys-next")
    assert all(len(s) == 1 for s in cyc.strategies)
    assert graph_properties(build_graph(cyc)).is_cycle

    comp = make_standard("complete", 3, "lowest-buys")
    assert graph_properties(build_graph(comp)).edge_count == 3
    assert is_rational(comp)


def test_make_standard_patterns_are_rational():
    for shape, patterns in {
        "star": ["leaves-buy", "center-buys", "mixed:3"],
        "cycle": ["each-buys-next", "each-buys-prev", "alternating"],
        "path": ["lower-buys", "upper-buys", "alternating"],
        "complete": ["lowest-buys", "highest-buys"],
    }.items():
        for n in (3, 4, 5, 6):
            for pat in patterns:
                prof = make_standard(shape, n, pat)
                assert is_rational(prof), (shape, n, pat)
                props = graph_properties(build_graph(prof))
                if shape == "star":
                    assert props.is_star
                elif shape == "cycle":
                    assert props.is_cycle
                elif shape == "path":
                    assert props.is_tree and props.edge_count == n - 1
                else:
                    assert props.is_complete


def test_invalid_pattern_rejected():
    with pytest.raises(InvalidPattern):
        make_standard("star", 4, "each-buys-next")
    with pytest.raises(InvalidPattern):
        make_standard("cycle", 4, BuyerPattern("mixed", 3))
    with pytest.raises(InvalidPattern):
        make_standard("nonsense", 4, "leaves-buy")


def test_example1_structure():
    p = Example1Params(5, 4)
    prof = make_example1(p)
    assert prof.n == 22
    assert len(list(p.l1)) == 12 and len(list(p.l2)) == 5
    buyers = {i for i in range(22) if prof.strategies[i]}
    assert buyers == set(range(4)) | {21}
    assert len(prof.strategies[p.root]) == p.k + 1
    for m in p.middles:
        assert len(prof.strategies[m]) == p.k
    g = build_graph(prof)
    props = graph_properties(g)
    assert props.is_tree and props.edge_count == 21 and props.diameter == 4


def test_example1_distance_formula_grid():
    """All four class formulas match BFS for A in 4..6, k in 1..4."""
    for a in (4, 5, 6):
        for k in (1, 2, 3, 4):
            p = Example1Params(a, k)
            prof = make_example1(p)
            params = GameParams(p.n, 2 * p.n)
            dc = p.distance_costs()
            assert is_rational(prof)
            for i in range(p.n):
                assert player_cost(prof, params, i).distance == dc[p.class_of(i)]


def test_example1_k1_degenerates_to_star():
    p = Example1Params(4, 1)
    prof = make_example1(p)
    assert prof.n == 6
    assert list(p.l1) == []
    assert graph_properties(build_graph(prof)).is_star


def test_example1_invalid_params():
    with pytest.raises(InvalidParams):
        Example1Params(3, 2)
    with pytest.raises(InvalidParams):
        Example1Params(4, 0)


def test_hoffman_singleton_defining_properties():
    """Unique 7-regular 50-vertex graph: adjacent pairs share no neighbor,
    non-adjacent pairs share exactly one."""
    prof = make_hoffman_singleton()
    g = build_graph(prof)
    props = graph_properties(g)
    assert g.n == 50 and props.edge_count == 175 and props.diameter == 2
    assert all(g.degree(v) == 7 for v in range(50))
    for u, v in itertools.combinations(range(50), 2):
        common = len(g.adjacency[u] & g.adjacency[v])
        if v in g.adjacency[u]:
            assert common == 0
        else:
            assert common == 1
    # a pentagon exists, so the girth is exactly 5
    assert 1 in g.adjacency[0] and 2 in g.adjacency[1] and 0 in g.adjacency[4]


def test_hoffman_singleton_orientation():
    prof = make_hoffman_singleton()
    assert is_rational(prof)
    sizes = sorted(len(s) for s in prof.strategies)
    assert sizes == [3] * 25 + [4] * 25
    params = GameParams(50, 5)
    assert all(player_cost(prof, params, i).distance == 91 for i in range(50))
    # deterministic output
    assert make_hoffman_singleton() == prof


def test_cfip3_profile_and_cycle():
    prof = make_cfip3_profile()
    params = GameParams(3, Fraction(1, 2))
    totals = [player_cost(prof, params, i).total for i in range(3)]
    assert totals == [Fraction(5, 2), 3, Fraction(7, 2)]

    # the {2,3} deviation (1-based) improves both members
    movers, strats = cfip3_cycle_moves()[0]
    w = DeviationWitness(movers, strats, (Fraction(0),) * 2)
    deltas = recompute_deltas(prof, params, w)
    assert all(d < 0 for d in deltas)

    # applying the three conjugate moves returns the exact starting profile
    cur = prof
    for movers, strats in cfip3_cycle_moves():
        cur = cur.apply(movers, strats)
    assert cur == prof


def test_cfip3_extension_beyond_three_players():
    prof = make_cfip3_profile(5)
    assert prof.strategies[3] == frozenset({0, 1, 2})
    assert prof.strategies[4] == frozenset({0, 1, 2})
    params = GameParams(5, Fraction(1, 2))
    # documented costs: c_1 = (n-1) + alpha, c_2 = n, c_3 = n + alpha
    assert player_cost(prof, params, 0).total == 4 + Fraction(1, 2)
    assert player_cost(prof, params, 1).total == 5
    assert player_cost(prof, params, 2).total == 5 + Fraction(1, 2)
