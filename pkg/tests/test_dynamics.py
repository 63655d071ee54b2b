from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from conftest import all_rational_profiles, random_profile, random_tree_profile
from ncg.core import (
    GameParams,
    INFINITE,
    StrategyProfile,
    build_graph,
    complement_is_forest,
    graph_properties,
    is_rational,
)
from ncg.constructions import (
    cfip3_cycle_moves,
    make_cfip3_profile,
    make_standard,
    star_profile,
)
from ncg.dynamics import (
    Policy,
    PreconditionViolated,
    StateCapHit,
    TerminationKind,
    WrongAlpha,
    enumerate_improving_moves,
    find_improvement_cycle,
    potential_value,
    run_dynamics,
    scan_for_cost_table,
    script_alpha1_to_strong,
    script_tree_to_star,
    search_improvement_path,
    validate_path_record,
)
from ncg.equilibrium import SEVerdict, is_strong_equilibrium, theory_oracle, OracleVerdict


# ---------------------------------------------------------------------------
# move enumeration


def test_enumerate_moves_star_below_one_contains_buy_all():
    prof = star_profile(5)
    params = GameParams(5, Fraction(1, 2))
    moves = [m for m in enumerate_improving_moves(prof, params, 1)]
    targets = {(m.movers, m.strategies) for m in moves}
    # each leaf buying everyone (keeping her edge) is an improving move
    assert ((1,), (frozenset({0, 2, 3, 4}),)) in targets


def test_enumerate_moves_empty_for_strong_equilibria():
    prof = star_profile(4)
    assert list(enumerate_improving_moves(prof, GameParams(4, 3), 4)) == []
    c4 = make_standard("cycle", 4, "each-buys-next")
    assert list(enumerate_improving_moves(c4, GameParams(4, 1), 1)) == []
    assert list(enumerate_improving_moves(c4, GameParams(4, 1), 4)) == []


def test_enumerate_moves_is_canonically_ordered():
    prof = star_profile(5)
    params = GameParams(5, 1)
    moves = list(enumerate_improving_moves(prof, params, 2))
    keys = [
        (len(m.movers), m.movers, tuple((len(s), tuple(sorted(s))) for s in m.strategies))
        for m in moves
    ]
    assert keys == sorted(keys)


# ---------------------------------------------------------------------------
# run_dynamics


def test_replay_cycle_period_three():
    prof = make_cfip3_profile()
    params = GameParams(3, Fraction(1, 2))
    policy = Policy("replay", replay=tuple(cfip3_cycle_moves()))
    record = run_dynamics(prof, params, policy, max_steps=30)
    assert record.termination.kind == TerminationKind.CYCLE_DETECTED
    assert record.termination.period == 3
    assert record.termination.first_revisit == 3
    validate_path_record(record, params)


def test_replay_cycle_detected_up_to_isomorphism_after_one_step():
    """With isomorphism-aware detection the relabeling shows up immediately."""
    prof = make_cfip3_profile()
    params = GameParams(3, Fraction(1, 2))
    policy = Policy("replay", replay=tuple(cfip3_cycle_moves()))
    record = run_dynamics(prof, params, policy, max_steps=30, detect_isomorphic=True)
    assert record.termination.kind == TerminationKind.CYCLE_DETECTED
    assert record.termination.period == 1


def test_br_round_robin_reaches_complete_below_one():
    rng = random.Random(13)
    params = GameParams(5, Fraction(1, 2))
    for _ in range(10):
        prof = random_profile(5, rng, density=rng.uniform(0.1, 0.7))
        record = run_dynamics(prof, params, Policy("br"), max_steps=300)
        assert record.termination.kind == TerminationKind.REACHED_NASH
        assert graph_properties(build_graph(record.final)).is_complete
        validate_path_record(record, params)


def test_coalition_policy_terminates_n3():
    """n=3 with alpha > 1 has the coalitional finite improvement property."""
    params = GameParams(3, 2)
    for prof in all_rational_profiles(3):
        record = run_dynamics(prof, params, Policy("coalition", coalition_cap=3),
                              max_steps=200)
        assert record.termination.kind == TerminationKind.REACHED_STRONG
        assert graph_properties(build_graph(record.final)).is_star


def test_first_improvement_policy():
    prof = make_standard("path", 4, "lower-buys")
    params = GameParams(4, 1)
    record = run_dynamics(prof, params, Policy("first"), max_steps=50)
    assert record.termination.kind == TerminationKind.REACHED_NASH
    assert graph_properties(build_graph(record.final)).diameter <= 2


def test_step_cap_hit():
    prof = make_cfip3_profile()
    params = GameParams(3, Fraction(1, 2))
    policy = Policy("replay", replay=tuple(cfip3_cycle_moves()))
    record = run_dynamics(prof, params, policy, max_steps=2)
    assert record.termination.kind == TerminationKind.STEP_CAP_HIT


# ---------------------------------------------------------------------------
# potentials


def test_single_buyer_count_examples():
    assert potential_value(make_cfip3_profile(), GameParams(3, 1), "single_buyer_count") == 2
    dup = StrategyProfile.of({1}, {0}, set())
    assert potential_value(dup, GameParams(3, 1), "single_buyer_count") == 0


def test_weighted_n3_examples():
    k3 = make_standard("complete", 3, "lowest-buys")
    for alpha in (Fraction(3, 2), 2, 3):
        want = 6 + 6 * Fraction(alpha)
        assert potential_value(k3, GameParams(3, alpha), "weighted_n3") == want
    disconnected = StrategyProfile.of({1}, set(), set())
    assert potential_value(disconnected, GameParams(3, 2), "weighted_n3") is INFINITE


def test_potential_increases_along_br_paths_below_one():
    rng = random.Random(77)
    for _ in range(40):
        n = rng.randint(3, 6)
        prof = random_profile(n, rng, density=rng.uniform(0.1, 0.8))
        params = GameParams(n, Fraction(1, 2))
        record = run_dynamics(prof, params, Policy("br"), max_steps=400)
        phi = record.potentials["single_buyer_count"]
        assert all(a < b for a, b in zip(phi, phi[1:]))


def test_weighted_n3_decreases_on_all_coalitional_moves():
    """Exhaustive at n=3: every improving move strictly drops the weighted
    potential; up to alpha = 2 the drop is at least 2*alpha - 2 (tight)."""
    for alpha in (Fraction(3, 2), 2, 3):
        params = GameParams(3, alpha)
        for prof in _all_profiles_n3():
            before = potential_value(prof, params, "weighted_n3")
            for move in enumerate_improving_moves(prof, params, 3):
                after = potential_value(move.apply_to(prof), params, "weighted_n3")
                assert after < before
                if before is not INFINITE and alpha <= 2:
                    assert after <= before + 2 - 2 * Fraction(alpha)


def _all_profiles_n3():
    for m0 in range(4):
        for m1 in range(4):
            for m2 in range(4):
                yield StrategyProfile.of(
                    {j + 1 for j in range(2) if m0 >> j & 1},
                    {(0, 2)[j] for j in range(2) if m1 >> j & 1},
                    {j for j in range(2) if m2 >> j & 1},
                )


# ---------------------------------------------------------------------------
# scripts


def test_script_alpha1_examples():
    params = GameParams(4, 1)
    p4 = make_standard("path", 4, "lower-buys")
    record = script_alpha1_to_strong(p4, params)
    validate_path_record(record, params)
    g = build_graph(record.final)
    assert graph_properties(g).diameter <= 2 and complement_is_forest(g)[0]
    assert is_rational(record.final)

    star = star_profile(5)
    record = script_alpha1_to_strong(star, GameParams(5, 1))
    assert is_strong_equilibrium(record.final, GameParams(5, 1)).verdict == SEVerdict.YES

    # an already-strong start produces an empty path
    c4 = make_standard("cycle", 4, "each-buys-next")
    assert script_alpha1_to_strong(c4, params).moves == []

    with pytest.raises(WrongAlpha):
        script_alpha1_to_strong(p4, GameParams(4, 2))


def test_script_alpha1_from_disconnected_and_irrational():
    prof = StrategyProfile.of({1}, {0}, set(), set())
    params = GameParams(4, 1)
    record = script_alpha1_to_strong(prof, params)
    validate_path_record(record, params)
    res = is_strong_equilibrium(record.final, params)
    assert res.verdict == SEVerdict.YES


def test_script_alpha1_random_starts():
    rng = random.Random(101)
    for _ in range(25):
        n = rng.randint(3, 6)
        prof = random_profile(n, rng, density=rng.uniform(0.1, 0.9))
        params = GameParams(n, 1)
        record = script_alpha1_to_strong(prof, params)
        validate_path_record(record, params)
        assert is_strong_equilibrium(record.final, params).verdict == SEVerdict.YES


def test_script_tree_to_star_p5():
    """P5 at alpha=2 with forward purchases: two buy steps toward the middle
    vertex, then two drops, ending in a star there."""
    prof = make_standard("path", 5, "lower-buys")
    params = GameParams(5, 2)
    record = script_tree_to_star(prof, params)
    validate_path_record(record, params)
    buys = [m for m in record.moves if len(m.strategies[0]) > len(prof.strategies[m.movers[0]])]
    final = record.final
    props = graph_properties(build_graph(final))
    assert props.is_star and is_rational(final)
    assert build_graph(final).degree(2) == 4  # star centered at the centroid
    assert len(record.moves) == 4


def test_script_tree_to_star_inputs_checked():
    c4 = make_standard("cycle", 4, "each-buys-next")
    with pytest.raises(PreconditionViolated):
        script_tree_to_star(c4, GameParams(4, 2))  # not a tree
    p8 = make_standard("path", 8, "lower-buys")
    with pytest.raises(PreconditionViolated):
        script_tree_to_star(p8, GameParams(8, 1))  # alpha below 2
    with pytest.raises(PreconditionViolated):
        script_tree_to_star(p8, GameParams(8, 4))  # alpha at n/2


def test_script_tree_to_star_star_input_is_a_fixed_point():
    prof = star_profile(6, 0b10101)
    record = script_tree_to_star(prof, GameParams(6, 2))
    assert record.moves == []


def test_script_tree_to_star_random_trees():
    rng = random.Random(202)
    n = 8
    for alpha in (2, 3, Fraction(7, 2)):
        params = GameParams(n, alpha)
        for _ in range(10):
            prof = random_tree_profile(n, rng)
            record = script_tree_to_star(prof, params)
            validate_path_record(record, params)
            final = record.final
            assert graph_properties(build_graph(final)).is_star
            assert is_rational(final)
            pred = theory_oracle(final, params)
            assert pred.verdict == OracleVerdict.STRONG_EQUILIBRIUM


# ---------------------------------------------------------------------------
# profile-space search


def test_search_path_k4_to_cycle_se():
    params = GameParams(4, Fraction(3, 2))
    k4 = make_standard("complete", 4, "lowest-buys")
    record = search_improvement_path(k4, params, target="strong")
    assert record is not None
    validate_path_record(record, params)
    final = record.final
    props = graph_properties(build_graph(final))
    assert props.is_cycle and all(len(s) == 1 for s in final.strategies)


def test_search_path_from_star():
    params = GameParams(4, Fraction(3, 2))
    record = search_improvement_path(star_profile(4), params, target="strong")
    assert record is not None and len(record.moves) >= 1


def test_search_path_n3_reaches_complete():
    params = GameParams(3, Fraction(1, 2))
    for prof in all_rational_profiles(3):
        record = search_improvement_path(prof, params, target="strong")
        assert record is not None
        assert graph_properties(build_graph(record.final)).is_complete


def test_search_path_nash_target_unilateral():
    params = GameParams(4, 1)
    p4 = make_standard("path", 4, "lower-buys")
    record = search_improvement_path(p4, params, target="nash", coalitional=False)
    assert record is not None
    assert all(len(m.movers) == 1 for m in record.moves)
    assert graph_properties(build_graph(record.final)).diameter <= 2


def test_search_path_rejects_large_n():
    with pytest.raises(StateCapHit):
        search_improvement_path(star_profile(5), GameParams(5, 1))


def test_find_improvement_cycle_from_star():
    cyc = find_improvement_cycle(star_profile(4), GameParams(4, Fraction(3, 2)))
    assert cyc is not None
    assert cyc.termination.kind == TerminationKind.CYCLE_DETECTED
    assert cyc.termination.period >= 2
    validate_path_record(cyc, GameParams(4, Fraction(3, 2)))


def test_no_cycle_reachable_from_strong_equilibrium():
    c4 = make_standard("cycle", 4, "each-buys-next")
    assert find_improvement_cycle(c4, GameParams(4, Fraction(3, 2))) is None


# ---------------------------------------------------------------------------
# cost-table scan hook


def test_scan_for_cost_table():
    params = GameParams(3, Fraction(1, 2))
    table = [Fraction(7, 2), 3, Fraction(5, 2)]
    found = scan_for_cost_table(params, table, _all_profiles_n3(), limit=5)
    assert found and all(
        sorted(
            (c.total for c in _costs(prof, params)), reverse=True
        ) == table
        for prof in found
    )
    assert make_cfip3_profile() in found


def _costs(prof, params):
    from ncg.core import player_cost

    return [player_cost(prof, params, i) for i in range(prof.n)]
