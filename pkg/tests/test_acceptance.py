"""Acceptance criteria: one test per criterion, each printing a pass line
with its exact values and timing (run with -s to watch them live)."""

from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction

from conftest import all_rational_profiles, random_profile, random_tree_profile
from ncg.canonical import canonical_masks
from ncg.core import (
    GameParams,
    StrategyProfile,
    build_graph,
    complement_is_forest,
    graph_properties,
    is_rational,
    player_cost,
)
from ncg.constructions import (
    Example1Params,
    cfip3_cycle_moves,
    make_cfip3_profile,
    make_example1,
    make_hoffman_singleton,
    star_profile,
)
from ncg.dynamics import (
    Policy,
    TerminationKind,
    enumerate_improving_moves,
    find_improvement_cycle,
    potential_value,
    run_dynamics,
    script_alpha1_to_strong,
    script_tree_to_star,
    search_improvement_path,
    validate_path_record,
)
from ncg.equilibrium import (
    SearchBudget,
    SEVerdict,
    find_improving_coalition,
    is_strong_equilibrium,
    nash_deviation_scan,
)
from ncg.metrics import (
    enumerate_strong_equilibria,
    example1_ratio,
    strong_price_of_anarchy,
)


def _report(num: int, t0: float, budget_s: float, detail: str):
    elapsed = time.monotonic() - t0
    assert elapsed < budget_s, f"criterion {num} overran its {budget_s}s budget"
    print(f"criterion {num:2d}: PASS ({elapsed:6.1f}s)  {detail}")


def test_criterion_01_alpha_below_one_characterization():
    """SE profiles at alpha=1/2 are exactly the rational complete profiles."""
    t0 = time.monotonic()
    params3 = GameParams(3, Fraction(1, 2))
    got3 = {p.masks for p in enumerate_strong_equilibria(params3)}
    want3 = {
        p.masks
        for p in all_rational_profiles(3)
        if graph_properties(build_graph(p)).is_complete
    }
    assert got3 == want3 and len(got3) == 8

    params4 = GameParams(4, Fraction(1, 2))
    got4 = {p.masks for p in enumerate_strong_equilibria(params4)}
    want4 = {
        p.masks
        for p in all_rational_profiles(4)
        if graph_properties(build_graph(p)).is_complete
    }
    assert got4 == want4 and len(got4) == 64
    _report(1, t0, 60, "SE = rational complete: 8 of 27 (n=3), 64 of 729 (n=4)")


def test_criterion_02_alpha_one_characterization():
    """SE set at alpha=1 is exactly rational + diameter <= 2 + complement
    forest, exhaustively at n=4 and n=5 (Nash pre-filter at n=5)."""
    t0 = time.monotonic()
    counts = {}
    for n in (4, 5):
        params = GameParams(n, 1)
        got = {p.masks for p in enumerate_strong_equilibria(params)}
        want = set()
        for p in all_rational_profiles(n):
            g = build_graph(p)
            if graph_properties(g).diameter <= 2 and complement_is_forest(g)[0]:
                want.add(p.masks)
        assert got == want, f"n={n}: SE set differs from the characterization"
        counts[n] = len(got)
    _report(2, t0, 600, f"exact match; {counts[4]} SEs at n=4, {counts[5]} at n=5")


def test_criterion_03_alpha_one_spoa():
    t0 = time.monotonic()
    want = {3: Fraction(10, 9), 4: Fraction(10, 9), 5: Fraction(17, 15)}
    for n, ratio in want.items():
        report = strong_price_of_anarchy(GameParams(n, 1))
        assert report.ratio == ratio, f"n={n}: {report.ratio} != {ratio}"
        assert report.closed_form.value == ratio
    _report(3, t0, 600, "ratios 10/9, 10/9, 17/15 at n=3,4,5")


def test_criterion_04_alpha_three_halves():
    t0 = time.monotonic()
    params3 = GameParams(3, Fraction(3, 2))
    got3 = {p.masks for p in enumerate_strong_equilibria(params3)}
    want3 = {
        p.masks
        for p in all_rational_profiles(3)
        if graph_properties(build_graph(p)).is_star
    }
    assert got3 == want3 and len(got3) == 12

    params4 = GameParams(4, Fraction(3, 2))
    got4 = enumerate_strong_equilibria(params4)
    assert len(got4) == 6
    for p in got4:
        assert graph_properties(build_graph(p)).is_cycle
        assert all(len(s) == 1 for s in p.strategies)

    assert enumerate_strong_equilibria(GameParams(5, Fraction(3, 2))) == []

    assert strong_price_of_anarchy(params3).ratio == Fraction(22, 21)
    assert strong_price_of_anarchy(params4).ratio == Fraction(22, 21)
    _report(4, t0, 600,
            "SE sets: 12 3-stars, 6 directed 4-cycles, none at n=5; spoa 22/21")


def test_criterion_05_star_theorem():
    """Every rational star is a strong equilibrium for alpha >= 2, all buyer
    patterns, verified budget-complete (per relabeling class)."""
    t0 = time.monotonic()
    checked = 0
    for n in (4, 5, 6):
        for alpha in (Fraction(2), Fraction(5, 2), Fraction(10)):
            params = GameParams(n, alpha)
            classes = {}
            for mask in range(1 << (n - 1)):
                prof = star_profile(n, mask)
                key = canonical_masks(prof.masks, n)
                if key not in classes:
                    res = is_strong_equilibrium(prof, params)
                    classes[key] = res.verdict
                    checked += 1
                assert classes[key] == SEVerdict.YES, (n, alpha, mask)
    _report(5, t0, 1800, f"all patterns at n=4,5,6 x alpha=2,5/2,10 "
                         f"({checked} complete searches)")


def test_criterion_06_example1_cost_formulas():
    t0 = time.monotonic()
    for a in (4, 5, 6):
        for k in (1, 2, 3, 4):
            p = Example1Params(a, k)
            prof = make_example1(p)
            params = GameParams(p.n, 2 * p.n)
            dc = p.distance_costs()
            for i in range(p.n):
                got = player_cost(prof, params, i).distance
                assert got == dc[p.class_of(i)], (a, k, i)
    _report(6, t0, 1.0, "BFS matches the four class formulas on the 12-point grid")


def test_criterion_07_example1_deviation_resistance():
    """A=4, k=2, alpha=20: no improving coalition of size <= 2 under the
    complete per-coalition search; none of size 3 within the node budget."""
    t0 = time.monotonic()
    prof = make_example1(Example1Params(4, 2))
    params = GameParams(10, 20)
    assert find_improving_coalition(prof, params, SearchBudget(2, None, None)) is None
    assert (
        find_improving_coalition(prof, params, SearchBudget(3, None, 10**8)) is None
    )
    _report(7, t0, 7200, "no size <= 3 coalition improves on the diameter-4 tree")


def test_criterion_08_spoa_lower_bound_sequence():
    t0 = time.monotonic()
    r4 = example1_ratio(4)
    assert (r4.tree_cost, r4.optimum_cost) == (1424, 1190)
    r10 = example1_ratio(10)
    assert (r10.tree_cost, r10.optimum_cost) == (55748, 41006)
    prev = None
    for x in range(4, 21):
        r = example1_ratio(x)
        assert r.bounds_hold, f"x={x}"
        if prev is not None:
            assert r.ratio > prev
        prev = r.ratio
    _report(8, t0, 17.0, "1424/1190 at x=4, 55748/41006 at x=10; "
                         "increasing, bounds hold through x=20")


def test_criterion_09_hoffman_singleton():
    t0 = time.monotonic()
    prof = make_hoffman_singleton()
    g = build_graph(prof)
    for u, v in itertools.combinations(range(50), 2):
        common = len(g.adjacency[u] & g.adjacency[v])
        assert common == (0 if v in g.adjacency[u] else 1)
    params5 = GameParams(50, 5)
    assert all(player_cost(prof, params5, i).distance == 91 for i in range(50))

    rep = nash_deviation_scan(prof, params5, weak=True)
    assert rep.witness is None
    caps = {len(prof.strategies[i]): c for i, c in rep.caps.items()}
    assert caps == {4: 4, 3: 3}

    rep2 = nash_deviation_scan(prof, GameParams(50, Fraction(26, 3)), weak=True)
    assert rep2.witness is not None
    assert rep2.witness.new_costs == rep2.witness.old_costs
    evaluations = rep.evaluations + rep2.evaluations
    _report(9, t0, 1800, f"strict Nash at alpha=5; cost-equal deviation at 26/3 "
                         f"({evaluations} cost evaluations)")


def test_criterion_10_dynamics_potentials():
    t0 = time.monotonic()
    rng = random.Random(2024)
    paths = 0
    while paths < 500:
        n = rng.randint(3, 6)
        prof = random_profile(n, rng, density=rng.uniform(0.05, 0.9))
        params = GameParams(n, Fraction(1, 2))
        record = run_dynamics(prof, params, Policy("br"), max_steps=500,
                              track_potentials=("single_buyer_count",))
        assert record.termination.kind == TerminationKind.REACHED_NASH
        phi = record.potentials["single_buyer_count"]
        assert all(a < b for a, b in zip(phi, phi[1:]))
        paths += 1

    moves_checked = 0
    for alpha in (Fraction(3, 2), Fraction(2), Fraction(3)):
        params = GameParams(3, alpha)
        for digits in itertools.product(range(4), repeat=3):
            strat = []
            for i, d in enumerate(digits):
                others = [j for j in range(3) if j != i]
                strat.append(frozenset(others[b] for b in range(2) if d >> b & 1))
            prof = StrategyProfile(tuple(strat))
            before = potential_value(prof, params, "weighted_n3")
            for move in enumerate_improving_moves(prof, params, 3):
                after = potential_value(move.apply_to(prof), params, "weighted_n3")
                assert after < before
                moves_checked += 1
    _report(10, t0, 300, f"500 increasing best-response paths; weighted "
                         f"potential decreased on {moves_checked} moves")


def test_criterion_11_improvement_cycles():
    t0 = time.monotonic()
    prof = make_cfip3_profile()
    params = GameParams(3, Fraction(1, 2))
    policy = Policy("replay", replay=tuple(cfip3_cycle_moves()))
    record = run_dynamics(prof, params, policy, max_steps=10)
    assert record.termination.kind == TerminationKind.CYCLE_DETECTED
    assert record.termination.period == 3
    validate_path_record(record, params)

    cyc = find_improvement_cycle(star_profile(4), GameParams(4, Fraction(3, 2)))
    assert cyc is not None
    assert cyc.termination.kind == TerminationKind.CYCLE_DETECTED
    validate_path_record(cyc, GameParams(4, Fraction(3, 2)))
    _report(11, t0, 300, f"period-3 coalition cycle at alpha=1/2; "
                         f"period-{cyc.termination.period} cycle from the 4-star")


def test_criterion_12_scripted_convergence():
    t0 = time.monotonic()
    rng = random.Random(7)
    runs = 0
    while runs < 100:
        n = rng.randint(3, 6)
        prof = random_profile(n, rng, density=rng.uniform(0.15, 0.9))
        if not graph_properties(build_graph(prof)).is_connected:
            continue
        params = GameParams(n, 1)
        record = script_alpha1_to_strong(prof, params)
        validate_path_record(record, params)
        res = is_strong_equilibrium(record.final, params)
        assert res.verdict == SEVerdict.YES
        runs += 1

    tree_runs = 0
    for alpha in (Fraction(2), Fraction(3), Fraction(7, 2)):
        params = GameParams(8, alpha)
        for _ in range(34):
            prof = random_tree_profile(8, rng)
            record = script_tree_to_star(prof, params)
            validate_path_record(record, params)
            final = record.final
            assert graph_properties(build_graph(final)).is_star
            assert is_rational(final)
            tree_runs += 1
    _report(12, t0, 600, f"100 connected starts reached verified SEs; "
                         f"{tree_runs} trees reached rational stars")


def test_criterion_13_n4_coalitional_weak_acyclicity():
    """A coalitional improvement path to a strong equilibrium exists from
    every rational profile at n=4, alpha=3/2."""
    t0 = time.monotonic()
    params = GameParams(4, Fraction(3, 2))
    starts = 0
    for prof in all_rational_profiles(4):
        record = search_improvement_path(prof, params, target="strong")
        assert record is not None, prof.strategies
        assert record.termination.kind == TerminationKind.REACHED_STRONG
        if record.moves:
            validate_path_record(record, params)
        final = record.final
        res = is_strong_equilibrium(final, params)
        assert res.verdict == SEVerdict.YES
        starts += 1
    assert starts == 729
    _report(13, t0, 600, "coalitional path to SE from all 729 rational profiles")
