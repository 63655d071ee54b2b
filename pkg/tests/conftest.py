from __future__ import annotations

import itertools
import random

from ncg.core import StrategyProfile


def random_profile(n: int, rng: random.Random, density: float = 0.35) -> StrategyProfile:
    strat = []
    for i in range(n):
        strat.append(
            frozenset(j for j in range(n) if j != i and rng.random() < density)
        )
    return StrategyProfile(tuple(strat))


def all_rational_profiles(n: int):
    """Every rational profile: per vertex pair, absent / lower buys / higher buys."""
    pairs = list(itertools.combinations(range(n), 2))
    for digits in itertools.product((0, 1, 2), repeat=len(pairs)):
        strat = [set() for _ in range(n)]
        for d, (i, j) in zip(digits, pairs):
            if d == 1:
                strat[i].add(j)
            elif d == 2:
                strat[j].add(i)
        yield StrategyProfile(tuple(frozenset(s) for s in strat))


def random_tree_profile(n: int, rng: random.Random) -> StrategyProfile:
    order = list(range(n))
    rng.shuffle(order)
    strat = [set() for _ in range(n)]
    for t in range(1, n):
        child, parent = order[t], order[rng.randrange(t)]
        if rng.random() < 0.5:
            strat[child].add(parent)
        else:
            strat[parent].add(child)
    return StrategyProfile(tuple(frozenset(s) for s in strat))
