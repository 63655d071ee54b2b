"""Social optima, exhaustive strong-equilibrium enumeration, strong price of
anarchy, and the lower-bound ratio sequence for large alpha."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import equilibrium
from .canonical import canonical_masks
from .constructions import Example1Params, make_example1, make_standard
from .core import (
    Cost,
    GameParams,
    StrategyProfile,
    profile_from_masks,
    social_cost,
)
from .equilibrium import SEVerdict
from .parallel import run_partitioned


class TooLarge(ValueError):
    pass


# ---------------------------------------------------------------------------
# social optimum


def optimum_complete_cost(params: GameParams) -> Fraction:
    n = params.n
    return params.alpha * (n * (n - 1) // 2) + n * (n - 1)


def optimum_star_cost(params: GameParams) -> Fraction:
    n = params.n
    return params.alpha * (n - 1) + 2 * (n - 1) ** 2


def social_optimum_cost(
    params: GameParams, mode: str = "closed_form"
) -> tuple[Fraction, StrategyProfile]:
    """Minimum social cost and a witness profile.

    closed_form: complete graph below alpha = 2, star above (they tie exactly
    at 2; both are evaluated and the cheaper kept).  brute_force: minimum over
    every undirected graph, n <= 6 (the social cost of a rational profile
    depends only on its graph), witness oriented lowest-buys.
    """
    n = params.n
    if mode == "closed_form":
        complete = optimum_complete_cost(params)
        star = optimum_star_cost(params)
        if complete <= star:
            return complete, make_standard("complete", n, "lowest-buys")
        return star, make_standard("star", n, "leaves-buy")
    if mode != "brute_force":
        raise ValueError("mode must be closed_form or brute_force")
    if n > 6:
        raise TooLarge("brute force optimum is limited to n <= 6")
    pairs = list(itertools.combinations(range(n), 2))
    best = None
    best_profile = None
    for g in range(1 << len(pairs)):
        masks = [0] * n
        for t, (i, j) in enumerate(pairs):
            if g >> t & 1:
                masks[i] |= 1 << j
        prof = profile_from_masks(masks)
        cost = social_cost(prof, params)
        if not isinstance(cost, Fraction):
            continue
        if best is None or cost < best:
            best = cost
            best_profile = prof
    assert best is not None
    return best, best_profile


# ---------------------------------------------------------------------------
# exhaustive SE enumeration


def _pair_list(n: int):
    return list(itertools.combinations(range(n), 2))


def masks_from_edge_digits(digits, pairs, n) -> list[int]:
    masks = [0] * n
    for d, (i, j) in zip(digits, pairs):
        if d == 1:
            masks[i] |= 1 << j
        elif d == 2:
            masks[j] |= 1 << i
    return masks


def _rational_profile_count(n: int) -> int:
    return 3 ** (n * (n - 1) // 2)


def _classify_range(args) -> list[tuple[tuple[int, ...], bool]]:
    """Worker: SE verdict per canonical class met in [lo, hi)."""
    n, p, q, lo, hi = args
    params = GameParams(n, Fraction(p, q))
    pairs = _pair_list(n)
    npairs = len(pairs)
    verdicts: dict[tuple[int, ...], bool] = {}
    for idx in range(lo, hi):
        digits = []
        x = idx
        for _ in range(npairs):
            digits.append(x % 3)
            x //= 3
        masks = masks_from_edge_digits(digits, pairs, n)
        key = canonical_masks(masks, n)
        if key in verdicts:
            continue
        verdicts[key] = _is_se_class(key, params)
    return sorted(verdicts.items())


def _is_se_class(masks, params) -> bool:
    prof = profile_from_masks(masks)
    if params.n >= 5:
        if not equilibrium.is_nash(prof, params).is_nash:
            return False
    res = equilibrium.is_strong_equilibrium(prof, params)
    assert res.verdict != SEVerdict.INCONCLUSIVE
    return res.verdict == SEVerdict.YES


def enumerate_strong_equilibria(
    params: GameParams, dedup: bool = False, threads: int = 1
) -> list[StrategyProfile]:
    """Every rational profile (absent / lower buys / higher buys per pair)
    that passes the budget-complete strong-equilibrium check; n <= 5.

    Verdicts are computed once per canonical relabeling class (equilibrium
    status is invariant under player permutation) and expanded back to
    labeled profiles in enumeration order.  At n = 5 classes are pre-filtered
    by the Nash check (sound: strong equilibria are Nash).
    """
    n = params.n
    if n > 5:
        raise TooLarge("exhaustive enumeration is limited to n <= 5")
    p, q = params.alpha_pq
    total = _rational_profile_count(n)
    chunks = run_partitioned(_classify_range, n, p, q, total, threads)
    verdicts: dict[tuple[int, ...], bool] = {}
    for chunk in chunks:
        verdicts.update(chunk)

    pairs = _pair_list(n)
    out = []
    seen_classes = set()
    for digits in itertools.product((0, 1, 2), repeat=len(pairs)):
        masks = masks_from_edge_digits(digits, pairs, n)
        key = canonical_masks(masks, n)
        if not verdicts[key]:
            continue
        if dedup:
            if key in seen_classes:
                continue
            seen_classes.add(key)
        out.append(profile_from_masks(masks))
    return out


# ---------------------------------------------------------------------------
# strong price of anarchy


@dataclass(frozen=True)
class SpoaReport:
    params: GameParams
    optimum_cost: Fraction
    worst_se_cost: Fraction | None
    ratio: Fraction | None
    se_count: int
    closed_form: "SpoaClosedForm"
    no_strong_equilibrium: bool

    def to_json_dict(self) -> dict:
        return {
            "n": self.params.n,
            "alpha": str(self.params.alpha),
            "optimum_cost": str(self.optimum_cost),
            "worst_se_cost": None if self.worst_se_cost is None else str(self.worst_se_cost),
            "ratio": None if self.ratio is None else str(self.ratio),
            "se_count": self.se_count,
            "no_strong_equilibrium": self.no_strong_equilibrium,
            "closed_form": self.closed_form.to_json_dict(),
        }


@dataclass(frozen=True)
class SpoaClosedForm:
    """Piecewise prediction: an exact value, an [lo, hi] interval for the
    uncharacterized large-alpha regime, or no-strong-equilibrium."""

    value: Fraction | None
    bounds: tuple[Fraction, Fraction] | None
    no_se: bool
    tag: str

    def to_json_dict(self) -> dict:
        return {
            "value": None if self.value is None else str(self.value),
            "bounds": None if self.bounds is None else [str(b) for b in self.bounds],
            "no_strong_equilibrium": self.no_se,
            "tag": self.tag,
        }


def spoa_closed_form(params: GameParams) -> SpoaClosedForm:
    n = params.n
    alpha = params.alpha
    if alpha < 1:
        return SpoaClosedForm(Fraction(1), None, False, "alpha-below-1")
    if alpha == 1:
        if n <= 4:
            return SpoaClosedForm(Fraction(10, 9), None, False, "alpha-1-small-n")
        return SpoaClosedForm(
            Fraction(3 * n + 2, 3 * n), None, False, "alpha-1-general"
        )
    if alpha < 2:
        if n == 3:
            return SpoaClosedForm(
                (2 * alpha + 8) / (3 * alpha + 6), None, False, "alpha-1-2-n3"
            )
        if n == 4:
            return SpoaClosedForm(
                (4 * alpha + 16) / (6 * alpha + 12), None, False, "alpha-1-2-n4"
            )
        return SpoaClosedForm(None, None, True, "alpha-1-2-no-se")
    return SpoaClosedForm(
        None, (Fraction(3, 2), Fraction(2)), False, "alpha-2plus-interval"
    )


def strong_price_of_anarchy(params: GameParams, threads: int = 1) -> SpoaReport:
    """Exact ratio of the worst enumerated strong equilibrium to the optimum.

    Reports no_strong_equilibrium instead of crashing when the SE set is
    empty.  The labeled SE count is included; the worst cost is taken over
    canonical classes (cost is relabeling-invariant).
    """
    labeled = enumerate_strong_equilibria(params, dedup=False, threads=threads)
    optimum, _ = social_optimum_cost(params)
    if not labeled:
        return SpoaReport(
            params, optimum, None, None, 0, spoa_closed_form(params), True
        )
    classes = {canonical_masks(prof.masks, params.n) for prof in labeled}
    worst = max(
        social_cost(profile_from_masks(masks), params) for masks in classes
    )
    assert isinstance(worst, Fraction)
    return SpoaReport(
        params,
        optimum,
        worst,
        worst / optimum,
        len(labeled),
        spoa_closed_form(params),
        False,
    )


# ---------------------------------------------------------------------------
# the 3/2 lower-bound sequence


@dataclass(frozen=True)
class Example1Ratio:
    x: int
    n: int
    alpha: Fraction
    tree_cost: Fraction
    optimum_cost: Fraction
    ratio: Fraction
    tree_cost_lower_bound: int  # 6x^4 - 12x^3 + 22x^2 - 12x + 8
    optimum_upper_bound: int  # 4x^4 + 12x^2 + 8
    bounds_hold: bool


def example1_ratio(x: int) -> Example1Ratio:
    """Exact costs of the diameter-4 tree with A = k = x at alpha = 2n.

    No equilibrium verification happens here (infeasible at n = x^2 + 2);
    the deviation resistance of the family is exercised separately at small
    parameters under a bounded budget.
    """
    if x < 4:
        raise ValueError("need x >= 4")
    p = Example1Params(x, x)
    n = p.n
    params = GameParams(n, 2 * n)
    dc = p.distance_costs()
    class_sizes = {
        "root": 1,
        "middle": x - 1,
        "l1": (x - 1) * (x - 1),
        "l2": x + 1,
    }
    distance_total = sum(dc[c] * class_sizes[c] for c in class_sizes)
    building_total = params.alpha * (n - 1)
    tree_cost = building_total + distance_total

    prof = make_example1(p)
    check = social_cost(prof, params)
    assert check == tree_cost, "class formulas disagree with BFS"

    optimum = optimum_star_cost(params)
    lower = 6 * x**4 - 12 * x**3 + 22 * x**2 - 12 * x + 8
    upper = 4 * x**4 + 12 * x**2 + 8
    return Example1Ratio(
        x=x,
        n=n,
        alpha=params.alpha,
        tree_cost=tree_cost,
        optimum_cost=optimum,
        ratio=tree_cost / optimum,
        tree_cost_lower_bound=lower,
        optimum_upper_bound=upper,
        bounds_hold=tree_cost >= lower and optimum <= upper,
    )
