"""Nash / strong equilibrium verification and the characterization oracle.

Verification is search-based: a pruned exhaustive sweep over coalitions and
joint replacement strategies, where every prune is a consequence of the basic
cost bound, so "no witness found" under an uncut sweep is a proof.  The
oracle predicts strong-equilibrium status from structural tests alone and is
cross-validated against the search in the test suite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from . import _engine, core
from ._engine import SearchInfeasible
from .core import (
    GameParams,
    Infinity,
    NEG_INFINITE,
    StrategyProfile,
    build_graph,
    complement_is_forest,
    graph_properties,
    is_rational,
    profile_from_masks,
)

Delta = Fraction | Infinity


class BudgetExhausted(RuntimeError):
    """The node budget interrupted the sweep before it could finish."""


@dataclass(frozen=True)
class SearchBudget:
    """Effort limits for the coalition-deviation search.

    max_strategy_cardinality_bonus caps each member's purchases at her current
    count plus the bonus; None lifts the cap.  node_cap bounds the number of
    candidate assignments visited.
    """

    max_coalition_size: int
    max_strategy_cardinality_bonus: int | None = None
    node_cap: int | None = None

    def __post_init__(self):
        if self.max_coalition_size < 0:
            raise ValueError("max_coalition_size must be >= 0")
        if (
            self.max_strategy_cardinality_bonus is not None
            and self.max_strategy_cardinality_bonus < 0
        ):
            raise ValueError("cardinality bonus must be >= 0")
        if self.node_cap is not None and self.node_cap <= 0:
            raise ValueError("node_cap must be > 0")

    @staticmethod
    def default() -> "SearchBudget":
        return SearchBudget(3, None, 10**8)

    @staticmethod
    def unbounded(n: int) -> "SearchBudget":
        return SearchBudget(n, None, None)


@dataclass(frozen=True)
class DeviationWitness:
    """A coalition, its joint replacement strategies, and exact cost changes."""

    coalition: tuple[int, ...]
    replacement: tuple[frozenset[int], ...]
    deltas: tuple[Delta, ...]

    def apply_to(self, profile: StrategyProfile) -> StrategyProfile:
        return profile.apply(self.coalition, self.replacement)


def _to_witness(w: _engine.EngineWitness, q: int) -> DeviationWitness:
    deltas = []
    for old, new in zip(w.old_costs, w.new_costs):
        old_inf = old >= w.big
        new_inf = new >= w.big
        if old_inf and new_inf:
            deltas.append(Fraction(0))
        elif old_inf:
            deltas.append(NEG_INFINITE)
        else:
            deltas.append(Fraction(new - old, q))
    return DeviationWitness(
        coalition=w.members,
        replacement=tuple(frozenset(_engine.bits_of(m)) for m in w.new_masks),
        deltas=tuple(deltas),
    )


def recompute_deltas(
    profile: StrategyProfile, params: GameParams, witness: DeviationWitness
) -> tuple[Delta, ...]:
    """Cost changes of the witness members, from scratch; must equal deltas."""
    after = witness.apply_to(profile)
    out = []
    for i in witness.coalition:
        old = core.player_cost(profile, params, i).total
        new = core.player_cost(after, params, i).total
        if isinstance(old, Infinity):
            out.append(Fraction(0) if isinstance(new, Infinity) else NEG_INFINITE)
        else:
            out.append(new - old)
    return tuple(out)


# ---------------------------------------------------------------------------
# best response


def best_response(
    profile: StrategyProfile, params: GameParams, i: int
) -> list[frozenset[int]]:
    """All cost-minimizing strategies for player i against the others.

    Enumerates by cardinality with the basic-bound prune (candidates whose
    distance floor already exceeds the incumbent minimum are skipped, which
    can never drop a minimizer).  For 0 < alpha < 1 the closed form
    (s_i + non-neighbors) - (players already buying toward i) is computed
    as well and asserted to be the unique minimizer.
    """
    n = params.n
    if profile.n != n:
        raise ValueError("profile size does not match params.n")
    p, q = params.alpha_pq
    masks = list(profile.masks)
    ev = _engine.GenericEvaluator(masks, n, p, q)
    others = [j for j in range(n) if j != i]
    in_cnt = sum(1 for j in range(n) if masks[j] >> i & 1)

    best_cost = None
    best_masks: list[int] = []
    import itertools

    for k in range(n):
        lb1 = q * (n - 1) + p * k
        lb2 = q * (2 * n - 2 - min(n - 1, k + in_cnt)) + p * k
        if best_cost is not None and max(lb1, lb2) > best_cost and k + in_cnt >= n - 1:
            break
        for combo in itertools.combinations(others, k):
            m = 0
            for j in combo:
                m |= 1 << j
            old = ev.assign(i, m)
            cost = ev.leaf_costs([i])[0]
            ev.unassign(i, old)
            if best_cost is None or cost < best_cost:
                best_cost = cost
                best_masks = [m]
            elif cost == best_cost:
                best_masks.append(m)

    result = [frozenset(_engine.bits_of(m)) for m in best_masks]
    if 0 < params.alpha < 1:
        graph = build_graph(profile)
        non_nbrs = frozenset(
            j for j in range(n) if j != i and j not in graph.adjacency[i]
        )
        buyers_to_i = frozenset(j for j in range(n) if i in profile.strategies[j])
        closed = (profile.strategies[i] | non_nbrs) - buyers_to_i
        assert result == [closed], (
            f"closed-form best response {sorted(closed)} vs enumerated "
            f"{[sorted(r) for r in result]}"
        )
    return result


# ---------------------------------------------------------------------------
# Nash


@dataclass(frozen=True)
class NashResult:
    is_nash: bool
    witness: DeviationWitness | None
    evaluations: int


def is_nash(
    profile: StrategyProfile, params: GameParams, strict: bool = False
) -> NashResult:
    """No unilateral deviation strictly improves (strict mode: none weakly
    improves).  The witness, when present, is the canonically least improving
    (or cost-equal) strategy."""
    n = params.n
    p, q = params.alpha_pq
    masks = profile.masks
    if n > 12:
        report = _engine.unilateral_scan(masks, n, p, q, weak=strict)
        w = None if report.witness is None else _to_witness(report.witness, q)
        return NashResult(w is None, w, report.evaluations)
    search = _engine.DeviationSearch(
        masks, n, p, q, mode="weak-each" if strict else "strict",
        min_size=1, max_size=1,
    )
    out = search.run()
    w = None if out.witness is None else _to_witness(out.witness, q)
    return NashResult(w is None, w, out.nodes)


def nash_deviation_scan(
    profile: StrategyProfile, params: GameParams, weak: bool
) -> _engine.ScanReport:
    """Bulk unilateral scan; exposes evaluation counts and per-player caps."""
    p, q = params.alpha_pq
    return _engine.unilateral_scan(profile.masks, params.n, p, q, weak=weak)


# ---------------------------------------------------------------------------
# coalition search


def find_improving_coalition(
    profile: StrategyProfile,
    params: GameParams,
    budget: SearchBudget | None = None,
    strict_strong_mode: bool = False,
    *,
    seed: bool = True,
    use_partial_bounds: bool = True,
    witness_hook=None,
) -> DeviationWitness | None:
    """Canonically least improving coalition deviation within budget, if any.

    With alpha < 2 and a cycle in the complement graph, the cycle-buying
    deviation is emitted first (after verifying its deltas) before any
    general search.  Raises BudgetExhausted when the node cap interrupts the
    sweep without a witness; a plain None means the budgeted space holds no
    witness.
    """
    out, _ = _coalition_search(
        profile,
        params,
        budget or SearchBudget.default(),
        strict_strong_mode,
        seed=seed,
        use_partial_bounds=use_partial_bounds,
        witness_hook=witness_hook,
    )
    if out.witness is None and out.node_capped:
        raise BudgetExhausted(f"node cap hit after {out.nodes} nodes")
    p, q = params.alpha_pq
    return None if out.witness is None else _to_witness(out.witness, q)


def _coalition_search(
    profile,
    params,
    budget,
    weak,
    *,
    seed=True,
    use_partial_bounds=True,
    witness_hook=None,
):
    n = params.n
    p, q = params.alpha_pq
    masks = profile.masks
    if seed and params.alpha < 2:
        forest, cycle = complement_is_forest(build_graph(profile))
        if not forest:
            w = _engine.cycle_buy_witness(masks, n, p, q, cycle)
            if w is not None:
                if witness_hook is not None:
                    witness_hook(w)
                return _engine.SearchOutcome(w, 0, False, False), True
    search = _engine.DeviationSearch(
        masks,
        n,
        p,
        q,
        mode="weak-any" if weak else "strict",
        max_size=budget.max_coalition_size,
        cardinality_bonus=budget.max_strategy_cardinality_bonus,
        node_cap=budget.node_cap,
        use_partial_bounds=use_partial_bounds,
        witness_hook=witness_hook,
    )
    return search.run(), False


class SEVerdict(enum.Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class StrongResult:
    verdict: SEVerdict
    witness: DeviationWitness | None
    nodes_explored: int
    budget_used: SearchBudget

    def to_json_dict(self) -> dict:
        out = {
            "verdict": self.verdict.value,
            "budget_used": {
                "max_coalition_size": self.budget_used.max_coalition_size,
                "max_strategy_cardinality_bonus": self.budget_used.max_strategy_cardinality_bonus,
                "node_cap": self.budget_used.node_cap,
            },
            "nodes_explored": self.nodes_explored,
        }
        if self.witness is not None:
            out["witness"] = {
                "coalition": [i + 1 for i in self.witness.coalition],
                "replacement": [
                    sorted(j + 1 for j in s) for s in self.witness.replacement
                ],
                "deltas": [str(d) for d in self.witness.deltas],
            }
        return out


def is_strong_equilibrium(
    profile: StrategyProfile,
    params: GameParams,
    budget: SearchBudget | None = None,
    strict_strong_mode: bool = False,
    *,
    witness_hook=None,
) -> StrongResult:
    """Yes only under a provably complete sweep (coalitions up to n, full
    strategy spaces modulo the sound cardinality prune); Inconclusive when a
    budget limit cut the sweep short of that."""
    budget = budget or SearchBudget.unbounded(params.n)
    out, _ = _coalition_search(
        profile, params, budget, strict_strong_mode, witness_hook=witness_hook
    )
    p, q = params.alpha_pq
    if out.witness is not None:
        return StrongResult(SEVerdict.NO, _to_witness(out.witness, q), out.nodes, budget)
    if out.complete:
        return StrongResult(SEVerdict.YES, None, out.nodes, budget)
    return StrongResult(SEVerdict.INCONCLUSIVE, None, out.nodes, budget)


# ---------------------------------------------------------------------------
# necessary conditions


@dataclass(frozen=True)
class ConditionViolation:
    condition: str
    detail: str
    witness: DeviationWitness | None = None
    vertices: tuple[int, ...] | None = None


def necessary_conditions(
    profile: StrategyProfile, params: GameParams
) -> list[ConditionViolation]:
    """Structural requirements any strong equilibrium must meet at this alpha;
    each violation carries a constructive witness where one exists."""
    violations: list[ConditionViolation] = []
    n = params.n
    alpha = params.alpha
    p, q = params.alpha_pq

    if alpha > 0 and not is_rational(profile):
        pair = next(
            (i, j)
            for i in range(n)
            for j in profile.strategies[i]
            if i in profile.strategies[j] and i < j
        )
        violations.append(
            ConditionViolation(
                "rational",
                f"edge {{{pair[0]}, {pair[1]}}} is bought by both endpoints",
                vertices=pair,
            )
        )

    nash = is_nash(profile, params)
    if not nash.is_nash:
        violations.append(
            ConditionViolation(
                "nash", "a unilateral deviation strictly improves", nash.witness
            )
        )

    graph = build_graph(profile)
    if alpha < 2:
        forest, cycle = complement_is_forest(graph)
        if not forest:
            w = _engine.cycle_buy_witness(profile.masks, n, p, q, cycle)
            violations.append(
                ConditionViolation(
                    "complement-forest",
                    f"complement contains the cycle {cycle}",
                    None if w is None else _to_witness(w, q),
                    vertices=tuple(cycle),
                )
            )

    if 1 < alpha < 2 and n >= 5:
        tri = _find_triangle(graph)
        if tri is not None:
            violations.append(
                ConditionViolation(
                    "triangle-free",
                    f"graph contains the triangle {tri}",
                    vertices=tri,
                )
            )

    if alpha == 1:
        props = graph_properties(graph)
        if props.diameter > 2:
            violations.append(
                ConditionViolation(
                    "diameter",
                    f"diameter {props.diameter} exceeds 2",
                    _diameter_witness(profile, params, graph),
                )
            )
    return violations


def _find_triangle(graph) -> tuple[int, int, int] | None:
    masks = graph.masks
    for i in range(graph.n):
        for j in _engine.bits_of(masks[i]):
            if j <= i:
                continue
            both = masks[i] & masks[j]
            for k in _engine.bits_of(both):
                if k > j:
                    return (i, j, k)
    return None


def _diameter_witness(profile, params, graph) -> DeviationWitness | None:
    # A pair at distance >= 3: buying that edge trades +alpha for >= 2 distance.
    for i in range(graph.n):
        dist = core.shortest_path_distances(graph, i)
        for j in range(graph.n):
            if dist[j] > 2:
                w = DeviationWitness(
                    (i,), (profile.strategies[i] | {j},), (Fraction(0),)
                )
                deltas = recompute_deltas(profile, params, w)
                return DeviationWitness((i,), w.replacement, deltas)
    return None


# ---------------------------------------------------------------------------
# theory oracle


class OracleVerdict(enum.Enum):
    STRONG_EQUILIBRIUM = "strong-equilibrium"
    NOT_STRONG_EQUILIBRIUM = "not-strong-equilibrium"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class OraclePrediction:
    verdict: OracleVerdict
    reason: str


def theory_oracle(profile: StrategyProfile, params: GameParams) -> OraclePrediction:
    """Strong-equilibrium status from the characterization results alone.

    Decides every alpha < 2; for alpha >= 2 it recognizes rational stars and
    valid diameter-4 tree-family profiles (alpha >= 2n) and says Unknown
    otherwise.  The search, not this oracle, is the ground truth.
    """
    n = params.n
    alpha = params.alpha
    graph = build_graph(profile)
    props = graph_properties(graph)
    rational = is_rational(profile)
    se = OracleVerdict.STRONG_EQUILIBRIUM
    not_se = OracleVerdict.NOT_STRONG_EQUILIBRIUM

    if alpha == 0:
        # Edges are free, so every player sits at the distance floor exactly
        # when the graph is complete; rationality is irrelevant.
        ok = props.is_complete
        return OraclePrediction(se if ok else not_se, "free-edges-complete")
    if alpha < 1:
        ok = rational and props.is_complete
        return OraclePrediction(se if ok else not_se, "alpha-below-1-complete")
    if alpha == 1:
        forest, _ = complement_is_forest(graph)
        ok = rational and props.diameter <= 2 and forest
        return OraclePrediction(
            se if ok else not_se, "alpha-1-diameter-2-complement-forest"
        )
    if alpha < 2:
        if n == 3:
            ok = rational and props.is_star
            return OraclePrediction(se if ok else not_se, "alpha-1-2-n3-star")
        if n == 4:
            ok = (
                rational
                and props.is_cycle
                and all(len(s) == 1 for s in profile.strategies)
            )
            return OraclePrediction(se if ok else not_se, "alpha-1-2-n4-directed-cycle")
        return OraclePrediction(not_se, "alpha-1-2-n5plus-nonexistence")
    # alpha >= 2
    if not rational:
        return OraclePrediction(not_se, "irrational-never-stable")
    if props.is_star:
        return OraclePrediction(se, "star-theorem")
    ex1 = recognize_tree_family(profile)
    if ex1 is not None and alpha >= 2 * n:
        return OraclePrediction(se, "diameter-4-tree-family")
    return OraclePrediction(OracleVerdict.UNKNOWN, "outside-characterized-region")


def recognize_tree_family(profile: StrategyProfile) -> tuple[int, int] | None:
    """Detect the diameter-4 tree family structurally; returns (A, k) or None.

    Layout: a root R buying edges to k+1 leaves; A-1 middle players each
    buying an edge to R and to k-1 private leaves; A >= 4, n = A*k + 2.
    Any labeling is accepted.
    """
    n = profile.n
    graph = build_graph(profile)
    props = graph_properties(graph)
    if not props.is_tree or not is_rational(profile):
        return None
    for root in range(n):
        got = _match_tree_family(profile, graph, root)
        if got is not None:
            return got
    return None


def _match_tree_family(profile, graph, root) -> tuple[int, int] | None:
    n = profile.n
    nbrs = graph.adjacency[root]
    bought = profile.strategies[root]
    # Root buys exactly the leaves in L2 and nothing else.
    l2 = frozenset(j for j in bought if graph.degree(j) == 1)
    if l2 != bought:
        return None
    k = len(l2) - 1
    if k < 1:
        return None
    middles = nbrs - l2
    a = len(middles) + 1
    if a < 4 or a * k + 2 != n:
        return None
    seen_leaves = set(l2)
    for m in middles:
        if root not in profile.strategies[m]:
            return None
        own = profile.strategies[m] - {root}
        if len(own) != k - 1:
            return None
        for leaf in own:
            if graph.degree(leaf) != 1 or leaf in seen_leaves:
                return None
            seen_leaves.add(leaf)
        if graph.adjacency[m] != own | {root}:
            return None
    if len(seen_leaves) + len(middles) + 1 != n:
        return None
    return a, k
