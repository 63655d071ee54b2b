"""Improvement dynamics: move enumeration, policy-driven runs with cycle
detection, potential tracking, scripted convergence procedures, and
profile-space path search."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _engine, core, equilibrium
from .canonical import canonical_key_refined
from .core import (
    Cost,
    GameParams,
    INFINITE,
    Infinity,
    StrategyProfile,
    build_graph,
    complement_is_forest,
    centroid,
    graph_properties,
    is_rational,
    profile_from_masks,
)
from .equilibrium import DeviationWitness, SearchBudget

Delta = Fraction | Infinity


class WrongAlpha(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


class ScriptInvariantError(AssertionError):
    """A scripted step failed to strictly improve its mover; the parameters
    are outside the procedure's valid range."""


class StateCapHit(RuntimeError):
    pass


class InvalidReplayMove(ValueError):
    pass


@dataclass(frozen=True)
class Move:
    """A joint strategy change where every mover strictly improves."""

    movers: tuple[int, ...]
    strategies: tuple[frozenset[int], ...]
    deltas: tuple[Delta, ...]

    def apply_to(self, profile: StrategyProfile) -> StrategyProfile:
        return profile.apply(self.movers, self.strategies)


class TerminationKind(enum.Enum):
    REACHED_NASH = "reached-nash"
    REACHED_STRONG = "reached-strong"
    CYCLE_DETECTED = "cycle-detected"
    STEP_CAP_HIT = "step-cap-hit"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    period: int | None = None
    first_revisit: int | None = None


POTENTIAL_KINDS = ("single_buyer_count", "weighted_n3")


@dataclass
class PathRecord:
    start: StrategyProfile
    moves: list[Move]
    termination: Termination
    potentials: dict[str, list] = field(default_factory=dict)

    @property
    def final(self) -> StrategyProfile:
        prof = self.start
        for m in self.moves:
            prof = m.apply_to(prof)
        return prof

    def states(self) -> list[StrategyProfile]:
        out = [self.start]
        for m in self.moves:
            out.append(m.apply_to(out[-1]))
        return out


def validate_path_record(record: PathRecord, params: GameParams) -> None:
    """Recompute every step's deltas from scratch; raises on any mismatch."""
    prof = record.start
    for t, move in enumerate(record.moves):
        w = DeviationWitness(move.movers, move.strategies, move.deltas)
        fresh = equilibrium.recompute_deltas(prof, params, w)
        if fresh != move.deltas:
            raise AssertionError(
                f"step {t}: stored deltas {move.deltas} != recomputed {fresh}"
            )
        if not all(d < 0 for d in fresh):
            raise AssertionError(f"step {t} is not strictly improving: {fresh}")
        prof = move.apply_to(prof)


@dataclass(frozen=True)
class Policy:
    """Move-selection rule; deterministic given (policy, profile, params).

    kinds: "br" (best-response round-robin), "first" (lowest player, least
    improving strategy), "coalition" (least improving coalition, sizes up to
    coalition_cap), "replay" (apply a fixed move script cyclically).
    """

    kind: str
    coalition_cap: int | None = None
    replay: tuple[tuple[tuple[int, ...], tuple[frozenset[int], ...]], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("br", "first", "coalition", "replay"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "coalition" and (self.coalition_cap or 0) < 1:
            raise ValueError("coalition policy needs coalition_cap >= 1")
        if self.kind == "replay" and not self.replay:
            raise ValueError("replay policy needs a move script")

    @staticmethod
    def parse(text: str) -> "Policy":
        if text == "br":
            return Policy("br")
        if text == "first":
            return Policy("first")
        if text.startswith("coalition:"):
            return Policy("coalition", coalition_cap=int(text.split(":", 1)[1]))
        raise ValueError(f"unknown policy {text!r}")


# ---------------------------------------------------------------------------
# potentials


def potential_value(profile: StrategyProfile, params: GameParams, kind: str):
    """single_buyer_count: edges bought by exactly one endpoint.
    weighted_n3: sum over players of distance cost plus twice building cost
    (INFINITE on disconnected profiles)."""
    if kind == "single_buyer_count":
        masks = profile.masks
        count = 0
        for i in range(profile.n):
            for j in _engine.bits_of(masks[i]):
                if not masks[j] >> i & 1:  # sole buyer of {i, j}
                    count += 1
        return count
    if kind == "weighted_n3":
        total = Fraction(0)
        for i in range(profile.n):
            c = core.player_cost(profile, params, i)
            if isinstance(c.distance, Infinity):
                return INFINITE
            total += c.distance + 2 * c.building
        return total
    raise ValueError(f"unknown potential {kind!r}")


# ---------------------------------------------------------------------------
# move enumeration


def enumerate_improving_moves(
    profile: StrategyProfile, params: GameParams, coalition_size_cap: int
):
    """Lexicographic stream of strictly-improving moves up to the size cap,
    with the same sound cardinality pruning as the coalition search."""
    p, q = params.alpha_pq
    search = _engine.DeviationSearch(
        profile.masks, params.n, p, q, max_size=coalition_size_cap
    )
    for w in search.iter_witnesses():
        dw = equilibrium._to_witness(w, q)
        yield Move(dw.coalition, dw.replacement, dw.deltas)


def _witness_to_move(w: DeviationWitness) -> Move:
    return Move(w.coalition, w.replacement, w.deltas)


# ---------------------------------------------------------------------------
# dynamics runner


def run_dynamics(
    profile: StrategyProfile,
    params: GameParams,
    policy: Policy,
    max_steps: int,
    *,
    detect_isomorphic: bool = False,
    track_potentials: tuple[str, ...] = POTENTIAL_KINDS,
) -> PathRecord:
    """Apply policy moves until stability, an exact state revisit, or the step
    cap.  Revisits are detected by hashing canonical profile encodings; with
    detect_isomorphic they are detected up to relabeling instead."""
    if max_steps <= 0:
        raise ValueError("max_steps must be > 0")

    def key_of(prof: StrategyProfile):
        if detect_isomorphic:
            return canonical_key_refined(prof.masks, prof.n)
        return prof.masks

    potentials = {k: [potential_value(profile, params, k)] for k in track_potentials}
    seen = {key_of(profile): 0}
    moves: list[Move] = []
    prof = profile
    replay_at = 0

    for step in range(1, max_steps + 1):
        if policy.kind == "replay":
            movers, strategies = policy.replay[replay_at % len(policy.replay)]
            replay_at += 1
            w = DeviationWitness(movers, strategies, (Fraction(0),) * len(movers))
            deltas = equilibrium.recompute_deltas(prof, params, w)
            if not all(d < 0 for d in deltas):
                raise InvalidReplayMove(
                    f"scripted move {movers} is not improving at step {step}: {deltas}"
                )
            move = Move(movers, strategies, deltas)
        else:
            move = _policy_move(prof, params, policy)
        if move is None:
            kind = TerminationKind.REACHED_NASH
            if policy.kind == "coalition" and policy.coalition_cap >= params.n:
                kind = TerminationKind.REACHED_STRONG
            return PathRecord(profile, moves, Termination(kind), potentials)
        prof = move.apply_to(prof)
        moves.append(move)
        for k in track_potentials:
            potentials[k].append(potential_value(prof, params, k))
        key = key_of(prof)
        if key in seen:
            return PathRecord(
                profile,
                moves,
                Termination(
                    TerminationKind.CYCLE_DETECTED,
                    period=step - seen[key],
                    first_revisit=step,
                ),
                potentials,
            )
        seen[key] = step
    return PathRecord(
        profile, moves, Termination(TerminationKind.STEP_CAP_HIT), potentials
    )


def _policy_move(prof, params, policy) -> Move | None:
    if policy.kind == "br":
        return _best_response_move(prof, params)
    if policy.kind == "first":
        w = equilibrium.find_improving_coalition(
            prof, params, SearchBudget(1), seed=False
        )
        return None if w is None else _witness_to_move(w)
    if policy.kind == "coalition":
        w = equilibrium.find_improving_coalition(
            prof, params, SearchBudget(policy.coalition_cap)
        )
        return None if w is None else _witness_to_move(w)
    raise AssertionError(policy.kind)


def _best_response_move(prof, params) -> Move | None:
    """Round-robin: the lowest player not playing a best response switches to
    her canonically least best response."""
    for i in range(params.n):
        options = equilibrium.best_response(prof, params, i)
        best = options[0]
        if best == prof.strategies[i] or prof.strategies[i] in options:
            continue
        w = DeviationWitness((i,), (best,), (Fraction(0),))
        deltas = equilibrium.recompute_deltas(prof, params, w)
        assert all(d < 0 for d in deltas)
        return Move((i,), (best,), deltas)
    return None


# ---------------------------------------------------------------------------
# scripted procedures


def _single_move(prof, params, i, new_strategy) -> tuple[StrategyProfile, Move]:
    w = DeviationWitness((i,), (frozenset(new_strategy),), (Fraction(0),))
    deltas = equilibrium.recompute_deltas(prof, params, w)
    if not all(d < 0 for d in deltas):
        raise ScriptInvariantError(
            f"scripted step for player {i} -> {sorted(new_strategy)} "
            f"does not strictly improve (delta {deltas[0]})"
        )
    move = Move((i,), w.replacement, deltas)
    return move.apply_to(prof), move


def _coalition_move(prof, params, movers, strategies) -> tuple[StrategyProfile, Move]:
    w = DeviationWitness(tuple(movers), tuple(strategies), (Fraction(0),) * len(movers))
    deltas = equilibrium.recompute_deltas(prof, params, w)
    if not all(d < 0 for d in deltas):
        raise ScriptInvariantError(f"coalition step {movers} does not improve: {deltas}")
    move = Move(tuple(movers), tuple(strategies), deltas)
    return move.apply_to(prof), move


def script_alpha1_to_strong(
    profile: StrategyProfile, params: GameParams
) -> PathRecord:
    """Two-phase convergence at alpha = 1.

    Phase one reaches a Nash profile: connect if disconnected (player 0 buys
    everyone), buy an edge across the least pair at distance >= 3 until the
    diameter is at most 2, then strip double purchases (higher index drops).
    Phase two repeatedly finds a complement cycle and lets that coalition
    each buy the next edge, which strictly improves every member, until the
    complement is a forest.  Every step's improvement is asserted at runtime.
    """
    if params.alpha != 1:
        raise WrongAlpha("this procedure requires alpha = 1")
    prof = profile
    moves: list[Move] = []

    graph = build_graph(prof)
    if not graph_properties(graph).is_connected:
        prof, mv = _single_move(
            prof, params, 0, frozenset(range(1, params.n))
        )
        moves.append(mv)

    while True:
        graph = build_graph(prof)
        pair = _least_distant_pair(graph, 3)
        if pair is None:
            break
        i, j = pair
        prof, mv = _single_move(prof, params, i, prof.strategies[i] | {j})
        moves.append(mv)

    while not is_rational(prof):
        i, j = _least_double_edge(prof)
        prof, mv = _single_move(prof, params, j, prof.strategies[j] - {i})
        moves.append(mv)

    while True:
        forest, cycle = complement_is_forest(build_graph(prof))
        if forest:
            break
        succ = {cycle[t]: cycle[(t + 1) % len(cycle)] for t in range(len(cycle))}
        movers = sorted(cycle)
        strategies = [prof.strategies[i] | {succ[i]} for i in movers]
        prof, mv = _coalition_move(prof, params, movers, strategies)
        moves.append(mv)

    return PathRecord(profile, moves, Termination(TerminationKind.REACHED_STRONG))


def _least_distant_pair(graph, at_least):
    for i in range(graph.n):
        dist = core.shortest_path_distances(graph, i)
        for j in range(graph.n):
            if dist[j] >= at_least:
                return i, j
    return None


def _least_double_edge(prof):
    for i in range(prof.n):
        for j in sorted(prof.strategies[i]):
            if j > i and i in prof.strategies[j]:
                return i, j
    raise AssertionError("no double edge")


def script_tree_to_star(profile: StrategyProfile, params: GameParams) -> PathRecord:
    """Tree-to-star convergence for alpha in [2, n/2).

    Phase one: every player at distance >= 2 from the chosen centroid vertex
    buys an edge to it (the centroid bound guarantees at least n/2 distance
    reductions, beating alpha).  Phase two: drop every purchased edge between
    two non-centroid players (saves alpha >= 2 against one distance unit).
    Phase three: strip double purchases.  The result is a rational star.
    """
    n = params.n
    if not (2 <= params.alpha < Fraction(n, 2)):
        raise PreconditionViolated(f"alpha must lie in [2, n/2) = [2, {n}/2)")
    graph = build_graph(profile)
    if not graph_properties(graph).is_tree:
        raise PreconditionViolated("starting profile must form a tree")

    v = min(centroid(graph))
    prof = profile
    moves: list[Move] = []

    while True:
        dist = core.shortest_path_distances(build_graph(prof), v)
        far = [i for i in range(n) if dist[i] >= 2]
        if not far:
            break
        i = min(far)
        prof, mv = _single_move(prof, params, i, prof.strategies[i] | {v})
        moves.append(mv)

    while True:
        drop = None
        for i in range(n):
            if i == v:
                continue
            extra = sorted(j for j in prof.strategies[i] if j != v)
            if extra:
                drop = (i, extra[0])
                break
        if drop is None:
            break
        i, j = drop
        prof, mv = _single_move(prof, params, i, prof.strategies[i] - {j})
        moves.append(mv)

    while not is_rational(prof):
        i, j = _least_double_edge(prof)
        prof, mv = _single_move(prof, params, j, prof.strategies[j] - {i})
        moves.append(mv)

    final_props = graph_properties(build_graph(prof))
    if not (final_props.is_star and is_rational(prof)):
        raise ScriptInvariantError("procedure did not end in a rational star")
    return PathRecord(profile, moves, Termination(TerminationKind.REACHED_STRONG))


# ---------------------------------------------------------------------------
# profile-space search (n <= 4 full-table; BFS over improving moves)


@lru_cache(maxsize=8)
def _table_context(n: int, p: int, q: int):
    cost, big = _engine.state_cost_table(n, p, q)
    bits = n - 1
    n_states = 1 << (bits * n)
    digits = np.zeros((n_states, n), dtype=np.int16)
    states = np.arange(n_states, dtype=np.int64)
    for i in range(n):
        digits[:, i] = (states >> (bits * i)) & ((1 << bits) - 1)
    return cost, big, digits


def _improving_edges_from(idx, cost, digits, cap):
    """Bool mask over all states: strict coalition-improving successors of idx."""
    changed = digits != digits[idx]
    cnt = changed.sum(axis=1)
    better = cost < cost[idx]
    ok = np.logical_or(~changed, better).all(axis=1)
    return ok & (cnt >= 1) & (cnt <= cap)


def _improving_edges_to(idx, cost, digits, cap):
    """Bool mask over all states: predecessors with an improving move to idx."""
    changed = digits != digits[idx]
    cnt = changed.sum(axis=1)
    better = cost[idx] < cost
    ok = np.logical_or(~changed, better).all(axis=1)
    return ok & (cnt >= 1) & (cnt <= cap)


def search_improvement_path(
    profile: StrategyProfile,
    params: GameParams,
    target: str = "strong",
    coalitional: bool = True,
    state_cap: int = 500_000,
) -> PathRecord | None:
    """Shortest improving path (BFS over profile space) to a Nash or strong
    profile, or None when the target is unreachable.  Exact and complete for
    n <= 4 via the full state table; raises StateCapHit beyond the cap."""
    n = params.n
    if target not in ("nash", "strong"):
        raise ValueError("target must be 'nash' or 'strong'")
    if n > 4:
        raise StateCapHit(f"state space 2^{(n - 1) * n} exceeds the table search")
    p, q = params.alpha_pq
    cost, big, digits = _table_context(n, p, q)
    n_states = len(cost)
    if n_states > state_cap:
        raise StateCapHit(f"{n_states} states exceed state_cap {state_cap}")
    cap = n if coalitional else 1

    dist = _distances_to_targets(params, target, cap)
    start_idx = _engine.state_index(profile.masks, n)
    if dist[start_idx] < 0:
        return None

    moves: list[Move] = []
    prof = profile
    idx = start_idx
    while dist[idx] > 0:
        nxt = _improving_edges_from(idx, cost, digits, cap)
        nxt &= dist == dist[idx] - 1
        move = _least_move_to(prof, params, np.flatnonzero(nxt), cap)
        moves.append(move)
        prof = move.apply_to(prof)
        idx = _engine.state_index(prof.masks, n)
    kind = (
        TerminationKind.REACHED_STRONG
        if target == "strong"
        else TerminationKind.REACHED_NASH
    )
    return PathRecord(profile, moves, Termination(kind))


def _least_move_to(prof, params, goal_indices, cap) -> Move:
    goals = set(int(g) for g in goal_indices)
    for move in enumerate_improving_moves(prof, params, cap):
        nxt = move.apply_to(prof)
        if _engine.state_index(nxt.masks, prof.n) in goals:
            return move
    raise AssertionError("BFS distance promised a successor but none was found")


@lru_cache(maxsize=16)
def _targets_cached(n, p, q, target, cap):
    from fractions import Fraction as F

    params = GameParams(n, F(p, q))
    cost, big, digits = _table_context(n, p, q)
    n_states = len(cost)
    flags = np.zeros(n_states, dtype=bool)
    if target == "nash":
        bits = n - 1
        reshaped = cost.reshape([1 << bits] * n + [n])
        for i in range(n):
            axis = n - 1 - i
            best = reshaped[..., i].min(axis=axis, keepdims=True)
            has_better = reshaped[..., i] > best
            flags |= has_better.reshape(n_states)
        return ~flags
    for idx in range(n_states):
        masks = _engine.masks_from_state(idx, n)
        prof = profile_from_masks(masks)
        if params.alpha > 0 and not is_rational(prof):
            continue
        res = equilibrium.is_strong_equilibrium(prof, params)
        flags[idx] = res.verdict == equilibrium.SEVerdict.YES
    return flags


def _distances_to_targets(params, target, cap) -> np.ndarray:
    p, q = params.alpha_pq
    return _distances_cached(params.n, p, q, target, cap)


@lru_cache(maxsize=16)
def _distances_cached(n, p, q, target, cap) -> np.ndarray:
    cost, big, digits = _table_context(n, p, q)
    targets = _targets_cached(n, p, q, target, cap)
    dist = np.full(len(cost), -1, dtype=np.int32)
    frontier = list(np.flatnonzero(targets))
    for idx in frontier:
        dist[idx] = 0
    d = 0
    while frontier:
        nxt = []
        for idx in frontier:
            preds = _improving_edges_to(idx, cost, digits, cap)
            preds &= dist < 0
            for pidx in np.flatnonzero(preds):
                dist[pidx] = d + 1
                nxt.append(int(pidx))
        frontier = nxt
        d += 1
    return dist


def find_improvement_cycle(
    profile: StrategyProfile,
    params: GameParams,
    coalition_size_cap: int | None = None,
    state_cap: int = 20_000,
) -> PathRecord | None:
    """DFS over improving moves from the start until some state repeats on the
    current path; returns the move sequence whose replay revisits a state
    (CycleDetected), or None if no cycle is reachable."""
    cap = coalition_size_cap or params.n
    start_key = profile.masks
    on_path: dict[tuple, int] = {start_key: 0}
    path_moves: list[Move] = []
    exhausted: set[tuple] = set()
    explored = 0

    def dfs(prof) -> bool:
        nonlocal explored
        explored += 1
        if explored > state_cap:
            raise StateCapHit(f"cycle search exceeded {state_cap} states")
        for move in enumerate_improving_moves(prof, params, cap):
            nxt = move.apply_to(prof)
            key = nxt.masks
            if key in on_path:
                path_moves.append(move)
                return True
            if key in exhausted:
                continue
            on_path[key] = len(on_path)
            path_moves.append(move)
            if dfs(nxt):
                return True
            path_moves.pop()
            del on_path[key]
            exhausted.add(key)
        return False

    if dfs(profile):
        record = run_dynamics(
            profile,
            params,
            Policy(
                "replay",
                replay=tuple((m.movers, m.strategies) for m in path_moves),
            ),
            max_steps=len(path_moves),
        )
        assert record.termination.kind == TerminationKind.CYCLE_DETECTED
        return record
    return None


# ---------------------------------------------------------------------------
# cost-table scan hook (figure-only profiles survive in the text as cost rows)


def scan_for_cost_table(
    params: GameParams, table, candidates, limit: int = 1
) -> list[StrategyProfile]:
    """Profiles whose highest player costs match `table` (descending, exact).

    A search hook: callers supply the candidate stream; no claim is made that
    any candidate reproduces a particular figure.
    """
    want = [Fraction(t) for t in table]
    out = []
    for prof in candidates:
        costs = [core.player_cost(prof, params, i).total for i in range(prof.n)]
        if any(isinstance(c, Infinity) for c in costs):
            continue
        top = sorted(costs, reverse=True)[: len(want)]
        if top == want:
            out.append(prof)
            if len(out) >= limit:
                break
    return out
