"""Internal search engines over bitmask-encoded profiles.

All costs in here are scaled integers: with alpha = p/q, a player's cost
p*|s_i| + q*(distance sum) stays an exact int.  Disconnection is a per-search
sentinel `big` chosen strictly above every achievable finite cost, so
comparisons behave like comparisons against infinity and nothing overflows.

Two evaluators share one deviation-search skeleton: a generic one that
maintains adjacency incrementally and runs BFS at the leaves, and a table
one for n <= 5 that precomputes every state's cost vector once per (n, alpha)
and turns a leaf into an array lookup.

Pruning is restricted to consequences of the basic cost bound
c_i >= 2n - 2 - deg(i) + |s_i| * alpha: per-member cardinality caps, exclusion
of members already at the distance floor n - 1, and partial-assignment bounds
that cap deg(i) by purchases plus an upper bound on in-bought edges.  Those
prunes never discard an improving deviation, so an exhausted search is a
completeness certificate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np


class SearchInfeasible(RuntimeError):
    """Raised when an exhaustive scan would not terminate at desk scale."""


def bits_of(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def adjacency_from_masks(masks, n: int) -> list[int]:
    adj = [0] * n
    for i, m in enumerate(masks):
        adj[i] |= m
        mm = m
        while mm:
            b = mm & -mm
            adj[b.bit_length() - 1] |= 1 << i
            mm ^= b
    return adj


def bfs_sum(adj, source: int, full: int) -> int | None:
    seen = 1 << source
    frontier = adj[source] & ~seen
    total = 0
    depth = 1
    while frontier:
        total += depth * frontier.bit_count()
        seen |= frontier
        nxt = 0
        m = frontier
        while m:
            b = m & -m
            nxt |= adj[b.bit_length() - 1]
            m ^= b
        frontier = nxt & ~seen
        depth += 1
    return total if seen == full else None


def scaled_cost_bound(n: int, p: int, q: int) -> int:
    """Strict upper bound on any finite scaled cost p*k + q*dsum."""
    return p * (n - 1) + q * n * n + 1


# ---------------------------------------------------------------------------
# state tables for n <= 5


@lru_cache(maxsize=None)
def _state_tables(n: int):
    """Distance and purchase-count tables over the full strategy space.

    States pack one (n-1)-bit nibble per player (bit b of player i's nibble =
    a purchase toward the b-th other player).  Distance sums depend only on
    the induced graph, so they are computed once per graph and gathered.
    """
    bits = n - 1
    pairs = list(itertools.combinations(range(n), 2))
    pair_idx = {pq: t for t, pq in enumerate(pairs)}
    n_graphs = 1 << len(pairs)

    d_graph = np.zeros((n_graphs, n), dtype=np.int16)
    full = (1 << n) - 1
    for g in range(n_graphs):
        adj = [0] * n
        for t, (i, j) in enumerate(pairs):
            if g >> t & 1:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
        for i in range(n):
            s = bfs_sum(adj, i, full)
            d_graph[g, i] = -1 if s is None else s

    others = [[j for j in range(n) if j != i] for i in range(n)]
    contrib = np.zeros((n, 1 << bits), dtype=np.int32)
    popcnt = np.zeros(1 << bits, dtype=np.int8)
    for nib in range(1 << bits):
        popcnt[nib] = bin(nib).count("1")
        for i in range(n):
            g = 0
            for b in range(bits):
                if nib >> b & 1:
                    j = others[i][b]
                    g |= 1 << pair_idx[(min(i, j), max(i, j))]
            contrib[i, nib] = g

    states = np.arange(1 << (bits * n), dtype=np.int64)
    graph_of = np.zeros(len(states), dtype=np.int32)
    k_of = np.zeros((len(states), n), dtype=np.int8)
    for i in range(n):
        nib = (states >> (bits * i)) & ((1 << bits) - 1)
        graph_of |= contrib[i][nib]
        k_of[:, i] = popcnt[nib]
    d_of = d_graph[graph_of]  # (states, n); -1 marks disconnection

    comp = np.zeros((n, 1 << n), dtype=np.int32)
    expand = np.zeros((n, 1 << bits), dtype=np.int32)
    for i in range(n):
        for mask in range(1 << n):
            nib = 0
            for b, j in enumerate(others[i]):
                if mask >> j & 1:
                    nib |= 1 << b
            comp[i, mask] = nib
        for nib in range(1 << bits):
            m = 0
            for b, j in enumerate(others[i]):
                if nib >> b & 1:
                    m |= 1 << j
            expand[i, nib] = m
    return d_of, k_of, comp, expand, graph_of


_COST_CACHE: dict[tuple[int, int, int], tuple[np.ndarray, int]] = {}


def state_cost_table(n: int, p: int, q: int) -> tuple[np.ndarray, int]:
    """(cost array over all states x players, big sentinel); cached."""
    key = (n, p, q)
    if key not in _COST_CACHE:
        big = scaled_cost_bound(n, p, q)
        if big >= 2**31:
            raise SearchInfeasible("alpha too large for the state cost table")
        d_of, k_of, _, _, _ = _state_tables(n)
        cost = p * k_of.astype(np.int64) + q * d_of.astype(np.int64)
        cost[d_of < 0] = big
        if len(_COST_CACHE) > 6:
            _COST_CACHE.pop(next(iter(_COST_CACHE)))
        _COST_CACHE[key] = (cost, big)
    return _COST_CACHE[key]


def state_index(masks, n: int) -> int:
    _, _, comp, _, _ = _state_tables(n)
    bits = n - 1
    idx = 0
    for i, m in enumerate(masks):
        idx |= int(comp[i, m]) << (bits * i)
    return idx


def masks_from_state(idx: int, n: int) -> tuple[int, ...]:
    _, _, _, expand, _ = _state_tables(n)
    bits = n - 1
    return tuple(
        int(expand[i, (idx >> (bits * i)) & ((1 << bits) - 1)]) for i in range(n)
    )


# ---------------------------------------------------------------------------
# evaluators


class GenericEvaluator:
    """Incremental out/in bookkeeping + leaf BFS; works for any n."""

    def __init__(self, masks, n, p, q):
        self.n = n
        self.p = p
        self.q = q
        self.big = scaled_cost_bound(n, p, q)
        self.full = (1 << n) - 1
        self.out = list(masks)
        self.inn = [0] * n
        for i, m in enumerate(masks):
            for j in bits_of(m):
                self.inn[j] |= 1 << i
        self.base_costs = self._costs(range(n))

    def _costs(self, players):
        adj = [self.out[v] | self.inn[v] for v in range(self.n)]
        res = []
        for i in players:
            d = bfs_sum(adj, i, self.full)
            k = self.out[i].bit_count()
            res.append(self.big if d is None else self.p * k + self.q * d)
        return res

    def assign(self, member: int, new_mask: int) -> int:
        old = self.out[member]
        bit = 1 << member
        for j in bits_of(old & ~new_mask):
            self.inn[j] &= ~bit
        for j in bits_of(new_mask & ~old):
            self.inn[j] |= bit
        self.out[member] = new_mask
        return old

    def unassign(self, member: int, old_mask: int):
        self.assign(member, old_mask)

    def leaf_costs(self, members):
        return self._costs(members)


class TableEvaluator:
    """State-index arithmetic over the precomputed cost table (n <= 5)."""

    def __init__(self, masks, n, p, q):
        self.n = n
        self.p = p
        self.q = q
        self.cost, self.big = state_cost_table(n, p, q)
        _, _, comp, _, _ = _state_tables(n)
        self.comp = comp
        self.bits = n - 1
        self.out = list(masks)
        self.idx = state_index(masks, n)
        row = self.cost[self.idx]
        self.base_costs = [int(row[i]) for i in range(n)]

    def assign(self, member: int, new_mask: int) -> int:
        old = self.out[member]
        shift = self.bits * member
        delta = int(self.comp[member, new_mask]) - int(self.comp[member, old])
        self.idx += delta << shift
        self.out[member] = new_mask
        return old

    def unassign(self, member: int, old_mask: int):
        self.assign(member, old_mask)

    def leaf_costs(self, members):
        row = self.cost[self.idx]
        return [int(row[i]) for i in members]


def make_evaluator(masks, n, p, q):
    if n <= 5 and scaled_cost_bound(n, p, q) < 2**31:
        return TableEvaluator(masks, n, p, q)
    return GenericEvaluator(masks, n, p, q)


# ---------------------------------------------------------------------------
# deviation search


@dataclass(frozen=True)
class EngineWitness:
    members: tuple[int, ...]
    new_masks: tuple[int, ...]
    old_costs: tuple[int, ...]  # scaled; >= big means infinite
    new_costs: tuple[int, ...]
    big: int


@dataclass
class SearchOutcome:
    witness: EngineWitness | None
    nodes: int
    node_capped: bool  # the node budget interrupted the sweep
    scope_limited: bool  # size cap or cardinality bonus cut the space

    @property
    def complete(self) -> bool:
        return not self.node_capped and not self.scope_limited


class _NodeCapReached(Exception):
    pass


class DeviationSearch:
    """Exhaustive improving-coalition search in canonical order.

    Order: coalition size ascending, coalitions lexicographic, per-member
    strategies by (cardinality, lexicographic targets).  The first witness
    found is therefore the canonically least one.

    mode "strict": every member's delta < 0 (improving coalitions).
    mode "weak-any": all deltas <= 0 with at least one < 0 (the strict-strong
    equilibrium deviation notion).
    mode "weak-each": all deltas <= 0 (a cost-equal unilateral alternative;
    the strict-Nash deviation notion).
    """

    def __init__(
        self,
        masks,
        n: int,
        p: int,
        q: int,
        *,
        mode: str = "strict",
        min_size: int = 1,
        max_size: int | None = None,
        cardinality_bonus: int | None = None,
        node_cap: int | None = None,
        use_partial_bounds: bool = True,
        witness_hook=None,
    ):
        self.masks = tuple(masks)
        self.n = n
        self.p = p
        self.q = q
        if mode not in ("strict", "weak-any", "weak-each"):
            raise ValueError(f"unknown search mode {mode!r}")
        self.mode = mode
        self.weak = mode != "strict"
        self.min_size = min_size
        self.max_size = n if max_size is None else min(max_size, n)
        self.bonus = cardinality_bonus
        self.node_cap = node_cap
        self.use_partial_bounds = use_partial_bounds
        self.witness_hook = witness_hook
        self.ev = make_evaluator(masks, n, p, q)
        self.big = self.ev.big
        self.in_all = [0] * n  # bit j set: player j buys an edge to me
        for j, m in enumerate(self.masks):
            for i in bits_of(m):
                self.in_all[i] |= 1 << j
        self.nodes = 0
        self.node_capped = False
        self.scope_limited = self.max_size < n

    # -- candidate strategies -------------------------------------------------

    def _bound_ok(self, lb: int, cur: int) -> bool:
        return lb <= cur if self.weak else lb < cur

    def _member_cap(self, i: int, in_ub: int) -> int | None:
        """Largest purchase count that could still help member i.

        Both lower bounds on c_i(s') come from the basic cost inequality:
        distances are at least n-1 in total, and at least 2n-2-deg with
        deg <= k + in_ub.  None means no cardinality can meet the current
        cost, so the member can never benefit in this context.
        """
        n, p, q = self.n, self.p, self.q
        cur = self.ev.base_costs[i]
        best = None
        for k in range(n):
            lb1 = q * (n - 1) + p * k
            lb2 = q * (2 * n - 2 - min(n - 1, k + in_ub)) + p * k
            if self._bound_ok(max(lb1, lb2), cur):
                best = k
            elif k + in_ub >= n - 1:
                break  # both bounds nondecreasing from here on
        return best

    def _candidates(self, i: int, coalition_mask: int, size: int):
        """Candidate (mask, k) list for member i, plus a bonus-truncation flag."""
        in_fixed = (self.in_all[i] & ~coalition_mask).bit_count()
        cap = self._member_cap(i, in_fixed + size - 1)
        if cap is None:
            return [], False
        hard_cap = cap
        truncated = False
        if self.bonus is not None:
            allowed = self.masks[i].bit_count() + self.bonus
            if allowed < cap:
                hard_cap = allowed
                truncated = True
        others = [j for j in range(self.n) if j != i]
        cur = self.masks[i]
        out = []
        for k in range(hard_cap + 1):
            for combo in itertools.combinations(others, k):
                m = 0
                for j in combo:
                    m |= 1 << j
                if m != cur:
                    out.append((m, k))
        return out, truncated

    # -- search -----------------------------------------------------------------

    def eligible_players(self) -> list[int]:
        if self.weak:
            return list(range(self.n))
        floor = self.q * (self.n - 1)
        return [i for i in range(self.n) if floor < self.ev.base_costs[i]]

    def run(self) -> SearchOutcome:
        try:
            for w in self._iter():
                return SearchOutcome(w, self.nodes, False, False)
        except _NodeCapReached:
            self.node_capped = True
        return SearchOutcome(None, self.nodes, self.node_capped, self.scope_limited)

    def iter_witnesses(self):
        """All improving deviations within scope, canonical order."""
        return self._iter()

    def _iter(self):
        eligible = self.eligible_players()
        for size in range(self.min_size, self.max_size + 1):
            for coalition in itertools.combinations(eligible, size):
                kmask = 0
                for i in coalition:
                    kmask |= 1 << i
                cands = []
                ok = True
                for i in coalition:
                    ci, trunc = self._candidates(i, kmask, size)
                    if trunc:
                        self.scope_limited = True
                    if not ci:
                        ok = False
                        break
                    cands.append(ci)
                if ok:
                    yield from self._dfs(list(coalition), cands)

    def _dfs(self, coalition, cands):
        size = len(coalition)
        assigned_in = [0] * size  # in-edges to coalition[t] from assigned members
        chosen_k = [0] * size
        kset = [sorted({k for _, k in c}) for c in cands]
        in_fixed = [
            (self.in_all[i] & ~sum(1 << j for j in coalition)).bit_count()
            for i in coalition
        ]
        ev = self.ev
        n, p, q = self.n, self.p, self.q

        def bounds_hold(depth):
            # Sound optimism: every unassigned member might still buy toward t.
            rest = size - depth - 1
            for t in range(size):
                i = coalition[t]
                cur = ev.base_costs[i]
                in_ub = in_fixed[t] + assigned_in[t] + (rest if t <= depth else rest - 1)
                if t <= depth:
                    k = chosen_k[t]
                    lb = q * (2 * n - 2 - min(n - 1, k + in_ub)) + p * k
                    if not self._bound_ok(lb, cur):
                        return False
                else:
                    feasible = False
                    for k in kset[t]:
                        lb = q * (2 * n - 2 - min(n - 1, k + in_ub)) + p * k
                        if self._bound_ok(lb, cur):
                            feasible = True
                            break
                    if not feasible:
                        return False
            return True

        def rec(depth):
            member = coalition[depth]
            for mask, k in cands[depth]:
                self.nodes += 1
                if self.node_cap is not None and self.nodes > self.node_cap:
                    raise _NodeCapReached
                chosen_k[depth] = k
                old = ev.assign(member, mask)
                for t in range(size):
                    if t != depth and mask >> coalition[t] & 1:
                        assigned_in[t] += 1
                try:
                    if not self.use_partial_bounds or bounds_hold(depth):
                        if depth + 1 == size:
                            yield from self._check_leaf(coalition)
                        else:
                            yield from rec(depth + 1)
                finally:
                    ev.unassign(member, old)
                    for t in range(size):
                        if t != depth and mask >> coalition[t] & 1:
                            assigned_in[t] -= 1

        yield from rec(0)

    def _check_leaf(self, coalition):
        ev = self.ev
        new = ev.leaf_costs(coalition)
        old = [ev.base_costs[i] for i in coalition]
        if self.mode == "strict":
            ok = all(a < b for a, b in zip(new, old))
        elif self.mode == "weak-any":
            ok = all(a <= b for a, b in zip(new, old)) and any(
                a < b for a, b in zip(new, old)
            )
        else:  # weak-each
            ok = all(a <= b for a, b in zip(new, old))
        if ok:
            w = EngineWitness(
                members=tuple(coalition),
                new_masks=tuple(ev.out[i] for i in coalition),
                old_costs=tuple(old),
                new_costs=tuple(new),
                big=self.big,
            )
            if self.witness_hook is not None:
                self.witness_hook(w)
            yield w


def unpruned_search(masks, n, p, q, *, mode="strict", max_size=None):
    """Reference search with no pruning at all; n <= 4 cross-checks only."""
    ev = GenericEvaluator(masks, n, p, q)
    max_size = n if max_size is None else max_size
    for size in range(1, max_size + 1):
        for coalition in itertools.combinations(range(n), size):
            pools = []
            for i in coalition:
                others = [j for j in range(n) if j != i]
                pool = []
                for k in range(n):
                    for combo in itertools.combinations(others, k):
                        m = sum(1 << j for j in combo)
                        if m != masks[i]:
                            pool.append(m)
                pools.append(pool)
            for joint in itertools.product(*pools):
                olds = []
                for i, m in zip(coalition, joint):
                    olds.append(ev.assign(i, m))
                new = ev.leaf_costs(coalition)
                old = [ev.base_costs[i] for i in coalition]
                if mode == "strict":
                    ok = all(a < b for a, b in zip(new, old))
                elif mode == "weak-any":
                    ok = all(a <= b for a, b in zip(new, old)) and any(
                        a < b for a, b in zip(new, old)
                    )
                else:
                    ok = all(a <= b for a, b in zip(new, old))
                witness = None
                if ok:
                    witness = EngineWitness(
                        members=tuple(coalition),
                        new_masks=tuple(joint),
                        old_costs=tuple(old),
                        new_costs=tuple(new),
                        big=ev.big,
                    )
                for i, m in zip(reversed(coalition), reversed(olds)):
                    ev.unassign(i, m)
                if witness is not None:
                    return witness
    return None


# ---------------------------------------------------------------------------
# seeded witness: everyone on a complement cycle buys the next edge


def cycle_buy_witness(masks, n, p, q, cycle) -> EngineWitness | None:
    """Verified witness where each cycle member buys an edge to its successor.

    Strictly improving for every member whenever alpha < 2 (two distances
    drop by one each against one extra edge); deltas are recomputed here, so
    callers never trust the structural argument.
    """
    ev = GenericEvaluator(masks, n, p, q)
    members = sorted(cycle)
    succ = {cycle[t]: cycle[(t + 1) % len(cycle)] for t in range(len(cycle))}
    for i in members:
        ev.assign(i, masks[i] | 1 << succ[i])
    new = ev.leaf_costs(members)
    old = [ev.base_costs[i] for i in members]
    if not all(a < b for a, b in zip(new, old)):
        return None
    return EngineWitness(
        members=tuple(members),
        new_masks=tuple(masks[i] | 1 << succ[i] for i in members),
        old_costs=tuple(old),
        new_costs=tuple(new),
        big=ev.big,
    )


# ---------------------------------------------------------------------------
# vectorized unilateral scan (large n)


@lru_cache(maxsize=64)
def _combo_array(m: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.combinations(range(m), k)), dtype=np.int64)


_UNREACHED = 4096  # > any finite distance at n <= 50, small enough to sum safely


def _distance_matrix_without(adj, n, skip) -> np.ndarray:
    """All-pairs BFS distances of G - skip, indexed by the 'others' order."""
    others = [v for v in range(n) if v != skip]
    pos = {v: t for t, v in enumerate(others)}
    block = ~(1 << skip)
    m = len(others)
    D = np.full((m, m), _UNREACHED, dtype=np.int32)
    for s in others:
        seen = 1 << s
        frontier = seen
        depth = 0
        row = D[pos[s]]
        while frontier:
            mm = frontier
            while mm:
                b = mm & -mm
                row[pos[b.bit_length() - 1]] = depth
                mm ^= b
            nxt = 0
            mm = frontier
            while mm:
                b = mm & -mm
                nxt |= adj[b.bit_length() - 1]
                mm ^= b
            frontier = nxt & block & ~seen
            seen |= frontier
            depth += 1
    return D


@dataclass
class ScanReport:
    witness: EngineWitness | None
    evaluations: int
    caps: dict[int, int]  # per player; -1 = cannot improve at any cardinality


def unilateral_scan(
    masks,
    n: int,
    p: int,
    q: int,
    *,
    weak: bool,
    chunk: int = 65536,
    max_evaluations: int = 200_000_000,
) -> ScanReport:
    """First weakly/strictly improving single-player deviation by bulk scan.

    Canonical order (player asc, cardinality asc, targets lex), identical to
    DeviationSearch at size 1.  Per-player cardinality caps come from the
    basic cost bound with deg <= |s'_i| + in-bought edges, which is exact for
    unilateral deviations.  Requires a connected base graph.
    """
    adj = adjacency_from_masks(masks, n)
    full = (1 << n) - 1
    big = scaled_cost_bound(n, p, q)
    base = []
    for i in range(n):
        d = bfs_sum(adj, i, full)
        if d is None:
            raise SearchInfeasible("unilateral scan requires a connected graph")
        base.append(p * masks[i].bit_count() + q * d)

    in_count = [0] * n
    for j, m in enumerate(masks):
        for i in bits_of(m):
            in_count[i] += 1

    caps: dict[int, int] = {}
    planned = 0
    for i in range(n):
        cap = None
        for k in range(n):
            lb1 = q * (n - 1) + p * k
            lb2 = q * (2 * n - 2 - min(n - 1, k + in_count[i])) + p * k
            lb = max(lb1, lb2)
            if (lb <= base[i]) if weak else (lb < base[i]):
                cap = k
            elif k + in_count[i] >= n - 1:
                break
        caps[i] = -1 if cap is None else cap
        if cap is not None:
            planned += sum(comb(n - 1, k) for k in range(cap + 1))
    if planned > max_evaluations:
        raise SearchInfeasible(
            f"scan needs {planned} evaluations, above the {max_evaluations} cap"
        )

    evaluations = 0
    for i in range(n):
        if caps[i] < 0:
            continue
        others = [v for v in range(n) if v != i]
        m = len(others)
        D = _distance_matrix_without(adj, n, i)
        in_rows = [t for t, v in enumerate(others) if masks[v] >> i & 1]
        if in_rows:
            base_row = D[np.array(in_rows, dtype=np.int64)].min(axis=0)
        else:
            base_row = np.full(m, _UNREACHED, dtype=np.int32)
        cur_mask = masks[i]
        cur_k = cur_mask.bit_count()
        cur_targets = np.array(
            [t for t, v in enumerate(others) if cur_mask >> v & 1], dtype=np.int64
        )
        for k in range(caps[i] + 1):
            combos = _combo_array(m, k)
            for lo in range(0, len(combos), chunk):
                part = combos[lo : lo + chunk]
                evaluations += len(part)
                if k == 0:
                    mins = np.broadcast_to(base_row, (len(part), m))
                else:
                    mins = np.minimum(D[part].min(axis=1), base_row)
                dsum = mins.sum(axis=1, dtype=np.int64) + m
                cost = p * k + q * dsum
                hit = cost <= base[i] if weak else cost < base[i]
                if k == cur_k:
                    same = (
                        np.all(part == cur_targets, axis=1)
                        if k
                        else np.ones(len(part), bool)
                    )
                    hit &= ~same
                if hit.any():
                    at = int(np.argmax(hit))
                    new_mask = 0
                    for t in part[at]:
                        new_mask |= 1 << others[int(t)]
                    disconnected = int(mins[at].max()) >= _UNREACHED
                    w = EngineWitness(
                        members=(i,),
                        new_masks=(new_mask,),
                        old_costs=(base[i],),
                        new_costs=(big if disconnected else int(cost[at]),),
                        big=big,
                    )
                    return ScanReport(w, evaluations, caps)
    return ScanReport(None, evaluations, caps)
