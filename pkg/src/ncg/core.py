"""Exact primitives for network creation games.

Players 0..n-1 each buy a set of edges at price alpha; an edge exists when
either endpoint buys it.  A player's cost is alpha times the number of edges
she buys plus the sum of her graph distances to everyone else.  Everything
here is exact: alpha is a Fraction, distances are ints, and disconnection is
a dedicated Infinity value rather than a sentinel integer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property


class NotATree(ValueError):
    """Raised when a tree-only operation receives a non-tree graph."""


class Infinity:
    """Signed infinite value; absorbs addition and orders totally vs rationals."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def is_finite(self) -> bool:
        return False

    def __add__(self, other):
        if isinstance(other, Infinity) and other.sign != self.sign:
            raise ArithmeticError("infinity - infinity is undefined")
        return self

    __radd__ = __add__
    __sub__ = None  # subtraction is deliberately unsupported; compare instead

    def __neg__(self):
        return NEG_INFINITE if self.sign > 0 else INFINITE

    def __lt__(self, other):
        if isinstance(other, Infinity):
            return self.sign < other.sign
        return self.sign < 0

    def __le__(self, other):
        return self < other or self == other

    def __gt__(self, other):
        if isinstance(other, Infinity):
            return self.sign > other.sign
        return self.sign > 0

    def __ge__(self, other):
        return self > other or self == other

    def __eq__(self, other):
        return isinstance(other, Infinity) and other.sign == self.sign

    def __hash__(self):
        return hash(("Infinity", self.sign))

    def __repr__(self):
        return "INFINITE" if self.sign > 0 else "NEG_INFINITE"


INFINITE = Infinity(1)
NEG_INFINITE = Infinity(-1)

#: A distance is a non-negative int, or INFINITE for disconnected pairs.
Distance = int | Infinity
Cost = Fraction | Infinity


def as_alpha(value) -> Fraction:
    """Convert an edge price to an exact Fraction; floats are rejected."""
    if isinstance(value, float):
        raise TypeError("alpha must be exact (int, str or Fraction, not float)")
    return Fraction(value)


@dataclass(frozen=True)
class GameParams:
    """A game instance: player count n >= 3 and exact edge price alpha >= 0."""

    n: int
    alpha: Fraction

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 3:
            raise ValueError(f"need an integer player count n >= 3, got {self.n!r}")
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    @property
    def alpha_pq(self) -> tuple[int, int]:
        return self.alpha.numerator, self.alpha.denominator


@dataclass(frozen=True)
class StrategyProfile:
    """Per-player purchase sets; strategies[i] is a subset of [n] minus i."""

    strategies: tuple[frozenset[int], ...]

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.strategies)
        object.__setattr__(self, "strategies", sets)
        n = len(sets)
        for i, s in enumerate(sets):
            for j in s:
                if not isinstance(j, int) or not 0 <= j < n:
                    raise ValueError(f"player {i} buys out-of-range target {j!r}")
                if j == i:
                    raise ValueError(f"player {i} buys a self-edge")

    @property
    def n(self) -> int:
        return len(self.strategies)

    @cached_property
    def masks(self) -> tuple[int, ...]:
        """Strategies as bitmasks, the representation every engine works on."""
        return tuple(sum(1 << j for j in s) for s in self.strategies)

    def with_strategy(self, i: int, strategy) -> "StrategyProfile":
        new = list(self.strategies)
        new[i] = frozenset(strategy)
        return StrategyProfile(tuple(new))

    def apply(self, coalition, replacements) -> "StrategyProfile":
        """Replace the strategies of `coalition` (parallel to `replacements`)."""
        new = list(self.strategies)
        for i, s in zip(coalition, replacements):
            new[i] = frozenset(s)
        return StrategyProfile(tuple(new))

    @staticmethod
    def of(*strategies) -> "StrategyProfile":
        return StrategyProfile(tuple(frozenset(s) for s in strategies))


def profile_from_masks(masks) -> StrategyProfile:
    return StrategyProfile(tuple(frozenset(_bits(m)) for m in masks))


def _bits(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


@dataclass(frozen=True)
class UndirectedGraph:
    """Symmetric adjacency sets without self-loops."""

    n: int
    adjacency: tuple[frozenset[int], ...]

    def __post_init__(self):
        adj = tuple(frozenset(a) for a in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        if len(adj) != self.n:
            raise ValueError("adjacency length must equal n")
        for i, nbrs in enumerate(adj):
            if i in nbrs:
                raise ValueError(f"self-loop at vertex {i}")
            for j in nbrs:
                if i not in adj[j]:
                    raise ValueError(f"asymmetric adjacency between {i} and {j}")

    @cached_property
    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << j for j in a) for a in self.adjacency)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (i, j) for i in range(self.n) for j in self.adjacency[i] if i < j
        )

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @staticmethod
    def from_edges(n: int, edges) -> "UndirectedGraph":
        adj = [set() for _ in range(n)]
        for i, j in edges:
            adj[i].add(j)
            adj[j].add(i)
        return UndirectedGraph(n, tuple(frozenset(a) for a in adj))


@dataclass(frozen=True)
class CostBreakdown:
    """One player's cost, split into building and distance parts.

    free_riding is her degree minus the number of edges she buys: the edges
    paid for by neighbors.  double_purchases counts her purchases that the
    other endpoint also buys (legal input, flagged here, never an error).
    """

    building: Fraction
    distance: Distance
    total: Cost
    free_riding: int
    double_purchases: int


def adjacency_masks(profile: StrategyProfile) -> list[int]:
    """Bitmask adjacency of G(s): an edge {i,j} exists iff either buys it."""
    n = profile.n
    adj = [0] * n
    for i, m in enumerate(profile.masks):
        adj[i] |= m
        for j in _bits(m):
            adj[j] |= 1 << i
    return adj


def build_graph(profile: StrategyProfile) -> UndirectedGraph:
    adj = adjacency_masks(profile)
    return UndirectedGraph(
        profile.n, tuple(frozenset(_bits(m)) for m in adj)
    )


def bfs_distance_sum(adj_masks, source: int, full_mask: int) -> int | None:
    """Sum of BFS distances from source, or None when some vertex is unreachable."""
    seen = 1 << source
    frontier = adj_masks[source] & ~seen
    total = 0
    depth = 1
    while frontier:
        total += depth * frontier.bit_count()
        seen |= frontier
        nxt = 0
        m = frontier
        while m:
            b = m & -m
            nxt |= adj_masks[b.bit_length() - 1]
            m ^= b
        frontier = nxt & ~seen
        depth += 1
    return total if seen == full_mask else None


def bfs_levels(adj_masks, source: int):
    """Yields (depth, frontier_mask) level by level, starting at depth 0."""
    seen = 1 << source
    frontier = seen
    depth = 0
    while frontier:
        yield depth, frontier
        nxt = 0
        m = frontier
        while m:
            b = m & -m
            nxt |= adj_masks[b.bit_length() - 1]
            m ^= b
        frontier = nxt & ~seen
        seen |= frontier
        depth += 1


def shortest_path_distances(graph: UndirectedGraph, source: int) -> list[Distance]:
    """BFS distances from source; unreachable vertices get INFINITE."""
    if not 0 <= source < graph.n:
        raise ValueError(f"source {source} out of range")
    dist: list[Distance] = [INFINITE] * graph.n
    for depth, frontier in bfs_levels(graph.masks, source):
        for v in _bits(frontier):
            dist[v] = depth
    return dist


def player_cost(profile: StrategyProfile, params: GameParams, i: int) -> CostBreakdown:
    """Exact cost split for player i: alpha*|s_i| building plus distance sum."""
    if params.n != profile.n:
        raise ValueError("profile size does not match params.n")
    adj = adjacency_masks(profile)
    return _player_cost_from_adj(profile, params, i, adj)


def _player_cost_from_adj(profile, params, i, adj) -> CostBreakdown:
    mask = profile.masks[i]
    bought = mask.bit_count()
    building = params.alpha * bought
    full = (1 << profile.n) - 1
    dsum = bfs_distance_sum(adj, i, full)
    distance: Distance = INFINITE if dsum is None else dsum
    total: Cost = INFINITE if dsum is None else building + dsum
    degree = adj[i].bit_count()
    doubles = sum(1 for j in _bits(mask) if i in profile.strategies[j])
    return CostBreakdown(building, distance, total, degree - bought, doubles)


def all_costs(profile: StrategyProfile, params: GameParams) -> list[CostBreakdown]:
    adj = adjacency_masks(profile)
    return [
        _player_cost_from_adj(profile, params, i, adj) for i in range(profile.n)
    ]


def social_cost(profile: StrategyProfile, params: GameParams) -> Cost:
    """Sum of all player totals; INFINITE when the graph is disconnected."""
    adj = adjacency_masks(profile)
    full = (1 << profile.n) - 1
    total = Fraction(0)
    for i in range(profile.n):
        dsum = bfs_distance_sum(adj, i, full)
        if dsum is None:
            return INFINITE
        total += params.alpha * profile.masks[i].bit_count() + dsum
    return total


def is_rational(profile: StrategyProfile) -> bool:
    """True when no edge is bought by both of its endpoints."""
    masks = profile.masks
    return not any(
        masks[i] >> j & 1 and masks[j] >> i & 1
        for i in range(profile.n)
        for j in _bits(masks[i])
        if j > i
    )


def normalize(profile: StrategyProfile) -> StrategyProfile:
    """Resolve doubly-bought edges: the lower-indexed player keeps the purchase.

    The result is rational and induces exactly the same graph.
    """
    masks = list(profile.masks)
    for i in range(profile.n):
        for j in _bits(masks[i]):
            if j > i and masks[j] >> i & 1:
                masks[j] &= ~(1 << i)
    return profile_from_masks(masks)


@dataclass(frozen=True)
class GraphProperties:
    diameter: Distance
    edge_count: int
    is_connected: bool
    is_tree: bool
    is_star: bool
    is_cycle: bool
    is_complete: bool


def graph_properties(graph: UndirectedGraph) -> GraphProperties:
    n = graph.n
    edge_count = sum(len(a) for a in graph.adjacency) // 2
    diameter: Distance = 0
    connected = True
    full = (1 << n) - 1
    for i in range(n):
        seen = 0
        ecc = 0
        for depth, frontier in bfs_levels(graph.masks, i):
            seen |= frontier
            ecc = depth
        if seen != full:
            connected = False
            diameter = INFINITE
            break
        if ecc > diameter:
            diameter = ecc
    is_tree = connected and edge_count == n - 1
    return GraphProperties(
        diameter=diameter,
        edge_count=edge_count,
        is_connected=connected,
        is_tree=is_tree,
        is_star=is_tree and diameter <= 2,
        is_cycle=connected and all(len(a) == 2 for a in graph.adjacency),
        is_complete=edge_count == n * (n - 1) // 2,
    )


def centroid(tree: UndirectedGraph) -> frozenset[int]:
    """The full centroid of a tree: vertices minimizing the largest component
    left after their removal.  Every member's largest component has <= n/2
    vertices."""
    props = graph_properties(tree)
    if not props.is_tree:
        raise NotATree("centroid requires a tree")
    n = tree.n
    best = n + 1
    members = []
    for v in range(n):
        worst = _largest_component_without(tree.masks, n, v)
        if worst < best:
            best = worst
            members = [v]
        elif worst == best:
            members.append(v)
    return frozenset(members)


def _largest_component_without(adj, n, v) -> int:
    removed = ~(1 << v)
    unseen = ((1 << n) - 1) & removed
    worst = 0
    while unseen:
        start = (unseen & -unseen).bit_length() - 1
        comp = 1 << start
        frontier = comp
        while frontier:
            nxt = 0
            m = frontier
            while m:
                b = m & -m
                nxt |= adj[b.bit_length() - 1]
                m ^= b
            frontier = nxt & removed & ~comp
            comp |= frontier
        worst = max(worst, comp.bit_count())
        unseen &= ~comp
    return worst


def complement_masks(graph: UndirectedGraph) -> list[int]:
    full = (1 << graph.n) - 1
    return [full & ~m & ~(1 << i) for i, m in enumerate(graph.masks)]


def complement_is_forest(graph: UndirectedGraph) -> tuple[bool, list[int] | None]:
    """Whether the complement graph is acyclic.

    When it is not, also returns one shortest complement cycle (as a vertex
    sequence, lexicographically canonical) for use as a deviation seed.
    """
    comp = complement_masks(graph)
    if _is_forest(comp, graph.n):
        return True, None
    return False, _shortest_cycle(comp, graph.n)


def _is_forest(adj, n) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in _bits(adj[i]):
            if j <= i:
                continue
            ri, rj = find(i), find(j)
            if ri == rj:
                return False
            parent[ri] = rj
    return True


def _shortest_cycle(adj, n) -> list[int]:
    # Girth search: for every edge, the shortest u-w path avoiding that edge
    # closes the shortest cycle through it.  Graphs here are small.
    best_len = None
    best_cycle = None
    for u in range(n):
        for w in _bits(adj[u]):
            if w <= u:
                continue
            path = _shortest_path_avoiding_edge(adj, n, u, w)
            if path is None:
                continue
            cycle = _canonical_cycle(path)
            if best_len is None or (len(cycle), cycle) < (best_len, best_cycle):
                best_len, best_cycle = len(cycle), cycle
    assert best_cycle is not None
    return best_cycle


def _shortest_path_avoiding_edge(adj, n, u, w):
    prev = {u: None}
    queue = [u]
    while queue:
        nxt = []
        for x in queue:
            for y in _bits(adj[x]):
                if (x, y) in ((u, w), (w, u)) or y in prev:
                    continue
                prev[y] = x
                if y == w:
                    path = [w]
                    while path[-1] is not None and prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    path.reverse()
                    return path
                nxt.append(y)
        queue = nxt
    return None


def _canonical_cycle(vertices) -> list[int]:
    k = len(vertices)
    start = vertices.index(min(vertices))
    fwd = [vertices[(start + t) % k] for t in range(k)]
    bwd = [vertices[(start - t) % k] for t in range(k)]
    return fwd if fwd[1] < bwd[1] else bwd
