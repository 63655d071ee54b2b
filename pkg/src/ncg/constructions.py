"""Deterministic generators for the profile families under study."""

from __future__ import annotations

from dataclasses import dataclass

from .core import StrategyProfile


class InvalidPattern(ValueError):
    pass


class InvalidParams(ValueError):
    pass


@dataclass(frozen=True)
class BuyerPattern:
    """Who pays for each edge of a named shape.

    kind: leaves-buy | center-buys | mixed (stars; `mask` bit t set means the
    center buys the edge to leaf t+1), each-buys-next | each-buys-prev |
    alternating (cycles), lower-buys | upper-buys | alternating (paths),
    lowest-buys | highest-buys (complete).  Every pattern yields a rational
    profile.
    """

    kind: str
    mask: int = 0

    @staticmethod
    def parse(text: str) -> "BuyerPattern":
        if text.startswith("mixed:"):
            return BuyerPattern("mixed", int(text.split(":", 1)[1]))
        return BuyerPattern(text)


_SHAPE_PATTERNS = {
    "star": {"leaves-buy", "center-buys", "mixed"},
    "cycle": {"each-buys-next", "each-buys-prev", "alternating"},
    "path": {"lower-buys", "upper-buys", "alternating"},
    "complete": {"lowest-buys", "highest-buys"},
}


def make_standard(shape: str, n: int, pattern: BuyerPattern | str) -> StrategyProfile:
    """Rational profile whose graph is a star, cycle, path or complete graph.

    Stars are centered at player 0.  Cycle and path edges run along the
    player order.
    """
    if isinstance(pattern, str):
        pattern = BuyerPattern.parse(pattern)
    if n < 3:
        raise InvalidParams("need n >= 3")
    allowed = _SHAPE_PATTERNS.get(shape)
    if allowed is None:
        raise InvalidPattern(f"unknown shape {shape!r}")
    if pattern.kind not in allowed:
        raise InvalidPattern(f"pattern {pattern.kind!r} does not apply to a {shape}")

    strat = [set() for _ in range(n)]
    if shape == "star":
        if pattern.kind == "leaves-buy":
            center_mask = 0
        elif pattern.kind == "center-buys":
            center_mask = (1 << (n - 1)) - 1
        else:
            center_mask = pattern.mask
            if not 0 <= center_mask < (1 << (n - 1)):
                raise InvalidPattern(f"mixed mask {center_mask} out of range")
        for leaf in range(1, n):
            if center_mask >> (leaf - 1) & 1:
                strat[0].add(leaf)
            else:
                strat[leaf].add(0)
    elif shape == "cycle":
        for i in range(n):
            j = (i + 1) % n
            if pattern.kind == "each-buys-next":
                strat[i].add(j)
            elif pattern.kind == "each-buys-prev":
                strat[j].add(i)
            else:
                buyer, other = (i, j) if i % 2 == 0 else (j, i)
                strat[buyer].add(other)
    elif shape == "path":
        for i in range(n - 1):
            j = i + 1
            if pattern.kind == "lower-buys":
                strat[i].add(j)
            elif pattern.kind == "upper-buys":
                strat[j].add(i)
            else:
                buyer, other = (i, j) if i % 2 == 0 else (j, i)
                strat[buyer].add(other)
    else:  # complete
        for i in range(n):
            for j in range(i + 1, n):
                if pattern.kind == "lowest-buys":
                    strat[i].add(j)
                else:
                    strat[j].add(i)
    return StrategyProfile(tuple(frozenset(s) for s in strat))


def star_profile(n: int, center_buys: int = 0) -> StrategyProfile:
    """Star at player 0; bit t of center_buys = center pays for leaf t+1."""
    return make_standard("star", n, BuyerPattern("mixed", center_buys))


# ---------------------------------------------------------------------------
# the diameter-4 tree family


@dataclass(frozen=True)
class Example1Params:
    """Parameters of the diameter-4 tree family: A >= 4, k >= 1, n = A*k + 2.

    Players (0-based): middles 0..A-2, first-tier leaves L1 next (empty when
    k = 1), root-bought leaves L2 after them, root R = n-1.
    """

    A: int
    k: int

    def __post_init__(self):
        if self.A < 4:
            raise InvalidParams("need A >= 4")
        if self.k < 1:
            raise InvalidParams("need k >= 1")

    @property
    def n(self) -> int:
        return self.A * self.k + 2

    @property
    def root(self) -> int:
        return self.n - 1

    @property
    def middles(self) -> range:
        return range(self.A - 1)

    @property
    def l1(self) -> range:
        return range(self.A - 1, (self.A - 1) * self.k)

    @property
    def l2(self) -> range:
        return range((self.A - 1) * self.k, self.n - 1)

    def distance_costs(self) -> dict[str, int]:
        """Per-class distance sums: root, middles, L2, L1."""
        n, a, k = self.n, self.A, self.k
        return {
            "root": 2 * n - a - k - 2,
            "middle": 3 * n - a - 3 * k - 2,
            "l2": 3 * n - a - k - 4,
            "l1": 4 * n - a - 3 * k - 4,
        }

    def class_of(self, i: int) -> str:
        if i == self.root:
            return "root"
        if i in self.middles:
            return "middle"
        if i in self.l1:
            return "l1"
        return "l2"


def make_example1(p: Example1Params) -> StrategyProfile:
    """The diameter-4 tree: R buys the k+1 leaves of L2; every middle player
    buys an edge to R plus a contiguous block of k-1 private L1 leaves."""
    n = p.n
    strat = [set() for _ in range(n)]
    l1 = list(p.l1)
    for t, m in enumerate(p.middles):
        strat[m].add(p.root)
        for leaf in l1[t * (p.k - 1) : (t + 1) * (p.k - 1)]:
            strat[m].add(leaf)
    for leaf in p.l2:
        strat[p.root].add(leaf)
    return StrategyProfile(tuple(frozenset(s) for s in strat))


# ---------------------------------------------------------------------------
# Hoffman-Singleton


def _hs_edges() -> list[tuple[int, int]]:
    """Pentagon/pentagram construction: 50 vertices, 175 edges, 7-regular.

    Pentagons P_h (vertices 5h+j) with edges j ~ j+1, pentagrams Q_i
    (vertices 25+5i+j) with edges j ~ j+2, and cross edges
    P_{h,j} ~ Q_{i, (h*i+j) mod 5}.
    """
    edges = []
    for h in range(5):
        for j in range(5):
            edges.append((5 * h + j, 5 * h + (j + 1) % 5))
    for i in range(5):
        for j in range(5):
            edges.append((25 + 5 * i + j, 25 + 5 * i + (j + 2) % 5))
    for h in range(5):
        for j in range(5):
            for i in range(5):
                edges.append((5 * h + j, 25 + 5 * i + (h * i + j) % 5))
    return [(min(u, v), max(u, v)) for u, v in edges]


def _bipartite_matching(adj: list[list[int]], n_right: int) -> list[int]:
    """Kuhn's augmenting-path matching, deterministic in index order.

    adj[left] lists right-neighbors ascending; returns match_left (right index
    per left, all matched; the caller guarantees a perfect matching exists).
    """
    match_right = [-1] * n_right

    def try_augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if match_right[v] < 0 or try_augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in range(len(adj)):
        if not try_augment(u, set()):
            raise RuntimeError("no perfect matching; construction broken")
    match_left = [-1] * len(adj)
    for v, u in enumerate(match_right):
        match_left[u] = v
    return match_left


def make_hoffman_singleton() -> StrategyProfile:
    """The Hoffman-Singleton graph with a fixed purchase orientation.

    Pentagon and pentagram ring edges point forward; cross edges split by a
    degree-constrained assignment (two perfect matchings of the 5-regular
    cross graph) so every pentagon vertex buys 3 edges and every pentagram
    vertex buys 4, i.e. 25 players of each out-degree.
    """
    n = 50
    strat = [set() for _ in range(n)]
    for h in range(5):
        for j in range(5):
            strat[5 * h + j].add(5 * h + (j + 1) % 5)
    for i in range(5):
        for j in range(5):
            strat[25 + 5 * i + j].add(25 + 5 * i + (j + 2) % 5)

    cross = [[] for _ in range(25)]  # P-vertex index -> list of Q-vertex indices
    for h in range(5):
        for j in range(5):
            for i in range(5):
                cross[5 * h + j].append(5 * i + (h * i + j) % 5)
    for row in cross:
        row.sort()

    remaining = [list(row) for row in cross]
    p_buys: list[set[int]] = [set() for _ in range(25)]
    for _ in range(2):  # two matchings -> every P vertex buys exactly 2 cross edges
        match = _bipartite_matching(remaining, 25)
        for u, v in enumerate(match):
            p_buys[u].add(v)
            remaining[u].remove(v)

    for u in range(25):
        for v in cross[u]:
            if v in p_buys[u]:
                strat[u].add(25 + v)
            else:
                strat[25 + v].add(u)
    return StrategyProfile(tuple(frozenset(s) for s in strat))


# ---------------------------------------------------------------------------
# the 3-player improvement-cycle profile


def make_cfip3_profile(n: int = 3) -> StrategyProfile:
    """Player 0 buys to 1, player 2 buys to 0; extra players buy to {0,1,2}.

    The coalition {1,2} switching to (buy 2, buy nothing) improves both
    members yet lands on a relabeling of the start, so coalition dynamics can
    cycle forever (for alpha < 1)."""
    if n < 3:
        raise InvalidParams("need n >= 3")
    strat = [{1}, set(), {0}] + [{0, 1, 2} for _ in range(n - 3)]
    return StrategyProfile(tuple(frozenset(s) for s in strat))


def cfip3_cycle_moves() -> list[tuple[tuple[int, ...], tuple[frozenset[int], ...]]]:
    """Three conjugates of the improving move; replaying all three returns the
    cfip3 profile to its exact starting state (the move is a relabeling by a
    3-cycle, whose cube is the identity)."""
    rho = {0: 1, 1: 2, 2: 0}
    movers: tuple[int, ...] = (1, 2)
    strats: tuple[frozenset[int], ...] = (frozenset({2}), frozenset())
    moves = []
    for _ in range(3):
        moves.append((movers, strats))
        mapped = {rho[i]: frozenset(rho[j] for j in s) for i, s in zip(movers, strats)}
        movers = tuple(sorted(mapped))
        strats = tuple(mapped[i] for i in movers)
    return moves
