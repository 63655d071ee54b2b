"""Canonical forms of strategy profiles under player relabeling.

Two canonicalizers: a brute-force minimum over all n! relabelings (used for
deduplicating exhaustive enumerations, n <= 7), and an individualization-
refinement form for the isomorphism-aware cycle detector (n <= 12, where n!
is out of reach).  Both key on the directed purchase structure, so profiles
differing only in who pays for an edge do not collide.
"""

from __future__ import annotations

import itertools
from functools import lru_cache


@lru_cache(maxsize=None)
def _perm_tables(n: int):
    """For every permutation of [n]: (perm, inverse, bitmask remap table)."""
    tables = []
    for perm in itertools.permutations(range(n)):
        inv = [0] * n
        for i, p in enumerate(perm):
            inv[p] = i
        remap = [0] * (1 << n)
        for mask in range(1 << n):
            out = 0
            m = mask
            while m:
                b = m & -m
                out |= 1 << perm[b.bit_length() - 1]
                m ^= b
            remap[mask] = out
        tables.append((perm, tuple(inv), tuple(remap)))
    return tables


def canonical_masks(masks, n: int) -> tuple[int, ...]:
    """Lexicographically least relabeling of a mask profile (brute force)."""
    if n > 7:
        raise ValueError("brute-force canonical form is limited to n <= 7")
    best = None
    for _, inv, remap in _perm_tables(n):
        key = tuple(remap[masks[inv[j]]] for j in range(n))
        if best is None or key < best:
            best = key
    return best


def canonical_key_refined(masks, n: int) -> tuple:
    """Canonical key by color refinement with individualization backtracking.

    Correct for any n; practical for n <= 12.  The key is the minimum profile
    encoding over all refinement-discrete labelings.
    """
    out = list(masks)
    inn = [0] * n
    und = [0] * n
    for i in range(n):
        m = out[i]
        while m:
            b = m & -m
            j = b.bit_length() - 1
            inn[j] |= 1 << i
            m ^= b
    for i in range(n):
        und[i] = out[i] | inn[i]

    def refine(colors):
        while True:
            sig = []
            for v in range(n):
                sig.append(
                    (
                        colors[v],
                        tuple(sorted(colors[u] for u in _bits(out[v]))),
                        tuple(sorted(colors[u] for u in _bits(inn[v]))),
                        tuple(sorted(colors[u] for u in _bits(und[v]))),
                    )
                )
            order = sorted(set(sig))
            new = [order.index(s) for s in sig]
            if new == colors:
                return colors
            colors = new

    best: list[tuple | None] = [None]

    def encode(perm_of):  # perm_of[v] = new label of v
        inv = [0] * n
        for v, lbl in enumerate(perm_of):
            inv[lbl] = v
        key = []
        for lbl in range(n):
            m = out[inv[lbl]]
            remapped = 0
            while m:
                b = m & -m
                remapped |= 1 << perm_of[b.bit_length() - 1]
                m ^= b
            key.append(remapped)
        return tuple(key)

    def search(colors):
        colors = refine(colors)
        cells: dict[int, list[int]] = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            labels = [0] * n
            for v in range(n):
                labels[v] = colors[v]
            key = encode(labels)
            if best[0] is None or key < best[0]:
                best[0] = key
            return
        for v in target:
            child = list(colors)
            child[v] = -1  # split v into its own (smallest) cell
            child = [c + 1 for c in child]
            child[v] = 0
            search(child)

    search([0] * n)
    assert best[0] is not None
    return best[0]


def _bits(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b
