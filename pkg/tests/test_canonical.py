from __future__ import annotations

import random

from conftest import random_profile
from ncg.canonical import canonical_key_refined, canonical_masks


def _relabel(masks, perm):
    n = len(masks)
    out = [0] * n
    for i, m in enumerate(masks):
        remapped = 0
        mm = m
        while mm:
            b = mm & -mm
            remapped |= 1 << perm[b.bit_length() - 1]
            mm ^= b
        out[perm[i]] = remapped
    return tuple(out)


def test_canonical_masks_invariant_under_relabeling():
    rng = random.Random(9)
    for _ in range(150):
        n = rng.randint(3, 6)
        prof = random_profile(n, rng, density=rng.uniform(0.2, 0.8))
        perm = list(range(n))
        rng.shuffle(perm)
        relabeled = _relabel(prof.masks, perm)
        assert canonical_masks(prof.masks, n) == canonical_masks(relabeled, n)


def test_canonical_masks_separates_orientations():
    a = (0b010, 0b000, 0b000)  # 0 buys the edge to 1
    b = (0b000, 0b001, 0b000)  # 1 buys it: same graph, same class
    c = (0b010, 0b001, 0b000)  # both buy it: a different profile class
    assert canonical_masks(a, 3) == canonical_masks(b, 3)
    assert canonical_masks(a, 3) != canonical_masks(c, 3)


def test_refined_key_matches_bruteforce_on_small_n():
    rng = random.Random(10)
    for _ in range(200):
        n = rng.randint(3, 6)
        prof = random_profile(n, rng, density=rng.uniform(0.1, 0.9))
        perm = list(range(n))
        rng.shuffle(perm)
        relabeled = _relabel(prof.masks, perm)
        assert canonical_key_refined(prof.masks, n) == canonical_key_refined(relabeled, n)
        # the refined key must separate exactly the same classes as brute force
        other = random_profile(n, rng, density=rng.uniform(0.1, 0.9))
        same_brute = canonical_masks(prof.masks, n) == canonical_masks(other.masks, n)
        same_refined = canonical_key_refined(prof.masks, n) == canonical_key_refined(other.masks, n)
        assert same_brute == same_refined


def test_refined_key_handles_larger_n():
    rng = random.Random(12)
    prof = random_profile(12, rng, density=0.3)
    perm = list(range(12))
    rng.shuffle(perm)
    relabeled = _relabel(prof.masks, perm)
    assert canonical_key_refined(prof.masks, 12) == canonical_key_refined(relabeled, 12)
