"""The 3600-label pair model and its product-tree twin.

Pair labels are ordered pairs (first, second) of group elements, coded as
first * 60 + second.  A child of a node labeled (s, s') picks a uniform b and
becomes (b, b^-1 s) with probability 2/3 and (b, b^-1 s') with probability
1/3 -- i.e. a uniformly random factorization of s or of s'.

`product_tree_generate` realizes the same conditional law a second way: the
root label is implicitly the pair (product of the first half of a supplied
word, product of the second half), and each child halves its parent's
segment with a fresh uniform boundary randomizer, choosing the first-segment
branch with probability 2/3.  Per node it stores only the segment start and
the three boundary randomizers; actual labels are resolved lazily through
prefix products of the word.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..channels import cut63
from ..labels import LabelArray
from ..rng import SeedSpec, level_words, trial_keys, trial_level_words
from ..trees import TreeShape
from .group import A5

_TWO_THIRDS_CUT = np.uint64(cut63(Fraction(2, 3)))


def pair_code(first: int, second: int) -> int:
    return first * 60 + second


def pair_decode(code: int) -> tuple[int, int]:
    return code // 60, code % 60


_UNIFORM60_CUTS = np.array(
    [cut63(Fraction(i + 1, 60)) for i in range(59)], dtype=np.uint64
)


def _uniform60(w: np.ndarray) -> np.ndarray:
    """Uniform element indices from 64-bit words via the fixed-point cuts."""
    w63 = w >> np.uint64(1)
    return np.searchsorted(_UNIFORM60_CUTS, w63, side="right").astype(np.uint8)


def generate_pair_model(
    shape: TreeShape, seed: SeedSpec, root: int | None = None
) -> LabelArray:
    """Sample the pair-label broadcast process; root uniform when unspecified."""
    key = seed.key()
    if root is None:
        w = level_words(key, 0, 1, word_index=0)
        b = int(_uniform60(w)[0])
        w2 = level_words(key, 0, 1, word_index=1)
        s = int(_uniform60(w2)[0])
        root = pair_code(b, s)
    if not 0 <= root < 3600:
        raise ValueError(f"root pair code {root} outside [0, 3600)")
    mul = A5.mul
    inv = A5.inv
    levels = [np.array([root], dtype=np.uint16)]
    for lvl in range(1, shape.d + 1):
        count = shape.nodes_at(lvl)
        parents = np.repeat(levels[-1], shape.k)
        first = (parents // 60).astype(np.uint8)
        second = (parents % 60).astype(np.uint8)
        b = _uniform60(level_words(key, lvl, count, word_index=0))
        branch = (level_words(key, lvl, count, word_index=1) >> np.uint64(1)) < _TWO_THIRDS_CUT
        target = np.where(branch, first, second)
        child_second = mul[inv[b], target]
        codes = b.astype(np.uint16) * 60 + child_second.astype(np.uint16)
        levels.append(codes)
    return LabelArray(shape=shape, m=3600, levels=levels)


def pair_model_child_law(root_code: int) -> dict[int, Fraction]:
    """Exact one-child law given the parent pair, over pair codes."""
    first, second = pair_decode(root_code)
    law: dict[int, Fraction] = {}
    for b in range(60):
        c1 = pair_code(b, int(A5.mul[A5.inv[b], first]))
        law[c1] = law.get(c1, Fraction(0)) + Fraction(2, 180)
        c2 = pair_code(b, int(A5.mul[A5.inv[b], second]))
        law[c2] = law.get(c2, Fraction(0)) + Fraction(1, 180)
    return law


# --- product-tree construction --------------------------------------------


def _prefix_products(sigma: np.ndarray) -> np.ndarray:
    """pref[i] = sigma_0 ... sigma_{i-1} (pref[0] = identity)."""
    pref = np.empty(len(sigma) + 1, dtype=np.uint8)
    pref[0] = A5.identity
    for i, g in enumerate(sigma):
        pref[i + 1] = A5.mul[pref[i], g]
    return pref


def _segment_product(pref: np.ndarray, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    """Product sigma_start ... sigma_{stop-1} = pref[start]^-1 pref[stop]."""
    return A5.mul[A5.inv[pref[start]], pref[stop]]


def product_tree_generate(
    d: int,
    sigma,
    k: int,
    seed: SeedSpec,
) -> LabelArray:
    """Sample the product-tree construction for a word of length 2^(d+1).

    Node state is (segment start j, boundary randomizers x, y, z); the label
    at tree level l is (x * seg(j, j+H) * y, y^-1 * seg(j+H, j+2H) * z) with
    H = 2^(d-l).  The root's randomizers are identities, so its label is the
    pair of half-word products.
    """
    levels = _product_tree_levels(d, sigma, k, seed, trees=1)
    shape = TreeShape(k=k, d=d)
    return LabelArray(shape=shape, m=3600, levels=[lvl[0] for lvl in levels])


def _product_tree_levels(
    d: int, sigma, k: int, seed: SeedSpec, trees: int
) -> list[np.ndarray]:
    """Batch sampler; returns per-level arrays of pair codes, shape (trees, k^l)."""
    sigma = np.asarray(sigma, dtype=np.uint8)
    if len(sigma) != 2 ** (d + 1):
        raise ValueError(f"word length must be 2^(d+1) = {2 ** (d + 1)}, got {len(sigma)}")
    if sigma.size and int(sigma.max()) >= 60:
        raise ValueError("word entries must be element indices in [0, 60)")
    tkeys = trial_keys(seed.key(), trees)
    mul = A5.mul
    inv = A5.inv
    pref = _prefix_products(sigma)

    ident = A5.identity
    j = np.zeros((trees, 1), dtype=np.int64)
    x = np.full((trees, 1), ident, dtype=np.uint8)
    y = np.full((trees, 1), ident, dtype=np.uint8)
    z = np.full((trees, 1), ident, dtype=np.uint8)

    def resolve(level: int) -> np.ndarray:
        H = 1 << (d - level)
        first = mul[mul[x, _segment_product(pref, j, j + H)], y]
        second = mul[mul[inv[y], _segment_product(pref, j + H, j + 2 * H)], z]
        return first.astype(np.uint16) * 60 + second.astype(np.uint16)

    out = [resolve(0)]
    for level in range(1, d + 1):
        count = k**level
        H = 1 << (d - level + 1)  # parent half-length
        j = np.repeat(j, k, axis=1)
        x = np.repeat(x, k, axis=1)
        y = np.repeat(y, k, axis=1)
        z = np.repeat(z, k, axis=1)
        b3 = _uniform60(trial_level_words(tkeys, level, count, word_index=0))
        branch = (
            trial_level_words(tkeys, level, count, word_index=1) >> np.uint64(1)
        ) < _TWO_THIRDS_CUT
        take_second = ~branch
        j = j + np.where(take_second, H, 0)
        x_new = np.where(take_second, inv[y], x)
        z_new = np.where(take_second, z, y)
        x, y, z = x_new.astype(np.uint8), b3, z_new.astype(np.uint8)
        out.append(resolve(level))
    return out


def product_tree_child_law(sigma) -> dict[int, Fraction]:
    """Exact one-child law of the depth-1 product tree for a length-4 word."""
    sigma = np.asarray(sigma, dtype=np.uint8)
    if len(sigma) != 4:
        raise ValueError("the depth-1 child law needs a length-4 word")
    law: dict[int, Fraction] = {}
    for b in range(60):
        first = pair_code(int(A5.mul[sigma[0], b]), int(A5.mul[A5.inv[b], sigma[1]]))
        law[first] = law.get(first, Fraction(0)) + Fraction(2, 180)
        second = pair_code(int(A5.mul[sigma[2], b]), int(A5.mul[A5.inv[b], sigma[3]]))
        law[second] = law.get(second, Fraction(0)) + Fraction(1, 180)
    return law
