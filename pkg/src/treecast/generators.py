"""Generation mechanisms for broadcast processes on trees.

Three provably equivalent generators for the binary process are exposed as
first-class citizens, not test scaffolding:

* `generate_direct` walks the tree top-down drawing each child from its
  parent's channel column (works for any label count);
* `generate_path_product` draws one flip bit per node and XORs bits along
  root-to-leaf paths;
* `generate_via_restrictions` composes per-level random restrictions with
  symbols in {0, 1, *}, where * copies the parent's value.

Their exact leaf laws coincide; `*_leaf_law` functions enumerate each
generator's own randomness (flip bits, restriction symbols) so the
equivalence can be checked in rational arithmetic with zero tolerance.

Also here: the leaf noise channel, survival counting under composed
restrictions, and the exact/approximate biased-bit samplers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .channels import Channel, FractionLike, as_fraction, cut63, uniform_cuts
from .labels import LabelArray, code_dtype
from .oracle import LeafLaw
from .rng import (
    SeedSpec,
    bits_from_word,
    level_words,
    subkey,
    trial_keys,
    trial_level_words,
    word,
    words_vec,
)
from .trees import TreeShape

STAR = 2  # restriction symbol codes: 0, 1, STAR


@dataclass(frozen=True)
class Restriction:
    """One level's restriction symbols; values in {0, 1, STAR}."""

    symbols: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.symbols, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if len(arr) and int(arr.max()) > STAR:
            raise ValueError("symbols must lie in {0, 1, 2}")
        object.__setattr__(self, "symbols", arr)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-leaf independent symmetric flip probability."""

    s: Fraction

    def __post_init__(self) -> None:
        s = as_fraction(self.s)
        if not 0 <= s <= Fraction(1, 2):
            raise ValueError(f"flip probability must lie in [0, 1/2], got {s}")
        object.__setattr__(self, "s", s)


def _sample_root(key: int, m: int, root: int | None) -> int:
    if root is not None:
        if not 0 <= root < m:
            raise ValueError(f"root label {root} outside [0, {m})")
        return root
    w63 = level_words(key, 0, 1) >> np.uint64(1)
    return int(np.searchsorted(uniform_cuts(m), w63[0], side="right"))


def generate_direct(
    shape: TreeShape,
    channel: Channel,
    seed: SeedSpec,
    root: int | None = None,
) -> LabelArray:
    """Sample the broadcast process by drawing each child from its parent's column."""
    m = channel.m
    dtype = code_dtype(m)
    key = seed.key()
    cuts = channel.sampling_cuts()
    levels = [np.array([_sample_root(key, m, root)], dtype=dtype)]
    for lvl in range(1, shape.d + 1):
        count = shape.nodes_at(lvl)
        parents = np.repeat(levels[-1], shape.k)
        w63 = level_words(key, lvl, count) >> np.uint64(1)
        out = np.empty(count, dtype=dtype)
        for v in range(m):
            mask = parents == v
            if mask.any():
                out[mask] = np.searchsorted(cuts[v], w63[mask], side="right")
        levels.append(out)
    return LabelArray(shape=shape, m=m, levels=levels)


def generate_path_product(
    shape: TreeShape,
    theta: FractionLike,
    seed: SeedSpec,
    root: int | None = None,
) -> LabelArray:
    """Sample the binary process from per-node flip bits XORed along paths.

    Each non-root node carries an independent Bernoulli((1-theta)/2) flip
    bit; a node's label is the root XOR the flip bits on its path.
    """
    t = as_fraction(theta)
    if not -1 <= t <= 1:
        raise ValueError(f"theta must lie in [-1, 1], got {t}")
    key = seed.key()
    flip_cut = np.uint64(cut63((1 - t) / 2))
    levels = [np.array([_sample_root(key, 2, root)], dtype=np.uint8)]
    for lvl in range(1, shape.d + 1):
        count = shape.nodes_at(lvl)
        w63 = level_words(key, lvl, count) >> np.uint64(1)
        flips = (w63 < flip_cut).astype(np.uint8)
        levels.append(np.repeat(levels[-1], shape.k) ^ flips)
    return LabelArray(shape=shape, m=2, levels=levels)


def sample_restriction(
    count: int, theta: FractionLike, seed: SeedSpec, level: int
) -> Restriction:
    """Draw `count` symbols: 0 and 1 with probability (1-theta)/2 each, * with theta."""
    t = as_fraction(theta)
    if not 0 <= t <= 1:
        raise ValueError(f"restriction distributions need theta in [0, 1], got {t}")
    c0 = np.uint64(cut63((1 - t) / 2))
    c1 = np.uint64(cut63(1 - t))
    w63 = level_words(seed.key(), level, count) >> np.uint64(1)
    sym = np.full(count, STAR, dtype=np.uint8)
    sym[w63 < c1] = 1
    sym[w63 < c0] = 0
    return Restriction(symbols=sym)


def apply_restriction(x: np.ndarray, r: Restriction, k: int) -> np.ndarray:
    """Fill one level: child v gets r_v when r_v is a constant, else its parent's label."""
    x = np.asarray(x, dtype=np.uint8)
    if len(r) != k * len(x):
        raise ValueError(
            f"restriction has {len(r)} symbols for {len(x)} parents of arity {k}"
        )
    out = np.repeat(x, k)
    const = r.symbols != STAR
    out[const] = r.symbols[const]
    return out


def generate_via_restrictions(
    shape: TreeShape,
    theta: FractionLike,
    seed: SeedSpec,
    root: int | None = None,
) -> LabelArray:
    """Sample the binary process as a composition of per-level restrictions."""
    key = seed.key()
    levels = [np.array([_sample_root(key, 2, root)], dtype=np.uint8)]
    for lvl in range(1, shape.d + 1):
        r = sample_restriction(shape.nodes_at(lvl), theta, seed, lvl)
        levels.append(apply_restriction(levels[-1], r, shape.k))
    return LabelArray(shape=shape, m=2, levels=levels)


def live_inputs_after(
    shape: TreeShape,
    tracked: set[int] | list[int],
    h: int,
    theta: FractionLike,
    seed: SeedSpec,
    trial: int = 0,
) -> int:
    """Count distinct variables still affecting the tracked leaves after h rounds.

    A tracked input survives one composed restriction iff its symbol is *, in
    which case its dependence moves to the parent variable; survivors landing
    on the same ancestor merge.
    """
    if h < 0 or h > shape.d:
        raise ValueError(f"rounds h must lie in [0, {shape.d}]")
    tracked = sorted(set(int(i) for i in tracked))
    if tracked and (tracked[0] < 0 or tracked[-1] >= shape.n):
        raise ValueError("tracked indices must be leaf indices")
    t = as_fraction(theta)
    if not 0 <= t <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {t}")
    star_cut = np.uint64(cut63(t))
    key = subkey(seed.key(), trial)
    live = np.asarray(tracked, dtype=np.int64)
    for round_idx in range(h):
        level = shape.d - round_idx
        if len(live) == 0:
            break
        ctrs = (live.astype(np.uint64) * np.uint64(64) + np.uint64(level)) * np.uint64(4)
        w63 = words_vec(key, ctrs) >> np.uint64(1)
        live = np.unique(live[w63 < star_cut] // shape.k)
    return int(len(live))


def add_leaf_noise(x: LabelArray, spec: NoiseSpec, seed: SeedSpec) -> LabelArray:
    """Flip each leaf independently with probability s; inner levels untouched.

    Pass a stream tag distinct from the generator's (e.g. "noise"), so the
    flip pattern does not reuse the words that produced the labels.
    """
    if x.m != 2:
        raise ValueError("leaf noise is defined for binary labels only")
    cut = np.uint64(cut63(spec.s))
    w63 = level_words(seed.key(), x.shape.d, len(x.leaves)) >> np.uint64(1)
    flips = (w63 < cut).astype(np.uint8)
    levels = [lvl.copy() for lvl in x.levels]
    levels[-1] = levels[-1] ^ flips
    return LabelArray(shape=x.shape, m=2, levels=levels)


# --- biased-bit samplers ------------------------------------------------


def dyadic_exponent(theta: Fraction) -> int:
    """Smallest b with theta * 2^b integral; raises for non-dyadic theta."""
    den = theta.denominator
    b = den.bit_length() - 1
    if den != (1 << b):
        raise ValueError(
            f"theta = {theta} is not dyadic; use biased_bit_approx for general biases"
        )
    return b


def biased_bit_exact_from_bits(theta: FractionLike, bits: list[int]) -> int:
    """Exact Bernoulli((1+theta)/2) bit from b+1 fair bits, theta = a/2^b.

    Reads the leading b+1 bits as an integer u in [0, 2^(b+1)) and returns
    1 iff u < 2^b + a; exactly 2^b + a of the 2^(b+1) inputs map to 1.
    """
    t = as_fraction(theta)
    if not 0 <= t < 1:
        raise ValueError(f"theta must lie in [0, 1), got {t}")
    b = dyadic_exponent(t)
    a = t.numerator * ((1 << b) // t.denominator)
    need = b + 1
    if len(bits) < need:
        raise ValueError(f"need {need} bits for theta = {t}, got {len(bits)}")
    u = 0
    for bit in bits[:need]:
        u = (u << 1) | (bit & 1)
    return 1 if u < (1 << b) + a else 0


def biased_bit_exact(theta: FractionLike, seed: SeedSpec, draw: int = 0) -> int:
    """Exact dyadic-bias coin using the counter stream at index `draw`."""
    t = as_fraction(theta)
    b = dyadic_exponent(t)
    w = word(seed.key(), draw)
    return biased_bit_exact_from_bits(t, bits_from_word(w, b + 1))


def biased_bit_approx_from_bits(theta: FractionLike, t_bits: int, bits: list[int]) -> int:
    """Threshold t_bits fair bits against (1+theta)/2; bias error <= 2^-t_bits."""
    if t_bits < 1:
        raise ValueError("bit budget must be >= 1")
    th = as_fraction(theta)
    if not -1 <= th <= 1:
        raise ValueError(f"theta must lie in [-1, 1], got {th}")
    if len(bits) < t_bits:
        raise ValueError(f"need {t_bits} bits, got {len(bits)}")
    u = 0
    for bit in bits[:t_bits]:
        u = (u << 1) | (bit & 1)
    p = (1 + th) / 2
    cut = -((-p.numerator << t_bits) // p.denominator)  # ceil(p * 2^t)
    return 1 if u < cut else 0


def biased_bit_approx(theta: FractionLike, t_bits: int, seed: SeedSpec, draw: int = 0) -> int:
    if t_bits > 64:
        raise ValueError("bit budgets above 64 are not supported")
    w = word(seed.key(), draw)
    return biased_bit_approx_from_bits(theta, t_bits, bits_from_word(w, t_bits))


# --- batched sampling for Monte Carlo ------------------------------------


def generate_binary_batch(
    shape: TreeShape,
    theta: FractionLike,
    seed: SeedSpec,
    trials: int,
    method: str = "direct",
    roots: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample `trials` independent trees at once; returns (roots, leaves).

    `leaves` has shape (trials, n).  Methods mirror the three single-tree
    generators' randomness (column draw, path-product flip bits, restriction
    symbols); each trial consumes its own derived key, so trees are
    independent streams and results do not depend on batch boundaries or the
    trial count.
    """
    t = as_fraction(theta)
    tkeys = trial_keys(seed.key(), trials)
    if roots is None:
        root_words = trial_level_words(tkeys, 0, 1)[:, 0]
        roots = ((root_words >> np.uint64(1)) >= np.uint64(cut63(Fraction(1, 2)))).astype(np.uint8)
    else:
        roots = np.asarray(roots, dtype=np.uint8)
        if roots.shape != (trials,):
            raise ValueError("roots must have one entry per trial")
    labels = roots.reshape(-1, 1)
    keep_cut = np.uint64(cut63((1 + t) / 2))
    flip_cut = np.uint64(cut63((1 - t) / 2))
    const1_cut = np.uint64(cut63(1 - t))  # restriction: below flip_cut is 0, below this is 1
    for lvl in range(1, shape.d + 1):
        count = shape.nodes_at(lvl)
        w63 = trial_level_words(tkeys, lvl, count) >> np.uint64(1)
        parents = np.repeat(labels, shape.k, axis=1)
        if method == "direct":
            # Column draw: the keep probability is (1+theta)/2 for both columns.
            labels = np.where(w63 < keep_cut, parents, parents ^ 1)
        elif method == "path":
            labels = parents ^ (w63 < flip_cut).astype(np.uint8)
        elif method == "restrictions":
            if t < 0:
                raise ValueError("restriction sampling needs theta in [0, 1]")
            labels = np.where(w63 < flip_cut, 0, np.where(w63 < const1_cut, 1, parents))
            labels = labels.astype(np.uint8)
        else:
            raise ValueError(f"unknown method {method!r}")
    return roots, labels


# --- exact per-generator leaf laws ---------------------------------------


def _level_sizes(shape: TreeShape) -> list[int]:
    return [shape.nodes_at(lvl) for lvl in range(shape.d + 1)]


def path_product_leaf_law(shape: TreeShape, theta: FractionLike, root: int) -> LeafLaw:
    """Exact leaf law of the path-product generator, by enumerating flip bits."""
    t = as_fraction(theta)
    p_flip = (1 - t) / 2
    law: LeafLaw = {(root,): Fraction(1)}
    for lvl in range(1, shape.d + 1):
        count = shape.nodes_at(lvl)
        nxt: LeafLaw = {}
        for cfg, pr in law.items():
            parents = np.repeat(np.array(cfg, dtype=np.uint8), shape.k)
            for flips in product((0, 1), repeat=count):
                w = pr
                for f in flips:
                    w *= p_flip if f else 1 - p_flip
                child = tuple(int(p ^ f) for p, f in zip(parents, flips))
                nxt[child] = nxt.get(child, Fraction(0)) + w
        law = nxt
    return law


def restriction_leaf_law(shape: TreeShape, theta: FractionLike, root: int) -> LeafLaw:
    """Exact leaf law of the restriction generator, by enumerating symbols."""
    t = as_fraction(theta)
    p_const = (1 - t) / 2
    p_star = t
    law: LeafLaw = {(root,): Fraction(1)}
    for lvl in range(1, shape.d + 1):
        count = shape.nodes_at(lvl)
        nxt: LeafLaw = {}
        for cfg, pr in law.items():
            parents = np.repeat(np.array(cfg, dtype=np.uint8), shape.k)
            for syms in product((0, 1, STAR), repeat=count):
                w = pr
                for s in syms:
                    w *= p_star if s == STAR else p_const
                if w == 0:
                    continue
                child = tuple(
                    int(parents[i]) if s == STAR else s for i, s in enumerate(syms)
                )
                nxt[child] = nxt.get(child, Fraction(0)) + w
        law = nxt
    return law


def total_variation(a: LeafLaw, b: LeafLaw) -> Fraction:
    keys = set(a) | set(b)
    return sum(
        (abs(a.get(x, Fraction(0)) - b.get(x, Fraction(0))) for x in keys), Fraction(0)
    ) / 2
