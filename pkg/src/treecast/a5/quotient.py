"""The 16-label conjugacy-class quotient of the pair model.

Labels are ordered pairs of class codes, coded c1 * 4 + c2.  A child of a
node labeled (C1, C2) is produced by drawing sigma from class C1 with
probability 2/3 (else C2), splitting it uniformly as sigma' * sigma'' =
sigma, and recording the pair of classes of the factors.

`quotient_channel` builds the 16x16 transmission matrix exactly by
enumerating the 60 splits of one representative per class, after verifying
the lumpability condition that makes representatives sufficient: for every
target part, the mass a column sends into that part is constant across the
pair labels inside each source part.  The resulting matrix is column
stochastic with identical columns in its square, hence a second eigenvalue
of exactly zero.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..channels import Channel
from ..rng import SeedSpec
from .group import A5, classify
from .pair_model import pair_code, pair_decode, pair_model_child_law


def class_pair_code(c1: int, c2: int) -> int:
    if not (0 <= c1 < 4 and 0 <= c2 < 4):
        raise ValueError("class codes lie in [0, 4)")
    return c1 * 4 + c2


def class_pair_decode(code: int) -> tuple[int, int]:
    return code // 4, code % 4


def pair_to_class_pair(code: int) -> int:
    first, second = pair_decode(code)
    return class_pair_code(classify(first), classify(second))


def _part_mass_vector(pair_label: int) -> tuple[Fraction, ...]:
    """Mass the pair-model child law of `pair_label` sends into each of the
    16 class-pair parts."""
    out = [Fraction(0)] * 16
    for child, p in pair_model_child_law(pair_label).items():
        out[pair_to_class_pair(child)] += p
    return tuple(out)


def _split_class_counts(class_code: int) -> list[list[int]]:
    """counts[c1][c2] of splits sigma' * sigma'' = rep over the 60 choices of
    sigma', for one representative of the class."""
    rep = A5.elements_of_class(class_code)[0]
    counts = [[0] * 4 for _ in range(4)]
    for sp in range(60):
        spp = int(A5.mul[A5.inv[sp], rep])
        counts[classify(sp)][classify(spp)] += 1
    return counts


@lru_cache(maxsize=1)
def quotient_channel() -> Channel:
    """Exact 16x16 class-pair transmission matrix, lumpability verified.

    Raises if the lumpability condition fails (which would falsify the
    quotient construction): representatives of every part are checked against
    all 16 parts, and all members of two fixed parts are cross-checked.
    """
    # Lumpability over representatives: for every part, two distinct members
    # (when the part has more than one) must send identical mass vectors.
    rep_vectors: dict[int, tuple[Fraction, ...]] = {}
    for c1 in range(4):
        for c2 in range(4):
            part = class_pair_code(c1, c2)
            members1 = A5.elements_of_class(c1)
            members2 = A5.elements_of_class(c2)
            vec = _part_mass_vector(pair_code(members1[0], members2[0]))
            alt = _part_mass_vector(pair_code(members1[-1], members2[-1]))
            if alt != vec:
                raise AssertionError(f"lumpability fails across members of part {(c1, c2)}")
            rep_vectors[part] = vec
    # Cross-check every member of two parts (one diagonal, one off-diagonal).
    for part in (class_pair_code(2, 2), class_pair_code(3, 1)):
        c1, c2 = class_pair_decode(part)
        expect = rep_vectors[part]
        for g1 in A5.elements_of_class(c1):
            for g2 in A5.elements_of_class(c2):
                if _part_mass_vector(pair_code(g1, g2)) != expect:
                    raise AssertionError(
                        f"lumpability fails inside part {(c1, c2)} at pair ({g1}, {g2})"
                    )

    split = [_split_class_counts(c) for c in range(4)]
    columns = []
    for c1 in range(4):
        for c2 in range(4):
            col = [Fraction(0)] * 16
            for a1 in range(4):
                for a2 in range(4):
                    col[class_pair_code(a1, a2)] = (
                        Fraction(2, 3) * Fraction(split[c1][a1][a2], 60)
                        + Fraction(1, 3) * Fraction(split[c2][a1][a2], 60)
                    )
            columns.append(col)
    channel = Channel.from_columns(columns)
    # The representative-built columns must equal the member-level vectors.
    for part, vec in rep_vectors.items():
        if channel.column(part) != vec:
            raise AssertionError(f"quotient column {part} disagrees with the pair model")
    return channel


def generate_class16(shape, seed: SeedSpec, root: int | None = None):
    """Sample the 16-label quotient model via the generic direct generator."""
    from ..generators import generate_direct

    return generate_direct(shape, quotient_channel(), seed, root=root)
