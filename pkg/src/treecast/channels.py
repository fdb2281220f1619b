"""Transmission channels for label propagation.

A channel is an m x m column-stochastic matrix of exact rationals, with
M[i][j] = P[child = i | parent = j].  The binary symmetric case is
M = theta*I + ((1-theta)/2)*J, i.e. a child copies its parent with
probability (1+theta)/2.

Columns are exact; sampling converts each column once to a cumulative
fixed-point table of 64-bit cut points, introducing per-label probability
error below 2^-60.  That table is the only approximation anywhere in
generation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

FractionLike = Fraction | int | float | str


def as_fraction(x: FractionLike) -> Fraction:
    """Convert to an exact Fraction.

    Floats are read through their shortest decimal representation, so 0.8
    means 4/5 (the grid value the caller typed), not the binary double
    0.8000000000000000444...  Pass a Fraction directly when that distinction
    matters.
    """
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


@dataclass(frozen=True)
class Channel:
    """Column-stochastic transmission matrix over m labels."""

    m: int
    matrix: tuple[tuple[Fraction, ...], ...]  # matrix[i][j] = P[child=i | parent=j]

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("label count m must be >= 1")
        if len(self.matrix) != self.m or any(len(row) != self.m for row in self.matrix):
            raise ValueError(f"matrix must be {self.m}x{self.m}")
        for j in range(self.m):
            col = [self.matrix[i][j] for i in range(self.m)]
            if any(p < 0 for p in col):
                raise ValueError(f"column {j} has a negative entry")
            if sum(col) != 1:
                raise ValueError(f"column {j} sums to {sum(col)}, not 1")

    @classmethod
    def from_columns(cls, columns: list[list[FractionLike]]) -> "Channel":
        m = len(columns)
        cols = [[as_fraction(p) for p in col] for col in columns]
        if any(len(col) != m for col in cols):
            raise ValueError("columns must form a square matrix")
        matrix = tuple(tuple(cols[j][i] for j in range(m)) for i in range(m))
        return cls(m=m, matrix=matrix)

    @classmethod
    def binary(cls, theta: FractionLike) -> "Channel":
        t = as_fraction(theta)
        if not -1 <= t <= 1:
            raise ValueError(f"theta must lie in [-1, 1], got {t}")
        keep = (1 + t) / 2
        flip = (1 - t) / 2
        return cls(m=2, matrix=((keep, flip), (flip, keep)))

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(self.matrix[i][j] for i in range(self.m))

    @property
    def is_binary_symmetric(self) -> bool:
        return (
            self.m == 2
            and self.matrix[0][0] == self.matrix[1][1]
            and self.matrix[0][1] == self.matrix[1][0]
        )

    @property
    def theta(self) -> Fraction:
        """Correlation parameter of a binary symmetric channel."""
        if not self.is_binary_symmetric:
            raise ValueError("theta is only defined for binary symmetric channels")
        return self.matrix[0][0] - self.matrix[0][1]

    def to_float(self) -> np.ndarray:
        return np.array([[float(p) for p in row] for row in self.matrix], dtype=np.float64)

    def sampling_cuts(self) -> np.ndarray:
        """Per-column cumulative cut points in 63-bit fixed point, shape (m, m-1).

        A word w63 uniform on [0, 2^63) samples label
        searchsorted(cuts[j], w63, 'right') from column j; each label
        probability is within 2^-60 of the exact column entry, and columns
        with dyadic cumulative sums (in particular deterministic columns) are
        sampled exactly.
        """
        cuts = np.empty((self.m, self.m - 1), dtype=np.uint64)
        for j in range(self.m):
            acc = Fraction(0)
            for i in range(self.m - 1):
                acc += self.matrix[i][j]
                cuts[j, i] = cut63(acc)
        return cuts

    def square(self) -> "Channel":
        m = self.m
        matrix = tuple(
            tuple(sum(self.matrix[i][t] * self.matrix[t][j] for t in range(m)) for j in range(m))
            for i in range(m)
        )
        return Channel(m=m, matrix=matrix)

    def has_identical_columns(self) -> bool:
        return all(
            self.matrix[i][j] == self.matrix[i][0] for i in range(self.m) for j in range(self.m)
        )


def cut63(p: Fraction) -> int:
    """Fixed-point image floor(p * 2^63) of a probability."""
    if not 0 <= p <= 1:
        raise ValueError(f"probability {p} outside [0, 1]")
    return (p.numerator << 63) // p.denominator


def uniform_cuts(m: int) -> np.ndarray:
    """Cut points sampling the uniform distribution over m labels."""
    cuts = np.empty(m - 1 if m > 1 else 0, dtype=np.uint64)
    for i in range(m - 1):
        cuts[i] = cut63(Fraction(i + 1, m))
    return cuts


def ks_parameter(channel: Channel, k: int) -> float:
    """Kesten-Stigum parameter k * lambda2(M)^2.

    lambda2 is the second-largest eigenvalue magnitude.  Two cases resolve
    exactly: a binary symmetric channel has lambda2 = theta, and a channel
    whose exact square has identical columns is nilpotent off the stationary
    direction, so lambda2 = 0.  Everything else is computed numerically
    (documented accuracy 1e-9); the exact shortcuts matter because defective
    zero eigenvalues are only recovered to ~1e-8 by floating-point solvers.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if channel.is_binary_symmetric:
        return float(k * channel.theta**2)
    if channel.has_identical_columns() or channel.square().has_identical_columns():
        return 0.0
    eigs = np.linalg.eigvals(channel.to_float())
    mags = np.sort(np.abs(eigs))[::-1]
    lam2 = mags[1] if len(mags) > 1 else 0.0
    return float(k * lam2 * lam2)
