"""Exact and float belief propagation on regular trees.

Bottom-up message passing computes the exact conditional law of the root
given per-leaf likelihood weights.  Two arithmetic modes are supported:

* rational -- Fraction arithmetic, bit-exact; this is the verification path
  and is auto-selected while the tree is small;
* float -- log-domain messages (per-node max-shift), immune to underflow at
  depth, within 1e-9 relative of the rational mode where both run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channels import Channel, FractionLike, as_fraction
from .trees import TreeShape

# Above this many tree nodes, mode="auto" switches to float BP.
AUTO_RATIONAL_NODE_LIMIT = 20_000


@dataclass(frozen=True)
class LeafLikelihood:
    """Per-leaf, per-label likelihood weights (exact rationals).

    Weights must be nonnegative and not all zero for any leaf.  Hard
    observations are point masses; a flip channel with rate s maps an
    observed bit x to weights (1-s) on x and s on 1-x.
    """

    m: int
    weights: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        for i, row in enumerate(self.weights):
            if len(row) != self.m:
                raise ValueError(f"leaf {i} has {len(row)} weights, expected {self.m}")
            if any(w < 0 for w in row):
                raise ValueError(f"leaf {i} has a negative likelihood weight")
            if all(w == 0 for w in row):
                raise ValueError(f"leaf {i} has an all-zero likelihood")

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def from_labels(cls, labels, m: int) -> "LeafLikelihood":
        rows = []
        for x in labels:
            x = int(x)
            if not 0 <= x < m:
                raise ValueError(f"observed label {x} outside [0, {m})")
            rows.append(tuple(Fraction(1) if a == x else Fraction(0) for a in range(m)))
        return cls(m=m, weights=tuple(rows))

    @classmethod
    def from_noisy_bits(cls, bits, s: FractionLike) -> "LeafLikelihood":
        """Binary observations seen through a symmetric flip channel of rate s."""
        sf = as_fraction(s)
        if not 0 <= sf <= 1:
            raise ValueError(f"flip rate must lie in [0, 1], got {sf}")
        rows = []
        for x in bits:
            x = int(x)
            if x not in (0, 1):
                raise ValueError(f"noisy-bit evidence must be binary, got {x}")
            rows.append((1 - sf, sf) if x == 0 else (sf, 1 - sf))
        return cls(m=2, weights=tuple(rows))

    def to_float(self) -> np.ndarray:
        return np.array(
            [[float(w) for w in row] for row in self.weights], dtype=np.float64
        )


@dataclass(frozen=True)
class PosteriorReport:
    """Root posterior masses, the arithmetic mode used, and the argmax label.

    Ties break toward the lowest label code and set `tie`.
    """

    masses: tuple
    mode: str
    argmax: int
    tie: bool

    def mass(self, a: int) -> float:
        return float(self.masses[a])


def _argmax_with_tie(masses, float_tol: float = 0.0) -> tuple[int, bool]:
    best = 0
    for a in range(1, len(masses)):
        if masses[a] > masses[best]:
            best = a
    if float_tol:
        tie = any(
            a != best and abs(float(masses[a]) - float(masses[best])) <= float_tol
            for a in range(len(masses))
        )
    else:
        tie = any(a != best and masses[a] == masses[best] for a in range(len(masses)))
    return best, tie


def _bp_rational(shape: TreeShape, channel: Channel, evidence: LeafLikelihood):
    m = channel.m
    msgs = [list(row) for row in evidence.weights]
    for _ in range(shape.d):
        nxt = []
        for base in range(0, len(msgs), shape.k):
            vals = []
            for a in range(m):
                prod = Fraction(1)
                for c in range(base, base + shape.k):
                    s = Fraction(0)
                    for b in range(m):
                        if msgs[c][b]:
                            s += channel.matrix[b][a] * msgs[c][b]
                    prod *= s
                vals.append(prod)
            nxt.append(vals)
        msgs = nxt
    root = msgs[0]
    total = sum(root, Fraction(0))
    if total == 0:
        raise ValueError("evidence has zero probability under the model")
    return tuple(w / total for w in root)


def _bp_float_log(shape: TreeShape, M: np.ndarray, leaf_log: np.ndarray) -> np.ndarray:
    """Log-domain BP; returns root posterior masses (normalized floats)."""
    m = M.shape[0]
    log_msgs = leaf_log
    for _ in range(shape.d):
        shift = log_msgs.max(axis=1, keepdims=True)
        # Guard all -inf rows (cannot happen with valid evidence, but keep finite).
        shift = np.where(np.isfinite(shift), shift, 0.0)
        lin = np.exp(log_msgs - shift)
        up = lin @ M  # up[c, a] = sum_b M[b, a] * msg[c, b]
        with np.errstate(divide="ignore"):
            log_up = np.log(up) + shift
        log_msgs = log_up.reshape(-1, shape.k, m).sum(axis=1)
    root = log_msgs[0]
    root = root - root.max()
    masses = np.exp(root)
    return masses / masses.sum()


def bp_posterior(
    shape: TreeShape,
    channel: Channel,
    evidence: LeafLikelihood,
    mode: str = "auto",
) -> PosteriorReport:
    """Exact root posterior given leaf evidence, by bottom-up message passing."""
    if len(evidence) != shape.n:
        raise ValueError(f"evidence covers {len(evidence)} leaves, tree has {shape.n}")
    if evidence.m != channel.m:
        raise ValueError("evidence and channel disagree on label count")
    if mode == "auto":
        mode = "rational" if shape.total_nodes <= AUTO_RATIONAL_NODE_LIMIT else "float"
    if mode == "rational":
        masses = _bp_rational(shape, channel, evidence)
        argmax, tie = _argmax_with_tie(masses)
        return PosteriorReport(masses=masses, mode="exact-rational", argmax=argmax, tie=tie)
    if mode == "float":
        with np.errstate(divide="ignore"):
            leaf_log = np.log(evidence.to_float())
        masses = _bp_float_log(shape, channel.to_float(), leaf_log)
        argmax, tie = _argmax_with_tie(tuple(masses), float_tol=1e-12)
        return PosteriorReport(
            masses=tuple(float(x) for x in masses),
            mode="float-log-domain",
            argmax=argmax,
            tie=tie,
        )
    raise ValueError(f"unknown mode {mode!r}; expected auto, rational, or float")


def bp_posterior_batch_binary(
    shape: TreeShape, theta_float: float, leaves: np.ndarray, s: float = 0.0
) -> np.ndarray:
    """P[root = 1] for a batch of binary leaf observations, log-odds domain.

    `leaves` has shape (trials, n); observations enter through a symmetric
    flip channel of rate s (s = 0 means hard evidence).  For the symmetric
    binary channel the BP message is a single log-odds per node: an edge maps
    lam to 2 artanh(theta tanh(lam / 2)) and a node sums its children, so a
    leaf contributes +-2 artanh(theta (1 - 2s)) and the whole leaf level
    collapses to per-parent ones counts.  Agrees with the rational mode to
    float precision; vectorized across trials for Monte Carlo use.
    """
    trials, n = leaves.shape
    if n != shape.n:
        raise ValueError(f"leaves have {n} columns, tree has {shape.n}")
    if shape.d == 0:
        lam_e = 0.0 if s == 0.5 else np.arctanh(1 - 2 * s) if s > 0 else np.inf
        lam = (2.0 * leaves[:, 0] - 1.0) * (2 * lam_e if np.isfinite(lam_e) else np.inf)
        return _sigmoid(lam)
    with np.errstate(divide="ignore"):
        leaf_up = 2.0 * np.arctanh(theta_float * (1.0 - 2.0 * s))
    ones = leaves.reshape(trials, n // shape.k, shape.k).sum(axis=2)
    lam = leaf_up * (2.0 * ones - shape.k)
    for _ in range(shape.d - 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            up = 2.0 * np.arctanh(theta_float * np.tanh(lam / 2.0))
        lam = up.reshape(trials, -1, shape.k).sum(axis=2)
    return _sigmoid(lam[:, 0])


def _sigmoid(lam: np.ndarray) -> np.ndarray:
    out = np.empty_like(lam, dtype=np.float64)
    pos = lam >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-lam[pos]))
    ez = np.exp(lam[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
