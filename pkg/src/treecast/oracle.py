"""Exact small-instance enumeration of the broadcast process.

This is the ground-truth oracle the rest of the package is checked against:
for every root label a it tabulates the exact rational probability
P[leaves = x | root = a] of every leaf configuration x, by bottom-up dynamic
programming over subtrees.  Enumeration is only permitted while the
configuration count m^(k^d) stays below a cap (default 2^20), which keeps
oracle runs under a second.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .channels import Channel
from .trees import TreeShape

DEFAULT_CONFIG_CAP = 1 << 20

LeafLaw = dict[tuple[int, ...], Fraction]


@dataclass
class JointDistribution:
    """Exact conditional leaf laws, one per root label."""

    shape: TreeShape
    channel: Channel
    cond: list[LeafLaw] = field(repr=False)

    @property
    def m(self) -> int:
        return self.channel.m

    def prob(self, leaves: tuple[int, ...], root: int) -> Fraction:
        return self.cond[root].get(tuple(leaves), Fraction(0))

    def configurations(self):
        seen = set()
        for law in self.cond:
            seen.update(law)
        return sorted(seen)

    def mixture_prob(self, leaves: tuple[int, ...]) -> Fraction:
        """P[leaves] under the uniform root prior."""
        x = tuple(leaves)
        return sum((law.get(x, Fraction(0)) for law in self.cond), Fraction(0)) / self.m

    def posterior(self, leaves: tuple[int, ...]) -> list[Fraction]:
        """Exact P[root = a | leaves] under the uniform root prior."""
        x = tuple(leaves)
        weights = [law.get(x, Fraction(0)) for law in self.cond]
        total = sum(weights)
        if total == 0:
            raise ValueError(f"leaf configuration {x} has probability zero")
        return [w / total for w in weights]

    def to_json(self) -> str:
        doc = {
            "k": self.shape.k,
            "d": self.shape.d,
            "m": self.m,
            "cond": [
                {
                    "".join(map(str, cfg)) if self.m <= 10 else json.dumps(cfg): f"{p.numerator}/{p.denominator}"
                    for cfg, p in sorted(law.items())
                }
                for law in self.cond
            ],
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True)


def config_count(shape: TreeShape, m: int) -> int:
    if m == 1:
        return 1
    out = 1
    for _ in range(shape.n):
        out *= m
        if out > (1 << 64):
            break
    return out


def enumerate_joint(
    shape: TreeShape,
    channel: Channel,
    cap: int = DEFAULT_CONFIG_CAP,
    leaf_channel: Channel | None = None,
) -> JointDistribution:
    """Tabulate P[leaves | root] exactly for every configuration and root.

    `leaf_channel`, when given, replaces the transmission matrix on the last
    level's edges; composing the per-leaf noise channel with the broadcast
    channel there yields the exact law of noisy leaves.
    """
    m = channel.m
    if leaf_channel is not None and leaf_channel.m != m:
        raise ValueError("leaf_channel must have the same label count")
    count = config_count(shape, m)
    if count > cap:
        raise ValueError(
            f"enumeration needs {count} configurations, above the cap of {cap}"
        )

    # cond[a] maps each leaf tuple of the current subtree depth to its
    # conditional probability given subtree root a.
    cond: list[LeafLaw] = [{(a,): Fraction(1)} for a in range(m)]
    for step in range(shape.d):
        use = leaf_channel if (leaf_channel is not None and step == 0) else channel
        # mix[a]: law of one child subtree given this node's label a.
        mix: list[LeafLaw] = []
        for a in range(m):
            law: LeafLaw = {}
            for b in range(m):
                p_b = use.matrix[b][a]
                if p_b == 0:
                    continue
                for cfg, p in cond[b].items():
                    law[cfg] = law.get(cfg, Fraction(0)) + p_b * p
            mix.append(law)
        nxt: list[LeafLaw] = []
        for a in range(m):
            acc: LeafLaw = {(): Fraction(1)}
            for _ in range(shape.k):
                grown: LeafLaw = {}
                for cfg, p in acc.items():
                    for ccfg, q in mix[a].items():
                        key = cfg + ccfg
                        grown[key] = grown.get(key, Fraction(0)) + p * q
                acc = grown
            nxt.append(acc)
        cond = nxt
    return JointDistribution(shape=shape, channel=channel, cond=cond)


def bayes_accuracy(joint: JointDistribution) -> Fraction:
    """Optimal detection accuracy sum_x max_a P[x|a] / m; lies in [1/m, 1]."""
    total = Fraction(0)
    for cfg in joint.configurations():
        total += max(law.get(cfg, Fraction(0)) for law in joint.cond)
    return total / joint.m


def node_marginal(joint: JointDistribution, leaf_index: int) -> list[Fraction]:
    """Marginal law of one leaf under the uniform-root mixture."""
    out = [Fraction(0)] * joint.m
    for law in joint.cond:
        for cfg, p in law.items():
            out[cfg[leaf_index]] += p
    return [p / joint.m for p in out]


def pair_equal_probability(joint: JointDistribution, i: int, j: int) -> Fraction:
    """P[leaf i == leaf j] under the uniform-root mixture."""
    total = Fraction(0)
    for law in joint.cond:
        for cfg, p in law.items():
            if cfg[i] == cfg[j]:
                total += p
    return total / joint.m


def expected_leaf_sum(joint: JointDistribution, root: int) -> Fraction:
    """E[sum of leaf codes | root]; for binary labels, the expected ones count."""
    total = Fraction(0)
    for cfg, p in joint.cond[root].items():
        total += p * sum(cfg)
    return total
