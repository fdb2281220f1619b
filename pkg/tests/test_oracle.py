import json
from fractions import Fraction
from itertools import permutations

import pytest

from treecast.channels import Channel
from treecast.oracle import (
    bayes_accuracy,
    enumerate_joint,
    expected_leaf_sum,
    node_marginal,
    pair_equal_probability,
)
from treecast.trees import TreeShape


def test_hand_bayes_example():
    # k=2, d=1, theta=1/2: per-edge copy probability 3/4, so P[(1,1)|1] = 9/16.
    joint = enumerate_joint(TreeShape(k=2, d=1), Channel.binary(Fraction(1, 2)))
    assert joint.prob((1, 1), 1) == Fraction(9, 16)
    assert joint.prob((1, 1), 0) == Fraction(1, 16)
    assert joint.prob((1, 0), 1) == Fraction(3, 16)


def test_theta_zero_uniform_leaves():
    joint = enumerate_joint(TreeShape(k=2, d=2), Channel.binary(0))
    for root in (0, 1):
        for cfg in joint.configurations():
            assert joint.prob(cfg, root) == Fraction(1, 16)


def test_theta_one_deterministic():
    joint = enumerate_joint(TreeShape(k=3, d=2), Channel.binary(1))
    assert joint.prob((1,) * 9, 1) == 1
    assert joint.prob((0,) * 9, 0) == 1
    assert len(joint.cond[1]) == 1


def test_conditionals_sum_to_one():
    for k, d in ((2, 3), (3, 2), (5, 1)):
        joint = enumerate_joint(TreeShape(k=k, d=d), Channel.binary(Fraction(2, 7)))
        for law in joint.cond:
            assert sum(law.values()) == 1


def test_sibling_exchangeability():
    shape = TreeShape(k=3, d=1)
    joint = enumerate_joint(shape, Channel.binary(Fraction(1, 3)))
    for cfg in joint.configurations():
        for perm in permutations(range(3)):
            permuted = tuple(cfg[i] for i in perm)
            for root in (0, 1):
                assert joint.prob(permuted, root) == joint.prob(cfg, root)


def test_uniform_marginals():
    shape = TreeShape(k=2, d=3)
    joint = enumerate_joint(shape, Channel.binary(Fraction(3, 4)))
    for leaf in range(shape.n):
        assert node_marginal(joint, leaf) == [Fraction(1, 2), Fraction(1, 2)]


def test_bayes_accuracy_pinned_value():
    # Oracle-derived regression constant for k=2, d=1, theta=1/2; the
    # four-configuration sum is (1/2)(9/16 + 3/16 + 3/16 + 9/16) = 3/4.
    joint = enumerate_joint(TreeShape(k=2, d=1), Channel.binary(Fraction(1, 2)))
    assert bayes_accuracy(joint) == Fraction(3, 4)


def test_bayes_accuracy_extremes():
    assert bayes_accuracy(
        enumerate_joint(TreeShape(k=2, d=2), Channel.binary(0))
    ) == Fraction(1, 2)
    assert bayes_accuracy(
        enumerate_joint(TreeShape(k=2, d=2), Channel.binary(1))
    ) == 1


def test_bayes_accuracy_monotone_in_theta():
    shape = TreeShape(k=2, d=2)
    grid = [Fraction(i, 8) for i in range(9)]
    values = [bayes_accuracy(enumerate_joint(shape, Channel.binary(t))) for t in grid]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_cap_error_names_cap():
    with pytest.raises(ValueError, match="cap of 1048576"):
        enumerate_joint(TreeShape(k=2, d=5), Channel.binary(Fraction(1, 2)))
    # a custom (tighter) cap is honored
    with pytest.raises(ValueError, match="cap of 16"):
        enumerate_joint(TreeShape(k=2, d=3), Channel.binary(Fraction(1, 2)), cap=16)


def test_correlation_and_mean_identities_exact():
    # Pairwise law 1/2 + theta^(2r)/2 and mean k^d/2 + k^d theta^d / 2.
    shape = TreeShape(k=2, d=3)
    theta = Fraction(4, 5)
    joint = enumerate_joint(shape, Channel.binary(theta))
    assert pair_equal_probability(joint, 0, 1) == Fraction(1, 2) + theta**2 / 2
    assert pair_equal_probability(joint, 0, 2) == Fraction(1, 2) + theta**4 / 2
    assert pair_equal_probability(joint, 0, 7) == Fraction(1, 2) + theta**6 / 2
    n = shape.n
    assert expected_leaf_sum(joint, 1) == Fraction(n, 2) + n * theta**3 / 2


def test_json_rational_encoding():
    joint = enumerate_joint(TreeShape(k=2, d=1), Channel.binary(Fraction(1, 2)))
    doc = json.loads(joint.to_json())
    assert doc["cond"][1]["11"] == "9/16"
