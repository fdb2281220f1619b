from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from treecast.channels import Channel, as_fraction, cut63, ks_parameter, uniform_cuts


def test_as_fraction_reads_decimal_floats():
    assert as_fraction(0.8) == Fraction(4, 5)
    assert as_fraction("0.8") == Fraction(4, 5)
    assert as_fraction("4/5") == Fraction(4, 5)
    assert as_fraction(Fraction(1, 3)) == Fraction(1, 3)
    assert as_fraction(1) == 1


def test_binary_channel_entries():
    ch = Channel.binary(Fraction(3, 5))
    assert ch.matrix[0][0] == Fraction(4, 5)  # keep probability (1+theta)/2
    assert ch.matrix[1][0] == Fraction(1, 5)
    assert ch.is_binary_symmetric
    assert ch.theta == Fraction(3, 5)


@given(st.fractions(min_value=-1, max_value=1))
def test_binary_channel_columns_sum(theta):
    ch = Channel.binary(theta)
    for j in range(2):
        assert sum(ch.column(j)) == 1


def test_channel_validation():
    with pytest.raises(ValueError):
        Channel.from_columns([["1/2", "1/4"], ["1/2", "1/2"]])  # column sums
    with pytest.raises(ValueError):
        Channel.from_columns([["3/2", "-1/2"], ["1/2", "1/2"]])  # negative
    with pytest.raises(ValueError):
        Channel.binary(Fraction(3, 2))


def test_ks_parameter_binary_exact():
    # The binary case resolves exactly: k * theta^2 = 10 * 9/25 = 18/5.
    assert ks_parameter(Channel.binary(Fraction(3, 5)), 10) == float(Fraction(18, 5))


def test_ks_parameter_identity_channel():
    ident = Channel.from_columns([["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    for k in (1, 5, 100):
        assert ks_parameter(ident, k) == pytest.approx(float(k))


def test_ks_parameter_numeric_path():
    # A generic 3-label chain: lambda2 computed numerically.
    ch = Channel.from_columns(
        [["1/2", "1/4", "1/4"], ["1/4", "1/2", "1/4"], ["1/4", "1/4", "1/2"]]
    )
    assert ks_parameter(ch, 4) == pytest.approx(4 * 0.25**2, abs=1e-9)


def test_cut63_bounds():
    assert cut63(Fraction(0)) == 0
    assert cut63(Fraction(1)) == 1 << 63
    with pytest.raises(ValueError):
        cut63(Fraction(3, 2))


def test_uniform_cuts_unbiased():
    cuts = uniform_cuts(60)
    assert len(cuts) == 59
    # each label mass within 2^-60 of 1/60
    prev = 0
    for i, c in enumerate(cuts):
        mass = (int(c) - prev) / 2**63
        assert abs(mass - 1 / 60) < 2**-60
        prev = int(c)


def test_sampling_cuts_deterministic_column_exact():
    ch = Channel.binary(1)  # deterministic copy
    cuts = ch.sampling_cuts()
    assert int(cuts[0][0]) == 1 << 63  # never exceeded by a 63-bit word
    assert int(cuts[1][0]) == 0


@given(
    st.lists(st.integers(0, 50), min_size=3, max_size=3).filter(lambda w: sum(w) > 0)
)
def test_sampling_cuts_within_fixed_point_budget(weights):
    total = sum(weights)
    col = [Fraction(w, total) for w in weights]
    ch = Channel.from_columns([col, col, col])
    cuts = ch.sampling_cuts()
    for j in range(3):
        prev = 0
        acc = Fraction(0)
        for i in range(2):
            acc += ch.matrix[i][j]
            mass = Fraction(int(cuts[j][i]) - prev, 1 << 63)
            assert abs(mass - ch.matrix[i][j]) < Fraction(1, 1 << 60)
            prev = int(cuts[j][i])
        assert abs(Fraction((1 << 63) - prev, 1 << 63) - ch.matrix[2][j]) < Fraction(1, 1 << 60)
