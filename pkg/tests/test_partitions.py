from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rmtlab.partitions import (
    as_partition,
    conjugate,
    dominates,
    horizontal_strip_extensions,
    is_horizontal_strip,
    is_partition,
    monomial_count,
    multiplicities,
    partitions_of_size,
    partitions_up_to_size,
    rising_factorial,
    set_partitions,
    z_factor,
)

partition_strategy = st.integers(0, 8).flatmap(
    lambda n: st.sampled_from(partitions_of_size(n) or [()])
)


def test_as_partition_normalizes():
    assert as_partition([3, 1, 0, 0]) == (3, 1)
    assert as_partition(()) == ()
    assert as_partition((0,)) == ()
    with pytest.raises(ValueError):
        as_partition((1, 2))
    with pytest.raises(ValueError):
        as_partition((2, -1))


def test_partitions_of_size_examples():
    assert partitions_of_size(0, 3) == [()]
    assert partitions_of_size(3, 2) == [(3,), (2, 1)]
    assert len(partitions_of_size(6, 3)) == 7


def test_partitions_of_size_reverse_lex():
    parts = partitions_of_size(6, 3)
    assert parts == sorted(parts, reverse=True)
    assert parts[0] == (6,)
    assert parts[-1] == (2, 2, 2)


def test_partitions_of_size_full_counts():
    # p(n) for n = 0..10
    counts = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]
    for n, c in enumerate(counts):
        assert len(partitions_of_size(n)) == c


def test_partitions_up_to_size():
    got = partitions_up_to_size(3)
    assert set(got) == {(), (1,), (2,), (1, 1), (3,), (2, 1), (1, 1, 1)}


@given(partition_strategy)
def test_conjugate_involution(lam):
    assert conjugate(conjugate(lam)) == lam
    assert sum(conjugate(lam)) == sum(lam)


def test_conjugate_example():
    assert conjugate((4, 2, 1)) == (3, 2, 1, 1)


def test_dominance():
    assert dominates((3,), (2, 1))
    assert dominates((2, 1), (1, 1, 1))
    assert not dominates((1, 1, 1), (2, 1))
    # incomparable pair
    assert not dominates((3, 1, 1, 1), (2, 2, 2))
    assert not dominates((2, 2, 2), (3, 1, 1, 1))


@given(partition_strategy)
def test_dominance_reflexive_and_conjugate_antitone(lam):
    assert dominates(lam, lam)
    for mu in partitions_of_size(sum(lam)):
        if dominates(lam, mu):
            assert dominates(conjugate(mu), conjugate(lam))


def test_multiplicities_and_z_factor():
    assert multiplicities((3, 2, 2, 1)) == {3: 1, 2: 2, 1: 1}
    assert z_factor((2, 1)) == 2
    assert z_factor((1, 1, 1)) == 6
    assert z_factor((2, 2)) == 8
    assert z_factor(()) == 1


def test_monomial_count():
    assert monomial_count((1, 1), 3) == 3
    assert monomial_count((2, 1), 2) == 2
    assert monomial_count((2, 2, 1), 2) == 0
    assert monomial_count((), 5) == 1


def test_horizontal_strips():
    assert is_horizontal_strip((2, 1), (1,))
    assert not is_horizontal_strip((2, 2), (1,))
    assert is_horizontal_strip((3,), (3,))
    assert not is_horizontal_strip((1,), (2,))
    got = set(horizontal_strip_extensions((2,), 4))
    assert got == {(2,), (3,), (4,), (2, 1), (3, 1), (2, 2)}
    capped = set(horizontal_strip_extensions((2,), 4, max_length=1))
    assert capped == {(2,), (3,), (4,)}


def test_rising_factorial():
    assert rising_factorial(Fraction(1, 2), 3) == Fraction(1, 2) * Fraction(3, 2) * Fraction(5, 2)
    assert rising_factorial(Fraction(7), 0) == 1


def test_set_partitions_counts():
    # Bell numbers for n = 1..5
    for n, bell in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)]:
        blocks = list(set_partitions(list(range(n))))
        assert len(blocks) == bell
        for blocking in blocks:
            flat = sorted(x for block in blocking for x in block)
            assert flat == list(range(n))
