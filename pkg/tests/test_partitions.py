import itertools
import math
from fractions import Fraction

import pytest

from spinglass_dos.partitions import (
    PairPartition,
    count_noncrossing,
    crossing_histogram,
    crossing_number,
    crossing_polynomial,
    double_factorial,
    enumerate_labelled,
    enumerate_unlabelled,
    pattern_trace,
    pattern_trace_sum,
    star_f,
)


def test_pair_partition_validation():
    with pytest.raises(ValueError):
        PairPartition((1, 1, 1))
    with pytest.raises(ValueError):
        PairPartition((1, 1, 1, 2))
    with pytest.raises(ValueError):
        PairPartition((1, 3, 1, 3))
    assert PairPartition((2, 1, 2, 1)).canonical() == PairPartition((1, 2, 1, 2))


@pytest.mark.parametrize("k,count", [(2, 1), (4, 3), (6, 15), (8, 105), (10, 945)])
def test_unlabelled_counts(k, count):
    parts = list(enumerate_unlabelled(k))
    assert len(parts) == count == double_factorial(k - 1)
    assert len(set(parts)) == count
    assert all(p == p.canonical() for p in parts)


def test_odd_k_rejected():
    with pytest.raises(ValueError):
        list(enumerate_unlabelled(5))
    with pytest.raises(ValueError):
        count_noncrossing(3)


def test_labelled_count():
    assert sum(1 for _ in enumerate_labelled(6)) == math.factorial(6) // 2**3


@pytest.mark.parametrize("blocks,c", [((1, 1, 2, 2), 0), ((1, 2, 2, 1), 0), ((1, 2, 1, 2), 1), ((1, 2, 3, 1, 2, 3), 3)])
def test_crossing_examples(blocks, c):
    assert crossing_number(PairPartition(blocks)) == c


@pytest.mark.parametrize("k,cat", [(2, 1), (4, 2), (6, 5), (8, 14), (12, 132)])
def test_catalan(k, cat):
    assert count_noncrossing(k) == cat
    assert sum(1 for p in enumerate_unlabelled(k) if p.is_noncrossing()) == cat


@pytest.mark.parametrize("k", range(2, 13, 2))
def test_crossing_polynomial_endpoints(k):
    assert crossing_polynomial(k, 1.0) == double_factorial(k - 1)
    assert crossing_polynomial(k, 0.0) == count_noncrossing(k)


@pytest.mark.parametrize("k", range(2, 13, 2))
def test_histogram_methods_agree(k):
    assert crossing_histogram(k, "enumerate") == crossing_histogram(k, "transfer")


def test_histogram_frozen():
    assert crossing_histogram(6) == (5, 6, 3, 1)
    assert crossing_histogram(8) == (14, 28, 28, 20, 10, 4, 1)
    assert crossing_polynomial(5, 0.3) == 0.0


def test_pattern_trace_examples():
    p = PairPartition((1, 2, 1, 2))
    assert pattern_trace(p, (1, 1)) == 1
    assert pattern_trace(p, (1, 2)) == -1
    assert pattern_trace_sum(p) == -3
    assert pattern_trace_sum(PairPartition((1, 1, 2, 2))) == 9
    assert pattern_trace_sum(PairPartition((1, 2, 3, 1, 2, 3))) == 15
    with pytest.raises(ValueError):
        pattern_trace(p, (1,))


@pytest.mark.parametrize("k", [2, 4, 6, 8])
def test_noncrossing_dichotomy(k):
    letters = list(itertools.product((1, 2, 3), repeat=k // 2))
    for p in enumerate_unlabelled(k):
        traces = [pattern_trace(p, a) for a in letters]
        if p.is_noncrossing():
            assert all(t == 1 for t in traces)
            assert pattern_trace_sum(p) == 3 ** (k // 2)
        else:
            assert any(t != 1 for t in traces)
            assert abs(pattern_trace_sum(p)) < 3 ** (k // 2)


@pytest.mark.parametrize("k,value", [(2, 3), (4, 30), (6, 630)])
def test_star_f(k, value):
    assert star_f(k) == value == Fraction(math.factorial(k + 1), 2 ** (k // 2))


def test_star_f_recursion():
    f = {2: star_f(2), 4: star_f(4), 6: star_f(6)}
    for k in (4, 6):
        assert f[k] == Fraction(k * (k + 1), 2) * f[k - 2]


def _star_f_unlabelled(k):
    # relabelling blocks permutes the letter assignments, so each unlabelled
    # partition stands for (k/2)! labelled ones with the same trace sum
    total = sum(pattern_trace_sum(p) for p in enumerate_unlabelled(k))
    return Fraction(int(total.real)) * math.factorial(k // 2)


def test_star_f_recursion_to_k10():
    f = {k: _star_f_unlabelled(k) for k in (2, 4, 6, 8, 10)}
    assert f[8] == star_f(8)
    for k in (4, 6, 8, 10):
        assert f[k] == Fraction(k * (k + 1), 2) * f[k - 2]
