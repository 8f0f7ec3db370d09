import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinglass_dos.hypergraph import (
    Hypergraph,
    circulant,
    complete_graph,
    complete_p_uniform,
    count_disjoint_edge_tuples,
    cycle_chain,
    intersection_fraction,
    overlap_mean,
    overlap_pmf,
    overlap_variance,
    star_graph,
)
from spinglass_dos.hypergraph import overlap_pmf_exact


def test_constructor_validation():
    with pytest.raises(ValueError):
        Hypergraph(3, ((1, 2), (2, 1)))
    with pytest.raises(ValueError):
        Hypergraph(3, ((),))
    with pytest.raises(ValueError):
        Hypergraph(3, ((1, 4),))
    with pytest.raises(ValueError):
        Hypergraph(3, ((1, 1),))
    g = Hypergraph(4, ((3, 2), (1, 4)))
    assert g.edges == ((1, 4), (2, 3))


def test_vertex_degree_examples():
    assert star_graph(5).max_vertex_degree() == 4
    assert cycle_chain(6).max_vertex_degree() == 2
    assert complete_graph(5).max_vertex_degree() == 4


def test_hyperedge_degree_examples():
    # each edge of K5 meets 2 * 3 other edges through its two endpoints
    assert list(complete_graph(5).hyperedge_degrees()) == [6] * 10
    assert complete_graph(5).max_hyperedge_degree() == 6
    assert complete_p_uniform(6, 6).max_hyperedge_degree() == 0


def _brute_line_degrees(g):
    return [sum(1 for f in g.edges if f != e and set(e) & set(f)) for e in g.edges]


@pytest.mark.parametrize("n", range(2, 9))
def test_p_uniform_hyperedge_degree_formula(n):
    for p in range(1, n + 1):
        g = complete_p_uniform(n, p)
        expected = math.comb(n, p) - math.comb(n - p, p) - 1
        assert list(g.hyperedge_degrees()) == [expected] * g.n_edges
        assert list(g.hyperedge_degrees()) == _brute_line_degrees(g)


def test_generator_examples():
    assert complete_graph(5).n_edges == 10
    assert complete_p_uniform(5, 2) == complete_graph(5)
    assert circulant(6, [1]) == cycle_chain(6)
    assert (1, 6) in cycle_chain(6).edges
    assert star_graph(4).edges == ((1, 2), (1, 3), (1, 4))


def test_generator_errors():
    for bad in (lambda: cycle_chain(2), lambda: complete_p_uniform(3, 4), lambda: complete_p_uniform(3, 0),
                lambda: circulant(6, [4]), lambda: circulant(6, [0]), lambda: star_graph(1)):
        with pytest.raises(ValueError):
            bad()


@pytest.mark.parametrize("n,offsets", [(8, [1]), (10, [1, 2]), (12, [1, 3, 5]), (9, [2, 4])])
def test_regular_circulant_degree_ratio(n, offsets):
    g = circulant(n, offsets)
    assert Fraction(g.max_vertex_degree(), g.n_edges) == Fraction(2, n)


def test_disjoint_edge_tuples_examples():
    assert count_disjoint_edge_tuples(complete_graph(4), 2) == 3
    assert count_disjoint_edge_tuples(cycle_chain(7), 1) == 7
    assert count_disjoint_edge_tuples(star_graph(6), 2) == 0
    assert count_disjoint_edge_tuples(complete_graph(4), 3) == 0


def _brute_disjoint(g, j):
    return sum(
        1 for c in combinations(g.edges, j)
        if all(not set(a) & set(b) for a, b in combinations(c, 2))
    )


@pytest.mark.parametrize("g", [cycle_chain(8), complete_graph(6), circulant(10, [1, 2]), star_graph(7),
                               complete_p_uniform(6, 3), Hypergraph(6, ((1, 2, 3), (3, 4), (5, 6), (1, 6)))])
def test_disjoint_tuple_sandwich(g):
    e = g.n_edges
    assert e <= 30
    for j in (1, 2, 3):
        d = count_disjoint_edge_tuples(g, j)
        assert d == _brute_disjoint(g, j)
        assert Fraction(e**j, math.factorial(j)) >= d
        # greedy lower bound: each chosen edge blocks at most d_e + 1 further edges
        block = g.max_hyperedge_degree() + 1
        lower = Fraction(math.prod(max(0, e - i * block) for i in range(j)), math.factorial(j))
        assert d >= lower


def test_text_roundtrip(tmp_path):
    g = Hypergraph(5, ((1, 2, 5), (3,), (2, 4)))
    path = tmp_path / "g.txt"
    g.save(path)
    assert Hypergraph.load(path) == g
    assert Hypergraph.from_text("# comment\nn 3\n1 2  # edge\n\n2 3\n") == Hypergraph(3, ((1, 2), (2, 3)))
    with pytest.raises(ValueError):
        Hypergraph.from_text("1 2\n")


def test_relabel_preserves_degrees():
    g = circulant(7, [1, 3])
    h = g.relabel([3, 1, 2, 7, 6, 5, 4])
    assert sorted(g.vertex_degrees()) == sorted(h.vertex_degrees())
    assert h.n_edges == g.n_edges


def test_overlap_examples():
    assert overlap_pmf_exact(10, 2, 2)[0] == Fraction(28, 45)
    assert overlap_pmf(7, 0, 3)[0] == 1.0
    assert intersection_fraction(10, 2, 2) == 1 - Fraction(28, 45)


@given(st.integers(1, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n))))
def test_overlap_moments(args):
    n, a, b = args
    pmf = overlap_pmf_exact(n, a, b)
    assert sum(pmf) == 1
    mean = sum(k * p for k, p in enumerate(pmf))
    assert mean == overlap_mean(n, a, b)
    var = sum(k * k * p for k, p in enumerate(pmf)) - mean**2
    assert var == overlap_variance(n, a, b)
    assert abs(float(np.sum(overlap_pmf(n, a, b))) - 1) < 1e-12
    assert intersection_fraction(n, a, b) == 1 - pmf[0]


def test_overlap_large_binomials():
    pmf = overlap_pmf_exact(60, 25, 30)
    assert sum(pmf) == 1


def test_overlap_argument_check():
    with pytest.raises(ValueError):
        overlap_pmf(5, 6, 1)
