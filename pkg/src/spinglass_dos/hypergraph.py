"""Hypergraphs on ``{1..n}``: degrees, standard families, and overlap counting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Hypergraph",
    "cycle_chain",
    "complete_graph",
    "star_graph",
    "complete_p_uniform",
    "circulant",
    "count_disjoint_edge_tuples",
    "overlap_pmf",
    "overlap_mean",
    "overlap_variance",
    "intersection_fraction",
]


@dataclass(frozen=True)
class Hypergraph:
    """Vertex count plus a canonical (lexicographically sorted) tuple of hyperedges.

    Vertices are 1-based. Each hyperedge is stored as a strictly increasing
    tuple; the constructor sorts vertices within an edge and the edges
    themselves, and rejects duplicates, empty edges and out-of-range vertices.
    """

    n_vertices: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("a hypergraph needs at least one vertex")
        canon = []
        for e in self.edges:
            edge = tuple(sorted(int(v) for v in e))
            if not edge:
                raise ValueError("empty hyperedge")
            if len(set(edge)) != len(edge):
                raise ValueError(f"repeated vertex in hyperedge {e}")
            if edge[0] < 1 or edge[-1] > self.n_vertices:
                raise ValueError(f"hyperedge {e} outside 1..{self.n_vertices}")
            canon.append(edge)
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate hyperedge {a}")
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_masks(self) -> tuple[int, ...]:
        """Vertex bitmask per edge (vertex ``v`` -> bit ``v-1``)."""
        return tuple(sum(1 << (v - 1) for v in e) for e in self.edges)

    def vertex_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        for e in self.edges:
            for v in e:
                deg[v - 1] += 1
        return deg

    def max_vertex_degree(self) -> int:
        return int(self.vertex_degrees().max()) if self.edges else 0

    def hyperedge_degrees(self) -> np.ndarray:
        """Number of *other* hyperedges meeting each hyperedge (line-graph degree)."""
        masks = self.edge_masks
        out = np.zeros(len(masks), dtype=np.int64)
        for i, j in combinations(range(len(masks)), 2):
            if masks[i] & masks[j]:
                out[i] += 1
                out[j] += 1
        return out

    def max_hyperedge_degree(self) -> int:
        return int(self.hyperedge_degrees().max()) if self.edges else 0

    def degree_ratio(self) -> float:
        """``d_max / e``, the quantity controlling the Gaussian regime for graphs."""
        return self.max_vertex_degree() / self.n_edges

    def relabel(self, perm: Sequence[int]) -> "Hypergraph":
        """Apply the vertex map ``v -> perm[v-1]`` (a permutation of 1..n)."""
        if sorted(perm) != list(range(1, self.n_vertices + 1)):
            raise ValueError("perm must be a permutation of 1..n")
        return Hypergraph(self.n_vertices, tuple(tuple(perm[v - 1] for v in e) for e in self.edges))

    # --- text format -------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"n {self.n_vertices}"]
        lines += [" ".join(map(str, e)) for e in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Hypergraph":
        rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        rows = [r for r in rows if r]
        if not rows or rows[0].split()[0] != "n" or len(rows[0].split()) != 2:
            raise ValueError("hypergraph file must start with a line 'n <int>'")
        n = int(rows[0].split()[1])
        return cls(n, tuple(tuple(int(t) for t in r.split()) for r in rows[1:]))

    @classmethod
    def load(cls, path: str | Path) -> "Hypergraph":
        return cls.from_text(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def _from_edges(n: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    return Hypergraph(n, tuple(tuple(e) for e in edges))


def cycle_chain(n: int) -> Hypergraph:
    """Closed nearest-neighbour chain; site ``n+1`` is identified with site 1."""
    if n < 3:
        raise ValueError("a closed chain needs n >= 3")
    return _from_edges(n, [(j, j % n + 1) for j in range(1, n + 1)])


def complete_graph(n: int) -> Hypergraph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return _from_edges(n, combinations(range(1, n + 1), 2))


def star_graph(n: int) -> Hypergraph:
    """Vertex 1 joined to every other vertex."""
    if n < 2:
        raise ValueError("star graph needs n >= 2")
    return _from_edges(n, [(1, j) for j in range(2, n + 1)])


def complete_p_uniform(n: int, p: int) -> Hypergraph:
    if not 1 <= p <= n:
        raise ValueError(f"need 1 <= p <= n, got p={p}, n={n}")
    return _from_edges(n, combinations(range(1, n + 1), p))


def circulant(n: int, offsets: Iterable[int]) -> Hypergraph:
    """Edges ``(i, i+o mod n)`` for each offset ``o`` in ``1..n/2``."""
    offs = sorted(set(int(o) for o in offsets))
    if n < 3:
        raise ValueError("circulant graph needs n >= 3")
    if not offs or offs[0] < 1 or 2 * offs[-1] > n:
        raise ValueError(f"offsets must be distinct integers in 1..{n // 2}")
    edges = {tuple(sorted((i, (i - 1 + o) % n + 1))) for o in offs for i in range(1, n + 1)}
    return _from_edges(n, edges)


def count_disjoint_edge_tuples(g: Hypergraph, j: int) -> int:
    """Number of unordered ``j``-sets of pairwise vertex-disjoint hyperedges."""
    if j < 1:
        raise ValueError("j must be positive")
    masks = g.edge_masks

    def count(start: int, used: int, left: int) -> int:
        if left == 0:
            return 1
        total = 0
        for i in range(start, len(masks) - left + 1):
            if not masks[i] & used:
                total += count(i + 1, used | masks[i], left - 1)
        return total

    return count(0, 0, j)


def _check_overlap_args(n: int, a: int, b: int) -> None:
    if not (0 <= a <= n and 0 <= b <= n):
        raise ValueError(f"need 0 <= a, b <= n, got n={n}, a={a}, b={b}")


def overlap_pmf_exact(n: int, a: int, b: int) -> list[Fraction]:
    """Exact law of ``|A & B|`` for fixed ``|A| = a`` and uniform ``B`` of size ``b``."""
    _check_overlap_args(n, a, b)
    total = math.comb(n, b)
    return [Fraction(math.comb(a, k) * math.comb(n - a, b - k), total) for k in range(min(a, b) + 1)]


def overlap_pmf(n: int, a: int, b: int) -> np.ndarray:
    """Hypergeometric pmf indexed by overlap size ``k = 0..min(a, b)``."""
    return np.array([float(p) for p in overlap_pmf_exact(n, a, b)])


def overlap_mean(n: int, a: int, b: int) -> Fraction:
    _check_overlap_args(n, a, b)
    return Fraction(a * b, n)


def overlap_variance(n: int, a: int, b: int) -> Fraction:
    _check_overlap_args(n, a, b)
    if n == 1:
        return Fraction(0)
    return Fraction(a * b, n) * Fraction(n - b, n) * Fraction(n - a, n - 1)


def intersection_fraction(n: int, a: int, b: int) -> Fraction:
    """Fraction of ``b``-subsets meeting a fixed ``a``-subset."""
    _check_overlap_args(n, a, b)
    return 1 - Fraction(math.comb(n - a, b), math.comb(n, b))
