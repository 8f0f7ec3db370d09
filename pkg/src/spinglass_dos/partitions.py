"""
Pair partitions of ``{1..k}``, crossing numbers and Pauli trace patterns.

Partitions are stored in canonical unlabelled form: ``block_of[i]`` is the
block of position ``i+1``, with blocks numbered 1, 2, ... in order of first
appearance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Iterator, Sequence

from .pauli import chain_trace

__all__ = [
    "PairPartition",
    "enumerate_unlabelled",
    "enumerate_labelled",
    "count_noncrossing",
    "double_factorial",
    "crossing_number",
    "crossing_histogram",
    "crossing_polynomial",
    "pattern_trace",
    "pattern_trace_sum",
    "star_f",
]


def _check_even(k: int) -> None:
    if k < 0 or k % 2:
        raise ValueError(f"pair partitions need an even non-negative k, got {k}")


def double_factorial(m: int) -> int:
    return math.prod(range(m, 0, -2)) if m > 0 else 1


@dataclass(frozen=True)
class PairPartition:
    block_of: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.block_of)
        _check_even(len(blocks))
        half = len(blocks) // 2
        counts = [0] * (half + 1)
        for b in blocks:
            if not 1 <= b <= half:
                raise ValueError(f"block label {b} outside 1..{half}")
            counts[b] += 1
        if any(c != 2 for c in counts[1:]):
            raise ValueError("every block must contain exactly two positions")
        object.__setattr__(self, "block_of", blocks)

    @property
    def k(self) -> int:
        return len(self.block_of)

    def canonical(self) -> "PairPartition":
        relabel: dict[int, int] = {}
        for b in self.block_of:
            relabel.setdefault(b, len(relabel) + 1)
        return PairPartition(tuple(relabel[b] for b in self.block_of))

    def pairs(self) -> list[tuple[int, int]]:
        """Blocks as 1-based position pairs ``(i, j)``, ``i < j``, ordered by block label."""
        first: dict[int, int] = {}
        out: dict[int, tuple[int, int]] = {}
        for pos, b in enumerate(self.block_of, start=1):
            if b in first:
                out[b] = (first[b], pos)
            else:
                first[b] = pos
        return [out[b] for b in sorted(out)]

    def crossing_number(self) -> int:
        return crossing_number(self)

    def is_noncrossing(self) -> bool:
        return crossing_number(self) == 0


def crossing_number(p: PairPartition) -> int:
    """Number of block pairs whose positions interleave as ``a < b < c < d``."""
    pairs = p.pairs()
    total = 0
    for i, (a, c) in enumerate(pairs):
        for b, d in pairs[i + 1 :]:
            if a < b < c < d or b < a < d < c:
                total += 1
    return total


def enumerate_unlabelled(k: int) -> Iterator[PairPartition]:
    """All ``(k-1)!!`` pair partitions in canonical form."""
    _check_even(k)
    blocks = [0] * k

    def rec(label: int) -> Iterator[PairPartition]:
        try:
            i = blocks.index(0)
        except ValueError:
            yield PairPartition(tuple(blocks))
            return
        blocks[i] = label
        for j in range(i + 1, k):
            if blocks[j] == 0:
                blocks[j] = label
                yield from rec(label + 1)
                blocks[j] = 0
        blocks[i] = 0

    if k == 0:
        return iter(())
    return rec(1)


def enumerate_labelled(k: int) -> Iterator[PairPartition]:
    """All ``k! / 2**(k/2)`` labelled pair partitions (maps onto ``{1..k/2}``)."""
    half = k // 2
    for p in enumerate_unlabelled(k):
        for perm in permutations(range(1, half + 1)):
            yield PairPartition(tuple(perm[b - 1] for b in p.block_of))


def count_noncrossing(k: int) -> int:
    """Catalan number ``C(k/2)``."""
    _check_even(k)
    m = k // 2
    return math.comb(k, m) // (m + 1)


def _histogram_by_enumeration(k: int) -> tuple[int, ...]:
    hist: dict[int, int] = {}
    for p in enumerate_unlabelled(k):
        c = crossing_number(p)
        hist[c] = hist.get(c, 0) + 1
    top = max(hist) if hist else 0
    return tuple(hist.get(i, 0) for i in range(top + 1))


def _histogram_by_transfer(k: int) -> tuple[int, ...]:
    # Scan positions left to right keeping the number of open arcs. Closing the
    # arc that is i-th most recent among m open ones crosses exactly the i arcs
    # opened after it and still open.
    state = {0: {0: 1}}  # open arcs -> {crossings: count}
    for _ in range(k):
        nxt: dict[int, dict[int, int]] = {}
        for m, poly in state.items():
            if m + 1 <= k:
                bucket = nxt.setdefault(m + 1, {})
                for c, n in poly.items():
                    bucket[c] = bucket.get(c, 0) + n
            if m:
                bucket = nxt.setdefault(m - 1, {})
                for i in range(m):
                    for c, n in poly.items():
                        bucket[c + i] = bucket.get(c + i, 0) + n
        state = nxt
    poly = state.get(0, {0: 1})
    top = max(poly)
    return tuple(poly.get(i, 0) for i in range(top + 1))


@lru_cache(maxsize=None)
def crossing_histogram(k: int, method: str = "auto") -> tuple[int, ...]:
    """Counts of unlabelled pair partitions by crossing number, index = crossings."""
    _check_even(k)
    if k == 0:
        return (1,)
    if method == "auto":
        method = "enumerate" if k <= 10 else "transfer"
    if method == "enumerate":
        return _histogram_by_enumeration(k)
    if method == "transfer":
        return _histogram_by_transfer(k)
    raise ValueError(f"unknown method {method!r}")


def crossing_polynomial(k: int, q: float, method: str = "auto") -> float:
    """``sum over pair partitions of q**crossings`` (zero for odd ``k``)."""
    if k % 2:
        return 0.0
    hist = crossing_histogram(k, method)
    # Horner from the top coefficient
    acc = 0.0
    for c in reversed(hist):
        acc = acc * q + c
    return acc


def pattern_trace(p: PairPartition, a: Sequence[int]) -> complex:
    """``(1/2) Tr sigma^(a_pi(1)) ... sigma^(a_pi(k))``."""
    if len(a) != p.k // 2:
        raise ValueError(f"need {p.k // 2} letters, got {len(a)}")
    return chain_trace([a[b - 1] for b in p.block_of])


def pattern_trace_sum(p: PairPartition) -> complex:
    """Sum of :func:`pattern_trace` over all letter assignments in ``{1,2,3}^(k/2)``."""
    total = 0j
    for a in product((1, 2, 3), repeat=p.k // 2):
        total += pattern_trace(p, a)
    return total


def star_f(k: int) -> Fraction:
    """Brute-force sum of pattern traces over letters and *labelled* partitions."""
    _check_even(k)
    total = 0j
    for p in enumerate_labelled(k):
        total += pattern_trace_sum(p)
    if total.imag != 0 or total.real != int(total.real):
        raise ArithmeticError(f"non-integer trace sum {total}")
    return Fraction(int(total.real))
