"""
Exact expected moments ``E 2**-n Tr H**k`` by summing the tuple expansion
over index multisets.

A tuple ``(J_1, ..., J_k)`` of Pauli terms contributes
``prod w_J * E prod alpha_J * 2**-n Tr sigma_J1 ... sigma_Jk``. Tuples are
grouped by their set of distinct indices together with a multiplicity for
each; every index must occur at least twice (couplings have mean zero). The
sum over orderings of a group is a signed word count, because reordering two
anticommuting strings flips the sign.

Contributions are split three ways:

* ``A``: every index occurs exactly twice and distinct indices sit on
  hyperedges that are equal or disjoint;
* ``B``: every index occurs exactly twice but two distinct indices sit on
  different hyperedges that intersect;
* ``D``: some index occurs other than twice.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .ensemble import CouplingDistribution, get_distribution, term_table
from .hypergraph import Hypergraph
from .partitions import double_factorial

__all__ = [
    "MomentBreakdown",
    "BudgetExceeded",
    "DEFAULT_BUDGET",
    "pattern_count",
    "expected_moment",
    "bnk_fraction",
    "bnk_leading_bound",
]

DEFAULT_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """The grouped-pattern enumeration would exceed the configured budget."""


@dataclass(frozen=True)
class MomentBreakdown:
    k: int
    total: float
    part_D: float
    part_A: float
    part_B: float
    # exact values when every contribution is rational, else None
    exact_total: Fraction | None = None
    exact_D: Fraction | None = None
    exact_A: Fraction | None = None
    exact_B: Fraction | None = None
    normalized_a_count: Fraction = Fraction(0)  # sum over A-tuples of prod w_J
    n_patterns: int = 0

    def __post_init__(self):
        if abs(self.total - (self.part_D + self.part_A + self.part_B)) > 1e-12 * max(1.0, abs(self.total)):
            raise ArithmeticError("D + A + B does not reproduce the total")


def pattern_count(n_terms: int, k: int) -> int:
    """Number of (index set, multiplicity vector) groups with all multiplicities >= 2."""
    total = 0
    for r in range(1, k // 2 + 1):
        # ordered compositions of k into r parts of size >= 2
        total += math.comb(n_terms, r) * math.comb(k - r - 1, r - 1)
    return total


@lru_cache(maxsize=None)
def _signed_words(mults: tuple[int, ...], anti: tuple[int, ...]) -> int:
    """Sum over words with letter counts ``mults`` of the reordering sign.

    ``anti[a]`` is a bitmask of letters ``b > a`` anticommuting with ``a``.
    Reading the word left to right, placing ``a`` after ``c`` copies of such
    letters costs ``(-1)**c``.
    """
    r = len(mults)

    @lru_cache(maxsize=None)
    def f(rem: tuple[int, ...]) -> int:
        if not any(rem):
            return 1
        total = 0
        for a in range(r):
            if rem[a]:
                parity = 0
                bits = anti[a]
                b = 0
                while bits:
                    if bits & 1:
                        parity ^= (mults[b] - rem[b]) & 1
                    bits >>= 1
                    b += 1
                nxt = rem[:a] + (rem[a] - 1,) + rem[a + 1 :]
                total += -f(nxt) if parity else f(nxt)
        return total

    return f(mults)


def _sqrt_fraction(x: Fraction) -> Fraction | None:
    p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if p * p == x.numerator and q * q == x.denominator:
        return Fraction(p, q)
    return None


def _popcount(v: int) -> int:
    return bin(v).count("1")


def expected_moment(
    g: Hypergraph,
    dist: CouplingDistribution | str,
    k: int,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> MomentBreakdown:
    """Exact ``E 2**-n Tr H**k`` with its D/A/B split.

    Raises :class:`BudgetExceeded` (never truncates) when the number of
    grouped patterns exceeds ``budget``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    dist = get_distribution(dist)
    table = term_table(g)
    n_terms = len(table)
    if k == 0:
        one = Fraction(1)
        return MomentBreakdown(0, 1.0, 1.0, 0.0, 0.0, one, one, Fraction(0), Fraction(0), Fraction(1), 1)
    estimate = pattern_count(n_terms, k)
    if estimate > budget:
        raise BudgetExceeded(
            f"k={k} over {n_terms} terms needs {estimate:.3e} grouped patterns (budget {budget:.0e})"
        )

    xs = [int(v) for v in table.x]
    zs = [int(v) for v in table.z]
    ph = [int(v) for v in table.phase]
    edge = [int(v) for v in table.edge_index]
    masks = g.edge_masks
    w2 = [Fraction(1, g.n_edges * 3 ** len(g.edges[e])) for e in edge]
    mom = {m: dist.moment(m) for m in range(2, k + 1)}
    mults_allowed = [m for m in range(2, k + 1) if mom[m] != 0]

    def run(first: int):
        # accumulators keyed by (class, radicand) -> [real, imag]
        acc: dict[tuple[str, Fraction], list[Fraction]] = {}
        a_count = Fraction(0)
        n_pat = 0
        chosen: list[int] = []
        counts: list[int] = []

        def leaf():
            nonlocal a_count, n_pat
            n_pat += 1
            r = len(chosen)
            # product of odd-multiplicity strings in canonical order
            px = pz = 0
            pp = 0
            for j, m in zip(chosen, counts):
                if m & 1:
                    pp += ph[j] + 2 * _popcount(pz & xs[j])
                    px ^= xs[j]
                    pz ^= zs[j]
            if px or pz:
                return
            anti = []
            for a in range(r):
                ja = chosen[a]
                bits = 0
                for b in range(a + 1, r):
                    jb = chosen[b]
                    if (_popcount(xs[ja] & zs[jb]) + _popcount(zs[ja] & xs[jb])) & 1:
                        bits |= 1 << b
                anti.append(bits)
            signed = _signed_words(tuple(counts), tuple(anti))
            if signed == 0:
                return
            coef = Fraction(signed)
            radicand = Fraction(1)
            for j, m in zip(chosen, counts):
                coef *= mom[m] * w2[j] ** (m // 2)
                if m & 1:
                    radicand *= w2[j]
            if all(m == 2 for m in counts):
                cls = "A"
                for a in range(r):
                    ea = edge[chosen[a]]
                    for b in range(a + 1, r):
                        eb = edge[chosen[b]]
                        if ea != eb and masks[ea] & masks[eb]:
                            cls = "B"
                            break
                    if cls == "B":
                        break
                if cls == "A":
                    words = math.factorial(k) // 2**r
                    wprod = Fraction(1)
                    for j in chosen:
                        wprod *= w2[j]
                    a_count += words * wprod
            else:
                cls = "D"
            slot = acc.setdefault((cls, radicand), [Fraction(0), Fraction(0)])
            # trace of i**pp times identity
            pp %= 4
            if pp == 0:
                slot[0] += coef
            elif pp == 2:
                slot[0] -= coef
            elif pp == 1:
                slot[1] += coef
            else:
                slot[1] -= coef

        def rec(start: int, remaining: int):
            for j in range(start, n_terms):
                for m in mults_allowed:
                    left = remaining - m
                    if left < 0:
                        break
                    if left == 1:
                        continue
                    chosen.append(j)
                    counts.append(m)
                    if left == 0:
                        leaf()
                    else:
                        rec(j + 1, left)
                    chosen.pop()
                    counts.pop()

        for m in mults_allowed:
            left = k - m
            if left < 0 or left == 1:
                continue
            chosen.append(first)
            counts.append(m)
            if left == 0:
                leaf()
            else:
                rec(first + 1, left)
            chosen.pop()
            counts.pop()
        return acc, a_count, n_pat

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_terms)))
    else:
        parts = [run(j) for j in range(n_terms)]

    merged: dict[tuple[str, Fraction], list[Fraction]] = {}
    a_count = Fraction(0)
    n_pat = 0
    for acc, ac, npat in parts:  # leading-index order
        a_count += ac
        n_pat += npat
        for key in sorted(acc, key=lambda t: (t[0], t[1])):
            slot = merged.setdefault(key, [Fraction(0), Fraction(0)])
            slot[0] += acc[key][0]
            slot[1] += acc[key][1]

    floats = {"D": 0.0, "A": 0.0, "B": 0.0}
    imag = {"D": 0.0, "A": 0.0, "B": 0.0}
    exact: dict[str, Fraction] | None = {"D": Fraction(0), "A": Fraction(0), "B": Fraction(0)}
    for (cls, rad), (re, im) in sorted(merged.items(), key=lambda t: (t[0][0], t[0][1])):
        root = _sqrt_fraction(rad)
        if root is None:
            exact = None
            s = math.sqrt(rad.numerator) / math.sqrt(rad.denominator)
            floats[cls] += float(re) * s
            imag[cls] += float(im) * s
        else:
            floats[cls] += float(re * root)
            imag[cls] += float(im * root)
            if exact is not None:
                if im * root != 0:
                    exact = None
                else:
                    exact[cls] += re * root
    if exact is not None:
        floats = {c: float(v) for c, v in exact.items()}
    if abs(sum(imag.values())) > 1e-12:
        raise ArithmeticError(f"expected moment has imaginary part {sum(imag.values()):.3e}")
    total = floats["D"] + floats["A"] + floats["B"]
    if exact is not None:
        ex_total = exact["D"] + exact["A"] + exact["B"]
        total = float(ex_total)
        return MomentBreakdown(
            k, total, floats["D"], floats["A"], floats["B"],
            ex_total, exact["D"], exact["A"], exact["B"], a_count, n_pat,
        )
    return MomentBreakdown(k, total, floats["D"], floats["A"], floats["B"], normalized_a_count=a_count, n_patterns=n_pat)


def bnk_fraction(g: Hypergraph, k: int, budget: int = DEFAULT_BUDGET) -> float:
    """``|part_B|`` of the exact ``k``-th moment with unit-variance couplings.

    Only pair patterns enter ``B``, so any unit-variance law gives the same
    value; Rademacher couplings keep the arithmetic exact.
    """
    return abs(expected_moment(g, "rademacher", k, budget=budget).part_B)


def bnk_leading_bound(g: Hypergraph, k: int) -> float:
    """Leading term ``(k-1)!! k(k-2)/4 * d_max / e`` of the bound on ``|part_B|``."""
    if k % 2:
        return 0.0
    return double_factorial(k - 1) * k * (k - 2) / 4 * g.degree_ratio()
