"""
Exact algebra of n-site Pauli strings in the symplectic bitmask encoding.

A string is stored as ``i**phase_exp * prod_j X_j**x_j Z_j**z_j`` with site 1
on the least significant bit. With the convention ``Y = iXZ`` every product of
single-site letters keeps an exact phase in ``{0, 1, 2, 3}``, so traces are
exact members of ``{0, 1, -1, i, -i}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliString",
    "from_letters",
    "multiply",
    "commutes",
    "normalized_trace",
    "trace_phase",
    "chain_trace",
    "PHASES",
    "PAULI_MATRICES",
]

#: ``i**p`` for ``p = 0..3``; every value is exact in floating point.
PHASES = (1 + 0j, 1j, -1 + 0j, -1j)

#: sigma^(0..3) as dense 2x2 matrices, used for materialization and oracles.
PAULI_MATRICES = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# letter a -> (x bit, z bit, phase increment)
_LETTER_BITS = {0: (0, 0, 0), 1: (1, 0, 0), 2: (1, 1, 1), 3: (0, 1, 0)}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of single-site Pauli operators."""

    n_sites: int
    x_mask: int = 0
    z_mask: int = 0
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be positive, got {self.n_sites}")
        limit = 1 << self.n_sites
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("mask bits set above n_sites")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls(n_sites)

    @property
    def weight(self) -> int:
        """Number of sites carrying a non-identity letter."""
        return _popcount(self.x_mask | self.z_mask)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def is_hermitian(self) -> bool:
        # (i^p X^x Z^z)^dagger = i^-p (-1)^{|x&z|} X^x Z^z
        return (self.phase_exp - _popcount(self.x_mask & self.z_mask)) % 2 == 0

    def letters(self) -> list[tuple[int, int]]:
        """Per-site letters ``(site, a)`` with a in {1, 2, 3}, identity sites omitted."""
        out = []
        for j in range(self.n_sites):
            x = (self.x_mask >> j) & 1
            z = (self.z_mask >> j) & 1
            if x or z:
                out.append((j + 1, 2 if x and z else (1 if x else 3)))
        return out

    def sign(self) -> complex:
        """Scalar relating this string to the plain product of its letters."""
        return PHASES[(self.phase_exp - _popcount(self.x_mask & self.z_mask)) % 4]

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n`` matrix; basis index bit ``j-1`` is the state of site ``j``."""
        mats = [PAULI_MATRICES[a] for a in self._site_letters()]
        # site n is the most significant factor of the Kronecker product
        out = reduce(np.kron, reversed(mats))
        return self.sign() * out

    def _site_letters(self) -> list[int]:
        out = []
        for j in range(self.n_sites):
            x = (self.x_mask >> j) & 1
            z = (self.z_mask >> j) & 1
            out.append(2 if x and z else (1 if x else (3 if z else 0)))
        return out

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[(self.phase_exp - _popcount(self.x_mask & self.z_mask)) % 4]
        return prefix + "".join("IXYZ"[a] for a in self._site_letters())


def from_letters(n_sites: int, letters: Iterable[tuple[int, int]]) -> PauliString:
    """Build a string from ``(site, a)`` pairs, sites 1-based, ``a`` in {0, 1, 2, 3}."""
    x = z = phase = 0
    seen = set()
    for site, a in letters:
        if not 1 <= site <= n_sites:
            raise ValueError(f"site {site} outside 1..{n_sites}")
        if site in seen:
            raise ValueError(f"duplicate site {site}")
        if a not in _LETTER_BITS:
            raise ValueError(f"Pauli letter must be in 0..3, got {a}")
        seen.add(site)
        bx, bz, dp = _LETTER_BITS[a]
        x |= bx << (site - 1)
        z |= bz << (site - 1)
        phase += dp
    return PauliString(n_sites, x, z, phase)


def _check_sizes(p: PauliString, q: PauliString) -> None:
    if p.n_sites != q.n_sites:
        raise ValueError(f"site-count mismatch: {p.n_sites} vs {q.n_sites}")


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p @ q`` with exact phase tracking."""
    _check_sizes(p, q)
    phase = p.phase_exp + q.phase_exp + 2 * _popcount(p.z_mask & q.x_mask)
    return PauliString(p.n_sites, p.x_mask ^ q.x_mask, p.z_mask ^ q.z_mask, phase)


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_sizes(p, q)
    return (_popcount(p.x_mask & q.z_mask) + _popcount(p.z_mask & q.x_mask)) % 2 == 0


def trace_phase(p: PauliString) -> int | None:
    """Exponent ``t`` with ``2**-n Tr p = i**t``, or None when the trace vanishes."""
    if p.x_mask or p.z_mask:
        return None
    return p.phase_exp


def normalized_trace(p: PauliString) -> complex:
    t = trace_phase(p)
    return 0j if t is None else PHASES[t]


def chain_trace(a: Sequence[int]) -> complex:
    """``(1/2) Tr sigma^(a_1) ... sigma^(a_k)`` for letters in {1, 2, 3}."""
    if len(a) == 0:
        raise ValueError("chain_trace needs a nonempty letter sequence")
    x = z = phase = 0
    for letter in a:
        if letter not in (1, 2, 3):
            raise ValueError(f"letter must be in 1..3, got {letter}")
        bx, bz, dp = _LETTER_BITS[letter]
        # (i^phase X^x Z^z)(i^dp X^bx Z^bz)
        phase += dp + 2 * (z & bx)
        x ^= bx
        z ^= bz
    return 0j if (x or z) else PHASES[phase % 4]
