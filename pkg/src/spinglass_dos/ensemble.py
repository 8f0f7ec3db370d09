"""
Random spin-glass Hamiltonians on hypergraphs.

Each term ``(a, e)`` (hyperedge ``e``, letters ``a`` in ``{1,2,3}^|e|``) gets the
coefficient ``alpha * (e(G) * 3**|e|) ** -0.5``. The coupling ``alpha`` is a pure
function of ``(seed, sample_index, edge index, letter index)`` computed with a
Philox4x32-10 counter-based generator, so a draw does not depend on evaluation
order, batching or thread count.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .hypergraph import Hypergraph
from .pauli import PHASES, PauliString

__all__ = [
    "philox4x32",
    "sample_key",
    "uniform_stream",
    "CouplingDistribution",
    "get_distribution",
    "DISTRIBUTIONS",
    "TermTable",
    "term_table",
    "HamiltonianSample",
    "draw",
    "draw_coefficients",
    "to_dense",
    "dense_batch",
    "apply",
    "DenseCapError",
    "DEFAULT_DENSE_CAP",
]

DEFAULT_DENSE_CAP = 14

# --- counter-based generator ------------------------------------------------

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def philox4x32(counter, key, rounds: int = 10):
    """Vectorized Philox4x32 block function.

    ``counter`` is a sequence of four uint32-valued arrays (broadcastable),
    ``key`` a pair of uint32-valued arrays. Returns four uint64 arrays holding
    the 32-bit output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _LO32 for c in counter)
    k0 = np.asarray(key[0], dtype=np.uint64) & _LO32
    k1 = np.asarray(key[1], dtype=np.uint64) & _LO32
    for r in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> _S32) ^ c1 ^ k0, p1 & _LO32, (p0 >> _S32) ^ c3 ^ k1, p0 & _LO32
        if r + 1 < rounds:
            k0 = (k0 + np.uint64(_W0)) & _LO32
            k1 = (k1 + np.uint64(_W1)) & _LO32
    return c0, c1, c2, c3


def sample_key(seed: int, sample_index: int) -> tuple[int, int]:
    """Philox key for one sample: a hash of the master seed and the sample index."""
    h = hashlib.blake2b(digest_size=8, person=b"qsg-sample")
    h.update((int(seed) % (1 << 64)).to_bytes(8, "little"))
    h.update(int(sample_index).to_bytes(8, "little", signed=False))
    v = int.from_bytes(h.digest(), "little")
    return v & 0xFFFFFFFF, v >> 32


def _to_unit_interval(w0, w1) -> np.ndarray:
    # 53 random bits, centred in their cell so that 0 and 1 are never produced
    hi = (w0 >> np.uint64(5)).astype(np.float64)
    lo = (w1 >> np.uint64(6)).astype(np.float64)
    return (hi * 67108864.0 + lo + 0.5) / 9007199254740992.0


def uniform_stream(key: tuple, counter_words) -> np.ndarray:
    """Uniforms in (0, 1), one per counter lane."""
    w0, w1, _, _ = philox4x32(counter_words, key)
    return _to_unit_interval(w0, w1)


# --- coupling distributions -------------------------------------------------


def _double_factorial(m: int) -> int:
    return math.prod(range(m, 0, -2)) if m > 0 else 1


def _derangements(m: int) -> int:
    d0, d1 = 1, 0
    if m == 0:
        return 1
    for j in range(2, m + 1):
        d0, d1 = d1, (j - 1) * (d0 + d1)
    return d1


@dataclass(frozen=True)
class CouplingDistribution:
    """Zero-mean, unit-variance coupling law sampled by inverse CDF."""

    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}; choose from {sorted(_KINDS)}")

    def moment(self, m: int) -> Fraction:
        """Exact ``m``-th raw moment."""
        if m < 0:
            raise ValueError("moment order must be non-negative")
        if self.kind == "shifted_exponential":
            # E (X - 1)^m for X ~ Exp(1) is the number of derangements of m items
            return Fraction(_derangements(m))
        if m % 2:
            return Fraction(0)
        if self.kind == "standard_normal":
            return Fraction(_double_factorial(m - 1))
        if self.kind == "rademacher":
            return Fraction(1)
        return Fraction(3 ** (m // 2), m + 1)  # uniform on [-sqrt3, sqrt3]

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "standard_normal":
            return ndtri(u)
        if self.kind == "rademacher":
            return np.where(u < 0.5, -1.0, 1.0)
        if self.kind == "uniform_sym":
            return math.sqrt(3.0) * (2.0 * u - 1.0)
        return -np.log1p(-u) - 1.0

    def sample(self, size: int, seed: int = 0) -> np.ndarray:
        """Stand-alone iid draws from the counter stream (for moment checks)."""
        idx = np.arange(size, dtype=np.uint64)
        u = uniform_stream(sample_key(seed, 0), (idx & _LO32, idx >> _S32, 0xFFFFFFFF, 1))
        return self.from_uniform(u)


_KINDS = ("standard_normal", "rademacher", "uniform_sym", "shifted_exponential")
_ALIASES = {
    "gauss": "standard_normal",
    "gaussian": "standard_normal",
    "normal": "standard_normal",
    "rademacher": "rademacher",
    "uniform": "uniform_sym",
    "exp-shift": "shifted_exponential",
}
DISTRIBUTIONS = {k: CouplingDistribution(k) for k in _KINDS}


def get_distribution(name: str | CouplingDistribution) -> CouplingDistribution:
    if isinstance(name, CouplingDistribution):
        return name
    kind = _ALIASES.get(name, name)
    if kind not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {name!r}")
    return DISTRIBUTIONS[kind]


# --- term layout --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TermTable:
    """Structural layout of all ``sum_e 3**|e|`` terms of a hypergraph model.

    Terms are ordered by edge (canonical order) and, within an edge, by the
    letter tuple read as a base-3 number with the first vertex most
    significant.
    """

    graph: Hypergraph
    edge_index: np.ndarray
    letter_index: np.ndarray
    x: np.ndarray
    z: np.ndarray
    phase: np.ndarray
    weight: np.ndarray  # (e(G) * 3**|e|) ** -0.5 per term

    def __len__(self):
        return len(self.edge_index)


@lru_cache(maxsize=32)
def term_table(g: Hypergraph) -> TermTable:
    if g.n_vertices > 62:
        raise ValueError("bitmask layout supports at most 62 sites")
    parts = {k: [] for k in ("edge", "letter", "x", "z", "phase", "weight")}
    e_count = g.n_edges
    for ei, edge in enumerate(g.edges):
        size = len(edge)
        n_terms = 3 ** size
        li = np.arange(n_terms, dtype=np.int64)
        x = np.zeros(n_terms, dtype=np.int64)
        z = np.zeros(n_terms, dtype=np.int64)
        ny = np.zeros(n_terms, dtype=np.int64)
        rest = li.copy()
        for pos in range(size - 1, -1, -1):
            letter = rest % 3 + 1
            rest //= 3
            bit = np.int64(1) << np.int64(edge[pos] - 1)
            x |= np.where(letter != 3, bit, 0)
            z |= np.where(letter != 1, bit, 0)
            ny += letter == 2
        parts["edge"].append(np.full(n_terms, ei, dtype=np.int64))
        parts["letter"].append(li)
        parts["x"].append(x)
        parts["z"].append(z)
        parts["phase"].append(ny % 4)
        parts["weight"].append(np.full(n_terms, (e_count * 3.0 ** size) ** -0.5))
    cat = {k: np.concatenate(v) for k, v in parts.items()}
    return TermTable(g, cat["edge"], cat["letter"], cat["x"], cat["z"], cat["phase"], cat["weight"])


def term_weight_squared(g: Hypergraph, edge: Sequence[int]) -> Fraction:
    """Exact square of the normalization of one term on ``edge``."""
    return Fraction(1, g.n_edges * 3 ** len(edge))


# --- samples ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HamiltonianSample:
    """One draw of the model as parallel arrays of coefficients and string bitmasks."""

    graph: Hypergraph
    coeffs: np.ndarray
    x: np.ndarray
    z: np.ndarray
    phase: np.ndarray
    distribution: str = ""
    seed: int | None = None
    sample_index: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_sites(self) -> int:
        return self.graph.n_vertices

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def __len__(self):
        return len(self.coeffs)

    @property
    def terms(self) -> list[tuple[float, PauliString]]:
        n = self.n_sites
        return [
            (float(c), PauliString(n, int(x), int(z), int(p)))
            for c, x, z, p in zip(self.coeffs, self.x, self.z, self.phase)
        ]

    def coefficient_norm2(self) -> float:
        """``sum coeff**2``, equal to ``2**-n Tr H**2``."""
        return float(np.sum(self.coeffs ** 2))


def _coefficients_for_keys(table: TermTable, dist: CouplingDistribution, keys) -> np.ndarray:
    k0 = np.array([k[0] for k in keys], dtype=np.uint64)[:, None]
    k1 = np.array([k[1] for k in keys], dtype=np.uint64)[:, None]
    li = table.letter_index.astype(np.uint64)
    counter = (li & _LO32, li >> _S32, table.edge_index.astype(np.uint64), np.uint64(0))
    u = uniform_stream((k0, k1), counter)
    return dist.from_uniform(u) * table.weight


def draw_coefficients(
    g: Hypergraph, dist, seed: int, sample_indices: Sequence[int], chunk: int = 1 << 22
) -> np.ndarray:
    """Coefficient matrix of shape ``(len(sample_indices), n_terms)``."""
    dist = get_distribution(dist)
    table = term_table(g)
    keys = [sample_key(seed, s) for s in sample_indices]
    rows = max(1, chunk // max(1, len(table)))
    blocks = [
        _coefficients_for_keys(table, dist, keys[i : i + rows]) for i in range(0, len(keys), rows)
    ]
    return np.concatenate(blocks, axis=0) if blocks else np.zeros((0, len(table)))


def draw(g: Hypergraph, dist, seed: int, sample_index: int) -> HamiltonianSample:
    dist = get_distribution(dist)
    table = term_table(g)
    coeffs = draw_coefficients(g, dist, seed, [sample_index])[0]
    return HamiltonianSample(
        g, coeffs, table.x, table.z, table.phase, dist.kind, int(seed), int(sample_index)
    )


# --- dense and matrix-free action --------------------------------------------


class DenseCapError(ValueError):
    """Raised when a dense ``2**n`` materialization exceeds the configured cap."""


def _parity_signs(z: np.ndarray, cols: np.ndarray) -> np.ndarray:
    par = np.bitwise_count(z[:, None] & cols[None, :]) & 1
    return 1.0 - 2.0 * par


def _fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    rows, dim = a.shape
    h = 1
    while h < dim:
        a = a.reshape(rows, dim // (2 * h), 2, h)
        a = np.stack((a[:, :, 0, :] + a[:, :, 1, :], a[:, :, 0, :] - a[:, :, 1, :]), axis=2)
        h *= 2
    return a.reshape(rows, dim)


def _group_diagonals(h: HamiltonianSample) -> tuple[np.ndarray, np.ndarray]:
    """For each distinct x-mask, the vector ``d`` with ``H[c ^ x, c] = d[c]``."""
    if "groups" in h._cache:
        return h._cache["groups"]
    n, dim = h.n_sites, h.dim
    cols = np.arange(dim, dtype=np.int64)
    scaled = h.coeffs * np.array(PHASES)[h.phase % 4]
    xs, inverse = np.unique(h.x, return_inverse=True)
    if len(h.coeffs) > n * len(xs):
        table = np.zeros((len(xs), dim), dtype=complex)
        np.add.at(table, (inverse, h.z), scaled)
        diag = _fwht(table)
    else:
        diag = np.zeros((len(xs), dim), dtype=complex)
        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(len(xs) + 1))
        step = max(1, (1 << 22) // dim)
        for g in range(len(xs)):
            idx = order[bounds[g] : bounds[g + 1]]
            for s in range(0, len(idx), step):
                part = idx[s : s + step]
                diag[g] += scaled[part] @ _parity_signs(h.z[part], cols)
    h._cache["groups"] = (xs, diag)
    return xs, diag


def to_dense(h: HamiltonianSample, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense Hermitian matrix of the sample (basis bit ``j-1`` is site ``j``)."""
    if h.n_sites > cap:
        need = 16 * 4 ** h.n_sites
        raise DenseCapError(
            f"dense matrix for n={h.n_sites} exceeds cap n={cap}; "
            f"needs about {need / 2**30:.1f} GiB for the matrix alone"
        )
    dim = h.dim
    cols = np.arange(dim, dtype=np.int64)
    xs, diag = _group_diagonals(h)
    m = np.zeros((dim, dim), dtype=complex)
    for x, d in zip(xs, diag):
        m[cols ^ x, cols] = d
    # exact Hermitian symmetrization: entries (r, c) and (c, r) become exact conjugates
    m += m.conj().T
    m *= 0.5
    return m


def apply(h: HamiltonianSample, v: np.ndarray) -> np.ndarray:
    """Matrix-free product ``H @ v`` for ``v`` of shape ``(2**n,)`` or ``(2**n, m)``."""
    v = np.asarray(v)
    if v.shape[0] != h.dim:
        raise ValueError(f"vector length {v.shape[0]} does not match dimension {h.dim}")
    cols = np.arange(h.dim, dtype=np.int64)
    xs, diag = _group_diagonals(h)
    out = np.zeros(v.shape, dtype=np.result_type(v, complex))
    for x, d in zip(xs, diag):
        out[cols ^ x] += d.reshape((-1,) + (1,) * (v.ndim - 1)) * v
    return out


@lru_cache(maxsize=8)
def _term_basis(g: Hypergraph) -> np.ndarray:
    table = term_table(g)
    dim = 1 << g.n_vertices
    cols = np.arange(dim, dtype=np.int64)
    basis = np.zeros((len(table), dim, dim), dtype=complex)
    signs = _parity_signs(table.z, cols) * np.array(PHASES)[table.phase % 4][:, None]
    rows = cols[None, :] ^ table.x[:, None]
    t = np.arange(len(table))[:, None]
    basis[t, rows, cols[None, :]] = signs
    return basis


def dense_batch(g: Hypergraph, coeffs: np.ndarray, cap: int = 8) -> np.ndarray:
    """Dense matrices for a batch of coefficient rows (small ``n`` only)."""
    if g.n_vertices > cap:
        raise DenseCapError(f"batched dense materialization limited to n <= {cap}")
    m = np.einsum("st,tij->sij", coeffs, _term_basis(g))
    m += np.conj(np.swapaxes(m, 1, 2))
    m *= 0.5
    return m
