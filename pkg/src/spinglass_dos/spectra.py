"""
Full diagonalization of sampled Hamiltonians and empirical density-of-states
statistics: pooled histograms, per-sample moments, and KS distances to the
limit laws.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .ensemble import DEFAULT_DENSE_CAP, DenseCapError, dense_batch, draw, draw_coefficients, to_dense
from .hypergraph import Hypergraph
from .laws import LimitLaw, cdf

__all__ = [
    "Spectrum",
    "eigenvalues",
    "empirical_moment",
    "EmpiricalDOS",
    "accumulate",
    "MomentEstimate",
    "estimate_expected_moments",
    "ks_distance",
    "SampleRun",
    "run_samples",
    "worker_count",
    "IdentityViolation",
]

TRACE_TOL = 1e-9
FROBENIUS_RTOL = 1e-9
RESIDUAL_TOL = 1e-9


class IdentityViolation(RuntimeError):
    """A per-sample structural identity (trace or Frobenius) failed."""


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residual_bound: float = math.nan  # max spot-checked ||Mv - lam v|| / ||M||

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def _inverse_iteration_residual(m: np.ndarray, lam: float, scale: float, rng) -> float:
    dim = m.shape[0]
    # nudge off the eigenvalue so the factorization stays regular
    shift = lam + 1e-10 * scale
    lu = sla.lu_factor(m - shift * np.eye(dim), check_finite=False)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    for _ in range(3):
        v = sla.lu_solve(lu, v, check_finite=False)
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(m @ v - lam * v))


def eigenvalues(m: np.ndarray, spot_checks: int = 1, seed: int = 0) -> Spectrum:
    """All eigenvalues of a Hermitian matrix, ascending.

    ``spot_checks`` randomly chosen eigenvalues are verified by inverse
    iteration: the implied eigenvector must satisfy
    ``||Mv - lam v|| <= 1e-9 ||M||``.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.conj().T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian within 1e-12")
    lam = sla.eigvalsh(m, check_finite=False, driver="evd")
    bound = math.nan
    if spot_checks > 0 and len(lam):
        norm = max(float(np.abs(lam).max()), np.finfo(float).tiny)
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(lam), size=min(spot_checks, len(lam)), replace=False)
        bound = max(_inverse_iteration_residual(m, float(lam[i]), norm, rng) for i in picks) / norm
        if bound > RESIDUAL_TOL:
            raise ArithmeticError(f"eigen-residual {bound:.2e} exceeds {RESIDUAL_TOL:.0e}")
    return Spectrum(lam, bound)


def empirical_moment(s: Spectrum | np.ndarray, k: int) -> float:
    """``2**-n sum_j lam_j**k`` for one spectrum."""
    lam = s.eigenvalues if isinstance(s, Spectrum) else np.asarray(s)
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(np.sum(lam ** k) / len(lam))


# --- histograms ----------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalDOS:
    """Pooled eigenvalue histogram over samples; out-of-range values are tallied."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int = 0
    n_eigen_per_sample: int = 0
    below: int = 0
    above: int = 0

    @classmethod
    def empty(cls, bin_edges: Sequence[float]) -> "EmpiricalDOS":
        edges = np.asarray(bin_edges, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be a strictly increasing sequence")
        return cls(edges, np.zeros(len(edges) - 1, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.below + self.above

    def merge(self, other: "EmpiricalDOS") -> "EmpiricalDOS":
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise ValueError("cannot merge histograms with different binning")
        per = self.n_eigen_per_sample or other.n_eigen_per_sample
        if other.n_eigen_per_sample not in (0, per):
            raise ValueError("cannot merge spectra of different dimension")
        return replace(
            self,
            counts=self.counts + other.counts,
            n_samples=self.n_samples + other.n_samples,
            n_eigen_per_sample=per,
            below=self.below + other.below,
            above=self.above + other.above,
        )

    def density_estimate(self) -> np.ndarray:
        widths = np.diff(self.bin_edges)
        return self.counts / (max(self.total, 1) * widths)

    def cdf_at_edges(self) -> np.ndarray:
        cum = np.concatenate(([0], np.cumsum(self.counts)))
        return (self.below + cum) / max(self.total, 1)

    def rows(self) -> list[tuple[float, float, int, float]]:
        dens = self.density_estimate()
        e = self.bin_edges
        return [(float(e[i]), float(e[i + 1]), int(self.counts[i]), float(dens[i])) for i in range(len(self.counts))]


def _histogram(dos: EmpiricalDOS, lam: np.ndarray) -> EmpiricalDOS:
    edges = dos.bin_edges
    lo, hi = edges[0], edges[-1]
    below = int(np.count_nonzero(lam < lo))
    above = int(np.count_nonzero(lam > hi))
    counts, _ = np.histogram(lam[(lam >= lo) & (lam <= hi)], bins=edges)
    return EmpiricalDOS(edges, counts.astype(np.int64), 1, len(lam), below, above)


def accumulate(dos: EmpiricalDOS, s: Spectrum | np.ndarray) -> EmpiricalDOS:
    lam = s.eigenvalues if isinstance(s, Spectrum) else np.asarray(s)
    return dos.merge(_histogram(dos, lam))


# --- moment estimates ------------------------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    k: int
    mean: float
    stderr: float


def estimate_expected_moments(per_sample: np.ndarray | Iterable[Spectrum], k_max: int | None = None) -> list[MomentEstimate]:
    """Monte Carlo mean and standard error of ``2**-n Tr H**k``.

    ``per_sample`` is either an ``(S, K)`` array of per-sample moments for
    ``k = 0..K-1`` or an iterable of spectra (then ``k_max`` is required).
    """
    if not isinstance(per_sample, np.ndarray):
        if k_max is None:
            raise ValueError("k_max is required when passing spectra")
        per_sample = np.array([[empirical_moment(s, k) for k in range(k_max + 1)] for s in per_sample])
    if per_sample.ndim != 2 or per_sample.shape[0] == 0:
        raise ValueError("need at least one sample")
    n = per_sample.shape[0]
    mean = np.sum(per_sample, axis=0) / n
    if n > 1:
        var = np.sum((per_sample - mean) ** 2, axis=0) / (n - 1)
        se = np.sqrt(var / n)
    else:
        se = np.full(per_sample.shape[1], math.nan)
    return [MomentEstimate(k, float(mean[k]), float(se[k])) for k in range(per_sample.shape[1])]


def ks_distance(dos: EmpiricalDOS, law: LimitLaw) -> float:
    """Largest gap between the pooled empirical CDF and the law CDF over bin edges."""
    if dos.total == 0:
        raise ValueError("empty histogram")
    emp = dos.cdf_at_edges()
    ref = np.asarray(cdf(law, dos.bin_edges), dtype=float)
    return float(np.max(np.abs(emp - ref)))


# --- sample runs -----------------------------------------------------------------


def worker_count(default: int | None = None) -> int:
    """Worker cap from ``QSG_THREADS`` (falls back to the CPU count)."""
    env = os.environ.get("QSG_THREADS")
    if env:
        return max(1, int(env))
    return max(1, default or os.cpu_count() or 1)


@dataclass
class SampleRun:
    """Results of diagonalizing ``n_samples`` independent draws."""

    graph: Hypergraph
    distribution: str
    seed: int
    dos: EmpiricalDOS
    moments: np.ndarray  # (samples, k_max + 1), row i = sample index i
    coeff_norm2: np.ndarray  # sum coeff**2 per sample
    trace_error: np.ndarray  # |sum lam| per sample
    frobenius_error: np.ndarray  # |2**-n sum lam**2 - sum coeff**2| / sum coeff**2
    residual_bounds: np.ndarray
    eigenvalues: list[np.ndarray] | None = None

    @property
    def n_samples(self) -> int:
        return self.moments.shape[0]

    def moment_estimates(self) -> list[MomentEstimate]:
        return estimate_expected_moments(self.moments)

    def identities_hold(self) -> bool:
        dim = 1 << self.graph.n_vertices
        return bool(
            np.all(self.trace_error <= TRACE_TOL * math.sqrt(dim))
            and np.all(self.frobenius_error <= FROBENIUS_RTOL)
        )


def _sample_stats(lam: np.ndarray, c2: float, k_max: int):
    dim = len(lam)
    powers = np.ones_like(lam)
    mom = np.empty(k_max + 1)
    for k in range(k_max + 1):
        mom[k] = np.sum(powers) / dim
        powers = powers * lam
    trace_err = abs(float(np.sum(lam)))
    frob_err = abs(float(np.sum(lam * lam)) / dim - c2) / c2
    return mom, trace_err, frob_err


def run_samples(
    g: Hypergraph,
    dist,
    seed: int,
    n_samples: int,
    bin_edges: Sequence[float],
    k_max: int = 8,
    workers: int | None = None,
    spot_check_every: int = 1,
    keep_eigenvalues: bool = False,
    start_index: int = 0,
    dense_cap: int = DEFAULT_DENSE_CAP,
    progress: Callable[[int], None] | None = None,
    strict: bool = True,
) -> SampleRun:
    """Draw, diagonalize and summarize samples ``start_index .. start_index + n_samples - 1``.

    Results are assembled in sample-index order, so output does not depend on
    the number of workers. With ``strict`` a failed trace or Frobenius
    identity raises :class:`IdentityViolation`.
    """
    n = g.n_vertices
    if n > dense_cap:
        raise DenseCapError(f"n={n} exceeds the dense cap n={dense_cap}")
    indices = list(range(start_index, start_index + n_samples))
    dos0 = EmpiricalDOS.empty(bin_edges)
    results: list = [None] * n_samples

    if n <= 6 and n_samples > 1:
        # tiny systems: batch materialization and batched LAPACK calls
        batch = max(1, 4096 >> n)
        for b0 in range(0, n_samples, batch):
            idx = indices[b0 : b0 + batch]
            coeffs = draw_coefficients(g, dist, seed, idx)
            mats = dense_batch(g, coeffs)
            lams = np.linalg.eigvalsh(mats)
            for j, lam in enumerate(lams):
                c2 = float(np.sum(coeffs[j] ** 2))
                results[b0 + j] = (lam, c2, math.nan)
            if progress:
                progress(min(b0 + batch, n_samples))
    else:
        def job(pos: int):
            s = indices[pos]
            h = draw(g, dist, seed, s)
            checks = 1 if spot_check_every and pos % spot_check_every == 0 else 0
            spec = eigenvalues(to_dense(h, cap=dense_cap), spot_checks=checks, seed=s)
            return spec.eigenvalues, h.coefficient_norm2(), spec.residual_bound

        n_workers = workers or worker_count()
        if n_workers == 1:
            for pos in range(n_samples):
                results[pos] = job(pos)
                if progress:
                    progress(pos + 1)
        else:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                for pos, res in enumerate(pool.map(job, range(n_samples))):
                    results[pos] = res
                    if progress:
                        progress(pos + 1)

    dos = dos0
    moments = np.empty((n_samples, k_max + 1))
    c2s = np.empty(n_samples)
    terr = np.empty(n_samples)
    ferr = np.empty(n_samples)
    resid = np.empty(n_samples)
    kept = [] if keep_eigenvalues else None
    for pos, (lam, c2, rb) in enumerate(results):
        dos = accumulate(dos, lam)
        moments[pos], terr[pos], ferr[pos] = _sample_stats(lam, c2, k_max)
        c2s[pos] = c2
        resid[pos] = rb
        if kept is not None:
            kept.append(lam)
    run = SampleRun(g, getattr(dist, "kind", str(dist)), seed, dos, moments, c2s, terr, ferr, resid, kept)
    if strict and not run.identities_hold():
        raise IdentityViolation(
            f"trace/Frobenius identity failed: max trace err {terr.max():.2e}, "
            f"max Frobenius rel err {ferr.max():.2e}"
        )
    return run
