"""
Limiting densities of states: Gaussian, semicircle, the q-interpolating family
between them, and the star-graph law.

The q-interpolating law with parameter ``lam > 0`` has ``q = exp(-4 lam / 3)``,
support ``|x| <= 2 / sqrt(1 - q)`` and even moments ``sum_pi q**crossings(pi)``
over pair partitions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .partitions import count_noncrossing, crossing_polynomial, double_factorial

__all__ = [
    "LimitLaw",
    "gaussian",
    "semicircle",
    "q_interp",
    "star",
    "q_of_lambda",
    "touchard_riordan",
    "moment_by_partitions",
    "moment_by_integral",
    "QuadratureError",
    "density",
    "v_density",
    "cdf",
    "cdf_by_quadrature",
    "moment",
    "moment_exact",
    "default_bins",
]

# above this q the Touchard-Riordan alternating sum cancels catastrophically
Q_SWITCH = 0.999
_TAIL = 1e-16


class QuadratureError(RuntimeError):
    """A numerical integral did not reach its requested tolerance."""


def q_of_lambda(lam: float) -> float:
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return math.exp(-4.0 * lam / 3.0)


@dataclass(frozen=True)
class LimitLaw:
    kind: str
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "semicircle", "q_interp", "star"):
            raise ValueError(f"unknown law {self.kind!r}")
        if self.kind == "q_interp":
            if self.lam is None or not self.lam > 0:
                raise ValueError("q_interp needs lambda > 0")
        elif self.lam is not None:
            raise ValueError(f"{self.kind} takes no lambda")

    @property
    def q(self) -> float | None:
        return q_of_lambda(self.lam) if self.kind == "q_interp" else None

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "semicircle":
            return (-2.0, 2.0)
        if self.kind == "q_interp":
            r = 2.0 / math.sqrt(1.0 - self.q)
            return (-r, r)
        return (-math.inf, math.inf)

    @property
    def name(self) -> str:
        return f"q_interp(lambda={self.lam:g})" if self.kind == "q_interp" else self.kind

    def density(self, x):
        return density(self, x)

    def cdf(self, x):
        return cdf(self, x)

    def moment(self, k: int) -> float:
        return moment(self, k)


def gaussian() -> LimitLaw:
    return LimitLaw("gaussian")


def semicircle() -> LimitLaw:
    return LimitLaw("semicircle")


def q_interp(lam: float) -> LimitLaw:
    return LimitLaw("q_interp", float(lam))


def star() -> LimitLaw:
    return LimitLaw("star")


# --- densities ---------------------------------------------------------------


def _product_terms(q: float) -> int:
    """Smallest K with q**K below the double-precision floor."""
    if q <= 0.0:
        return 1
    return max(1, math.ceil(math.log(_TAIL) / math.log(q)))


def v_density(x, q: float) -> np.ndarray:
    """Density of the q-interpolating law at ``x`` for ``0 <= q < 1``.

    The infinite product is cut at ``K`` with ``q**K < 1e-16``; each omitted
    factor differs from 1 by ``O(q**k x**2)``, so the relative tail is of
    order ``x**2 (1-q) q**K / (1-q) = x**2 q**K``.
    """
    x = np.asarray(x, dtype=float)
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    s = 1.0 - q
    u = np.clip(1.0 - s * x * x / 4.0, 0.0, None)
    inside = u > 0.0
    ks = np.arange(_product_terms(q), dtype=float)
    qk = q ** ks
    log_ratio = np.sum(np.log1p(-q ** (2 * ks + 2)) - np.log1p(-q ** (2 * ks + 1)))
    # k = 0 factor (1 - s x^2 / 4) merges with the prefactor into sqrt(u)
    xs = x[inside]
    rest = np.zeros_like(xs)
    if len(ks) > 1:
        c = qk[1:] / (1.0 + qk[1:]) ** 2
        rest = np.sum(np.log1p(-s * np.multiply.outer(xs * xs, c)), axis=-1)
    out = np.zeros_like(x)
    out[inside] = math.sqrt(s) / math.pi * np.sqrt(u[inside]) * np.exp(log_ratio + rest)
    return out


def density(law: LimitLaw, x):
    x = np.asarray(x, dtype=float)
    if law.kind == "gaussian":
        return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if law.kind == "semicircle":
        return np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * math.pi)
    if law.kind == "star":
        return 3.0 * math.sqrt(3.0 / (2.0 * math.pi)) * x * x * np.exp(-1.5 * x * x)
    return v_density(x, law.q)


# --- CDFs --------------------------------------------------------------------


def _cdf_scalar_sine(law: LimitLaw, x: float, tol: float) -> float:
    r = law.support[1]
    if x <= -r:
        return 0.0
    if x >= r:
        return 1.0
    theta = math.asin(x / r)
    # the edge singularity is square-root type; x = r sin(theta) removes it
    f = lambda t: float(density(law, r * math.sin(t))) * r * math.cos(t)
    lo = -math.pi / 2
    val, err = integrate.quad(f, lo, theta, epsabs=tol, epsrel=tol, limit=200)
    if err > 10 * tol:
        raise QuadratureError(f"cdf quadrature error {err:.2e} exceeds tolerance {tol:.0e}")
    return min(1.0, max(0.0, val))


def cdf(law: LimitLaw, x, tol: float = 1e-10):
    """Cumulative distribution function; closed forms where they exist."""
    x_arr = np.asarray(x, dtype=float)
    if law.kind == "gaussian":
        return ndtr(x_arr)
    if law.kind == "semicircle":
        t = np.clip(x_arr, -2.0, 2.0)
        return 0.5 + t * np.sqrt(4.0 - t * t) / (4.0 * math.pi) + np.arcsin(t / 2.0) / math.pi
    if law.kind == "star":
        # rho(x) dx = y^2 phi(y) dy with y = sqrt(3) x
        y = math.sqrt(3.0) * x_arr
        with np.errstate(invalid="ignore"):
            tail = np.where(np.isinf(y), 0.0, y * np.exp(-0.5 * y * y))
        return ndtr(y) - tail / math.sqrt(2.0 * math.pi)
    flat = np.array([_cdf_scalar_sine(law, float(v), tol) for v in x_arr.ravel()])
    return flat.reshape(x_arr.shape) if x_arr.ndim else float(flat[0])


def cdf_by_quadrature(law: LimitLaw, x: float, tol: float = 1e-10) -> float:
    """CDF from the density alone, for cross-checking closed forms."""
    lo, hi = law.support
    if math.isinf(lo):
        f = lambda t: float(density(law, t))
        val, err = integrate.quad(f, -math.inf, x, epsabs=tol, epsrel=tol, limit=200)
        if err > 10 * tol:
            raise QuadratureError(f"cdf quadrature error {err:.2e}")
        return val
    if law.kind == "semicircle":
        r = hi
        if x <= -r:
            return 0.0
        if x >= r:
            return 1.0
        f = lambda t: float(density(law, r * math.sin(t))) * r * math.cos(t)
        return integrate.quad(f, -math.pi / 2, math.asin(x / r), epsabs=tol, epsrel=tol)[0]
    return _cdf_scalar_sine(law, x, tol)


# --- moments -----------------------------------------------------------------


def moment_exact(law: LimitLaw, k: int) -> Fraction:
    """Exact rational moment for the Gaussian, semicircle and star laws."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k % 2:
        return Fraction(0)
    if law.kind == "gaussian":
        return Fraction(double_factorial(k - 1))
    if law.kind == "semicircle":
        return Fraction(count_noncrossing(k))
    if law.kind == "star":
        h = k // 2
        return Fraction(math.factorial(k + 1), 6 ** h * math.factorial(h))
    raise ValueError("q_interp moments are irrational; use moment()")


def touchard_riordan(lam: float, k: int) -> float:
    """Alternating binomial sum for ``sum_pi q**crossings``."""
    if k % 2:
        return 0.0
    q = q_of_lambda(lam)
    h = k // 2
    s = math.fsum(
        (-1) ** j * math.exp(-2.0 * lam * j * (j - 1) / 3.0) * math.comb(k, h + j)
        for j in range(-h, h + 1)
    )
    return s / (-math.expm1(-4.0 * lam / 3.0)) ** h


def moment_by_partitions(lam: float, k: int, method: str = "auto") -> float:
    """Crossing-weighted count of pair partitions at ``q = exp(-4 lam / 3)``."""
    if k % 2:
        return 0.0
    if k > 16 and method == "enumerate":
        raise ValueError("explicit enumeration is limited to k <= 16")
    return crossing_polynomial(k, q_of_lambda(lam), method)


def moment_by_integral(lam: float, k: int, tol: float = 1e-11) -> float:
    """Gaussian-weighted integral representation of the even moments.

    The integrand is complex; both parts are integrated and the imaginary part
    must vanish to 1e-8.
    """
    if k % 2:
        return 0.0
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if k == 0:
        return 1.0
    c = lam / 3.0
    s = math.sqrt(c)
    denom = math.exp(-2.0 * c) * math.sinh(-2.0 * c)
    h = k // 2

    def g(x: float) -> complex:
        w = 2.0 * np.sinh(complex(c, x * s)) ** 2 / denom
        return math.exp(-0.5 * x * x) * w ** h

    bound = math.sqrt(-2.0 * math.log(1e-300)) + 1.0
    opts = dict(epsabs=tol, epsrel=tol, limit=400)
    with warnings.catch_warnings():
        # roundoff notices near the requested tolerance; the error estimate is checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re, e_re = integrate.quad(lambda x: g(x).real, -bound, bound, **opts)
        im, e_im = integrate.quad(lambda x: g(x).imag, -bound, bound, **opts)
    scale = 1.0 / math.sqrt(2.0 * math.pi)
    re, im = re * scale, im * scale
    if max(e_re, e_im) * scale > 1e-7 * max(1.0, abs(re)):
        raise QuadratureError(f"moment integral did not converge (err {max(e_re, e_im):.2e})")
    if abs(im) >= 1e-8:
        raise QuadratureError(f"imaginary part {im:.3e} of the moment integral does not vanish")
    return re


def moment(law: LimitLaw, k: int) -> float:
    if law.kind != "q_interp":
        return float(moment_exact(law, k))
    if k % 2:
        return 0.0
    if law.q > Q_SWITCH:
        return moment_by_partitions(law.lam, k)
    return touchard_riordan(law.lam, k)


def default_bins(law: LimitLaw, n_bins: int = 101) -> np.ndarray:
    """Histogram edges: [-4, 4] for unbounded laws, support +- 0.5 otherwise."""
    lo, hi = law.support
    if math.isinf(hi):
        return np.linspace(-4.0, 4.0, n_bins + 1)
    return np.linspace(lo - 0.5, hi + 0.5, n_bins + 1)
