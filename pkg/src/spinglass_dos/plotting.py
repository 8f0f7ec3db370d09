"""Figure rendering for DOS histograms, limit-law curves and convergence sweeps."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .laws import LimitLaw, density  # noqa: E402
from .spectra import EmpiricalDOS  # noqa: E402

__all__ = ["plot_dos", "plot_laws", "plot_convergence"]


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps repeated renders byte-stable where the backend allows
    meta = {"Software": None} if path.suffix.lower() == ".png" else {}
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=meta)
    plt.close(fig)
    return path


def plot_dos(dos: EmpiricalDOS, laws: Sequence[LimitLaw], path: str | Path, title: str = "") -> Path:
    """Normalized histogram with limit-law densities on top."""
    fig, ax = plt.subplots(figsize=(6, 4))
    edges = dos.bin_edges
    ax.stairs(dos.density_estimate(), edges, fill=True, alpha=0.45, label="empirical")
    xs = np.linspace(edges[0], edges[-1], 801)
    for law in laws:
        ax.plot(xs, density(law, xs), lw=1.5, label=law.name)
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_laws(laws: Sequence[LimitLaw], path: str | Path, x_range: tuple[float, float] = (-4.0, 4.0)) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = np.linspace(*x_range, 1201)
    for law in laws:
        ax.plot(xs, density(law, xs), label=law.name)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    return _finish(fig, path)


def plot_convergence(sizes: Sequence[int], values: Sequence[float], path: str | Path,
                     ylabel: str = "KS distance", errors: Sequence[float] | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if errors is None:
        ax.plot(sizes, values, "o-")
    else:
        ax.errorbar(sizes, values, yerr=errors, fmt="o-", capsize=3)
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    ax.set_yscale("log")
    return _finish(fig, path)
