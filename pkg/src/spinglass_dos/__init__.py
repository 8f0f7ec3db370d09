"""Density of states of random Pauli Hamiltonians on hypergraphs."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .hypergraph import Hypergraph, circulant, complete_graph, complete_p_uniform, cycle_chain, star_graph
from .ensemble import CouplingDistribution, draw, get_distribution, to_dense
from .laws import LimitLaw, gaussian, q_interp, semicircle, star
from .oracle import MomentBreakdown, expected_moment
from .spectra import EmpiricalDOS, eigenvalues, ks_distance, run_samples

__all__ = [
    "Hypergraph",
    "circulant",
    "complete_graph",
    "complete_p_uniform",
    "cycle_chain",
    "star_graph",
    "CouplingDistribution",
    "draw",
    "get_distribution",
    "to_dense",
    "LimitLaw",
    "gaussian",
    "q_interp",
    "semicircle",
    "star",
    "MomentBreakdown",
    "expected_moment",
    "EmpiricalDOS",
    "eigenvalues",
    "ks_distance",
    "run_samples",
]
