"""Acceptance criteria for the toolkit, one test per criterion.

Each test is labelled with ``@pytest.mark.criterion`` and the session ends with
one PASS/FAIL line per criterion. Long Monte Carlo runs are guarded by
``QSG_ACCEPTANCE_BUDGET`` (seconds per criterion, default 14400): a few
samples are timed first and, if the projected runtime exceeds the budget, the
criterion fails with the projection instead of running.
"""
import itertools
import math
import os
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from spinglass_dos.hypergraph import circulant, complete_p_uniform, cycle_chain, star_graph
from spinglass_dos.laws import (
    default_bins,
    gaussian,
    moment_by_integral,
    moment_by_partitions,
    moment,
    q_interp,
    semicircle,
    star,
    touchard_riordan,
)
from spinglass_dos.oracle import expected_moment
from spinglass_dos.partitions import (
    count_noncrossing,
    double_factorial,
    enumerate_unlabelled,
    pattern_trace,
    star_f,
)
from spinglass_dos.pauli import PauliString, chain_trace, from_letters, multiply, normalized_trace
from spinglass_dos.spectra import ks_distance, run_samples

pytestmark = [pytest.mark.acceptance]

BUDGET = float(os.environ.get("QSG_ACCEPTANCE_BUDGET", 4 * 3600))
TIMING_SAMPLES = 2

# runs from the sampled criteria, collected for the per-sample identity check
RUNS: dict[str, object] = {}


def budgeted_run(label, g, dist, seed, n_samples, bins, k_max=4):
    """Time a few samples, then finish the run if the projection fits the budget."""
    t0 = time.perf_counter()
    head = run_samples(g, dist, seed, TIMING_SAMPLES, bins, k_max=k_max, strict=False)
    per_sample = (time.perf_counter() - t0) / TIMING_SAMPLES
    projected = per_sample * n_samples
    RUNS[label] = head
    if projected > BUDGET:
        pytest.fail(
            f"{label}: projected runtime {projected / 3600:.1f} h for {n_samples} samples "
            f"({per_sample:.1f} s each) exceeds the budget of {BUDGET / 3600:.1f} h; "
            "raise QSG_ACCEPTANCE_BUDGET to run it"
        )
    tail = run_samples(g, dist, seed, n_samples - TIMING_SAMPLES, bins, k_max=k_max,
                       start_index=TIMING_SAMPLES, strict=False)
    run = merge_runs(head, tail)
    RUNS[label] = run
    return run


def merge_runs(a, b):
    return replace(
        a,
        dos=a.dos.merge(b.dos),
        moments=np.vstack([a.moments, b.moments]),
        coeff_norm2=np.concatenate([a.coeff_norm2, b.coeff_norm2]),
        trace_error=np.concatenate([a.trace_error, b.trace_error]),
        frobenius_error=np.concatenate([a.frobenius_error, b.frobenius_error]),
        residual_bounds=np.concatenate([a.residual_bounds, b.residual_bounds]),
    )


@pytest.mark.criterion("1 exact low moments")
def test_criterion_1_exact_low_moments(detail):
    expected = {0: 1, 1: 0, 2: 1, 3: 0, 5: 0, 7: 0}
    for g in (cycle_chain(4), star_graph(5)):
        for k, v in expected.items():
            assert expected_moment(g, "rademacher", k).exact_total == Fraction(v)
    detail("cycle_chain(4), star_graph(5): m_k = 1,0,1,0,0,0 exactly for k = 0,1,2,3,5,7")


@pytest.mark.criterion("2 limit-law moment oracles agree")
def test_criterion_2_oracle_triple_agreement(detail):
    worst = 0.0
    for lam in (0.25, 1.0, 4.0):
        for k in range(2, 13, 2):
            a = moment_by_partitions(lam, k)
            b = touchard_riordan(lam, k)
            c = moment_by_integral(lam, k)
            worst = max(worst, abs(a - b), abs(a - c))
    assert worst <= 1e-6
    lam_g, lam_s = -0.75 * math.log(0.9999), -0.75 * math.log(1e-8)
    # relative at the Gaussian end where (k-1)!! reaches 10395
    g_rel = max(abs(moment(q_interp(lam_g), k) / double_factorial(k - 1) - 1) for k in range(2, 13, 2))
    assert g_rel <= 1e-3
    assert max(abs(moment(q_interp(lam_s), k) - count_noncrossing(k)) for k in range(2, 13, 2)) <= 1e-3
    detail(f"max disagreement {worst:.1e}; Gaussian endpoint rel {g_rel:.1e}")


@pytest.mark.criterion("3 closed forms for m_4, m_6")
def test_criterion_3_closed_forms(detail):
    worst = 0.0
    for lam in np.linspace(0.05, 5.0, 20):
        q = math.exp(-4 * lam / 3)
        tr4, tr6 = touchard_riordan(lam, 4), touchard_riordan(lam, 6)
        pe4 = moment_by_partitions(lam, 4, method="enumerate")
        pe6 = moment_by_partitions(lam, 6, method="enumerate")
        worst = max(worst, abs(pe4 - tr4), abs(pe6 - tr6), abs(2 + q - tr4),
                    abs(5 + 6 * q + 3 * q**2 + q**3 - tr6))
    assert worst <= 1e-10
    detail(f"max deviation {worst:.1e} on 20 lambda points")


@pytest.mark.slow
@pytest.mark.criterion("4 Gaussian regime on cycle_chain(11)")
def test_criterion_4_gaussian_regime(detail):
    g = cycle_chain(11)
    bins = default_bins(gaussian())
    d = {}
    for dist in ("gauss", "exp-shift"):
        run = budgeted_run(f"4/{dist}", g, dist, 11, 1000, bins)
        d[dist] = ks_distance(run.dos, gaussian())
    detail(f"KS gauss {d['gauss']:.4f}, exp-shift {d['exp-shift']:.4f} (bound 0.03)")
    assert d["gauss"] <= 0.03 and d["exp-shift"] <= 0.03


@pytest.mark.slow
@pytest.mark.criterion("5 semicircle regime on complete_p_uniform(n, n)")
def test_criterion_5_semicircle_regime(detail):
    bins = default_bins(semicircle())
    d = [ks_distance(budgeted_run(f"5/n={n}", complete_p_uniform(n, n), "gauss", 5, 200, bins).dos, semicircle())
         for n in (6, 8, 10)]
    detail("KS " + ", ".join(f"n={n}: {v:.4f}" for n, v in zip((6, 8, 10), d)) + " (bound 0.05 at n=10)")
    assert d[0] > d[1] > d[2]
    assert d[2] <= 0.05


@pytest.mark.slow
@pytest.mark.criterion("6a star law on star_graph(13)")
def test_criterion_6a_star_law_sampled(detail):
    run = budgeted_run("6/star", star_graph(13), "gauss", 13, 500, default_bins(star()))
    m4 = run.moment_estimates()[4]
    d = ks_distance(run.dos, star())
    detail(f"m_4 = {m4.mean:.4f} +- {m4.stderr:.4f}, KS {d:.4f}")
    assert abs(m4.mean - 5 / 3) <= 3 * m4.stderr
    assert d <= 0.05


@pytest.mark.criterion("6b star trace identity f(k)")
def test_criterion_6b_star_f(detail):
    for k in (2, 4, 6, 8):
        assert star_f(k) == Fraction(math.factorial(k + 1), 2 ** (k // 2))
    detail("f(k) = (k+1)!/2^(k/2) exactly for k = 2, 4, 6, 8")


@pytest.mark.criterion("7 non-crossing dichotomy")
def test_criterion_7_noncrossing_dichotomy(detail):
    exceptions = 0
    checked = 0
    for k in (2, 4, 6, 8):
        letters = list(itertools.product((1, 2, 3), repeat=k // 2))
        for p in enumerate_unlabelled(k):
            traces = [pattern_trace(p, a) for a in letters]
            checked += 1
            ok = all(t == 1 for t in traces) if p.is_noncrossing() else any(t != 1 for t in traces)
            exceptions += not ok
    detail(f"{checked} partitions, {exceptions} exceptions")
    assert exceptions == 0


def _all_strings(n):
    for x in range(1 << n):
        for z in range(1 << n):
            yield PauliString(n, x, z, bin(x & z).count("1") % 4)


@pytest.mark.criterion("8 Pauli algebra ground truth")
def test_criterion_8_pauli_ground_truth(detail):
    for n in (1, 2, 3):
        ps = list(_all_strings(n))
        mats = [p.to_matrix() for p in ps]
        for p, mp in zip(ps, mats):
            assert normalized_trace(p) == np.trace(mp) / 2**n
            for q, mq in zip(ps, mats):
                assert np.array_equal(multiply(p, q).to_matrix(), mp @ mq)
    # products of up to 6 single-site letters on n <= 3 sites against dense matrices
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        for k in range(1, 7):
            for _ in range(200):
                sites = rng.integers(1, n + 1, size=k)
                lets = rng.integers(1, 4, size=k)
                prod = PauliString.identity(n)
                dense = np.eye(2**n, dtype=complex)
                for s, a in zip(sites, lets):
                    f = from_letters(n, [(int(s), int(a))])
                    prod = multiply(prod, f)
                    dense = dense @ f.to_matrix()
                assert np.array_equal(prod.to_matrix(), dense)
                assert normalized_trace(prod) == pytest.approx(np.trace(dense) / 2**n)
    n_rec = 0
    for k in (4, 6, 8):
        for a in itertools.product((1, 2, 3), repeat=k):
            rhs = sum((-1) ** j * chain_trace(a[1 : j - 1] + a[j:]) for j in range(2, k + 1) if a[0] == a[j - 1])
            assert chain_trace(a) == rhs
            n_rec += 1
    detail(f"exhaustive n <= 3 products and traces; recursion on {n_rec} letter words")


@pytest.mark.criterion("9 rate trend on circulant(n, {1,2})")
def test_criterion_9_rate_trend(detail):
    errs, ratios = [], []
    for n in (6, 8, 10, 12):
        g = circulant(n, [1, 2])
        err = abs(expected_moment(g, "rademacher", 4).total - 3.0)
        errs.append(err)
        ratios.append(err / g.degree_ratio())
    detail("errors " + ", ".join(f"{e:.4f}" for e in errs) + f"; ratio spread {max(ratios) / min(ratios):.3f}")
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert max(ratios) / min(ratios) <= 10


@pytest.mark.slow
@pytest.mark.criterion("10 per-sample structural identities")
def test_criterion_10_identities(detail):
    assert RUNS, "no sampled runs from criteria 4-6 in this session"
    total = sum(r.n_samples for r in RUNS.values())
    bad = [k for k, r in RUNS.items() if not r.identities_hold()]
    worst_t = max(float(np.max(r.trace_error)) for r in RUNS.values())
    worst_f = max(float(np.max(r.frobenius_error)) for r in RUNS.values())
    detail(f"{total} samples over {len(RUNS)} runs; max |sum lam| {worst_t:.1e}, "
           f"max Frobenius rel error {worst_f:.1e}")
    assert not bad, f"identity failures in {bad}"
