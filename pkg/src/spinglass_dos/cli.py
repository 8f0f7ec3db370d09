"""
``qsg``: command-line experiments on random Pauli Hamiltonians.

Every output file starts with the run configuration (a ``# config:`` line in
CSV, a ``config`` key in JSON), and ``qsg replay FILE`` re-runs it and checks
that the bytes agree. Exit codes: 0 success, 2 invalid configuration,
3 a tolerance contract failed, 4 a size or budget guard refused the run.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .ensemble import DenseCapError, draw, get_distribution, term_table
from .hypergraph import (
    Hypergraph,
    circulant,
    complete_graph,
    complete_p_uniform,
    cycle_chain,
    star_graph,
)
from .laws import LimitLaw, QuadratureError, cdf, default_bins, density, gaussian, moment, q_interp, semicircle, star
from .oracle import BudgetExceeded, expected_moment
from .partitions import count_noncrossing, crossing_histogram, double_factorial
from .spectra import IdentityViolation, ks_distance, run_samples

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_GUARD = 0, 2, 3, 4

GRAPH_KINDS = ("chain", "complete", "star", "p-uniform", "circulant")
LAW_KINDS = ("gaussian", "semicircle", "star", "q_interp")


class ConfigError(ValueError):
    pass


class ToleranceError(RuntimeError):
    pass


# --- parsing helpers -------------------------------------------------------------


def parse_range(text: str) -> list[int]:
    """``a:b:step`` (inclusive of ``b``), ``a:b`` or a single integer; commas join pieces."""
    out: list[int] = []
    for piece in str(text).split(","):
        parts = piece.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"bad range {text!r}") from exc
        if len(nums) == 1:
            out.append(nums[0])
        elif len(nums) in (2, 3):
            step = nums[2] if len(nums) == 3 else 1
            if step <= 0 or nums[1] < nums[0]:
                raise ConfigError(f"bad range {text!r}")
            out.extend(range(nums[0], nums[1] + 1, step))
        else:
            raise ConfigError(f"bad range {text!r}")
    return out


def build_graph(cfg: dict, n: int | None = None) -> Hypergraph:
    if cfg.get("graph_file"):
        return Hypergraph.from_text(cfg["graph_file_text"])
    kind = cfg["graph"]
    n = cfg["n"] if n is None else n
    if n is None:
        raise ConfigError("--n is required")
    if kind == "chain":
        return cycle_chain(n)
    if kind == "complete":
        return complete_graph(n)
    if kind == "star":
        return star_graph(n)
    if kind == "p-uniform":
        if cfg.get("p") is None:
            raise ConfigError("--p is required for p-uniform graphs")
        return complete_p_uniform(n, cfg["p"])
    if kind == "circulant":
        return circulant(n, parse_range(cfg.get("offsets") or "1"))
    raise ConfigError(f"unknown graph kind {kind!r}")


def build_law(cfg: dict) -> LimitLaw:
    kind = cfg.get("law") or "gaussian"
    if kind == "q_interp":
        if cfg.get("lam") is None:
            raise ConfigError("--lambda is required for the q_interp law")
        return q_interp(cfg["lam"])
    return {"gaussian": gaussian, "semicircle": semicircle, "star": star}[kind]()


def _bin_edges(cfg: dict, law: LimitLaw) -> np.ndarray:
    if cfg.get("bin_range"):
        lo, hi = (float(v) for v in cfg["bin_range"].split(":"))
        if not hi > lo:
            raise ConfigError("bin range must satisfy lo < hi")
        return np.linspace(lo, hi, cfg["bins"] + 1)
    return default_bins(law, cfg["bins"])


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# --- output ----------------------------------------------------------------------


def render(cfg: dict, columns: list[str], rows: list[list], extra: dict | None = None) -> str:
    """Serialize a result table with its embedded configuration."""
    header = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    if cfg["format"] == "json":
        doc = {
            "config": cfg,
            "columns": columns,
            "rows": [[_jsonable(v) for v in r] for r in rows],
            "summary": {k: _jsonable(v) for k, v in (extra or {}).items()},
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# config: {header}\n")
    for key, val in sorted((extra or {}).items()):
        buf.write(f"# {key}: {json.dumps(_jsonable(val), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def read_config(text: str) -> dict:
    if text.lstrip().startswith("{"):
        return json.loads(text)["config"]
    first = text.splitlines()[0]
    if not first.startswith("# config: "):
        raise ConfigError("file has no embedded config header")
    return json.loads(first[len("# config: ") :])


# --- subcommands -------------------------------------------------------------------


def cmd_spectrum(cfg: dict):
    g = build_graph(cfg)
    law = build_law(cfg)
    edges = _bin_edges(cfg, law)
    run = run_samples(g, get_distribution(cfg["dist"]), cfg["seed"], cfg["samples"], edges,
                      k_max=2, keep_eigenvalues=cfg["eigenvalues"], strict=False)
    laws = [gaussian(), semicircle(), star()] + ([q_interp(cfg["lam"])] if cfg.get("lam") else [])
    summary = {
        "n_samples": run.n_samples,
        "n_eigen_per_sample": run.dos.n_eigen_per_sample,
        "below_range": run.dos.below,
        "above_range": run.dos.above,
        "ks": {l.name: ks_distance(run.dos, l) for l in laws},
        "max_trace_error": float(run.trace_error.max()),
        "max_frobenius_rel_error": float(run.frobenius_error.max()),
    }
    if cfg["eigenvalues"]:
        columns = ["sample", "index", "eigenvalue"]
        rows = [[s, j, float(v)] for s, lam in enumerate(run.eigenvalues) for j, v in enumerate(lam)]
    else:
        columns = ["bin_left", "bin_right", "count", "density_estimate"]
        rows = [list(r) for r in run.dos.rows()]

    def figure(path):
        from .plotting import plot_dos
        plot_dos(run.dos, [law], path, title=f"{cfg['graph'] or 'file'} n={g.n_vertices}, {run.n_samples} samples")

    if not run.identities_hold():
        return columns, rows, summary, figure, ToleranceError("trace/Frobenius identity failed")
    return columns, rows, summary, figure, None


def cmd_moments(cfg: dict):
    g = build_graph(cfg)
    law = build_law(cfg)
    k_max = cfg["k_max"]
    est = None
    if cfg["samples"] > 0:
        run = run_samples(g, get_distribution(cfg["dist"]), cfg["seed"], cfg["samples"],
                          default_bins(law), k_max=k_max, strict=False)
        est = run.moment_estimates()
        if not run.identities_hold():
            failure = ToleranceError("trace/Frobenius identity failed")
        else:
            failure = None
    else:
        failure = None
    columns = ["k"]
    if est is not None:
        columns += ["mean", "stderr"]
    if cfg["oracle"]:
        columns += ["total", "D", "A", "B"]
    columns += ["limit_law_moment", "abs_error"]
    rows = []
    for k in range(k_max + 1):
        row: list = [k]
        ref = None
        if est is not None:
            row += [est[k].mean, est[k].stderr]
            ref = est[k].mean
        if cfg["oracle"]:
            b = expected_moment(g, get_distribution(cfg["dist"]), k, budget=cfg["budget"])
            row += [b.total, b.part_D, b.part_A, b.part_B]
            ref = b.total
        lm = moment(law, k)
        row += [lm, abs(ref - lm)]
        rows.append(row)
    summary = {"law": law.name, "graph_edges": g.n_edges, "d_max_over_e": g.degree_ratio()}
    return columns, rows, summary, None, failure


def cmd_laws(cfg: dict):
    lams = cfg.get("lambdas") or []
    laws = [gaussian(), semicircle(), star()] + [q_interp(l) for l in lams]
    if cfg["table"] == "density":
        lo, hi = (float(v) for v in cfg["x_range"].split(":"))
        xs = np.linspace(lo, hi, cfg["points"])
        dens = [np.asarray(density(l, xs)) for l in laws]
        cdfs = [np.asarray(cdf(l, xs)) for l in laws]
        columns = ["x"] + [f"density:{l.name}" for l in laws] + [f"cdf:{l.name}" for l in laws]
        rows = [[float(x)] + [float(d[i]) for d in dens] + [float(c[i]) for c in cdfs] for i, x in enumerate(xs)]
    else:
        columns = ["k"] + [l.name for l in laws]
        rows = [[k] + [moment(l, k) for l in laws] for k in range(cfg["k_max"] + 1)]
    summary = {l.name: {"support": list(l.support), "q": l.q} for l in laws}

    def figure(path):
        from .plotting import plot_laws
        plot_laws(laws, path)
    return columns, rows, summary, figure, None


def cmd_partitions(cfg: dict):
    rows = []
    failure = None
    for k in parse_range(cfg["k"]):
        if k % 2 or k <= 0:
            raise ConfigError("--k values must be positive even integers")
        hist = crossing_histogram(k)
        total = sum(hist)
        if total != double_factorial(k - 1) or hist[0] != count_noncrossing(k):
            failure = ToleranceError(f"partition counts for k={k} disagree with (k-1)!! / Catalan")
        rows.append([k, total, hist[0], " ".join(map(str, hist))])
    return ["k", "partitions", "noncrossing", "crossing_histogram"], rows, {}, None, failure


def cmd_convergence(cfg: dict):
    law = build_law(cfg)
    k = cfg["k_max"]
    target = moment(law, k)
    columns = ["n", "edges", "d_max_over_e", "moment", "stderr", "limit_law_moment", "abs_error", "ratio_to_rate"]
    rows = []
    for n in parse_range(cfg["n_range"]):
        g = build_graph(cfg, n)
        if cfg["method"] == "oracle":
            val, se = expected_moment(g, get_distribution(cfg["dist"]), k, budget=cfg["budget"]).total, 0.0
        else:
            run = run_samples(g, get_distribution(cfg["dist"]), cfg["seed"], cfg["samples"],
                              default_bins(law), k_max=k)
            est = run.moment_estimates()[k]
            val, se = est.mean, est.stderr
        rate = g.degree_ratio()
        err = abs(val - target)
        rows.append([n, g.n_edges, rate, val, se, target, err, err / rate])
    errs = [r[6] for r in rows]
    summary = {"monotone_decreasing": all(b < a for a, b in zip(errs, errs[1:]))}

    def figure(path):
        from .plotting import plot_convergence
        plot_convergence([r[0] for r in rows], errs, path, ylabel=f"|m_{k} - limit|")
    return columns, rows, summary, figure, None


def cmd_coefficients(cfg: dict):
    g = build_graph(cfg)
    h = draw(g, get_distribution(cfg["dist"]), cfg["seed"], cfg["sample_index"])
    t = term_table(g)
    rows = [[i, int(t.edge_index[i]), int(t.letter_index[i]), float(c)] for i, c in enumerate(h.coeffs)]
    return ["term", "edge", "letters", "coefficient"], rows, {"sum_sq": h.coefficient_norm2()}, None, None


COMMANDS = {
    "spectrum": cmd_spectrum,
    "moments": cmd_moments,
    "laws": cmd_laws,
    "partitions": cmd_partitions,
    "convergence": cmd_convergence,
    "coefficients": cmd_coefficients,
}


# --- argument parsing --------------------------------------------------------------


def _add_graph_args(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    p.add_argument("--graph", choices=GRAPH_KINDS, default="chain")
    if with_n:
        p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--offsets", help="circulant offsets, e.g. 1,2")
    p.add_argument("--graph-file", help="hypergraph file: 'n <int>' then one edge per line")
    p.add_argument("--dist", default="gauss", choices=("gauss", "rademacher", "uniform", "exp-shift"))
    p.add_argument("--seed", type=int, default=0)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--figure", action="store_true", help="render a PNG next to --out")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsg", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="sample, diagonalize, emit histogram or eigenvalues")
    _add_graph_args(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--bins", type=int, default=101)
    p.add_argument("--bin-range", help="lo:hi histogram range")
    p.add_argument("--law", choices=LAW_KINDS, default="gaussian")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eigenvalues", action="store_true", help="emit raw eigenvalues instead of a histogram")
    _add_output_args(p)

    p = sub.add_parser("moments", help="empirical, exact and limit-law moment table")
    _add_graph_args(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--oracle", action="store_true", help="add exact expected moments with D/A/B split")
    p.add_argument("--budget", type=int, default=10**8)
    p.add_argument("--law", choices=LAW_KINDS, default="gaussian")
    p.add_argument("--lambda", dest="lam", type=float)
    _add_output_args(p)

    p = sub.add_parser("laws", help="limit-law moments, densities and CDFs")
    p.add_argument("--lambda", dest="lambdas", type=float, action="append", help="repeatable")
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--table", choices=("moments", "density"), default="moments")
    p.add_argument("--x-range", default="-4:4", help="lo:hi grid for the density table")
    p.add_argument("--points", type=int, default=81)
    _add_output_args(p)

    p = sub.add_parser("partitions", help="pair partitions of {1..k} by crossing number")
    p.add_argument("--k", required=True, help="even k or range a:b:step")
    _add_output_args(p)

    p = sub.add_parser("convergence", help="moment error against d_max/e across a family")
    _add_graph_args(p, with_n=False)
    p.add_argument("--family", dest="graph", choices=GRAPH_KINDS)
    p.add_argument("--n", dest="n_range", required=True, help="range a:b:step")
    p.add_argument("--k-max", type=int, default=4, help="moment order to track")
    p.add_argument("--method", choices=("oracle", "sample"), default="oracle")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--budget", type=int, default=10**8)
    p.add_argument("--law", choices=LAW_KINDS, default="gaussian")
    p.add_argument("--lambda", dest="lam", type=float)
    _add_output_args(p)

    p = sub.add_parser("coefficients", help="dump the couplings of one sample")
    _add_graph_args(p)
    p.add_argument("--sample-index", type=int, default=0)
    _add_output_args(p)

    p = sub.add_parser("replay", help="re-run an output file from its header and compare")
    p.add_argument("file")
    return ap


def config_from_args(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "figure")}
    if cfg.get("graph_file"):
        cfg["graph_file_text"] = Path(cfg["graph_file"]).read_text()
    cfg["version"] = __version__
    return cfg


def execute(cfg: dict) -> tuple[str, Any, Exception | None]:
    for key in ("samples", "bins", "k_max"):
        if key in cfg and cfg[key] is not None and cfg[key] < 0:
            raise ConfigError(f"--{key.replace('_', '-')} must be non-negative")
    if cfg["command"] == "spectrum" and cfg["samples"] < 1:
        raise ConfigError("--samples must be at least 1")
    columns, rows, summary, figure, failure = COMMANDS[cfg["command"]](cfg)
    return render(cfg, columns, rows, summary), figure, failure


def _fail(code: int, exc: BaseException) -> int:
    diag = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "replay":
            text = Path(args.file).read_text()
            cfg = read_config(text)
            again, _, failure = execute(cfg)
            if again != text:
                return _fail(EXIT_TOLERANCE, ToleranceError(f"replay of {args.file} differs from the stored output"))
            print(json.dumps({"status": "ok", "replayed": args.file}))
            return EXIT_OK if failure is None else _fail(EXIT_TOLERANCE, failure)
        cfg = config_from_args(args)
        text, figure, failure = execute(cfg)
        if args.out:
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text)
            if args.figure and figure is not None:
                figure(out.with_suffix(".png"))
        else:
            if args.figure:
                raise ConfigError("--figure needs --out")
            sys.stdout.write(text)
        if failure is not None:
            return _fail(EXIT_TOLERANCE, failure)
        return EXIT_OK
    except (ConfigError, ValueError, FileNotFoundError, KeyError) as exc:
        if isinstance(exc, DenseCapError):
            return _fail(EXIT_GUARD, exc)
        return _fail(EXIT_CONFIG, exc)
    except BudgetExceeded as exc:
        return _fail(EXIT_GUARD, exc)
    except (IdentityViolation, ArithmeticError, QuadratureError, ToleranceError) as exc:
        return _fail(EXIT_TOLERANCE, exc)


if __name__ == "__main__":
    sys.exit(main())
