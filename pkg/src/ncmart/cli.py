"""Command-line driver for the experiment grids.

Subcommands: ``tn-bounds``, ``mu``, ``chain``, ``obstruction``, ``ergodic``.
Every output file is self-describing (config echo, seed, version, pass/fail
summary) and byte-identical across reruns with the same configuration.
Exit code 0 means every assertion in the run passed; 1 means some failed;
2 means the configuration was rejected.

CSV is the default format; ``--format json`` emits an object with keys
``config``, ``rows``, ``summary``, ``version``.  Grid points run on a
worker pool sized by ``--jobs`` (default from the NCMART_JOBS environment
variable), with results ordered by grid index before writing.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .algebra import DEFAULT_DIM_CAP, TracialAlgebra, random_projection
from .chain import dyadic_norm_recursion, triangular_norm_bounds, verify_chain
from .ergodic import unitary_approx_check
from .rearrangement import (assemble_growth_report, au_obstruction_report,
                            feasible_corank, growth_row, growth_seeds)

JOBS_ENV = "NCMART_JOBS"


# ---------------------------------------------------------------------------
# Configuration plumbing
# ---------------------------------------------------------------------------

def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_k_range(text: str) -> list[int]:
    """Either an explicit comma list or "a:b" meaning doubling from a to b."""
    if ":" in text:
        lo, hi = (int(tok) for tok in text.split(":"))
        out, k = [], lo
        while k <= hi:
            out.append(k)
            k *= 2
        return out
    return _parse_int_list(text)


def load_config_file(path: str) -> dict[str, str]:
    """Simple ``key = value`` lines; blank lines and # comments ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge_config(args: argparse.Namespace, keys: dict[str, object]) -> dict:
    """CLI flags override config-file values, which override defaults."""
    file_cfg = load_config_file(args.config) if args.config else {}
    merged = {}
    for key, default in keys.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            merged[key] = cli_value
        elif key in file_cfg:
            raw = file_cfg[key]
            if isinstance(default, list) and default and isinstance(default[0], int):
                merged[key] = _parse_int_list(raw)
            elif isinstance(default, list):
                merged[key] = _parse_float_list(raw)
            elif isinstance(default, bool):
                merged[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                merged[key] = int(raw)
            elif isinstance(default, float):
                merged[key] = float(raw)
            else:
                merged[key] = raw
        else:
            merged[key] = default
    return merged


def _jobs(cfg: dict) -> int:
    if cfg.get("jobs"):
        return max(1, int(cfg["jobs"]))
    return max(1, int(os.environ.get(JOBS_ENV, "1")))


def _run_grid(fn, items, jobs: int) -> list:
    """Map fn over grid items, deterministically ordered by grid index."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render_csv(config: dict, fields: list[str], rows: list[dict], summary: dict) -> str:
    lines = [f"# version = {__version__}"]
    for key in sorted(config):
        lines.append(f"# {key} = {_fmt(config[key])}")
    lines.append(",".join(fields))
    for row in rows:
        lines.append(",".join(_fmt(row.get(f)) for f in fields))
    for key in sorted(summary):
        lines.append(f"# summary.{key} = {_fmt(summary[key])}")
    return "\n".join(lines) + "\n"


def render_json(config: dict, fields: list[str], rows: list[dict], summary: dict) -> str:
    payload = {"config": _json_safe(config), "rows": _json_safe(rows),
               "summary": _json_safe(summary), "version": __version__}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit(cfg: dict, fields: list[str], rows: list[dict], summary: dict) -> None:
    render = render_json if cfg.get("format") == "json" else render_csv
    config_echo = {k: v for k, v in cfg.items() if k not in ("out",)}
    text = render(config_echo, fields, rows, summary)
    out = cfg.get("out")
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_tn_bounds(args) -> int:
    cfg = _merge_config(args, {
        "n_max": 64, "p_list": [0.1, 0.25, 0.4, 0.49], "kmax": None,
        "format": "csv", "out": "-", "jobs": None, "config": None})
    kmax = cfg["kmax"] if cfg["kmax"] is not None else max(
        0, int(math.floor(math.log2(max(2, cfg["n_max"])))))
    cfg["kmax"] = kmax
    grid = [(n, p) for n in range(1, cfg["n_max"] + 1) for p in cfg["p_list"]]
    results = _run_grid(lambda np_: triangular_norm_bounds(*np_), grid, _jobs(cfg))
    rows = [{"n": r.n, "p": r.p, "lower": r.lower, "value": r.value,
             "upper": r.upper, "passed": r.passed} for r in results]
    recursion = {p: dyadic_norm_recursion(kmax, p) for p in cfg["p_list"]}
    all_ok = all(r["passed"] for r in rows) and all(
        rep.passed for rep in recursion.values())
    summary = {"rows_passed": sum(r["passed"] for r in rows), "rows_total": len(rows),
               "recursion_passed": all(rep.passed for rep in recursion.values()),
               "recursion_kmax": kmax, "passed": all_ok}
    emit(cfg, ["n", "p", "lower", "value", "upper", "passed"], rows, summary)
    return 0 if all_ok else 1


def cmd_mu(args) -> int:
    cfg = _merge_config(args, {
        "n_list": [8, 16, 32, 64, 128], "t": 0.1, "p_cert": 0.25,
        "budget": 2000, "seed": 0, "format": "csv", "out": "-",
        "jobs": None, "config": None})
    seeds = growth_seeds(cfg["seed"], len(cfg["n_list"]))
    items = list(zip(cfg["n_list"], seeds))
    results = _run_grid(
        lambda it: growth_row(cfg["p_cert"], cfg["t"], it[0], cfg["budget"], it[1]),
        items, _jobs(cfg))
    report = assemble_growth_report(cfg["p_cert"], cfg["t"], cfg["budget"],
                                    cfg["seed"], results)
    rows = [{"N": r.N, "certified_lower": r.certified, "searched_upper": r.searched,
             "diagonal_upper": r.diagonal, "iterations": r.iterations}
            for r in report.rows]
    summary = {"slope": report.slope, "t_prime": report.t_prime,
               "delta": report.delta,
               "certificate_applies": report.certificate_applies,
               "passed": report.passed}
    emit(cfg, ["N", "certified_lower", "searched_upper", "diagonal_upper",
               "iterations"], rows, summary)
    return 0 if report.passed else 1


def cmd_chain(args) -> int:
    cfg = _merge_config(args, {
        "n_list": [8], "p": 0.25, "t": 0.125, "trials": 50, "seed": 0,
        "format": "csv", "out": "-", "jobs": None, "config": None})
    items = [(N, N - feasible_corank(N, cfg["t"]), trial)
             for N in cfg["n_list"] for trial in range(cfg["trials"])]
    children = np.random.SeedSequence(cfg["seed"]).spawn(len(items))
    items = [(N, rank, trial, child)
             for (N, rank, trial), child in zip(items, children)]

    def run(item):
        N, rank, trial, child = item
        rng = np.random.default_rng(child)
        e = random_projection(TracialAlgebra(N), rank, rng)
        rep = verify_chain(N, cfg["p"], cfg["t"], e)
        return N, trial, rep

    results = _run_grid(run, items, _jobs(cfg))
    rows = []
    for N, trial, rep in results:
        row = {"N": N, "trial": trial, "corank": rep.corank, "m": rep.m,
               "norm_a": rep.norm_a, "norm_b": rep.norm_b, "norm_c": rep.norm_c,
               "identity_err": rep.identity_err, "passed": rep.passed}
        row.update({f"assert_{k}": v for k, v in rep.assertions.items()})
        rows.append(row)
    all_ok = all(r["passed"] for r in rows)
    summary = {"rows_passed": sum(r["passed"] for r in rows),
               "rows_total": len(rows), "passed": all_ok}
    fields = ["N", "trial", "corank", "m", "norm_a", "norm_b", "norm_c",
              "identity_err", "assert_lower_a", "assert_upper_b",
              "assert_upper_c", "assert_p_triangle", "assert_growth",
              "assert_identity", "passed"]
    emit(cfg, fields, rows, summary)
    return 0 if all_ok else 1


def cmd_obstruction(args) -> int:
    cfg = _merge_config(args, {
        "p": 1.0, "t": 1e-3, "n_max": 40, "p_cert": 0.25,
        "format": "csv", "out": "-", "jobs": None, "config": None})
    try:
        report = au_obstruction_report(cfg["p"], cfg["t"], n_max=cfg["n_max"],
                                       certificate_p=cfg["p_cert"])
    except ValueError as exc:
        print(f"obstruction rejected: {exc}", file=sys.stderr)
        return 2
    rows = [{"N": r.N, "log10_bound": r.log10_bound, "bound": r.bound}
            for r in report.rows]
    summary = {"delta": report.delta, "t_prime": report.t_prime,
               "diverges": report.diverges, "conclusion": report.conclusion,
               "passed": report.passed}
    emit(cfg, ["N", "log10_bound", "bound"], rows, summary)
    return 0 if report.passed else 1


def cmd_ergodic(args) -> int:
    cfg = _merge_config(args, {
        "n_list": [2, 3], "k_range": "2:1024", "p": 1.0, "trials": 100,
        "seed": 0, "full_sweep": False, "format": "csv", "out": "-",
        "jobs": None, "config": None})
    k_values = _parse_k_range(cfg["k_range"]) if isinstance(cfg["k_range"], str) \
        else cfg["k_range"]
    reports = _run_grid(
        lambda N: unitary_approx_check(N, k_values, p=cfg["p"],
                                       trials=cfg["trials"], seed=cfg["seed"],
                                       stop_at_first=not cfg["full_sweep"]),
        cfg["n_list"], _jobs(cfg))
    rows, minimal = [], {}
    for rep in reports:
        minimal[rep.N] = rep.minimal_K
        for r in rep.rows:
            rows.append({"N": rep.N, "K": r.K, "trials_passed": r.trials_passed,
                         "trials": r.trials, "worst_ratio": r.worst_ratio,
                         "unitary_distance": r.unitary_distance,
                         "distance_target": r.distance_target})
    all_ok = all(v is not None for v in minimal.values())
    summary = {f"minimal_K_N{N}": (k if k is not None else "none")
               for N, k in sorted(minimal.items())}
    summary["passed"] = all_ok
    emit(cfg, ["N", "K", "trials_passed", "trials", "worst_ratio",
               "unitary_distance", "distance_target"], rows, summary)
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default=None)
    sp.add_argument("--out", default=None, help="output path; '-' for stdout")
    sp.add_argument("--jobs", type=int, default=None,
                    help=f"worker pool size (default ${JOBS_ENV} or 1)")
    sp.add_argument("--config", default=None, help="key = value config file")
    sp.add_argument("--dim-cap", dest="dim_cap", type=int, default=None,
                    help=f"tensor dimension guard (default {DEFAULT_DIM_CAP})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncmart",
        description="Experiment grids for maximal functions of matrix martingales")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("tn-bounds", help="triangular-matrix norm sandwich grid")
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)
    sp.add_argument("--p-list", dest="p_list", type=_parse_float_list, default=None)
    sp.add_argument("--kmax", type=int, default=None,
                    help="dyadic recursion depth (default log2 of n-max)")
    _add_common(sp)
    sp.set_defaults(fn=cmd_tn_bounds)

    sp = sub.add_parser("mu", help="growth of the searched rearrangement value")
    sp.add_argument("--n-list", dest="n_list", type=_parse_int_list, default=None)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--p-cert", dest="p_cert", type=float, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(fn=cmd_mu)

    sp = sub.add_parser("chain", help="norm chain over random admissible projections")
    sp.add_argument("--n-list", dest="n_list", type=_parse_int_list, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(fn=cmd_chain)

    sp = sub.add_parser("obstruction", help="diverging lower bounds report")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)
    sp.add_argument("--p-cert", dest="p_cert", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(fn=cmd_obstruction)

    sp = sub.add_parser("ergodic", help="diagonal-unitary averaging K sweep")
    sp.add_argument("--n-list", dest="n_list", type=_parse_int_list, default=None)
    sp.add_argument("--k-range", dest="k_range", default=None,
                    help="comma list or 'a:b' (doubling)")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--full-sweep", dest="full_sweep", action="store_const",
                    const=True, default=None,
                    help="scan the whole K range instead of stopping early")
    _add_common(sp)
    sp.set_defaults(fn=cmd_ergodic)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
