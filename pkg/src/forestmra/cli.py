"""Command-line front end: generation, pipeline runs and validation.

Commands
--------
gen       write a benchmark graph (and optionally a signal) to files
analyze   decompose a signal, write coefficients and reconstruction
compress  decompose, compress and write the error curve
tune      report the Monte Carlo tuning table and the selected q
validate  run the estimator suite over the bundled graph zoo
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass

import numpy as np

from . import estimators, generate, pyramid
from .errors import ForestMRAError
from .filterbank import lp_norm
from .graphs import (
    read_graph_file,
    read_measure_file,
    read_signal_file,
    write_graph_file,
    write_signal_file,
)

log = logging.getLogger("forestmra")


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    mu: str | None = None
    signal: str | None = None
    levels: int | None = None
    min_size: int = 16
    theta1: float = 0.125
    theta2: float = 1.0
    theta: float = 4.0
    sparsify: bool = False
    keep: float = 0.1
    grid: int = 16
    samples: int = 1
    seed: int = 0
    out: str = "out"


def _load_graph(cfg: RunConfig):
    mu = read_measure_file(cfg.mu) if cfg.mu else None
    return read_graph_file(cfg.graph, mu=mu)


def _decompose(cfg: RunConfig, g, f):
    coeffs, levels = pyramid.decompose(
        g, f, max_levels=cfg.levels, min_size=cfg.min_size,
        theta1=cfg.theta1, theta2=cfg.theta2, sparsify=cfg.sparsify,
        theta_sparsify=cfg.theta, grid_size=cfg.grid, samples=cfg.samples,
        seed=cfg.seed,
    )
    for level in levels:
        E = pyramid._intertwining_matrix(level)
        log.info(
            "level=%d n=%d q=%r qprime=%r kept=%d alpha_bar=%r beta=%r "
            "gamma=%r intertwining_inf=%r sparsified=%d",
            level.index, level.graph.n, level.q, level.qprime,
            level.coarse.n_kept, level.coarse.alpha_bar, level.coarse.beta,
            level.coarse.gamma, float(np.abs(E).sum(axis=1).max()),
            int(level.sparsified),
        )
    return coeffs, levels


def cmd_gen(args) -> int:
    if args.kind == "path":
        g = generate.path_graph(args.n)
    elif args.kind == "cycle":
        g = generate.cycle_graph(args.n)
    elif args.kind == "grid":
        g = generate.grid_graph(args.rows, args.cols)
    elif args.kind == "geometric":
        g, _ = generate.geometric_graph(args.n, radius=args.radius,
                                        seed=args.seed)
    else:
        raise ValueError(f"unknown graph kind: {args.kind}")
    write_graph_file(f"{args.out}.graph", g)
    log.info("wrote %s.graph (n=%d, m=%d)", args.out, g.n, g.rates.nnz)
    if args.signal == "piecewise":
        f, _ = generate.piecewise_signal(g.n)
        write_signal_file(f"{args.out}.signal", f)
    elif args.signal == "mode":
        write_signal_file(f"{args.out}.signal",
                          generate.first_mode_sign_signal(g))
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    f = read_signal_file(cfg.signal)
    coeffs, levels = _decompose(cfg, g, f)
    pyramid.write_coefficients(f"{cfg.out}.coeffs.json", coeffs)
    rec = pyramid.reconstruct_full(coeffs, levels)
    write_signal_file(f"{cfg.out}.recon.txt", rec)
    residual = lp_norm(rec - f, g.mu, np.inf) / max(lp_norm(f, g.mu, np.inf),
                                                    1e-300)
    log.info("levels=%d residual_inf=%r", len(levels), residual)
    return 0


def cmd_compress(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    f = read_signal_file(cfg.signal)
    coeffs, levels = _decompose(cfg, g, f)
    pyramid.write_coefficients(f"{cfg.out}.coeffs.json", coeffs)
    fractions = [i / 20.0 for i in range(21)]
    if cfg.keep not in fractions:
        fractions = sorted(fractions + [cfg.keep])
    rows = pyramid.compression_curve(coeffs, levels, fractions)
    with open(f"{cfg.out}.curve.csv", "w") as fh:
        fh.write("kept_fraction,relative_l2_error\n")
        fh.writelines(f"{frac!r},{err!r}\n" for frac, err in rows)
    f_c, report = pyramid.compress(coeffs, levels, cfg.keep)
    write_signal_file(f"{cfg.out}.compressed.txt", f_c)
    log.info("keep=%r kept_details=%d error=%r", report.kept_fraction,
             report.kept_count, report.relative_l2_error)
    return 0


def cmd_tune(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    grid = np.geomspace(cfg.theta1 * g.alpha, cfg.theta2 * g.alpha, cfg.grid)
    rows = estimators.mc_tilde_estimates(g, grid, max(cfg.samples, 1),
                                         seed=cfg.seed)
    q = pyramid.select_q(g, cfg.theta1, cfg.theta2, cfg.grid,
                         max(cfg.samples, 1), seed=cfg.seed)
    with open(f"{cfg.out}.tune.csv", "w") as fh:
        fh.write("q,alpha_tilde,inv_beta_tilde,inv_gamma_tilde\n")
        fh.writelines(
            f"{r.q!r},{r.alpha_tilde!r},{r.inv_beta_tilde!r},"
            f"{r.inv_gamma_tilde!r}\n" for r in rows
        )
    log.info("selected q=%r (alpha=%r)", q, g.alpha)
    print(q)
    return 0


def run_validation(max_n: int, samples: int, seed: int, out: str) -> int:
    """All estimator checks over the zoo; nonzero iff any check fails."""
    reports = []
    rng = np.random.default_rng(seed)
    for name, g in generate.graph_zoo(max_n):
        for q in (0.5, 1.0, 2.0):
            if g.n <= 8:
                reports.append((name, q, estimators.partition_function_check(g, q)))
            if g.n <= 5:
                for rep in estimators.estimate_identities(g, q):
                    reports.append((name, q, rep))
            for rep in estimators.cardinality_bounds(g, q, r=0.5):
                reports.append((name, q, rep))
        if samples > 0:
            q = 1.0
            sub_seed = int(rng.integers(2**63))
            _, tv_rep = estimators.root_count_law(g, q, samples=samples,
                                                  seed=sub_seed)
            reports.append((name, q, tv_rep))
            forests = None
            from .forests import sample_forests
            forests = sample_forests(g, q, samples, int(rng.integers(2**63)))
            for v in range(min(g.n, 3)):
                reports.append((name, q, estimators.determinantal_marginal(
                    g, q, [v], samples, forests=forests)))
            reports.append((name, q, estimators.determinantal_marginal(
                g, q, [0, g.n - 1], samples, forests=forests)))
            for rep in estimators.hitting_identity(
                    g, q, [0, g.n // 2], max(samples // 10, 1000),
                    seed=int(rng.integers(2**63))):
                reports.append((name, q, rep))
    with open(out, "w") as fh:
        for name, q, rep in reports:
            record = {"graph": name, "q": q, **rep.to_dict()}
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    failures = [r for _, _, r in reports if not r.passed]
    log.info("validation: %d checks, %d failures", len(reports), len(failures))
    return 1 if failures else 0


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True)
    p.add_argument("--mu")
    p.add_argument("--signal")
    p.add_argument("--levels", type=int)
    p.add_argument("--min-size", type=int, default=16)
    p.add_argument("--theta1", type=float, default=0.125)
    p.add_argument("--theta2", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=4.0)
    p.add_argument("--sparsify", action="store_true")
    p.add_argument("--keep", type=float, default=0.1)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forestmra", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark graph")
    p.add_argument("--kind", choices=["path", "cycle", "grid", "geometric"],
                   required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--radius", type=float)
    p.add_argument("--signal", choices=["piecewise", "mode"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")

    for name in ("analyze", "compress", "tune"):
        _add_run_flags(sub.add_parser(name))

    p = sub.add_parser("validate", help="run the estimator suite")
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="validation.jsonl")
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command, graph=args.graph, mu=args.mu,
        signal=args.signal, levels=args.levels, min_size=args.min_size,
        theta1=args.theta1, theta2=args.theta2, theta=args.theta,
        sparsify=args.sparsify, keep=args.keep, grid=args.grid,
        samples=args.samples, seed=args.seed, out=args.out,
    )


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "analyze":
            return cmd_analyze(_config_from_args(args))
        if args.command == "compress":
            return cmd_compress(_config_from_args(args))
        if args.command == "tune":
            return cmd_tune(_config_from_args(args))
        if args.command == "validate":
            return run_validation(args.max_n, args.samples, args.seed,
                                  args.out)
        raise ValueError(f"unknown command: {args.command}")
    except ForestMRAError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
