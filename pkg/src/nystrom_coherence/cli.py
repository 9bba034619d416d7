"""``nystrom-coherence`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import harness, kernels
from .coherence import SamplingBoundParams
from .linalg import RankTolerance
from .synth import SyntheticSpec, pathological, synth_spsd


def _ints(text: str) -> list[int]:
    """``"5:200:5"`` (inclusive range) or ``"10,20,40"``."""
    if ":" in text:
        start, stop, *step = (int(x) for x in text.split(":"))
        return list(range(start, stop + 1, step[0] if step else 1))
    return [int(x) for x in text.split(",") if x]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _gamma(text: str):
    return text if text == kernels.MEDIAN_HEURISTIC else float(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out", default=None, help="output file; appended to (default stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--tol", type=float, default=None,
                   help="relative eigenvalue cutoff for numerical rank (default n*1e-12)")
    p.add_argument("--with-replacement", action="store_true",
                   help="sample columns with replacement")
    p.add_argument("--workers", type=int, default=1)


def _source(p: argparse.ArgumentParser, default_kind="synthetic", default_n=1000,
            default_rank=100) -> None:
    g = p.add_argument_group("matrix source")
    g.add_argument("--source", default=default_kind,
                   choices=("synthetic", "haar", "pathological", "data", "matrix"))
    g.add_argument("--n", type=int, default=default_n)
    g.add_argument("--rank", type=int, default=default_rank)
    g.add_argument("--eta", type=float, default=0.0)
    g.add_argument("--mu-target", type=float, default=1.0)
    g.add_argument("--data", help="CSV of points (one per row) for --source data")
    g.add_argument("--matrix", help="square CSV grid for --source matrix")
    g.add_argument("--has-header", action="store_true")
    g.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    g.add_argument("--gamma", type=_gamma, default=kernels.MEDIAN_HEURISTIC,
                   help="RBF gamma or 'median-heuristic'")
    g.add_argument("--zscore", action="store_true", help="standardize features first")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nystrom-coherence",
        description="Nystrom approximation and matrix coherence experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recon", help="percent error versus sampled columns (k = l)")
    _common(p)
    _source(p)
    p.add_argument("--l-grid", type=_ints, default=list(range(5, 201, 5)),
                   help="start:stop:step or comma list (default 5:200:5)")
    p.add_argument("--no-truncate", action="store_true",
                   help="use data/matrix sources as-is instead of their best rank-r part")

    p = sub.add_parser("coherence-growth", help="mean coherence of subsampled matrices")
    _common(p)
    _source(p, default_kind="haar", default_n=1600, default_rank=100)
    p.add_argument("--sizes", type=_ints, default=[100, 200, 400, 800, 1600])

    p = sub.add_parser("full-rank", help="coherence x decay x sampling grid")
    _common(p)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--fractions", type=_floats, default=[0.8, 0.9, 0.99],
                   help="top-k spectrum fractions, one panel each")
    p.add_argument("--etas", type=_floats, default=None,
                   help="explicit decay rates instead of --fractions")
    p.add_argument("--mu-levels", type=_floats, default=None,
                   help="target coherences (default 1, sqrt(n)/4, sqrt(n))")
    p.add_argument("--percents", type=_floats, default=[2, 5, 10, 20, 30, 50],
                   help="percent of columns sampled")
    p.add_argument("--matrices", type=int, default=10)
    p.add_argument("--subsets", type=int, default=5)

    p = sub.add_parser("recovery-prob", help="Monte Carlo P[rank(W) = rank(G)]")
    _common(p)
    _source(p, default_kind="pathological", default_n=100, default_rank=5)
    p.add_argument("--l-grid", type=_ints, default=[5, 10, 15, 20])

    p = sub.add_parser("bound", help="sample-size bound for exact recovery")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None, help="flag the bound as vacuous if >= n")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("gen", help="write a synthetic SPSD matrix as a CSV grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rank", type=int, default=None, help="exact rank (default full)")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--mu-target", type=float, default=1.0)
    p.add_argument("--pathological", action="store_true",
                   help="diagonal rank-r example instead (needs --rank)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gram", help="kernel Gram matrix of a CSV point set")
    p.add_argument("data")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    p.add_argument("--gamma", type=_gamma, default=kernels.MEDIAN_HEURISTIC)
    p.add_argument("--zscore", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _config(args) -> harness.RunConfig:
    tol = RankTolerance() if args.tol is None else RankTolerance(args.tol)
    cfg = harness.RunConfig(trials=args.trials, seed=args.seed, tol=tol,
                            replacement=args.with_replacement, workers=args.workers)
    if hasattr(args, "source"):
        kind = args.source
        cfg.source = harness.SourceConfig(
            kind=kind, n=args.n, rank=args.rank, eta=args.eta, mu_target=args.mu_target,
            path=args.data if kind == "data" else args.matrix, has_header=args.has_header,
            kernel=args.kernel, gamma=args.gamma, zscore=args.zscore)
        if kind in ("data", "matrix") and cfg.source.path is None:
            raise SystemExit(f"--source {kind} needs --{kind} PATH")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = args.command

    if cmd == "gen":
        if args.pathological:
            if args.rank is None:
                raise SystemExit("--pathological needs --rank")
            g = pathological(args.n, args.rank)
        else:
            g = synth_spsd(SyntheticSpec(args.n, args.rank, args.eta, args.mu_target, args.seed))
        kernels.save_matrix_csv(args.out, g)
        return 0
    if cmd == "gram":
        data = kernels.load_csv(args.data, args.has_header)
        if args.zscore:
            data = kernels.zscore(data)
        kernels.save_matrix_csv(args.out, kernels.gram(
            data, kernels.KernelSpec(args.kernel, args.gamma), seed=args.seed))
        return 0
    if cmd == "bound":
        result = harness.cmd_bound(
            SamplingBoundParams(args.r, args.mu, args.delta, args.c1, args.c2), args.n)
        print("note: qualitative unless c1, c2 are calibrated", file=sys.stderr)
    else:
        cfg = _config(args)
        if cmd == "recon":
            cfg.l_grid = args.l_grid
            cfg.truncate = not args.no_truncate
            result = harness.cmd_recon(cfg)
        elif cmd == "coherence-growth":
            cfg.sizes = args.sizes
            result = harness.cmd_coherence_growth(cfg)
        elif cmd == "full-rank":
            cfg.source = harness.SourceConfig(n=args.n)
            cfg.k = args.k
            cfg.fractions = args.fractions
            cfg.etas = args.etas
            cfg.mu_levels = args.mu_levels
            cfg.percents = args.percents
            cfg.matrices, cfg.subsets = args.matrices, args.subsets
            result = harness.cmd_full_rank(cfg)
        else:
            cfg.l_grid = args.l_grid
            result = harness.cmd_recovery(cfg)

    harness.write_records(result.records, args.out, args.format, stream=sys.stdout)
    for cell, message in result.failures:
        print(f"failed cell {cell}: {message}", file=sys.stderr)
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
