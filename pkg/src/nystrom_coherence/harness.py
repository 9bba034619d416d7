"""Experiment runners behind the CLI.

Every runner returns a list of :class:`ExperimentRecord` in canonical order.
Grid cells run on a bounded thread pool; a cell that raises is reported in
:class:`RunResult.failures` and the remaining cells still complete.

Seeds
-----
``derive_seed`` (BLAKE2b over the parts, see :mod:`.seeding`) gives every cell
its own seed:

* recon / recovery trial ``t`` at sample size ``l``:
  ``derive_seed(base, experiment, {"l": l}, t)``; the source matrix uses
  ``derive_seed(base, "matrix")``.
* full-rank matrix ``m`` of a (fraction, mu) curve:
  ``derive_seed(base, "full_rank", {"fraction": f, "mu_target": mu}, m)``, and
  its column subset ``s`` at size ``l`` uses ``derive_seed(matrix_seed, "subset", l, s)``.
  Records carry the matrix seed and the subset index as ``trial``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coherence as coh
from . import kernels
from .linalg import DEFAULT_TOL, RankTolerance, as_symmetric, eig_sym, rank_numeric, truncate_rank
from .nystrom import SampleScheme, estimate_recovery_prob, fit, percent_error
from .seeding import derive_seed
from .synth import (
    SyntheticSpec,
    haar_orthogonal,
    pathological,
    pathological_recovery_prob,
    solve_eta_for_fraction,
    synth_spsd,
)

log = logging.getLogger(__name__)

HEADER = ("experiment", "metric", "value", "n", "r", "k", "l", "eta", "mu_target",
          "mu_realized", "kernel", "seed", "trial")
PARAM_FIELDS = HEADER[3:]
EXPERIMENTS = ("recon", "coherence_growth", "full_rank", "recovery_prob", "bound")


@dataclass
class ExperimentRecord:
    experiment: str
    metric: str
    value: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not math.isfinite(self.value):
            raise ValueError(f"{self.metric} is not finite: {self.value}")

    def row(self) -> dict:
        row = {"experiment": self.experiment, "metric": self.metric, "value": self.value}
        row.update({key: self.params.get(key) for key in PARAM_FIELDS})
        return row

    def sort_key(self):
        key = [self.experiment, self.metric]
        for name in PARAM_FIELDS:
            v = self.params.get(name)
            key.append((0, 0) if v is None else (1, v))
        return tuple(key)


@dataclass
class RunResult:
    records: list
    failures: list = field(default_factory=list)  # (cell description, message)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class SourceConfig:
    """Where the matrix comes from.

    ``kind``: ``synthetic`` (controlled coherence and decay), ``haar``
    (``V V^T`` with Haar ``V``), ``pathological``, ``data`` (CSV points plus
    a kernel) or ``matrix`` (square CSV grid).
    """

    kind: str = "synthetic"
    n: int = 1000
    rank: int | None = 100
    eta: float = 0.0
    mu_target: float = 1.0
    path: str | None = None
    has_header: bool = False
    kernel: str = "rbf"
    gamma: float | str = kernels.MEDIAN_HEURISTIC
    zscore: bool = False


@dataclass
class RunConfig:
    source: SourceConfig = field(default_factory=SourceConfig)
    l_grid: list = field(default_factory=lambda: list(range(5, 201, 5)))
    sizes: list = field(default_factory=lambda: [100, 200, 400, 800, 1600])
    trials: int = 10
    seed: int = 0
    tol: RankTolerance = DEFAULT_TOL
    replacement: bool = False
    truncate: bool = True
    workers: int = 1
    # full-rank experiment
    k: int = 50
    fractions: list = field(default_factory=lambda: [0.8, 0.9, 0.99])
    etas: list | None = None  # explicit decay rates; overrides fractions
    mu_levels: list | None = None  # None -> 1, sqrt(n)/4, sqrt(n)
    percents: list = field(default_factory=lambda: [2, 5, 10, 20, 30, 50])
    matrices: int = 10
    subsets: int = 5

    def __post_init__(self):
        if self.trials < 1 or self.matrices < 1 or self.subsets < 1:
            raise ValueError("trial counts must be at least 1")


@dataclass
class Source:
    g: np.ndarray
    kernel: str | None = None
    mu_realized: float | None = None
    rank: int | None = None


def build_source(src: SourceConfig, seed: int, truncate: bool = False) -> Source:
    """Materialize the source matrix; ``truncate`` cuts it to ``src.rank``."""
    matrix_seed = derive_seed(seed, "matrix")
    kernel = None
    mu = None
    if src.kind == "synthetic":
        g, _, _, mu = synth_spsd(
            SyntheticSpec(src.n, src.rank, src.eta, src.mu_target, matrix_seed), return_basis=True)
        truncate = False
    elif src.kind == "haar":
        v = haar_orthogonal(src.n, src.rank, matrix_seed)
        g = v @ v.T
        mu = coh.coherence_of(v).mu
        truncate = False
    elif src.kind == "pathological":
        g = pathological(src.n, src.rank)
        mu = math.sqrt(src.n)
        truncate = False
    elif src.kind == "data":
        data = kernels.load_csv(src.path, src.has_header)
        if src.zscore:
            data = kernels.zscore(data)
        spec = kernels.KernelSpec(src.kernel, src.gamma)
        g = kernels.gram(data, spec, seed=seed)
        kernel = spec.label()
    elif src.kind == "matrix":
        g = as_symmetric(kernels.load_matrix_csv(src.path))
        eig_sym(g, spsd=True, method="lapack")
        kernel = "matrix"
    else:
        raise ValueError(f"unknown source kind {src.kind!r}")
    if truncate and src.rank is not None and src.rank < g.shape[0]:
        g = truncate_rank(g, src.rank)
    return Source(g, kernel, mu, src.rank)


def _run_cells(cells, fn, workers: int):
    """Apply ``fn`` to every cell; returns (results, failures) in cell order."""
    def guarded(cell):
        try:
            return fn(cell), None
        except Exception as exc:  # noqa: BLE001 -- itemized for the caller
            log.debug("cell %r failed", cell, exc_info=True)
            return None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(guarded, cells))
    else:
        outcomes = [guarded(c) for c in cells]
    results, failures = [], []
    for cell, (res, err) in zip(cells, outcomes):
        if err is None:
            results.append((cell, res))
        else:
            failures.append((repr(cell), err))
    return results, failures


def _finish(records, failures) -> RunResult:
    return RunResult(sorted(records, key=ExperimentRecord.sort_key), failures)


# -- reconstruction ---------------------------------------------------------

def recon_cell(g, l: int, seed: int, k: int | None = None, *, replacement: bool = False,
               tol: RankTolerance = DEFAULT_TOL) -> float:
    """Percent error of one Nystrom fit; the unit replayed from a record."""
    model = fit(g, SampleScheme(l, replacement, seed), k, tol)
    return percent_error(g, model)


def cmd_recon(cfg: RunConfig) -> RunResult:
    """Percent error versus ``l`` with ``k = l``, averaged over trials."""
    src = build_source(cfg.source, cfg.seed, truncate=cfg.truncate)
    g = src.g
    n = g.shape[0]
    too_big = [l for l in cfg.l_grid if l > n]
    if too_big:
        raise ValueError(f"matrix has n={n} columns but the l grid asks for {too_big}")
    base = {"n": n, "r": src.rank, "kernel": src.kernel, "mu_realized": src.mu_realized,
            "mu_target": cfg.source.mu_target if cfg.source.kind == "synthetic" else None}
    cells = [(l, t, derive_seed(cfg.seed, "recon", {"l": l}, t))
             for l in cfg.l_grid for t in range(cfg.trials)]
    done, failures = _run_cells(
        cells,
        lambda c: recon_cell(g, c[0], c[2], replacement=cfg.replacement, tol=cfg.tol),
        cfg.workers)
    records, per_l = [], {}
    for (l, t, seed), value in done:
        records.append(ExperimentRecord("recon", "percent_error", value,
                                        {**base, "k": l, "l": l, "seed": seed, "trial": t}))
        per_l.setdefault(l, []).append(value)
    for l, values in per_l.items():
        records.append(ExperimentRecord("recon", "mean_percent_error", float(np.mean(values)),
                                        {**base, "k": l, "l": l, "seed": cfg.seed}))
    return _finish(records, failures)


# -- coherence growth -------------------------------------------------------

def cmd_coherence_growth(cfg: RunConfig) -> RunResult:
    src = build_source(cfg.source, cfg.seed, truncate=False)
    n = src.g.shape[0]
    records, failures = [], []
    rank_cap = src.rank if src.rank is not None else 100
    cells = []
    for size in cfg.sizes:
        r = coh.default_growth_rank(size, rank_cap)
        if size > n:
            failures.append((f"size={size}", f"size exceeds source dimension {n}"))
        elif size < r:
            records.append(ExperimentRecord("coherence_growth", "skipped", 1.0,
                                            {"n": size, "r": r, "seed": cfg.seed}))
        else:
            cells.append((size, r))
    done, cell_failures = _run_cells(
        cells,
        lambda c: coh.coherence_growth(src.g, [c[0]], cfg.trials, cfg.seed, c[1], cfg.tol)[0],
        cfg.workers)
    failures += cell_failures
    for (size, r), point in done:
        params = {"n": size, "r": r, "kernel": src.kernel, "seed": cfg.seed}
        records.append(ExperimentRecord("coherence_growth", "mean_coherence", point.mean_mu, params))
        records.append(ExperimentRecord("coherence_growth", "mean_coherence_over_sqrt_log_n",
                                        point.mean_mu / math.sqrt(math.log(size)), params))
    return _finish(records, failures)


# -- full-rank experiments --------------------------------------------------

def default_mu_levels(n: int) -> list:
    return [1.0, math.sqrt(n) / 4, math.sqrt(n)]


def full_rank_matrix(n: int, eta: float, mu_target: float, seed: int):
    """Full-rank decayed matrix for one curve; returns ``(G, realized_mu)``."""
    g, _, _, mu = synth_spsd(SyntheticSpec(n, None, eta, mu_target, seed), return_basis=True)
    return g, mu


def full_rank_cell(g, l: int, k: int, matrix_seed: int, subset: int, *,
                   replacement: bool = False, tol: RankTolerance = DEFAULT_TOL) -> float:
    return recon_cell(g, l, derive_seed(matrix_seed, "subset", l, subset), min(k, l),
                      replacement=replacement, tol=tol)


def cmd_full_rank(cfg: RunConfig) -> RunResult:
    """Error of rank-``k`` Nystrom on full-rank decayed matrices.

    Grid: spectrum fraction (or explicit ``etas``) x coherence level x percent
    of columns sampled. Means are taken over ``matrices x subsets`` per cell.
    """
    n, k = cfg.source.n, cfg.k
    mu_levels = cfg.mu_levels or default_mu_levels(n)
    ls = sorted({max(1, min(n, round(p * n / 100))) for p in cfg.percents})
    if cfg.etas is not None:
        panels = [(float(eta), float(eta)) for eta in cfg.etas]
    else:
        panels = [(f, solve_eta_for_fraction(n, k, f)) for f in cfg.fractions]
    jobs = []
    for f, eta in panels:
        for mu in mu_levels:
            for m in range(cfg.matrices):
                seed = derive_seed(cfg.seed, "full_rank", {"fraction": f, "mu_target": mu}, m)
                jobs.append((f, eta, mu, m, seed))

    def run_matrix(job):
        f, eta, mu, m, seed = job
        g, realized = full_rank_matrix(n, eta, mu, seed)
        return realized, {(l, s): full_rank_cell(g, l, k, seed, s, replacement=cfg.replacement,
                                                 tol=cfg.tol)
                          for l in ls for s in range(cfg.subsets)}

    done, failures = _run_cells(jobs, run_matrix, cfg.workers)
    records, groups = [], {}
    for (f, eta, mu, m, seed), (realized, errs) in done:
        for (l, s), value in errs.items():
            params = {"n": n, "k": min(k, l), "l": l, "eta": eta, "mu_target": mu,
                      "mu_realized": realized, "seed": seed, "trial": s}
            records.append(ExperimentRecord("full_rank", "percent_error", value, params))
            groups.setdefault((eta, mu, l), []).append((value, realized))
    for (eta, mu, l), vals in groups.items():
        errs, mus = zip(*vals)
        params = {"n": n, "k": min(k, l), "l": l, "eta": eta, "mu_target": mu,
                  "mu_realized": float(np.mean(mus)), "seed": cfg.seed}
        records.append(ExperimentRecord("full_rank", "mean_percent_error", float(np.mean(errs)),
                                        params))
    return _finish(records, failures)


def full_rank_means(records) -> dict:
    """``{(eta, mu_target, l): mean percent error}`` from ``cmd_full_rank`` output."""
    return {(r.params["eta"], r.params["mu_target"], r.params["l"]): r.value
            for r in records if r.metric == "mean_percent_error"}


# -- recovery probability and bound ----------------------------------------

def cmd_recovery(cfg: RunConfig) -> RunResult:
    """Monte Carlo ``P[rank(W) = rank(G)]`` for each ``l`` in the grid."""
    src = build_source(cfg.source, cfg.seed, truncate=cfg.truncate)
    g = src.g
    n = g.shape[0]
    r = rank_numeric(g, cfg.tol)
    base = {"n": n, "r": r, "kernel": src.kernel, "mu_realized": src.mu_realized}
    cells = [(l, derive_seed(cfg.seed, "recovery_prob", {"l": l})) for l in cfg.l_grid]
    done, failures = _run_cells(
        cells,
        lambda c: estimate_recovery_prob(g, r, c[0], cfg.trials, c[1],
                                         replacement=cfg.replacement, tol=cfg.tol),
        cfg.workers)
    records = []
    for (l, seed), p in done:
        params = {**base, "l": l, "seed": seed}
        records.append(ExperimentRecord("recovery_prob", "recovery_prob", p, params))
        if cfg.source.kind == "pathological":
            exact = pathological_recovery_prob(n, r, l, cfg.replacement)
            records.append(ExperimentRecord("recovery_prob", "analytic_recovery_prob", exact,
                                            params))
            records.append(ExperimentRecord("recovery_prob", "standard_error",
                                            math.sqrt(exact * (1 - exact) / cfg.trials), params))
    return _finish(records, failures)


def cmd_bound(params: coh.SamplingBoundParams, n: int | None = None) -> RunResult:
    """Sample-size bound; qualitative unless ``c1``/``c2`` are calibrated."""
    l = coh.min_samples(params)
    fields = {"n": n, "r": params.r, "l": l, "mu_target": params.mu,
              "delta": params.delta, "c1": params.c1, "c2": params.c2}
    records = [ExperimentRecord("bound", "min_samples", float(l), fields)]
    if n is not None:
        records.append(ExperimentRecord("bound", "vacuous",
                                        float(coh.bound_is_vacuous(l, n)), fields))
    return _finish(records, [])


# -- output -----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def write_records(records, path: str | Path | None, fmt: str = "csv", stream=None) -> None:
    """Append records to ``path`` (or ``stream``) as CSV or JSON lines.

    CSV output always uses :data:`HEADER`; the header is written only when the
    file is new or empty, and an existing file with another header is refused.
    """
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown output format {fmt!r}")
    if path is None:
        _write(records, stream, fmt, header=True)
        return
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    if fmt == "csv" and not fresh:
        with open(path, newline="", encoding="utf-8") as fh:
            first = next(csv.reader(fh), [])
        if tuple(first) != HEADER:
            raise ValueError(f"{path} has a different header; refusing to append")
    with open(path, "a", newline="", encoding="utf-8") as fh:
        _write(records, fh, fmt, header=fresh)


def _write(records, fh, fmt: str, header: bool) -> None:
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(HEADER)
        for rec in records:
            row = rec.row()
            writer.writerow([_fmt(row[h]) for h in HEADER])
    else:
        for rec in records:
            obj = {"experiment": rec.experiment, "metric": rec.metric, "value": rec.value}
            obj.update({key: _jsonable(v) for key, v in rec.params.items()})
            fh.write(json.dumps(obj, sort_keys=False) + "\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def read_records_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
