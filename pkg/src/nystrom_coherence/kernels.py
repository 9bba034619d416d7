"""CSV point loading and kernel Gram matrices (linear and Gaussian RBF)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .linalg import eig_sym, NotSPSDError

__all__ = [
    "CSVFormatError",
    "KernelError",
    "DataTable",
    "KernelSpec",
    "load_csv",
    "load_matrix_csv",
    "save_matrix_csv",
    "zscore",
    "gram",
    "median_heuristic_gamma",
]

MEDIAN_HEURISTIC = "median-heuristic"


class CSVFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class KernelError(ArithmeticError):
    def __init__(self, i: int, j: int):
        super().__init__(f"non-finite kernel value for pair ({i}, {j})")
        self.pair = (i, j)


@dataclass(frozen=True)
class DataTable:
    rows: np.ndarray  # n x d

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"need a non-empty n x d table, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("data table has non-finite entries")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class KernelSpec:
    """``kind`` is ``"linear"`` or ``"rbf"``; ``gamma`` is a positive float or
    ``"median-heuristic"``."""

    kind: str = "rbf"
    gamma: float | str = MEDIAN_HEURISTIC

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.gamma != MEDIAN_HEURISTIC and not float(self.gamma) > 0:
            raise ValueError("rbf gamma must be positive")

    def label(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.gamma == MEDIAN_HEURISTIC:
            return "rbf(median)"
        return f"rbf({float(self.gamma):g})"


def _read_grid(path, has_header: bool) -> list[list[float]]:
    rows: list[list[float]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, cells in enumerate(csv.reader(fh), start=1):
            if has_header and line_no == 1:
                continue
            if not cells or all(not c.strip() for c in cells):
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise CSVFormatError(f"expected {width} fields, found {len(cells)}", line_no)
            row = []
            for col_no, cell in enumerate(cells, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise CSVFormatError(f"non-numeric value {cell!r}", line_no, col_no) from None
            rows.append(row)
    if not rows:
        raise CSVFormatError("no data rows", 1)
    return rows


def load_csv(path: str | Path, has_header: bool = False) -> DataTable:
    """Read a comma-separated table of numbers, one point per row."""
    return DataTable(np.array(_read_grid(path, has_header)))


def load_matrix_csv(path: str | Path) -> np.ndarray:
    """Read a square numeric grid without header (raw SPSD input)."""
    a = np.array(_read_grid(path, has_header=False))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{path}: matrix is {a.shape[0]} x {a.shape[1]}, expected square")
    return a


def save_matrix_csv(path: str | Path, a: np.ndarray) -> None:
    np.savetxt(path, np.asarray(a), delimiter=",", fmt="%.17g")


def zscore(data: DataTable) -> DataTable:
    """Standardize each feature; constant features are only centred."""
    x = data.rows
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return DataTable((x - x.mean(axis=0)) / sd)


def median_heuristic_gamma(data: DataTable, sample_cap: int = 256, seed: int = 0) -> float:
    """``1 / (2 m^2)`` with ``m`` the median pairwise distance of a seeded subsample."""
    if data.n < 2:
        raise ValueError("median heuristic needs at least two points")
    x = data.rows
    if data.n > sample_cap:
        idx = np.sort(np.random.default_rng(seed).choice(data.n, sample_cap, replace=False))
        x = x[idx]
    m = float(np.median(pdist(x)))
    if m == 0.0:
        raise ValueError("median pairwise distance is zero; points are (mostly) identical")
    return 1.0 / (2.0 * m * m)


def gram(data: DataTable, spec: KernelSpec = KernelSpec(), *, check_spsd: bool = True,
         seed: int = 0) -> np.ndarray:
    """Kernel Gram matrix of the rows of ``data``.

    The RBF branch uses ``|x|^2 + |y|^2 - 2<x, y>`` clamped at zero, with the
    diagonal pinned to exactly one. With ``check_spsd`` the spectrum is checked
    against the SPSD round-off floor (the matrix itself is not modified).
    """
    x = data.rows
    with np.errstate(over="ignore", invalid="ignore"):
        dots = x @ x.T
    if spec.kind == "linear":
        g = dots
    else:
        gamma = spec.gamma
        if gamma == MEDIAN_HEURISTIC:
            gamma = median_heuristic_gamma(data, seed=seed)
        sq = np.diagonal(dots)
        with np.errstate(over="ignore", invalid="ignore"):
            d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * dots, 0.0)
            np.fill_diagonal(d2, 0.0)
            g = np.exp(-float(gamma) * d2)
    bad = np.argwhere(~np.isfinite(g))
    if bad.size:
        i, j = bad[0]
        raise KernelError(int(i), int(j))
    g = (g + g.T) / 2
    if check_spsd:
        try:
            eig_sym(g, spsd=True, method="lapack")
        except NotSPSDError as exc:
            raise NotSPSDError(f"Gram matrix is not SPSD: {exc}") from None
    return g
