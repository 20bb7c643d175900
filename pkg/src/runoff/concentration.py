"""Concentration-parameter inference from partial-column proportions.

Each development horizon k turns the first k+1 increments of a row into
proportions W_ij = X_ij / sum_{l<=k} X_il. Across the accident years
fully observed beyond lag k these proportions are Beta-distributed
column by column, and moment matching per column yields a concentration
estimate; the reported c_hat is the median over all retained (j, k)
cells. Horizons start at k = 2: the two-support-point proportions at
k = 1 carry the least stable variance estimates and are left out of the
aggregate (partial_proportions still serves k = 1 for inspection).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .triangle import Triangle

_MIN_ROWS = 3
_HETEROGENEOUS_BELOW = 30.0
_DELTA_AT_OR_ABOVE = 100.0
_AGGREGATE_KMIN = 2


class ConcentrationError(ValueError):
    """Concentration estimation cannot proceed on the given input."""


class CellEstimate(NamedTuple):
    j: int
    k: int
    c_hat: float
    n_k: int
    pi_hat: float


class DroppedCell(NamedTuple):
    j: int
    k: int
    reason: str


class PartialProportions(NamedTuple):
    k: int
    rows: tuple[int, ...]
    W: np.ndarray
    skipped: tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class ConcentrationEstimate:
    """Median-aggregated concentration estimate with its cell table.

    Attributes:
        c_hat: median of the retained per-cell estimates.
        cells: retained (j, k, c_hat_jk, n_k, pi_hat_jk) tuples sorted by
            (k, j); n_k counts the rows that entered the cell after
            positivity screening.
        diagnostic: "heterogeneous" (c_hat < 30), "stable", or
            "delta-recommended" (c_hat >= 100).
        dropped_cells: cells excluded before the median, with reasons.
        divisor: variance convention used, "unbiased" (n-1) or "biased" (n).
    """

    c_hat: float
    cells: tuple[CellEstimate, ...]
    diagnostic: str
    dropped_cells: tuple[DroppedCell, ...]
    divisor: str


def _ddof(divisor: str) -> int:
    if divisor == "unbiased":
        return 1
    if divisor == "biased":
        return 0
    raise ConcentrationError(f"divisor must be 'unbiased' or 'biased', got {divisor!r}")


def sigma_c_squared(c: float, pi: float) -> float:
    """Asymptotic per-cell variance of the moment estimator of c.

    Strictly positive on c > 0, pi in (0, 1); grows like 2 c^2 for
    large c.
    """
    if c <= 0.0:
        raise ConcentrationError(f"c must be positive, got {c}")
    if not 0.0 < pi < 1.0:
        raise ConcentrationError(f"pi must lie in (0, 1), got {pi}")
    u = pi * (1.0 - pi)
    return c * (c + 1.0) * (2.0 * c * (c - 3.0) * u + 3.0 * c + 1.0) / (
        u * (c + 2.0) * (c + 3.0)
    )


def partial_proportions(t: Triangle, k: int) -> PartialProportions:
    """Proportions W_ij^(k) for j = 0..k-1 over rows observed beyond lag k.

    Rows containing a non-positive increment within lags 0..k (or a
    non-positive denominator) are skipped and reported, not errors: the
    proportion model assumes positive increments while real triangles
    need not.
    """
    if not 1 <= k <= t.J - 2:
        raise ConcentrationError(f"horizon k must satisfy 1 <= k <= J-2 = {t.J - 2}, got {k}")
    rows: list[int] = []
    skipped: list[tuple[int, str]] = []
    vals: list[np.ndarray] = []
    for i in range(1, t.I - k):  # rows with k < I - i
        head = t.row(i)[: k + 1]
        if np.any(head <= 0.0):
            skipped.append((i, "non-positive increment"))
            continue
        denom = head.sum()
        if denom <= 0.0:
            skipped.append((i, "non-positive denominator"))
            continue
        rows.append(i)
        vals.append(head[:k] / denom)
    W = np.array(vals) if vals else np.empty((0, k))
    return PartialProportions(k=k, rows=tuple(rows), W=W, skipped=tuple(skipped))


def cell_estimate(W_column: np.ndarray, divisor: str = "unbiased") -> float:
    """Moment estimate m(1-m)/v - 1 from one column of proportions."""
    col = np.asarray(W_column, dtype=float)
    if col.size < _MIN_ROWS:
        raise ConcentrationError(f"need at least {_MIN_ROWS} samples, got {col.size}")
    v = float(col.var(ddof=_ddof(divisor)))
    if v <= 0.0:
        raise ConcentrationError("sample variance must be positive")
    m = float(col.mean())
    return m * (1.0 - m) / v - 1.0


def _cells_from_matrix(
    X: np.ndarray, divisor: str
) -> tuple[list[CellEstimate], list[DroppedCell]]:
    """Shared cell enumeration over a row-per-accident-year matrix.

    X holds increments with rows ordered by accident year; entries beyond
    a row's observed lags may be NaN since horizons only read the
    qualifying rows. Horizons run k = 2..J-2 subject to I - k - 1 >= 3.
    """
    ddof = _ddof(divisor)
    I, J = X.shape
    cells: list[CellEstimate] = []
    dropped: list[DroppedCell] = []
    for k in range(_AGGREGATE_KMIN, J - 1):
        n_k = I - k - 1
        if n_k < _MIN_ROWS:
            continue
        block = X[:n_k, : k + 1]
        good = np.all(block > 0.0, axis=1)
        used = int(good.sum())
        if used < _MIN_ROWS:
            for j in range(k):
                dropped.append(DroppedCell(j, k, f"only {used} usable rows"))
            continue
        rows = block[good]
        W = rows / rows.sum(axis=1, keepdims=True)
        means = W.mean(axis=0)
        variances = W.var(axis=0, ddof=ddof)
        for j in range(k):
            m, v = float(means[j]), float(variances[j])
            if v <= 0.0:
                dropped.append(DroppedCell(j, k, "zero sample variance"))
                continue
            c_jk = m * (1.0 - m) / v - 1.0
            if not np.isfinite(c_jk) or c_jk <= 0.0:
                dropped.append(DroppedCell(j, k, f"non-positive estimate {c_jk:.4g}"))
                continue
            cells.append(CellEstimate(j=j, k=k, c_hat=c_jk, n_k=used, pi_hat=m))
    return cells, dropped


def _aggregate(
    cells: list[CellEstimate], dropped: list[DroppedCell], divisor: str
) -> ConcentrationEstimate:
    if not cells:
        raise ConcentrationError(
            "no usable (j, k) cells: the triangle is too small or too irregular "
            "for moment estimation of the concentration parameter"
        )
    cells.sort(key=lambda cell: (cell.k, cell.j))
    c_hat = float(np.median([cell.c_hat for cell in cells]))
    if c_hat >= _DELTA_AT_OR_ABOVE:
        diagnostic = "delta-recommended"
    elif c_hat < _HETEROGENEOUS_BELOW:
        diagnostic = "heterogeneous"
    else:
        diagnostic = "stable"
    return ConcentrationEstimate(
        c_hat=c_hat,
        cells=tuple(cells),
        diagnostic=diagnostic,
        dropped_cells=tuple(dropped),
        divisor=divisor,
    )


def estimate_c(t: Triangle, divisor: str = "unbiased") -> ConcentrationEstimate:
    """Estimate the concentration parameter from a triangle.

    Proportions are scale-free per row, so the estimate is invariant
    under rescaling any accident year. The median is taken as the
    midpoint when the retained cell count is even.
    """
    cells, dropped = _cells_from_matrix(t.to_matrix(), divisor)
    return _aggregate(cells, dropped, divisor)


def estimate_c_from_matrix(X: np.ndarray, divisor: str = "unbiased") -> ConcentrationEstimate:
    """estimate_c for simulated data already shaped as an (I, J) array.

    Rows must be ordered so that row index 0 has the longest observation
    horizon, matching triangle accident-year order.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ConcentrationError("expected a 2-D array of increments")
    cells, dropped = _cells_from_matrix(X, divisor)
    return _aggregate(cells, dropped, divisor)
