"""Run-off triangle data model, validation, and CSV ingestion.

A triangle stores incremental amounts or counts for accident years
i = 1..I and development lags j = 0..J-1. Cells with i + j <= I are
observed; future cells are absent, never zero-filled. Triangles are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np


class TriangleError(ValueError):
    """Input data cannot form a valid run-off triangle."""


_BUNDLED = {
    "taylor-ashe": "taylor_ashe.csv",
    "raa": "raa.csv",
    "mortgage": "mortgage.csv",
}


def _observed_lags(I: int, J: int, i: int) -> int:
    """Largest observed lag of accident year i (inclusive)."""
    return min(J - 1, I - i)


@dataclass(frozen=True)
class Triangle:
    """Complete run-off triangle of incremental values.

    Attributes:
        I: number of accident years (rows, 1-based).
        J: number of development lags (columns, 0-based).
        kind: "amounts" or "counts".
        cells: mapping (i, j) -> value over the observed region,
            i.e. exactly the cells with i + j <= I and j <= J - 1.
        exposures: optional per-accident-year exposure vector.
    """

    I: int
    J: int
    kind: str
    cells: Mapping[tuple[int, int], float]
    exposures: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.I < 2 or self.J < 2:
            raise TriangleError(f"need I >= 2 and J >= 2, got I={self.I}, J={self.J}")
        if self.kind not in ("amounts", "counts"):
            raise TriangleError(f"kind must be 'amounts' or 'counts', got {self.kind!r}")
        seen: dict[tuple[int, int], float] = {}
        for (i, j), v in self.cells.items():
            if not (1 <= i <= self.I) or not (0 <= j <= self.J - 1):
                raise TriangleError(f"cell index ({i}, {j}) outside the triangle grid")
            if i + j > self.I:
                raise TriangleError(f"future cell ({i}, {j}): i + j exceeds I = {self.I}")
            v = float(v)
            if not np.isfinite(v):
                raise TriangleError(f"non-finite value at cell ({i}, {j})")
            if self.kind == "counts" and (v < 0 or v != int(v)):
                raise TriangleError(
                    f"count triangles need non-negative integers, got {v} at ({i}, {j})"
                )
            seen[(i, j)] = v
        for i in range(1, self.I + 1):
            for j in range(_observed_lags(self.I, self.J, i) + 1):
                if (i, j) not in seen:
                    raise TriangleError(f"missing observed cell ({i}, {j})")
        if len(seen) != sum(
            _observed_lags(self.I, self.J, i) + 1 for i in range(1, self.I + 1)
        ):
            raise TriangleError("cells outside the observed region")
        object.__setattr__(self, "cells", MappingProxyType(seen))
        if self.exposures is not None:
            exp = tuple(float(e) for e in self.exposures)
            if len(exp) != self.I:
                raise TriangleError(
                    f"exposures must have length I = {self.I}, got {len(exp)}"
                )
            if any(not np.isfinite(e) for e in exp):
                raise TriangleError("non-finite exposure value")
            object.__setattr__(self, "exposures", exp)

    def row(self, i: int) -> np.ndarray:
        """Observed values of accident year i in lag order."""
        top = _observed_lags(self.I, self.J, i)
        return np.array([self.cells[(i, j)] for j in range(top + 1)])

    def last_lag(self, i: int) -> int:
        return _observed_lags(self.I, self.J, i)

    def with_exposures(self, exposures) -> Triangle:
        return replace(self, exposures=tuple(float(e) for e in exposures))

    def to_matrix(self) -> np.ndarray:
        """(I, J) array of observed values with NaN in the future region."""
        out = np.full((self.I, self.J), np.nan)
        for (i, j), v in self.cells.items():
            out[i - 1, j] = v
        return out


@dataclass(frozen=True)
class DiagonalSummary:
    """Row totals at the valuation date plus each row's development lag."""

    observed: tuple[float, ...]
    dev_lag: tuple[int, ...]


def latest_diagonal(t: Triangle) -> DiagonalSummary:
    observed = tuple(float(t.row(i).sum()) for i in range(1, t.I + 1))
    dev_lag = tuple(t.I - i for i in range(1, t.I + 1))
    return DiagonalSummary(observed=observed, dev_lag=dev_lag)


def cumulate(t: Triangle) -> Triangle:
    cells = {}
    for i in range(1, t.I + 1):
        run = 0.0
        for j in range(t.last_lag(i) + 1):
            run += t.cells[(i, j)]
            cells[(i, j)] = run
    return Triangle(t.I, t.J, t.kind, cells, t.exposures)


def decumulate(t: Triangle) -> Triangle:
    """Inverse of cumulate. Decreasing cumulative amounts produce negative
    increments, which are preserved under a warning; decreasing cumulative
    counts are rejected."""
    cells = {}
    negatives = []
    for i in range(1, t.I + 1):
        prev = 0.0
        for j in range(t.last_lag(i) + 1):
            inc = t.cells[(i, j)] - prev
            prev = t.cells[(i, j)]
            if inc < 0 and j > 0:
                negatives.append((i, j))
            cells[(i, j)] = inc
    if negatives:
        if t.kind == "counts":
            raise TriangleError(
                f"cumulative count rows must be non-decreasing; decreases at {negatives}"
            )
        warnings.warn(
            f"negative increments produced at cells {negatives}", stacklevel=2
        )
    return Triangle(t.I, t.J, t.kind, cells, t.exposures)


def _read_text(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _parse_number(token: str, where: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise TriangleError(f"non-numeric value {token!r} in {where}") from None


def _parse_long(text: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TriangleError("empty input") from None
    header = [h.strip().lower() for h in header]
    if header[:3] != ["accident", "lag", "value"]:
        raise TriangleError(
            f"long format needs header accident,lag,value[,exposure], got {header}"
        )
    has_exposure = len(header) == 4 and header[3] == "exposure"
    if len(header) > 3 and not has_exposure:
        raise TriangleError(f"unexpected columns in long header: {header[3:]}")
    cells: dict[tuple[int, int], float] = {}
    exposures: dict[int, float] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) < 3:
            raise TriangleError(f"line {lineno}: expected at least 3 fields")
        where = f"line {lineno}"
        i = _parse_number(rec[0], where)
        j = _parse_number(rec[1], where)
        if i != int(i) or j != int(j) or i < 1 or j < 0:
            raise TriangleError(f"{where}: accident/lag must be integers with accident >= 1")
        i, j = int(i), int(j)
        if (i, j) in cells:
            raise TriangleError(f"duplicate cell ({i}, {j}) at {where}")
        cells[(i, j)] = _parse_number(rec[2], where)
        if has_exposure and len(rec) > 3 and rec[3].strip():
            e = _parse_number(rec[3], where)
            if i in exposures and exposures[i] != e:
                raise TriangleError(f"conflicting exposures for accident year {i}")
            exposures[i] = e
    return cells, exposures


def _parse_wide(text: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TriangleError("empty input") from None
    header = [h.strip().lower() for h in header]
    if not header or header[0] != "accident":
        raise TriangleError("wide format needs header accident,lag0,...")
    expected = [f"lag{k}" for k in range(len(header) - 1)]
    if header[1:] != expected:
        raise TriangleError(f"wide header columns must be {expected}, got {header[1:]}")
    width = len(header)
    cells: dict[tuple[int, int], float] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) > width:
            raise TriangleError(f"line {lineno}: ragged row, {len(rec)} fields for {width} columns")
        where = f"line {lineno}"
        i = _parse_number(rec[0], where)
        if i != int(i) or i < 1:
            raise TriangleError(f"{where}: accident must be an integer >= 1")
        i = int(i)
        for j, token in enumerate(rec[1:]):
            if not token.strip():
                continue  # blank means future cell; explicit zeros are data
            if (i, j) in cells:
                raise TriangleError(f"duplicate cell ({i}, {j}) at {where}")
            cells[(i, j)] = _parse_number(token, where)
    return cells, {}


def load_triangle(
    source,
    format: str = "long",
    kind: str = "amounts",
    exposures=None,
) -> Triangle:
    """Parse a triangle from a path, file object, or byte stream.

    Long format: header ``accident,lag,value[,exposure]``. Wide format:
    header ``accident,lag0,...,lag{J-1}`` with future cells left blank.
    Dimensions are inferred: I is the largest accident index and J is one
    past the largest lag. An exposure column (long format) or the
    ``exposures`` argument attaches exposures; the argument wins.
    """
    text = _read_text(source)
    if format == "long":
        cells, exp_map = _parse_long(text)
    elif format == "wide":
        cells, exp_map = _parse_wide(text)
    else:
        raise TriangleError(f"unknown format {format!r}; use 'long' or 'wide'")
    if not cells:
        raise TriangleError("no data rows")
    I = max(i for i, _ in cells)
    J = max(j for _, j in cells) + 1
    exp = None
    if exposures is not None:
        exp = tuple(float(e) for e in exposures)
    elif exp_map:
        missing = [i for i in range(1, I + 1) if i not in exp_map]
        if missing:
            raise TriangleError(f"exposure column present but accident years {missing} lack one")
        exp = tuple(exp_map[i] for i in range(1, I + 1))
    return Triangle(I=I, J=max(J, 2), kind=kind, cells=cells, exposures=exp)


def load_exposures(source) -> tuple[float, ...]:
    """Parse a sidecar exposure file with header ``accident,exposure``."""
    reader = csv.reader(io.StringIO(_read_text(source)))
    header = [h.strip().lower() for h in next(reader, [])]
    if header != ["accident", "exposure"]:
        raise TriangleError("exposure file needs header accident,exposure")
    vals: dict[int, float] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        i = _parse_number(rec[0], f"line {lineno}")
        if i != int(i) or int(i) < 1 or (int(i)) in vals:
            raise TriangleError(f"bad or duplicate accident index at line {lineno}")
        vals[int(i)] = _parse_number(rec[1], f"line {lineno}")
    if not vals or sorted(vals) != list(range(1, max(vals) + 1)):
        raise TriangleError("exposure file must cover accident years 1..I")
    return tuple(vals[i] for i in range(1, max(vals) + 1))


def bundled_triangle(name: str) -> Triangle:
    """Load one of the bundled benchmark triangles by name.

    Names: "taylor-ashe", "raa", "mortgage". All three ship as long-format
    incremental amount triangles.
    """
    key = name.strip().lower().replace("_", "-")
    if key not in _BUNDLED:
        raise TriangleError(f"unknown bundled triangle {name!r}; options: {sorted(_BUNDLED)}")
    path = resources.files("runoff").joinpath("data", _BUNDLED[key])
    return load_triangle(io.StringIO(path.read_text(encoding="utf-8")), format="long")
