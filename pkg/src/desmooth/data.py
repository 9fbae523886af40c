"""Datasets, fit containers and CSV input."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataFormatError, EmptyDatasetError

__all__ = ["Dataset", "Fit", "parse_csv", "read_csv_text", "load_mouse", "bandwidth_heuristic"]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observation pairs ``(x_i, y_i)`` on an interval ``[a, b]``.

    The pairs are stored sorted by ``x`` (a stable sort, so ties keep their
    input order).  ``interval`` defaults to ``(min x, max x)``.
    """

    xs: np.ndarray
    ys: np.ndarray
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float, ndmin=1).ravel()
        ys = np.array(self.ys, dtype=float, ndmin=1).ravel()
        if xs.size == 0:
            raise EmptyDatasetError("dataset has no observations")
        if xs.shape != ys.shape:
            raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("dataset contains non-finite values")
        order = np.argsort(xs, kind="stable")
        xs, ys = xs[order], ys[order]
        if self.interval is None:
            interval = (float(xs[0]), float(xs[-1]))
        else:
            interval = (float(self.interval[0]), float(self.interval[1]))
            if interval[0] > interval[1]:
                raise ValueError(f"invalid interval {interval}")
            if xs[0] < interval[0] or xs[-1] > interval[1]:
                raise ValueError(f"observations fall outside the interval {interval}")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "interval", interval)

    @property
    def n(self) -> int:
        return self.xs.size

    def __len__(self):
        return self.xs.size

    def subset(self, mask) -> "Dataset":
        return Dataset(self.xs[mask], self.ys[mask], self.interval)

    def shifted(self, c: float) -> "Dataset":
        a, b = self.interval
        return Dataset(self.xs + c, self.ys, (a + c, b + c))


@dataclass(eq=False)
class Fit:
    """Fitted values of one estimator on an evaluation grid.

    ``degenerate`` marks grid points whose kernel window was empty (value is
    NaN there).  ``weight_sums`` holds the total kernel weight at each point.
    """

    grid: np.ndarray
    values: np.ndarray
    method: str
    bandwidth: float | np.ndarray | None
    weight_sums: np.ndarray | None = None
    degenerate: np.ndarray = field(default=None)
    converged: bool = True

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have equal length")
        if self.degenerate is None:
            self.degenerate = ~np.isfinite(self.values)
        else:
            self.degenerate = np.asarray(self.degenerate, dtype=bool)

    @property
    def n_degenerate(self) -> int:
        return int(self.degenerate.sum())

    def __len__(self):
        return self.grid.size


def bandwidth_heuristic(xs) -> float:
    """Half the median of successive differences of the sorted ``xs``."""
    xs = np.sort(np.asarray(xs, dtype=float))
    if xs.size < 2:
        raise ValueError("need at least two observations")
    h = 0.5 * float(np.median(np.diff(xs)))
    if h <= 0:
        raise ValueError("median spacing is zero; supply a bandwidth")
    return h


def read_csv_text(text: str, source: str = "<string>") -> Dataset:
    """Parse ``x,y`` CSV text.  The header must be exactly ``x,y``."""
    reader = csv.reader(io.StringIO(text))
    rows = iter(enumerate(reader, start=1))
    header = None
    for lineno, row in rows:
        if row and any(cell.strip() for cell in row):
            header = [cell.strip().lstrip("﻿") for cell in row]
            break
    if header is None:
        raise DataFormatError(f"{source}: missing header row 'x,y'")
    if header != ["x", "y"]:
        raise DataFormatError(f"{source}: expected header 'x,y', got {','.join(header)!r}", line=lineno)
    xs, ys = [], []
    for lineno, row in rows:
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise DataFormatError(f"{source}: expected 2 columns, got {len(row)}", line=lineno)
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise DataFormatError(f"{source}: non-numeric cell in {row!r}", line=lineno) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise DataFormatError(f"{source}: non-finite value in {row!r}", line=lineno)
        xs.append(x)
        ys.append(y)
    if not xs:
        raise EmptyDatasetError(f"{source}: no data rows")
    return Dataset(xs, ys)


def parse_csv(path) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path} is not valid UTF-8") from exc
    return read_csv_text(text, source=str(path))


def load_mouse() -> Dataset:
    """Tumour volume (cm^3) against time (days) for a single control mouse."""
    text = resources.files("desmooth").joinpath("data/mouse_tumor.csv").read_text(encoding="utf-8")
    return read_csv_text(text, source="mouse_tumor.csv")
