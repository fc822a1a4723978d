"""Covariate-matrix and outcome containers, standardization, and file I/O.

Matrices are stored column-major (Fortran order) because every screening
statistic is a per-column reduction; the hot loops are stride-1 that way.
All values are 64-bit floats. NaN/Inf are rejected at load, never propagated.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import InitVar, dataclass, field

import numpy as np

from .errors import (
    AllCensoredError,
    ConstantColumnError,
    DataValidationError,
    DimensionOverflowError,
    MalformedFileError,
    NegativeTimeError,
    NonBinaryEventError,
)

#: Default cap on n*p cells accepted at load (~800 MB of float64).
DEFAULT_MAX_CELLS = 100_000_000

#: 16-byte magic prefix of the binary matrix format (NUL-padded).
EEMAT_MAGIC = b"EEMAT001".ljust(16, b"\x00")

_HEADER = struct.Struct("<QQ")  # little-endian u64 n, u64 p

# Columns whose sample variance (divisor n) falls below this are unusable.
CONSTANT_COLUMN_TOL = 1e-14


@dataclass(frozen=True)
class CovariateMatrix:
    """An n-by-p dense covariate matrix with standardization metadata.

    ``col_means`` and ``col_scales`` record the affine transform applied to
    the raw columns; for a raw matrix they are 0 and 1. Instances are
    immutable and safe to share across workers.
    """

    values: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    standardized: bool = False
    check_standardized: InitVar[bool] = True

    def __post_init__(self, check_standardized):
        v = np.asfortranarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise DataValidationError("matrix values must be 2-dimensional")
        n, p = v.shape
        if n < 2 or p < 1:
            raise DataValidationError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(v)):
            raise DataValidationError("matrix contains NaN or Inf")
        means = np.asarray(self.col_means, dtype=np.float64)
        scales = np.asarray(self.col_scales, dtype=np.float64)
        if means.shape != (p,) or scales.shape != (p,):
            raise DataValidationError("col_means/col_scales must have length p")
        if np.any(scales <= 0):
            raise DataValidationError("col_scales must be strictly positive")
        object.__setattr__(self, "col_means", means)
        object.__setattr__(self, "col_scales", scales)
        if self.standardized and check_standardized:
            if np.max(np.abs(v.mean(axis=0))) > 1e-10:
                raise DataValidationError("standardized matrix has off-zero column mean")
            if np.max(np.abs(v.var(axis=0) - 1.0)) > 1e-8:
                raise DataValidationError("standardized matrix has off-unit column variance")

    @classmethod
    def from_raw(cls, values: np.ndarray) -> "CovariateMatrix":
        """Wrap raw values with identity transform metadata."""
        values = np.asarray(values, dtype=np.float64)
        p = values.shape[1] if values.ndim == 2 else 0
        return cls(values, np.zeros(p), np.ones(p), standardized=False)

    @classmethod
    def from_design(cls, values: np.ndarray) -> "CovariateMatrix":
        """Wrap columns drawn from a zero-mean, unit-variance design.

        Such columns are standardized by construction, so the empirical
        per-sample check is skipped; individual draws deviate from mean 0
        and variance 1 only by sampling noise, which is part of the design
        rather than a data defect. Use ``standardize`` for observed data.
        """
        values = np.asarray(values, dtype=np.float64)
        p = values.shape[1] if values.ndim == 2 else 0
        return cls(values, np.zeros(p), np.ones(p), standardized=True, check_standardized=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SurvivalSample:
    """Observed times, event indicators, and (simulation only) true times."""

    y: np.ndarray
    delta: np.ndarray
    t_true: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        delta = np.asarray(self.delta)
        object.__setattr__(self, "y", y)
        if y.ndim != 1 or delta.shape != y.shape:
            raise DataValidationError("y and delta must be 1-d arrays of equal length")
        if not np.all(np.isfinite(y)):
            raise DataValidationError("times contain NaN or Inf")
        if np.any(y < 0):
            raise NegativeTimeError("observed times must be nonnegative")
        if not np.all(np.isin(delta, (0, 1))):
            raise NonBinaryEventError("event indicators must be 0 or 1")
        delta = delta.astype(np.int64)
        object.__setattr__(self, "delta", delta)
        if not np.any(delta == 1):
            raise AllCensoredError("no events observed; sample unusable for screening")
        if self.t_true is not None:
            t = np.asarray(self.t_true, dtype=np.float64)
            if t.shape != y.shape:
                raise DataValidationError("t_true length mismatch")
            object.__setattr__(self, "t_true", t)

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class TrueModel:
    """Support and values of the data-generating coefficient vector."""

    beta0: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.beta0:
            raise DataValidationError("true model must have at least one nonzero coefficient")
        clean = {int(j): float(v) for j, v in self.beta0.items()}
        if any(v == 0.0 for v in clean.values()):
            raise DataValidationError("true model values must be nonzero")
        object.__setattr__(self, "beta0", clean)

    @property
    def indices(self) -> np.ndarray:
        return np.array(sorted(self.beta0), dtype=np.int64)

    @property
    def s_n(self) -> int:
        return len(self.beta0)

    def dense(self, p: int) -> np.ndarray:
        out = np.zeros(p)
        for j, v in self.beta0.items():
            out[j] = v
        return out


def standardize(m: CovariateMatrix) -> CovariateMatrix:
    """Center and scale each column to sample mean 0 and variance 1.

    The scale divisor is n (population form), matching the averaging
    convention of the screening statistics; the divisor choice affects
    thresholds only, never rankings.

    Raises
    ------
    ConstantColumnError
        If any column has sample variance below ``CONSTANT_COLUMN_TOL``.
    """
    if m.standardized:
        raise DataValidationError("matrix is already standardized")
    means = m.values.mean(axis=0)
    variances = m.values.var(axis=0)
    bad = np.flatnonzero(variances < CONSTANT_COLUMN_TOL)
    if bad.size:
        raise ConstantColumnError(bad)
    scales = np.sqrt(variances)
    out = np.asfortranarray((m.values - means) / scales)
    return CovariateMatrix(out, means, scales, standardized=True)


def _check_cells(n: int, p: int, max_cells: int):
    if n * p > max_cells:
        raise DimensionOverflowError(
            f"matrix has {n * p} cells, exceeding the cap of {max_cells}"
        )


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedFileError(f"non-numeric cell {text!r} at {where}") from None
    if not np.isfinite(value):
        raise MalformedFileError(f"non-finite cell {text!r} at {where}")
    return value


def load_matrix(path, format: str | None = None, max_cells: int = DEFAULT_MAX_CELLS) -> CovariateMatrix:
    """Load a covariate matrix from CSV or the binary ``.eemat`` format.

    ``format`` is ``"csv"`` or ``"binary"``; when None it is inferred from
    the file suffix (``.eemat`` means binary). The result is unstandardized.
    """
    path = str(path)
    if format is None:
        format = "binary" if path.endswith(".eemat") else "csv"
    if format == "binary":
        return _load_matrix_binary(path, max_cells)
    if format == "csv":
        return _load_matrix_csv(path, max_cells)
    raise ValueError(f"unknown matrix format {format!r}")


def _load_matrix_csv(path: str, max_cells: int) -> CovariateMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedFileError(f"{path}: empty file (header row mandatory)") from None
        p = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p:
                raise MalformedFileError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {p}"
                )
            rows.append([_parse_float(cell, f"{path}:{lineno}") for cell in row])
    n = len(rows)
    if n < 2:
        raise DataValidationError(f"{path}: need at least 2 data rows, got {n}")
    _check_cells(n, p, max_cells)
    return CovariateMatrix.from_raw(np.array(rows, dtype=np.float64))


def _load_matrix_binary(path: str, max_cells: int) -> CovariateMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(16)
        if magic != EEMAT_MAGIC:
            raise MalformedFileError(f"{path}: bad magic {magic!r}")
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise MalformedFileError(f"{path}: truncated header")
        n, p = _HEADER.unpack(head)
        _check_cells(n, p, max_cells)
        payload = fh.read(8 * n * p)
        if len(payload) != 8 * n * p:
            raise MalformedFileError(f"{path}: truncated payload")
    flat = np.frombuffer(payload, dtype="<f8")
    values = flat.reshape((n, p), order="F")
    if not np.all(np.isfinite(values)):
        raise DataValidationError(f"{path}: matrix contains NaN or Inf")
    return CovariateMatrix.from_raw(values)


def save_matrix(m: CovariateMatrix, path, format: str | None = None):
    """Write a matrix to CSV or binary ``.eemat`` (bit-exact round trip)."""
    path = str(path)
    if format is None:
        format = "binary" if path.endswith(".eemat") else "csv"
    if format == "binary":
        with open(path, "wb") as fh:
            fh.write(EEMAT_MAGIC)
            fh.write(_HEADER.pack(m.n, m.p))
            fh.write(np.ascontiguousarray(m.values.ravel(order="F"), dtype="<f8").tobytes())
    elif format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{j}" for j in range(m.p)])
            for i in range(m.n):
                writer.writerow([repr(float(v)) for v in m.values[i, :]])
    else:
        raise ValueError(f"unknown matrix format {format!r}")


def load_survival(path) -> SurvivalSample:
    """Load observed times and event indicators from a time,event CSV."""
    path = str(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedFileError(f"{path}: empty file") from None
        try:
            t_col = header.index("time")
            e_col = header.index("event")
        except ValueError:
            raise MalformedFileError(f"{path}: header must contain time and event columns") from None
        times, events = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedFileError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}"
                )
            times.append(_parse_float(row[t_col], f"{path}:{lineno}"))
            events.append(_parse_float(row[e_col], f"{path}:{lineno}"))
    return SurvivalSample(np.array(times), np.array(events))


def save_survival(s: SurvivalSample, path):
    """Write a survival sample as a time,event CSV."""
    with open(str(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "event"])
        for t, e in zip(s.y, s.delta):
            writer.writerow([repr(float(t)), int(e)])
