"""Tabular data model and preprocessing.

A :class:`Table` is an immutable, column-typed collection of row records.
Numeric cells are finite floats, categorical cells are strings, and a
missing cell is ``None``.  Everything downstream (models, reducers,
explainers) works on plain ``numpy`` matrices pulled out of a table with
:meth:`Table.matrix`.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    DataError,
    DegenerateSplitError,
    ParameterMismatchError,
    SchemaError,
    StructuralError,
    UnimputableColumnError,
    UnsupportedDegreeError,
)

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "NA"})

Kind = Literal["numeric", "categorical"]


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: Kind = "numeric"
    allow_missing: bool = True

    def __post_init__(self):
        if not self.name:
            raise SchemaError("column names must be non-empty")
        if self.kind not in ("numeric", "categorical"):
            raise SchemaError(f"unknown column kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class Table:
    columns: tuple[ColumnSpec, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {dup}")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise StructuralError(
                    f"row {i} has {len(row)} cells, expected {width}", row_index=i
                )
            for spec, cell in zip(self.columns, row):
                if cell is None:
                    if not spec.allow_missing:
                        raise DataError(f"missing value in column {spec.name!r} (row {i})")
                elif spec.kind == "numeric":
                    if not isinstance(cell, float) or not math.isfinite(cell):
                        raise DataError(
                            f"non-finite or non-float numeric cell in {spec.name!r} (row {i})"
                        )
                elif not isinstance(cell, str):
                    raise DataError(f"categorical cell in {spec.name!r} must be a string")

    # -- construction -------------------------------------------------------

    @classmethod
    def from_columns(cls, data: dict[str, Sequence], kinds: dict[str, Kind] | None = None) -> Table:
        """Build a table from a mapping of column name to values.

        Kinds default to numeric unless any non-missing value is a string.
        """
        kinds = dict(kinds or {})
        names = list(data)
        lengths = {len(v) for v in data.values()}
        if len(lengths) > 1:
            raise StructuralError("columns have different lengths")
        specs = []
        for name in names:
            kind = kinds.get(name)
            if kind is None:
                kind = "categorical" if any(isinstance(v, str) for v in data[name]) else "numeric"
            specs.append(ColumnSpec(name, kind))
        cols = []
        for spec in specs:
            if spec.kind == "numeric":
                cols.append([_to_numeric(v) for v in data[spec.name]])
            else:
                cols.append([None if v is None else str(v) for v in data[spec.name]])
        n = lengths.pop() if lengths else 0
        rows = tuple(tuple(col[i] for col in cols) for i in range(n))
        return cls(tuple(specs), rows)

    # -- accessors ----------------------------------------------------------

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def spec(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"no column named {name!r}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"no column named {name!r}") from None

    def column(self, name: str) -> list:
        j = self.index(name)
        return [row[j] for row in self.rows]

    def numeric_columns(self) -> list[str]:
        return [c.name for c in self.columns if c.kind == "numeric"]

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        """Numeric columns as an ``(n_rows, len(names))`` float array.

        Missing cells are rejected; impute first.
        """
        names = list(self.numeric_columns() if names is None else names)
        idx = []
        for name in names:
            if self.spec(name).kind != "numeric":
                raise SchemaError(f"column {name!r} is not numeric")
            idx.append(self.index(name))
        out = np.empty((self.n_rows, len(idx)), dtype=float)
        for i, row in enumerate(self.rows):
            for k, j in enumerate(idx):
                v = row[j]
                if v is None:
                    raise DataError(f"missing value in column {names[k]!r} (row {i})")
                out[i, k] = v
        return out

    def take(self, indices: Iterable[int]) -> Table:
        return Table(self.columns, tuple(self.rows[i] for i in indices))

    def replace_column(self, name: str, values: Sequence) -> Table:
        j = self.index(name)
        if len(values) != self.n_rows:
            raise StructuralError(f"replacement for {name!r} has wrong length")
        rows = tuple(row[:j] + (values[i],) + row[j + 1 :] for i, row in enumerate(self.rows))
        return Table(self.columns, rows)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.names)
            for row in self.rows:
                w.writerow(["NA" if v is None else _format_cell(v) for v in row])


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _to_numeric(v) -> float | None:
    if v is None:
        return None
    if isinstance(v, str):
        return _parse_float(v)
    f = float(v)
    return f if math.isfinite(f) else None


def _parse_float(text: str) -> float | None:
    text = text.strip()
    if text in MISSING_TOKENS:
        return None
    try:
        f = float(text)
    except ValueError:
        return None
    return f if math.isfinite(f) else None


# --- ingestion ---------------------------------------------------------------


def load_csv(path: str | Path, spec: Sequence[ColumnSpec] | None = None) -> Table:
    """Read a UTF-8 CSV file with a header row.

    Without ``spec``, a column is numeric when every non-missing cell parses
    as a finite number, otherwise categorical.  With ``spec``, unparseable
    cells in numeric columns become missing.  ``""`` and ``"NA"`` are
    missing in either case.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        records = list(csv.reader(fh))
    if not records:
        raise StructuralError("CSV file is empty; a header row is required", row_index=0)
    header = [h.strip() for h in records[0]]
    if any(not h for h in header):
        raise SchemaError("empty column name in header")
    if len(set(header)) != len(header):
        dup = sorted({h for h in header if header.count(h) > 1})
        raise SchemaError(f"duplicate header names: {dup}")
    body = records[1:]
    for i, rec in enumerate(body):
        if len(rec) != len(header):
            raise StructuralError(
                f"row {i} has {len(rec)} fields, header has {len(header)}", row_index=i
            )

    if spec is None:
        specs = []
        for j, name in enumerate(header):
            cells = [rec[j].strip() for rec in body]
            observed = [c for c in cells if c not in MISSING_TOKENS]
            numeric = all(_parse_float(c) is not None for c in observed)
            specs.append(ColumnSpec(name, "numeric" if numeric else "categorical"))
    else:
        by_name = {s.name: s for s in spec}
        if len(by_name) != len(spec):
            raise SchemaError("duplicate names in column spec")
        unknown = [h for h in header if h not in by_name]
        if unknown:
            raise SchemaError(f"header columns missing from spec: {unknown}")
        specs = [by_name[h] for h in header]

    rows = []
    for rec in body:
        row = []
        for s, cell in zip(specs, rec):
            if s.kind == "numeric":
                row.append(_parse_float(cell))
            else:
                cell = cell.strip()
                row.append(None if cell in MISSING_TOKENS else cell)
        rows.append(tuple(row))
    return Table(tuple(specs), tuple(rows))


# --- cleaning ----------------------------------------------------------------


def drop_or_impute(t: Table, strategy: Literal["drop_rows", "mean", "median"]) -> Table:
    """Remove missing markers from the numeric columns.

    ``drop_rows`` discards every row holding a missing numeric cell;
    ``mean`` / ``median`` fill with the statistic of the observed cells.
    Only single imputation is offered.
    """
    numeric = [j for j, c in enumerate(t.columns) if c.kind == "numeric"]
    if strategy == "drop_rows":
        keep = [row for row in t.rows if all(row[j] is not None for j in numeric)]
        return Table(t.columns, tuple(keep))
    if strategy not in ("mean", "median"):
        raise ValueError(f"unknown imputation strategy {strategy!r}")

    fill = {}
    for j in numeric:
        observed = [row[j] for row in t.rows if row[j] is not None]
        if len(observed) == len(t.rows):
            continue
        if not observed:
            raise UnimputableColumnError(t.columns[j].name)
        arr = np.asarray(observed, dtype=float)
        fill[j] = float(np.mean(arr) if strategy == "mean" else np.median(arr))
    rows = tuple(
        tuple(fill[j] if (j in fill and v is None) else v for j, v in enumerate(row))
        for row in t.rows
    )
    return Table(t.columns, rows)


# --- scaling -----------------------------------------------------------------


@dataclass(frozen=True)
class ScalingParams:
    """Per-column minimum and maximum seen at fit time.

    ``constant_columns`` lists columns with ``min == max``; they scale to
    0.0 and cannot be inverted.
    """

    mins: dict[str, float]
    maxs: dict[str, float]
    constant_columns: tuple[str, ...] = ()

    def __post_init__(self):
        for k in self.mins:
            if self.mins[k] > self.maxs[k]:
                raise ValueError(f"min > max for column {k!r}")

    @property
    def warning(self) -> bool:
        return bool(self.constant_columns)

    def to_dict(self) -> dict:
        return {
            "mins": dict(self.mins),
            "maxs": dict(self.maxs),
            "constant_columns": list(self.constant_columns),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScalingParams:
        return cls(dict(d["mins"]), dict(d["maxs"]), tuple(d.get("constant_columns", ())))


def _scale_value(v: float, lo: float, hi: float) -> float:
    if hi == lo:
        return 0.0
    return (v - lo) / (hi - lo)


def min_max_scale(t: Table, cols: Sequence[str]) -> tuple[Table, ScalingParams]:
    """Map each named column onto [0, 1] with ``(x - min) / (max - min)``."""
    mins, maxs, constant = {}, {}, []
    for name in cols:
        values = t.column(name)
        if t.spec(name).kind != "numeric":
            raise SchemaError(f"column {name!r} is not numeric")
        if any(v is None for v in values):
            raise DataError(f"column {name!r} has missing values; impute before scaling")
        if not values:
            raise DataError(f"column {name!r} is empty")
        mins[name] = float(min(values))
        maxs[name] = float(max(values))
        if mins[name] == maxs[name]:
            constant.append(name)
    if constant:
        log.warning("constant columns scaled to 0.0: %s", ", ".join(constant))
    params = ScalingParams(mins, maxs, tuple(constant))
    return apply_scaling(t, params, cols), params


def apply_scaling(t: Table, p: ScalingParams, cols: Sequence[str] | None = None) -> Table:
    """Scale ``cols`` (default: every column in ``p``) with stored bounds.

    Values outside the fitted range map outside [0, 1].
    """
    cols = list(p.mins) if cols is None else list(cols)
    for name in cols:
        if name not in p.mins:
            raise ParameterMismatchError(f"scaling parameters do not cover column {name!r}")
    out = t
    for name in cols:
        lo, hi = p.mins[name], p.maxs[name]
        out = out.replace_column(
            name, [None if v is None else _scale_value(v, lo, hi) for v in out.column(name)]
        )
    return out


def invert_scaling(t: Table, p: ScalingParams, cols: Sequence[str] | None = None) -> Table:
    cols = list(p.mins) if cols is None else list(cols)
    out = t
    for name in cols:
        if name not in p.mins:
            raise ParameterMismatchError(f"scaling parameters do not cover column {name!r}")
        lo, hi = p.mins[name], p.maxs[name]
        out = out.replace_column(
            name, [None if v is None else lo + v * (hi - lo) for v in out.column(name)]
        )
    return out


# --- splitting ---------------------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood), 64-bit state.

    Used for row shuffling so that a seed fixes the partition independently
    of numpy's generator versions.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # rejection sampling removes modulo bias
        threshold = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next()
            if r < threshold:
                return r % bound

    def permutation(self, n: int) -> list[int]:
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def split_indices(n: int, s: SplitSpec) -> tuple[list[int], list[int]]:
    """Train and test row indices, each in ascending order."""
    if n < 2:
        raise DegenerateSplitError(f"need at least 2 rows to split, got {n}")
    n_test = math.floor(n * s.test_fraction + 0.5)
    if n_test == 0 or n_test == n:
        raise DegenerateSplitError(
            f"test_fraction {s.test_fraction} leaves an empty side for {n} rows"
        )
    perm = SplitMix64(s.seed).permutation(n)
    test = sorted(perm[:n_test])
    train = sorted(perm[n_test:])
    return train, test


def train_test_split(t: Table, s: SplitSpec) -> tuple[Table, Table]:
    train, test = split_indices(t.n_rows, s)
    return t.take(train), t.take(test)


# --- feature expansion -------------------------------------------------------


def expand_polynomial(X: np.ndarray, degree: int) -> np.ndarray:
    """Degree-2 expansion without a bias column.

    Output columns: originals, then squares, then ``x_i * x_j`` for
    ``i < j`` in lexicographic order.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if degree == 1:
        return X.copy()
    if degree != 2:
        raise UnsupportedDegreeError(f"polynomial degree {degree} not supported (use 1 or 2)")
    d = X.shape[1]
    pairs = list(combinations(range(d), 2))
    cross = np.column_stack([X[:, i] * X[:, j] for i, j in pairs]) if pairs else np.empty((len(X), 0))
    return np.hstack([X, X**2, cross])


def polynomial_names(names: Sequence[str], degree: int) -> list[str]:
    names = list(names)
    if degree == 1:
        return names
    if degree != 2:
        raise UnsupportedDegreeError(f"polynomial degree {degree} not supported (use 1 or 2)")
    return (
        names
        + [f"{n}^2" for n in names]
        + [f"{names[i]}*{names[j]}" for i, j in combinations(range(len(names)), 2)]
    )


# --- description -------------------------------------------------------------


@dataclass
class ColumnSummary:
    count: int
    mean: float
    std: float
    min: float
    max: float


@dataclass
class Description:
    columns: dict[str, ColumnSummary]
    correlation_names: list[str]
    correlation: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "columns": {k: vars(v) for k, v in self.columns.items()},
            "correlation_names": list(self.correlation_names),
            "correlation": self.correlation.tolist(),
        }


def describe(t: Table) -> Description:
    """Per-column moments (population std) and the Pearson correlation matrix.

    A zero-variance column gets correlation 0 with everything else and 1
    with itself.
    """
    names = t.numeric_columns()
    X = t.matrix(names)
    summaries = {}
    for j, name in enumerate(names):
        col = X[:, j]
        summaries[name] = ColumnSummary(
            count=int(col.size),
            mean=float(col.mean()) if col.size else math.nan,
            std=float(col.std()) if col.size else math.nan,
            min=float(col.min()) if col.size else math.nan,
            max=float(col.max()) if col.size else math.nan,
        )
    return Description(summaries, names, correlation_matrix(X))


def correlation_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if X.shape[0] == 0:
        return np.eye(d)
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc**2).sum(axis=0))
    safe = np.where(norms > 0, norms, 1.0)
    Z = Xc / safe
    R = Z.T @ Z
    R[:, norms == 0] = 0.0
    R[norms == 0, :] = 0.0
    R = np.clip((R + R.T) / 2, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R
