"""Tabular input, normalization to the fitness matrix and its statistics

A raw table X (organisms in rows, genes in columns) is read together with a
column schema, mapped column-wise onto the fitness matrix Phi with entries in
[0, 1], cleaned of constant and duplicate columns, and summarized by the
gamma-independent statistics every strategy needs.

"""


import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from evodata.exceptions import (DegenerateColumnError, DomainError,
                                SchemaError, TableParseError,
                                UnusableDataError)

logger = logging.getLogger(__name__)

DEFAULT_NORM = "l2"
DEFAULT_PAIRING = "distinct"
NORMS = ("l1", "l2")
PAIRINGS = ("distinct", "full")
LABEL = "label"


def _direct(column: np.ndarray) -> np.ndarray:
    return column / column.max()


def _inverse(column: np.ndarray) -> np.ndarray:
    return 1.0 - column / column.max()


FITNESS_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "direct": _direct,
    "inverse": _inverse,
}


def register_fitness_function(
    name: str,
    func: Callable[[np.ndarray], np.ndarray],
):
    """Register a gene fitness function under `name`

    Parameters
    ----------
    name : str
        Direction keyword used in schema files
    func : callable
        Maps a raw nonnegative column (1-d array) to values in [0, 1]
    """
    if name == LABEL:
        raise SchemaError(f"{LABEL!r} is reserved for the row label column")
    FITNESS_FUNCTIONS[name] = func


# =============================================================================
# -----------------------------------TYPES-------------------------------------
# =============================================================================
@dataclass(frozen=True)
class ColumnSchema:
    name: str
    direction: str = "direct"
    label: bool = False

    def __post_init__(self):
        if not self.label and self.direction not in FITNESS_FUNCTIONS:
            raise SchemaError(
                f"Column {self.name!r}: unknown direction "
                f"{self.direction!r} (known: {', '.join(FITNESS_FUNCTIONS)})"
            )


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class RawTable:
    values: np.ndarray
    columns: tuple[str, ...]
    rows: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        n, m = self.values.shape
        if len(self.columns) != m or len(self.rows) != n:
            raise TableParseError("labels do not match the table shape")
        if not np.all(np.isfinite(self.values)):
            raise TableParseError("table holds non-finite values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Provenance:
    """What sanitize removed: dropped constant columns and merged pairs"""

    dropped: tuple[str, ...] = ()
    merged: tuple[tuple[str, str], ...] = ()

    @property
    def empty(self) -> bool:
        return not self.dropped and not self.merged


@dataclass(frozen=True)
class FitnessMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    rows: tuple[str, ...]
    report: Provenance = field(default_factory=Provenance)
    sanitized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.ndim != 2:
            raise UnusableDataError("fitness matrix must be 2-dimensional")
        n, m = self.values.shape
        if len(self.columns) != m or len(self.rows) != n:
            raise UnusableDataError("labels do not match the matrix shape")
        if not np.all((self.values >= 0.0) & (self.values <= 1.0)):
            raise DomainError("fitness matrix entries must lie in [0, 1]")

    @classmethod
    def from_array(
        cls,
        values,
        columns: Sequence[str] | None = None,
        rows: Sequence[str] | None = None,
    ) -> "FitnessMatrix":
        values = np.asarray(values, dtype=float)
        n, m = values.shape
        if columns is None:
            columns = [f"g{j + 1}" for j in range(m)]
        if rows is None:
            rows = [f"o{i + 1}" for i in range(n)]
        return cls(values, tuple(columns), tuple(rows))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Moments:
    column_means: np.ndarray
    second_moments: np.ndarray
    gene_dispersion: float
    harmonic_organism_fitness: np.ndarray
    organism_dispersion: float
    pairing: str = DEFAULT_PAIRING

    @property
    def m(self) -> int:
        return self.column_means.shape[0]

    @property
    def n(self) -> int:
        return self.harmonic_organism_fitness.shape[0]


@dataclass(frozen=True)
class KinshipMatrices:
    gene: np.ndarray
    organism: np.ndarray
    norm: str = DEFAULT_NORM


# =============================================================================
# ----------------------------------LOADING------------------------------------
# =============================================================================
def parse_schema(lines: Iterable[str]) -> list[ColumnSchema]:
    """Parse `name = direction` lines; `direction` may be `label`"""
    schema = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, direction = line.rpartition("=")
        name, direction = name.strip(), direction.strip().lower()
        if not sep or not name:
            raise SchemaError(f"Schema line {lineno}: expected 'name = kind'")
        if name in seen:
            raise SchemaError(f"Schema line {lineno}: duplicate {name!r}")
        seen.add(name)
        if direction == LABEL:
            schema.append(ColumnSchema(name=name, label=True))
        else:
            schema.append(ColumnSchema(name=name, direction=direction))
    if sum(column.label for column in schema) > 1:
        raise SchemaError("Schema declares more than one label column")
    return schema


def load_schema(path: Path) -> list[ColumnSchema]:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"Schema file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return parse_schema(f)


def load_table(
    source: TextIO | str | Path,
    schema: Sequence[ColumnSchema],
) -> RawTable:
    """Read a CSV table with a header row

    Parameters
    ----------
    source : file object, str or Path
        Open text stream, CSV text, or a path to a CSV file
    schema : list of ColumnSchema
        Exactly one entry per header column

    Returns
    -------
    RawTable
        Rows in file order; row labels from the label column, or "1".."n"
    """
    if isinstance(source, Path):
        with open(source, newline="", encoding="utf-8") as f:
            return load_table(f, schema)
    if isinstance(source, str):
        source = io.StringIO(source)

    records = [
        (lineno, row) for lineno, row in enumerate(csv.reader(source), 1)
        if any(cell.strip() for cell in row)
    ]
    if not records:
        raise TableParseError("empty table")
    _, header = records[0]
    header = [name.strip() for name in header]
    body = records[1:]

    by_name = {column.name: column for column in schema}
    if len(by_name) != len(schema):
        raise SchemaError("Schema lists a column more than once")
    unknown = [name for name in header if name not in by_name]
    if unknown:
        raise SchemaError(f"Columns missing from schema: {', '.join(unknown)}")
    missing = [name for name in by_name if name not in header]
    if missing:
        raise SchemaError(
            f"Schema columns not in header: {', '.join(missing)}")
    if len(set(header)) != len(header):
        raise SchemaError("Header repeats a column name")

    label_index = next(
        (k for k, name in enumerate(header) if by_name[name].label), None)
    numeric = [k for k in range(len(header)) if k != label_index]
    if not numeric:
        raise TableParseError("table has no numeric columns")

    values = []
    labels = []
    for lineno, row in body:
        if len(row) != len(header):
            raise TableParseError(
                f"expected {len(header)} fields, got {len(row)}", row=lineno)
        record = []
        for k in numeric:
            try:
                value = float(row[k])
            except ValueError:
                raise TableParseError(
                    f"non-numeric value {row[k]!r}",
                    row=lineno, column=header[k],
                ) from None
            if not np.isfinite(value):
                raise TableParseError(
                    f"non-finite value {row[k]!r}",
                    row=lineno, column=header[k],
                )
            record.append(value)
        values.append(record)
        labels.append(
            row[label_index].strip() if label_index is not None
            else str(len(labels) + 1)
        )
    if len(values) < 2:
        raise TableParseError(f"need at least 2 rows, got {len(values)}")

    return RawTable(
        values=np.array(values, dtype=float),
        columns=tuple(header[k] for k in numeric),
        rows=tuple(labels),
    )


# =============================================================================
# -------------------------------NORMALIZATION---------------------------------
# =============================================================================
def normalize(raw: RawTable, schema: Sequence[ColumnSchema]) -> FitnessMatrix:
    by_name = {column.name: column for column in schema}
    columns = []
    for j, name in enumerate(raw.columns):
        entry = by_name.get(name)
        if entry is None or entry.label:
            raise SchemaError(f"Column {name!r} has no fitness direction")
        column = raw.values[:, j]
        if np.any(column < 0):
            i = int(np.argmax(column < 0))
            raise DomainError(
                f"Column {name!r}, row {raw.rows[i]!r}: negative value "
                f"{column[i]:g}"
            )
        if column.max() <= 0:
            raise DegenerateColumnError(
                f"Column {name!r} is all zero and cannot be normalized")
        func = FITNESS_FUNCTIONS.get(entry.direction)
        if func is None:
            raise SchemaError(
                f"Column {name!r}: unknown direction {entry.direction!r}")
        columns.append(func(column))
    return FitnessMatrix(np.column_stack(columns), raw.columns, raw.rows)


def sanitize(phi: FitnessMatrix) -> FitnessMatrix:
    """Drop constant columns and merge exact duplicates

    The first column of a duplicate group keeps its label; the merge is
    recorded in the provenance report.
    """
    keep = []
    dropped = list(phi.report.dropped)
    merged = list(phi.report.merged)
    for j, name in enumerate(phi.columns):
        column = phi.values[:, j]
        if np.all(column == column[0]):
            logger.info("Dropping constant column %r", name)
            dropped.append(name)
            continue
        twin = next(
            (k for k in keep if np.array_equal(phi.values[:, k], column)),
            None,
        )
        if twin is not None:
            logger.info("Merging column %r into %r", name, phi.columns[twin])
            merged.append((phi.columns[twin], name))
            continue
        keep.append(j)

    if len(keep) < 2:
        raise UnusableDataError(
            f"Only {len(keep)} informative column(s) left after sanitizing; "
            f"dropped: {', '.join(dropped) or '-'}"
        )
    if phi.n < 2:
        raise UnusableDataError(f"Need at least 2 rows, got {phi.n}")
    return FitnessMatrix(
        values=phi.values[:, keep],
        columns=tuple(phi.columns[j] for j in keep),
        rows=phi.rows,
        report=Provenance(tuple(dropped), tuple(merged)),
        sanitized=True,
    )


# =============================================================================
# ---------------------------------STATISTICS----------------------------------
# =============================================================================
def mean_abs_difference(
    x: np.ndarray,
    pairing: str = DEFAULT_PAIRING,
) -> float:
    """Average |x_a - x_b| over all ordered pairs

    With pairing="full" the sum runs over all k**2 pairs and is divided by
    k**2; with "distinct" it is divided by the k*(k-1) pairs with a != b.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"Invalid argument pairing={pairing}")
    k = x.shape[0]
    total = np.abs(x[:, None] - x[None, :]).sum()
    pairs = k * k if pairing == "full" else k * (k - 1)
    return float(total / pairs) if pairs else 0.0


def compute_moments(
    phi: FitnessMatrix,
    pairing: str = DEFAULT_PAIRING,
) -> Moments:
    values = phi.values
    n = phi.n
    means = values.mean(axis=0)
    second = values.T @ values / n
    second = (second + second.T) / 2
    harmonic = values.mean(axis=1)
    return Moments(
        column_means=_readonly(means),
        second_moments=_readonly(second),
        gene_dispersion=mean_abs_difference(means, pairing),
        harmonic_organism_fitness=_readonly(harmonic),
        organism_dispersion=mean_abs_difference(harmonic, pairing),
        pairing=pairing,
    )


def _pairwise_distance(vectors: np.ndarray, norm: str) -> np.ndarray:
    diff = vectors[:, None, :] - vectors[None, :, :]
    if norm == "l1":
        return np.abs(diff).sum(axis=-1)
    if norm == "l2":
        return np.sqrt((diff * diff).sum(axis=-1))
    raise ValueError(f"Invalid argument norm={norm}")


def compute_kinship(
    phi: FitnessMatrix,
    norm: str = DEFAULT_NORM,
) -> KinshipMatrices:
    """Gene and organism kinship, 1 - distance / length

    Gene kinship compares columns (length n), organism kinship compares rows
    (length m).
    """
    values = phi.values
    gene = 1.0 - _pairwise_distance(values.T, norm) / phi.n
    organism = 1.0 - _pairwise_distance(values, norm) / phi.m
    return KinshipMatrices(
        gene=_readonly(gene),
        organism=_readonly(organism),
        norm=norm,
    )
