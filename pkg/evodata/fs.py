"""Functions to manage the files written by a run.

root
└───<input stem>
    ├───<strategy>-restpoint.json
    ├───<strategy>-trajectory.csv
    ├───<strategy>-organisms.csv
    ├───<strategy>-persistence.json
    ├───<strategy>-ranking-genes.csv
    ├───<strategy>-ranking-organisms.csv
    ├───<strategy>-distribution.csv
    ├───<strategy>-payoff-<matrix>.csv
    ├───<strategy>-report.json
    └───fit.json

"""


import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from evodata.tables import STRATEGIES

PAYOFF_MATRICES = ("A", "Dg", "Dw", "D")
SIGNIFICANT_DIGITS = 6


def _base(root: Path, input_path: Path) -> Path:
    if isinstance(root, str):
        root = Path(root)
    return root / Path(input_path).stem


def _check_strategy(strategy: str):
    if strategy not in STRATEGIES:
        raise ValueError(f"Invalid argument strategy={strategy}")


def path_restpoint(root: Path, input_path: Path, strategy: str) -> Path:
    _check_strategy(strategy)
    return _base(root, input_path) / f"{strategy}-restpoint.json"


def path_trajectory(
    root: Path,
    input_path: Path,
    strategy: str,
    organisms: bool = False,
) -> Path:
    _check_strategy(strategy)
    name = "organisms" if organisms else "trajectory"
    return _base(root, input_path) / f"{strategy}-{name}.csv"


def path_persistence(root: Path, input_path: Path, strategy: str) -> Path:
    _check_strategy(strategy)
    return _base(root, input_path) / f"{strategy}-persistence.json"


def path_ranking(
    root: Path,
    input_path: Path,
    strategy: str,
    axis: str,
) -> Path:
    _check_strategy(strategy)
    if axis not in ("genes", "organisms"):
        raise ValueError(f"Invalid argument axis={axis}")
    return _base(root, input_path) / f"{strategy}-ranking-{axis}.csv"


def path_distribution(root: Path, input_path: Path, strategy: str) -> Path:
    _check_strategy(strategy)
    return _base(root, input_path) / f"{strategy}-distribution.csv"


def path_report(root: Path, input_path: Path, strategy: str) -> Path:
    _check_strategy(strategy)
    return _base(root, input_path) / f"{strategy}-report.json"


def path_payoff(
    root: Path,
    input_path: Path,
    strategy: str,
    matrix: str,
) -> Path:
    _check_strategy(strategy)
    if matrix not in PAYOFF_MATRICES:
        raise ValueError(f"Invalid argument matrix={matrix}")
    return _base(root, input_path) / f"{strategy}-payoff-{matrix}.csv"


def path_fit(root: Path, input_path: Path) -> Path:
    return _base(root, input_path) / "fit.json"


# =============================================================================
# ----------------------------------WRITERS------------------------------------
# =============================================================================
def format_number(value: float) -> str:
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def write_text(path: Path, text: str) -> Path:
    """Write `text` to `path` through a temporary file in the same folder.

    The destination either keeps its old content or gets the new one in
    full.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
) -> Path:
    """Floats are written with six significant digits"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            format_number(cell)
            if isinstance(cell, (float, np.floating)) else cell
            for cell in row
        ])
    return write_text(path, buffer.getvalue())


def write_json(path: Path, record: dict) -> Path:
    text = json.dumps(record, indent=2, sort_keys=True, default=_to_builtin)
    return write_text(path, text + "\n")


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON "
                    "serializable")


def matrix_rows(matrix: np.ndarray, labels: Sequence[str]):
    """Labeled rows of a square matrix, ready for `write_csv`"""
    for label, row in zip(labels, np.asarray(matrix, dtype=float)):
        yield [label, *(float(x) for x in row)]
