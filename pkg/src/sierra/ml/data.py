"""Dataset container and the CSV upload format: header row, numeric feature
columns, last column the target (integer class for classification)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..core import SierraError


class CsvFormatError(SierraError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int for classification, float for regression
    feature_names: tuple[str, ...]
    target_name: str
    task: str

    @property
    def n_classes(self) -> int:
        if self.task != "classification":
            raise ValueError("regression dataset has no classes")
        return int(self.labels.max()) + 1


def load_csv(text: str, task: str = "classification") -> Dataset:
    """Parse CSV text into a Dataset; any non-numeric feature cell rejects
    the whole file with its row and column named."""
    if task not in ("classification", "regression"):
        raise ValueError(f"unknown task: {task!r}")
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if len(rows) < 2:
        raise CsvFormatError("need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise CsvFormatError("need at least one feature column and a target column")

    features, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
        vals = []
        for col, cell in zip(header[:-1], row[:-1]):
            try:
                vals.append(float(cell))
            except ValueError:
                raise CsvFormatError(f"row {lineno}, column {col!r}: non-numeric cell {cell!r}") from None
        target_cell = row[-1].strip()
        if task == "classification":
            try:
                label = int(target_cell)
            except ValueError:
                raise CsvFormatError(
                    f"row {lineno}, column {header[-1]!r}: expected integer label, got {target_cell!r}"
                ) from None
            if label < 0:
                raise CsvFormatError(f"row {lineno}: class labels must be >= 0")
            labels.append(label)
        else:
            try:
                labels.append(float(target_cell))
            except ValueError:
                raise CsvFormatError(
                    f"row {lineno}, column {header[-1]!r}: non-numeric target {target_cell!r}"
                ) from None
        features.append(vals)

    x = np.asarray(features, dtype=float)
    if task == "classification":
        y = np.asarray(labels, dtype=int)
        if len(np.unique(y)) < 2:
            raise CsvFormatError("classification data needs at least two classes")
    else:
        y = np.asarray(labels, dtype=float)
    return Dataset(
        features=x,
        labels=y,
        feature_names=tuple(header[:-1]),
        target_name=header[-1],
        task=task,
    )
