"""Dataset CSV loading and report serialization."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from xplain.core import Dataset, InvalidInputError

LABEL_COLUMN = "__label__"
GROUP_COLUMN = "__group__"
REPORT_SCHEMA_VERSION = 1


def load_dataset_csv(path, protected=()) -> Dataset:
    """Read a numeric CSV with a header row and optional label and group columns.

    ``protected`` lists feature columns (by name or index) marked as protected.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            body = [row for row in reader if row]
    except (OSError, StopIteration) as exc:
        raise InvalidInputError(f"cannot read dataset {path}: {exc}") from None
    header = [h.strip() for h in header]
    if any(len(r) != len(header) for r in body):
        raise InvalidInputError(f"{path}: rows differ in length from the header")
    features = [i for i, h in enumerate(header) if h not in (LABEL_COLUMN, GROUP_COLUMN)]
    try:
        rows = np.array([[float(r[i]) for i in features] for r in body], dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric feature value ({exc})") from None
    if rows.size == 0:
        rows = rows.reshape(0, len(features))
    labels = groups = None
    if LABEL_COLUMN in header:
        j = header.index(LABEL_COLUMN)
        raw = np.array([float(r[j]) for r in body])
        labels = raw.astype(int) if np.all(raw == np.round(raw)) else raw
    if GROUP_COLUMN in header:
        j = header.index(GROUP_COLUMN)
        groups = np.array([r[j].strip() for r in body])
    names = [header[i] for i in features]
    prot = set()
    for p in protected:
        if isinstance(p, str):
            if p not in names:
                raise InvalidInputError(f"protected column {p!r} is not a feature column")
            prot.add(names.index(p))
        else:
            prot.add(int(p))
    return Dataset(rows, labels, groups, names, frozenset(prot))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def load_report(path) -> dict:
    """Read and minimally validate a report written by ``evaluate``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read report {path}: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("meta"), dict) \
            or not isinstance(data.get("results"), list):
        raise InvalidInputError("report must contain a 'meta' object and a 'results' list")
    for r in data["results"]:
        if not isinstance(r, dict) or "name" not in r or "status" not in r:
            raise InvalidInputError("every report result needs 'name' and 'status'")
    return data


def save_dataset_csv(path, dataset: Dataset) -> None:
    """Write ``dataset`` in the format read by :func:`load_dataset_csv`."""
    names = dataset.names or [f"x{i}" for i in range(dataset.dim)]
    header = list(names)
    if dataset.labels is not None:
        header.append(LABEL_COLUMN)
    if dataset.groups is not None:
        header.append(GROUP_COLUMN)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(dataset.rows):
            out = [repr(float(v)) for v in row]
            if dataset.labels is not None:
                out.append(str(dataset.labels[i]))
            if dataset.groups is not None:
                out.append(str(dataset.groups[i]))
            w.writerow(out)
