"""Dataset export/import: CSV, a compressed binary cache, JSON sidecars.

The CSV layout is ``x_1, ..., x_d, y`` with a header row; labels are -1 or
+1.  The binary cache is a compressed NPZ with ``features`` and ``labels``
arrays.  Either format may carry generation metadata (seed, model
parameters) in a ``<file>.meta.json`` sidecar written next to it.  Floats
are written with 17 significant digits, so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import os
import warnings

import numpy as np

from .confusion import Dataset
from .errors import EmptyDataError

__all__ = [
    "save_dataset_csv",
    "load_dataset_csv",
    "save_dataset_npz",
    "load_dataset_npz",
    "sidecar_path",
    "write_sidecar",
    "read_sidecar",
]


def sidecar_path(path: str) -> str:
    return f"{path}.meta.json"


def write_sidecar(path: str, meta: dict) -> str:
    side = sidecar_path(path)
    with open(side, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return side


def read_sidecar(path: str) -> dict | None:
    side = sidecar_path(path)
    if not os.path.exists(side):
        return None
    with open(side, encoding="utf-8") as fh:
        return json.load(fh)


def save_dataset_csv(data: Dataset, path: str, meta: dict | None = None) -> None:
    """Write features and labels as CSV; sample weights are not stored."""
    if data.n == 0:
        raise EmptyDataError("refusing to write an empty dataset")
    header = ",".join(f"x_{j + 1}" for j in range(data.dim)) + ",y"
    stacked = np.column_stack([data.features, data.labels.astype(float)])
    fmt = ["%.17g"] * data.dim + ["%d"]
    np.savetxt(path, stacked, fmt=fmt, delimiter=",", header=header, comments="")
    if meta is not None:
        write_sidecar(path, meta)


def load_dataset_csv(path: str) -> tuple[Dataset, dict | None]:
    """Read a dataset CSV; returns the data and its sidecar metadata."""
    with warnings.catch_warnings():
        # an empty body is reported as EmptyDataError below, not as a warning
        warnings.simplefilter("ignore", UserWarning)
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.size == 0:
        raise EmptyDataError(f"{path} contains no data rows")
    if raw.shape[1] < 2:
        raise ValueError(f"{path} needs at least one feature column and a label column")
    features = raw[:, :-1]
    labels = raw[:, -1].astype(int)
    return Dataset(features, labels), read_sidecar(path)


def save_dataset_npz(data: Dataset, path: str, meta: dict | None = None) -> None:
    """Write the compressed binary cache of a dataset."""
    if data.n == 0:
        raise EmptyDataError("refusing to write an empty dataset")
    np.savez_compressed(path, features=data.features, labels=data.labels)
    if meta is not None:
        target = path if path.endswith(".npz") else f"{path}.npz"
        write_sidecar(target, meta)


def load_dataset_npz(path: str) -> tuple[Dataset, dict | None]:
    with np.load(path) as payload:
        data = Dataset(payload["features"], payload["labels"])
    return data, read_sidecar(path)
