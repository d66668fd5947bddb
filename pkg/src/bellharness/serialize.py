"""Deterministic on-disk formats: trial-log CSV and canonical JSON.

Byte-identical output for identical input is a contract here, so JSON is
always sorted-keys with a fixed indent and a trailing newline, and the
CSV writer emits "\\n" regardless of platform.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path
from typing import Union

import numpy as np

from .protocol import TrialLog

SCHEMA_VERSION = "1"

TRIAL_LOG_HEADER = "n,i,j,x,y"

PathLike = Union[str, Path]


def canonical_json_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: PathLike, payload) -> None:
    Path(path).write_text(canonical_json_dumps(payload), encoding="utf-8")


def read_json(path: PathLike):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def cells_to_json(cells: dict) -> dict:
    """{(1,2): v} -> {"12": v}; cell keys sort naturally in canonical JSON."""
    return {f"{i}{j}": value for (i, j), value in sorted(cells.items())}


def cells_from_json(obj: dict) -> dict:
    cells = {}
    for key, value in obj.items():
        if len(key) != 2 or key[0] not in "12" or key[1] not in "12":
            raise ValueError(f"bad cell key {key!r}")
        cells[(int(key[0]), int(key[1]))] = value
    if len(cells) != 4:
        raise ValueError("expected exactly the four setting-pair cells")
    return cells


def write_trial_log_csv(path: PathLike, log: TrialLog) -> None:
    # n is the 0-based trial index
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRIAL_LOG_HEADER + "\n")
        for k in range(len(log)):
            fh.write(f"{k},{log.i[k]},{log.j[k]},{log.x[k]},{log.y[k]}\n")


def read_trial_log_csv(path: PathLike) -> TrialLog:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != TRIAL_LOG_HEADER:
            raise ValueError(f"expected header {TRIAL_LOG_HEADER!r}, got {header!r}")
        with warnings.catch_warnings():
            # empty input is reported as a ValueError below, not a warning
            warnings.simplefilter("ignore", UserWarning)
            data = np.loadtxt(fh, delimiter=",", dtype=np.int64, ndmin=2)
    if data.size == 0:
        raise ValueError("trial log has no rows")
    if data.shape[1] != 5:
        raise ValueError(f"expected 5 columns, got {data.shape[1]}")
    if not np.array_equal(data[:, 0], np.arange(data.shape[0])):
        raise ValueError("trial index column must run 0..N-1")
    # validate before the int8 cast inside TrialLog can wrap anything
    if not np.all((data[:, 1:3] == 1) | (data[:, 1:3] == 2)):
        raise ValueError("setting columns must be 1 or 2")
    if not np.all((data[:, 3:5] == 1) | (data[:, 3:5] == -1)):
        raise ValueError("outcome columns must be +-1")
    return TrialLog(i=data[:, 1], j=data[:, 2], x=data[:, 3], y=data[:, 4])
