#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"""CSV and JSON files.

Randomized outputs start with '#'-prefixed provenance lines
(package version, seed, stream layout); nothing time-dependent is
written, so that reruns produce byte-identical files.
"""

import csv
import json
from os import path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__

# path batch b of a run with seed s draws from this stream
STREAM_LAYOUT = "philox(SeedSequence(seed, spawn_key=(batch,)))"


def provenance(seed: Optional[int], **extra: Any) -> Dict[str, Any]:
    d: Dict[str, Any] = {"build": f"besqlib {__version__}"}
    if seed is not None:
        d["seed"] = seed
        d["streams"] = STREAM_LAYOUT
    d.update(extra)
    return d


def jsonable(obj: Any) -> Any:
    "Plain Python version of obj (numpy scalars and arrays included)."

    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if callable(obj):
        return getattr(obj, "__name__", "callable")
    return obj


def write_json(filename: str, obj: Any) -> None:
    with open(filename, "w") as f:
        json.dump(jsonable(obj), f, indent=2, sort_keys=True)
        f.write("\n")


def _write_rows(
    filename: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    header: Optional[Dict[str, Any]] = None,
) -> None:
    with open(filename, "w", newline="") as f:
        for key, value in (header or {}).items():
            f.write(f"# {key}: {value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def read_rows(filename: str) -> Tuple[List[str], List[List[str]]]:
    "Column names and rows of a CSV file, provenance lines skipped."

    with open(filename, "r", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def estimate_json(
    filename: str, estimate: Any, model: Any = None, payoff: Any = None
) -> None:
    "Estimate as JSON {value, std_error, ci, n, seed, method, model, payoff}."

    d = estimate.to_dict()
    d["model"] = model
    d["payoff"] = payoff
    d["provenance"] = provenance(estimate.seed)
    write_json(filename, d)


LEDGER_COLUMNS = (
    "label", "value", "std_error", "ci_low", "ci_high", "n", "seed", "method"
)


def append_ledger_row(filename: str, label: str, estimate: Any) -> None:
    "Append the estimate to a CSV results ledger, with header if new."

    new = not path.exists(filename)
    with open(filename, "a", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if new:
            writer.writerow(LEDGER_COLUMNS)
        e = estimate
        ci = (e.ci_low, e.ci_high)
        row = (label, e.value, e.std_error, *ci, e.n_samples, e.seed, e.method)
        writer.writerow(row)


def paths_csv(
    filename: str,
    times: Sequence[float],
    paths: np.ndarray,
    header: Optional[Dict[str, Any]] = None,
) -> None:
    "Scalar paths (n_paths, n_times) in long format: path_id, time, value."

    paths = np.atleast_2d(paths)
    rows = (
        (k, float(t), float(paths[k, i]))
        for k in range(paths.shape[0])
        for i, t in enumerate(times)
    )
    _write_rows(filename, ("path_id", "time", "value"), rows, header)


def matrix_paths_csv(
    filename: str,
    rows: Iterable[Tuple[int, float, int, int, float]],
    header: Optional[Dict[str, Any]] = None,
) -> None:
    "Matrix paths in long format: path_id, time, i, j, value."

    _write_rows(filename, ("path_id", "time", "i", "j", "value"), rows, header)


def grid_to_csv(
    filename: str,
    y: np.ndarray,
    v: np.ndarray,
    values: np.ndarray,
    weights_y: np.ndarray,
    weights_v: np.ndarray,
) -> None:
    "Density grid as rows y, v, density, weight (weight of the cell)."

    rows = (
        (float(yi), float(vj), float(values[i, j]), float(weights_y[i] * weights_v[j]))
        for i, yi in enumerate(y)
        for j, vj in enumerate(v)
    )
    _write_rows(filename, ("y", "v", "density", "weight"), rows)


def _matrix_filename(filename: str) -> str:
    return path.splitext(filename)[0] + ".npy"


def grid_to_json(
    filename: str,
    header: Dict[str, Any],
    y: np.ndarray,
    v: np.ndarray,
    values: np.ndarray,
) -> None:
    "JSON header with the grids, the density matrix in a sibling .npy file."

    matrix = _matrix_filename(filename)
    np.save(matrix, np.asarray(values, dtype=float))
    d = dict(header)
    d.update(y_grid=y, v_grid=v, values=path.basename(matrix))
    write_json(filename, d)


def grid_from_json(
    filename: str,
) -> Tuple[Dict[str, Any], np.ndarray, np.ndarray, np.ndarray]:
    with open(filename, "r") as f:
        d = json.load(f)
    values = np.load(path.join(path.dirname(filename), d.pop("values")))
    y = np.array(d.pop("y_grid"), dtype=float)
    v = np.array(d.pop("v_grid"), dtype=float)
    return d, y, v, values


def level_stats_csv(
    filename: str,
    stats: Iterable[Any],
    header: Optional[Dict[str, Any]] = None,
) -> None:
    "MLMC level statistics: level, mean, variance, cost, n."

    rows = (s.to_row() for s in stats)
    _write_rows(filename, ("level", "mean", "variance", "cost", "n"), rows, header)
