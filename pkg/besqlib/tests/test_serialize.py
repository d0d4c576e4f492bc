#!/usr/bin/env python3

# Copyright (C) 2020 The besqlib developers
#
# This file is part of besqlib. It is subject to the license terms in the
# LICENSE file found in the top-level directory of this distribution.
#
# No part of besqlib including this file, may be copied, modified, propagated,
# or distributed except according to the terms contained in the LICENSE file.

"Tests for `besqlib.serialize` module."

import json
from os import path

import numpy as np

from besqlib import __version__
from besqlib.mlmc import LevelStats
from besqlib.pricing import Estimate
from besqlib.serialize import (
    LEDGER_COLUMNS,
    append_ledger_row,
    estimate_json,
    grid_from_json,
    grid_to_json,
    jsonable,
    level_stats_csv,
    matrix_paths_csv,
    paths_csv,
    provenance,
    read_rows,
)

ESTIMATE = Estimate(0.5, 0.01, 0.48, 0.52, 1000, 7, "exact_mc")


def test_provenance() -> None:
    d = provenance(7, model="stylized")
    assert d["build"] == f"besqlib {__version__}"
    assert d["seed"] == 7
    assert "streams" in d
    assert d["model"] == "stylized"
    assert "seed" not in provenance(None)


def test_jsonable() -> None:
    obj = {1: np.float64(0.5), "a": np.arange(3), "t": (np.int64(2), [np.eye(1)])}
    assert jsonable(obj) == {"1": 0.5, "a": [0, 1, 2], "t": [2, [[[1.0]]]]}
    assert jsonable(np.exp) == "exp"
    json.dumps(jsonable(obj))


def test_estimate_json(tmp_path) -> None:
    filename = str(tmp_path / "estimate.json")
    estimate_json(filename, ESTIMATE, model={"eta": 0.05}, payoff={"kind": "zcb"})
    with open(filename) as f:
        d = json.load(f)
    assert d["value"] == 0.5
    assert d["ci"] == [0.48, 0.52]
    assert d["n"] == 1000
    assert d["seed"] == 7
    assert d["method"] == "exact_mc"
    assert d["model"] == {"eta": 0.05}
    assert d["provenance"]["seed"] == 7


def test_ledger(tmp_path) -> None:
    filename = str(tmp_path / "ledger.csv")
    append_ledger_row(filename, "first", ESTIMATE)
    append_ledger_row(filename, "second", ESTIMATE)
    columns, rows = read_rows(filename)
    assert tuple(columns) == LEDGER_COLUMNS
    assert [row[0] for row in rows] == ["first", "second"]
    assert float(rows[1][1]) == 0.5
    assert rows[1][-1] == "exact_mc"


def test_paths_csv(tmp_path) -> None:
    filename = str(tmp_path / "paths.csv")
    paths = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    paths_csv(filename, [0.0, 0.5, 1.0], paths, provenance(3))
    with open(filename) as f:
        assert f.readline().startswith("# build: besqlib")
    columns, rows = read_rows(filename)
    assert columns == ["path_id", "time", "value"]
    assert len(rows) == 6
    assert rows[4] == ["1", "0.5", "5.0"]

    filename = str(tmp_path / "matrix.csv")
    matrix_paths_csv(filename, [(0, 0.0, 1, 1, 2.0)])
    columns, rows = read_rows(filename)
    assert columns == ["path_id", "time", "i", "j", "value"]
    assert rows == [["0", "0.0", "1", "1", "2.0"]]


def test_grid_json(tmp_path) -> None:
    filename = str(tmp_path / "grid.json")
    y = np.linspace(1.0, 2.0, 3)
    v = np.linspace(0.1, 0.2, 4)
    values = np.arange(12.0).reshape(3, 4)
    grid_to_json(filename, {"T": 1.0}, y, v, values)
    assert path.exists(str(tmp_path / "grid.npy"))
    header, y2, v2, values2 = grid_from_json(filename)
    assert header == {"T": 1.0}
    assert np.array_equal(y2, y)
    assert np.array_equal(v2, v)
    assert np.array_equal(values2, values)


def test_level_stats_csv(tmp_path) -> None:
    filename = str(tmp_path / "levels.csv")
    stats = [LevelStats(0, 0.1, 1e-3, 4, 1000), LevelStats(1, 1e-4, 1e-7, 8, 250)]
    level_stats_csv(filename, stats)
    columns, rows = read_rows(filename)
    assert columns == ["level", "mean", "variance", "cost", "n"]
    assert rows[1] == ["1", "0.0001", "1e-07", "8", "250"]
