#  Copyright 2024 pfltools maintainers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

import json
from pathlib import Path

import pandas as pd
import pytest

from pfltools import Columns, __version__
from pfltools.model_selection import ExperimentReport, ExperimentSpec, emit_report, load_report, resummarize
from pfltools.model_selection.experiment import HYPER_COLUMNS


@pytest.fixture(name="report")
def report_fixture() -> ExperimentReport:
    spec = ExperimentSpec(study="three_client", replications=3, seed=42, methods=("PFL", "Local"))
    raw = pd.DataFrame(
        {
            Columns.Method: ["PFL", "PFL", "Local", "Local"] * 2 + ["PFL", "Local"],
            Columns.Client: ["client_1", "client_2"] * 5,
            Columns.Replication: [0, 0, 0, 0, 2, 2, 2, 2, 3, 3],
            Columns.Mape: [1 / 3, 2 / 7, 10.1, 0.1 + 0.2, 5.55, 1e-3, 7.0, 3.14159, 2 / 3, 12.25],
        }
    )
    hyperparams = pd.DataFrame(
        [[0, 1.0, 0.01, 5.0], [2, 0.1, 0.05, 1.0]],
        columns=HYPER_COLUMNS,
    )
    errors = ({Columns.Replication: 1, "error": "ConvergenceError", "message": "no luck"},)
    return ExperimentReport(spec, raw, hyperparams, errors, (11, 12, 13), wall_clock=1.5)


class TestEmitReport:
    def test_files(self, report: ExperimentReport, tmp_path: Path) -> None:
        raw_path, summary_path = emit_report(report, tmp_path / "out")
        assert raw_path == tmp_path / "out" / "raw.csv"
        assert summary_path == tmp_path / "out" / "summary.json"
        assert list(pd.read_csv(raw_path).columns) == Columns.RawReport
        assert len(pd.read_csv(raw_path)) == 10

    def test_summary_content(self, report: ExperimentReport, tmp_path: Path) -> None:
        _, summary_path = emit_report(report, tmp_path)
        with summary_path.open() as f:
            summary = json.load(f)
        assert summary["tool_version"] == __version__
        assert summary["seed"] == 42
        assert summary["study"] == "three_client"
        assert summary["methods"] == ["PFL", "Local"]
        assert summary["replication_seeds"] == [11, 12, 13]
        assert summary["partial"] is True
        assert summary["errors"][0]["error"] == "ConvergenceError"
        assert summary["hyperparams"][1] == {"replication": 2, "lambda": 0.1, "alpha": 0.05, "theta": 1.0}
        assert summary["spec"]["replications"] == 3

    def test_resummarize_reproduces_summary(self, report: ExperimentReport, tmp_path: Path) -> None:
        emit_report(report, tmp_path)
        raw, summary = load_report(tmp_path)
        pd.testing.assert_frame_equal(raw, report.raw)
        assert resummarize(raw) == summary["summary"]
        assert summary["summary"] == report.summary()

    def test_load_missing(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_report(tmp_path)
