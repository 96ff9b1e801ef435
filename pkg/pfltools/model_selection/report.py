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

"""Experiment report files."""

import json
import logging
import typing as tp
from pathlib import Path

import attr
import numpy as np
import pandas as pd

from pfltools.columns import Columns
from pfltools.version import VERSION

from .experiment import ExperimentReport

logger = logging.getLogger(__name__)

RAW_FILE = "raw.csv"
SUMMARY_FILE = "summary.json"


def _to_native(value: tp.Any) -> tp.Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def report_summary(report: ExperimentReport) -> tp.Dict[str, tp.Any]:
    """Content of the summary file."""
    return {
        "tool_version": VERSION,
        "study": report.spec.study,
        "seed": report.spec.seed,
        "replications": report.spec.replications,
        "methods": list(report.spec.methods),
        "replication_seeds": list(report.replication_seeds),
        "summary": report.summary(),
        "hyperparams": report.hyperparams.to_dict(orient="records"),
        "partial": report.is_partial,
        "errors": list(report.errors),
        "wall_clock_sec": report.wall_clock,
        "spec": attr.asdict(report.spec),
    }


def emit_report(report: ExperimentReport, path: tp.Union[str, Path]) -> tp.Tuple[Path, Path]:
    """
    Write raw errors and their summary.

    Parameters
    ----------
    report : ExperimentReport
        Experiment outcome.
    path : str or Path
        Output directory, created if missing.

    Returns
    -------
    tuple(Path, Path)
        Paths of the raw CSV (columns `Columns.RawReport`) and of the summary JSON.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    raw_path = path / RAW_FILE
    summary_path = path / SUMMARY_FILE
    report.raw.to_csv(raw_path, index=False)
    with summary_path.open("w") as f:
        json.dump(report_summary(report), f, indent=2, default=_to_native)
    logger.info("Report written to %s", path)
    return raw_path, summary_path


def load_report(path: tp.Union[str, Path]) -> tp.Tuple[pd.DataFrame, tp.Dict[str, tp.Any]]:
    """
    Read files written by `emit_report`.

    Returns
    -------
    tuple(pd.DataFrame, dict)
        Raw errors and summary content.
    """
    path = Path(path)
    raw = pd.read_csv(
        path / RAW_FILE, dtype={Columns.Method: str, Columns.Client: str}, float_precision="round_trip"
    )
    with (path / SUMMARY_FILE).open() as f:
        summary = json.load(f)
    return raw, summary
