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

"""
Model selection tools (:mod:`pfltools.model_selection`)
=======================================================

Instruments to choose hyperparameters and compare methods.

Hyperparameter search
---------------------
`model_selection.HyperGrid` - candidate values of ``(lambda, alpha, theta)``
`model_selection.loocv_select` - leave-one-out selection

Experiments
-----------
`model_selection.ExperimentSpec` - experiment description
`model_selection.run_experiment` - seeded replications of a study
`model_selection.emit_report` - write raw errors and summary
`model_selection.load_report` - read report files
`model_selection.resummarize` - summary of raw errors
"""

from .experiment import (
    METHODS,
    STUDIES,
    ExperimentReport,
    ExperimentSpec,
    build_replication_clients,
    pooled_moments,
    resummarize,
    run_experiment,
    standardize_clients,
)
from .loocv import (
    HyperGrid,
    HyperParams,
    LoocvResult,
    feasible_points,
    fold_indices,
    loocv_score,
    loocv_select,
    point_config,
)
from .report import emit_report, load_report, report_summary

__all__ = (
    "METHODS",
    "STUDIES",
    "ExperimentReport",
    "ExperimentSpec",
    "build_replication_clients",
    "pooled_moments",
    "resummarize",
    "run_experiment",
    "standardize_clients",
    "HyperGrid",
    "HyperParams",
    "LoocvResult",
    "feasible_points",
    "fold_indices",
    "loocv_score",
    "loocv_select",
    "point_config",
    "emit_report",
    "load_report",
    "report_summary",
)
