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
Data containers and generators (:mod:`pfltools.dataset`).
==========================================================

Data containers and tools for simulated studies and turbofan case study.

Data Containers
---------------
`dataset.ClientDataset` - features and log failure times of one client
`dataset.SimStudy` - simulated study
`dataset.CaseStudy` - four-client turbofan case study

Tools
-----
`dataset.build_study1`
`dataset.build_study2_balanced`
`dataset.build_study2_imbalanced`
`dataset.build_three_client`
`dataset.dump_scenario` / `dataset.load_scenario`
`dataset.parse_cmapss`
`dataset.assign_failure_modes`
`dataset.build_case_split`
`dataset.smooth_spline_fit`
"""

from .client import ClientDataset, feature_columns, read_client_tables  # isort: skip
from .cmapss import (
    CaseClient,
    CaseSplit,
    CaseStudy,
    EngineUnit,
    UnitFeatures,
    assign_failure_modes,
    build_case_split,
    compute_unit_features,
    dump_case_study,
    extract_case_features,
    parse_cmapss,
    select_sensors,
    serialize_cmapss,
    split_units,
)
from .fusion import SplineFit, fuse_signals, select_smoothing_penalty, smooth_spline_fit
from .simulation import (
    SimClient,
    SimScenario,
    SimStudy,
    SimUnit,
    build_study,
    build_study1,
    build_study2_balanced,
    build_study2_imbalanced,
    build_three_client,
    dump_scenario,
    extract_feature,
    gen_client,
    load_scenario,
)

__all__ = (
    "ClientDataset",
    "feature_columns",
    "read_client_tables",
    "CaseClient",
    "CaseSplit",
    "CaseStudy",
    "EngineUnit",
    "UnitFeatures",
    "assign_failure_modes",
    "build_case_split",
    "compute_unit_features",
    "dump_case_study",
    "extract_case_features",
    "parse_cmapss",
    "select_sensors",
    "serialize_cmapss",
    "split_units",
    "SplineFit",
    "fuse_signals",
    "select_smoothing_penalty",
    "smooth_spline_fit",
    "SimClient",
    "SimScenario",
    "SimStudy",
    "SimUnit",
    "build_study",
    "build_study1",
    "build_study2_balanced",
    "build_study2_imbalanced",
    "build_three_client",
    "dump_scenario",
    "extract_feature",
    "gen_client",
    "load_scenario",
)
