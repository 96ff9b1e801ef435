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
Personalized federated prognostics for Python
=============================================

pfltools fits failure time regression models for many clients (e.g. plants or fleets)
that cannot share their data. Every client gets its own log-location-scale model,
parameters of similar clients are pulled together by a similarity penalty optimized
with proximal gradient steps. Local and conventional federated baselines, simulation
studies and a turbofan case study are included.

Subpackages
-----------
    dataset - Client data, simulation studies and turbofan data
    federated - Personalized federated training
    metrics - Metrics calculation
    model_selection - Hyperparameter search and experiments
    models - Failure time models and baselines
"""

from .columns import Columns
from .types import AnyFloats, ClientId
from .version import VERSION

__version__ = VERSION

__all__ = (
    "Columns",
    "AnyFloats",
    "ClientId",
    "__version__",
)
