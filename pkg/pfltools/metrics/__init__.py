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
Metrics calculation tools (:mod:`pfltools.metrics`).
====================================================

Metrics
-------
`metrics.mape`
`metrics.calc_client_mape`
`metrics.relative_errors`

Tools
-----
`metrics.summarize` - median and IQR of samples
"""

from .error import calc_client_mape, mape, relative_errors
from .summary import summarize

__all__ = (
    "mape",
    "calc_client_mape",
    "relative_errors",
    "summarize",
)
