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

"""Robust summaries of metric samples."""

import typing as tp

import numpy as np
import pandas as pd

from pfltools.types import AnyFloats

INTERPOLATION = "midpoint"


def summarize(samples: AnyFloats) -> tp.Tuple[float, float]:
    """
    Median and interquartile range of samples.

    Quantiles use midpoint interpolation between neighbouring order statistics.

    Parameters
    ----------
    samples : array-like
        Nonempty samples.

    Returns
    -------
    tuple(float, float)
        Median and ``Q3 - Q1``.

    Examples
    --------
    >>> summarize([1, 2, 3, 4])
    (2.5, 2.0)
    >>> summarize([7])
    (7.0, 0.0)
    """
    values = pd.Series(np.asarray(samples, dtype=np.float64))
    if values.empty:
        raise ValueError("Cannot summarize empty samples")
    q1, median, q3 = values.quantile([0.25, 0.5, 0.75], interpolation=INTERPOLATION)
    return float(median), float(q3 - q1)
