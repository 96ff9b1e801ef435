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

"""Prediction error metrics."""

import typing as tp

import numpy as np

from pfltools.types import AnyFloats


def mape(pred: float, truth: float) -> float:
    """
    Absolute percentage error of a single prediction.

    Parameters
    ----------
    pred : float
        Predicted value.
    truth : float
        True value, must be positive.

    Returns
    -------
    float
        ``|pred - truth| / truth * 100``.

    Examples
    --------
    >>> mape(110.0, 100.0)
    10.0
    >>> mape(100.0, 100.0)
    0.0
    """
    if not np.isfinite(truth) or truth <= 0:
        raise ValueError(f"True value must be positive, got {truth}")
    return float(abs(pred - truth) / truth * 100)


def calc_client_mape(pred: AnyFloats, truth: AnyFloats) -> float:
    """
    Mean absolute percentage error over units of a client.

    Parameters
    ----------
    pred : array-like
        Predicted values.
    truth : array-like
        True values, all positive.

    Returns
    -------
    float

    Examples
    --------
    >>> calc_client_mape([90.0, 120.0], [100.0, 100.0])
    15.0
    """
    pred_arr = np.asarray(pred, dtype=np.float64)
    truth_arr = np.asarray(truth, dtype=np.float64)
    if pred_arr.shape != truth_arr.shape or pred_arr.size == 0:
        raise ValueError("Predictions and true values must be nonempty and of the same shape")
    if np.any(~np.isfinite(truth_arr)) or np.any(truth_arr <= 0):
        raise ValueError("True values must be positive")
    return float(np.mean(np.abs(pred_arr - truth_arr) / truth_arr) * 100)


def relative_errors(pred: AnyFloats, truth: AnyFloats) -> tp.List[float]:
    """Per-unit absolute percentage errors."""
    pred_arr = np.asarray(pred, dtype=np.float64)
    truth_arr = np.asarray(truth, dtype=np.float64)
    if pred_arr.shape != truth_arr.shape:
        raise ValueError("Predictions and true values must be of the same shape")
    return [mape(p, t) for p, t in zip(pred_arr, truth_arr)]
