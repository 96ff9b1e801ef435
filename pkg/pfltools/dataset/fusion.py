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

"""Smoothing spline fusion of sensor signals into low-dimensional features."""

import logging
import typing as tp

import attr
import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse import linalg as spla

from pfltools.types import FloatArray

logger = logging.getLogger(__name__)

MIN_POINTS = 4
DEFAULT_PENALTY_GRID = tuple(np.logspace(-4, 2, 13))


@attr.s(frozen=True, slots=True)
class SplineFit:
    """
    Natural cubic smoothing spline with knots at observation times.

    Parameters
    ----------
    knots : np.ndarray
        Strictly increasing observation times.
    coefficients : np.ndarray
        Fitted values at knots, they define the natural cubic spline.
    penalty : float
        Roughness penalty ``rho``.
    """

    knots: np.ndarray = attr.ib(eq=False)
    coefficients: np.ndarray = attr.ib(eq=False)
    penalty: float = attr.ib()

    def _spline(self) -> CubicSpline:
        return CubicSpline(self.knots, self.coefficients, bc_type="natural")

    def __call__(self, t: tp.Union[float, FloatArray], nu: int = 0) -> tp.Union[float, FloatArray]:
        """Evaluate fitted curve (``nu = 0``) or its derivative of order `nu`."""
        values = self._spline()(t, nu)
        return float(values) if np.ndim(values) == 0 else values


def _check_series(t: FloatArray, z: FloatArray) -> tp.Tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if t.ndim != 1 or t.shape != z.shape:
        raise ValueError("Times and values must be 1d arrays of the same length")
    if t.size < MIN_POINTS:
        raise ValueError(f"At least {MIN_POINTS} points are required, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("Times must be strictly increasing without duplicates")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(z))):
        raise ValueError("Times and values must be finite")
    return t, z


def _reinsch_matrices(t: np.ndarray) -> tp.Tuple[sparse.csc_matrix, sparse.csc_matrix]:
    h = np.diff(t)
    n = t.size
    inv_h = 1.0 / h
    # Q: n x (n - 2), column j couples knots j, j + 1, j + 2
    q = sparse.diags(
        [inv_h[:-1], -inv_h[:-1] - inv_h[1:], inv_h[1:]],
        offsets=[0, -1, -2],
        shape=(n, n - 2),
        format="csc",
    )
    r = sparse.diags(
        [(h[:-1] + h[1:]) / 3, h[1:-1] / 6, h[1:-1] / 6],
        offsets=[0, 1, -1],
        shape=(n - 2, n - 2),
        format="csc",
    )
    return q, r


def smooth_spline_fit(t: FloatArray, z: FloatArray, rho: float) -> SplineFit:
    """
    Fit natural cubic smoothing spline.

    Minimizes ``sum_k (s(t_k) - z_k)^2 + rho * integral(s''(t)^2 dt)`` over natural cubic splines
    with knots at `t`: solves ``(R + rho Q^T Q) gamma = Q^T z`` and takes ``g = z - rho Q gamma``.

    Parameters
    ----------
    t : array-like
        Strictly increasing times, at least 4.
    z : array-like
        Observed values.
    rho : float
        Nonnegative penalty, ``0`` gives interpolation.

    Returns
    -------
    SplineFit

    Examples
    --------
    >>> t = np.linspace(0, 1, 6)
    >>> fit = smooth_spline_fit(t, 2 * t + 1, rho=10.0)
    >>> bool(np.allclose(fit(t), 2 * t + 1))
    True
    """
    t, z = _check_series(t, z)
    if not np.isfinite(rho) or rho < 0:
        raise ValueError(f"Penalty `rho` must be nonnegative, got {rho}")
    if rho == 0:
        return SplineFit(t, z.copy(), 0.0)
    q, r = _reinsch_matrices(t)
    system = (r + rho * (q.T @ q)).tocsc()
    gamma = spla.spsolve(system, q.T @ z)
    fitted = z - rho * (q @ gamma)
    return SplineFit(t, np.asarray(fitted, dtype=np.float64), float(rho))


def _fold_ids(n: int, folds: int) -> np.ndarray:
    ids = np.full(n, -1)
    ids[1:-1] = np.arange(n - 2) % folds
    return ids


def select_smoothing_penalty(
    t: FloatArray,
    z: FloatArray,
    grid: tp.Sequence[float] = DEFAULT_PENALTY_GRID,
    folds: int = 5,
) -> float:
    """
    Choose smoothing penalty by k-fold cross-validation.

    Interior points are assigned to folds in turn, end points always stay in training,
    so held-out points are predicted by interpolation. Ties go to the larger penalty.

    Parameters
    ----------
    t : array-like
        Strictly increasing times.
    z : array-like
        Observed values.
    grid : sequence(float), default ``logspace(-4, 2, 13)``
        Candidate penalties.
    folds : int, default 5
        Number of folds.

    Returns
    -------
    float
        Selected penalty. If series is too short for cross-validation, the middle grid value.
    """
    t, z = _check_series(t, z)
    grid = sorted(float(rho) for rho in grid)
    if not grid:
        raise ValueError("Penalty grid is empty")
    folds = min(folds, t.size - 2)
    held_out_max = int(np.ceil((t.size - 2) / folds)) if folds > 0 else 0
    if folds < 2 or t.size - held_out_max < MIN_POINTS:
        logger.debug("Series of %d points is too short for cross-validation", t.size)
        return grid[len(grid) // 2]

    fold_ids = _fold_ids(t.size, folds)
    best_rho, best_score = grid[0], np.inf
    for rho in grid:
        errors = []
        for fold in range(folds):
            test_mask = fold_ids == fold
            fit = smooth_spline_fit(t[~test_mask], z[~test_mask], rho)
            errors.append((fit(t[test_mask]) - z[test_mask]) ** 2)
        score = float(np.mean(np.concatenate(errors)))
        if score <= best_score:
            best_rho, best_score = rho, score
    return best_rho


def fit_sensor(
    cycles: FloatArray,
    values: FloatArray,
    observed_up_to: int,
    rho: tp.Optional[float] = None,
    grid: tp.Sequence[float] = DEFAULT_PENALTY_GRID,
) -> tp.Tuple[float, float]:
    """
    Terminal smoothed level and slope per cycle of one sensor.

    Parameters
    ----------
    cycles : array-like
        Cycle numbers ``1..L``.
    values : array-like
        Sensor readings.
    observed_up_to : int
        Last observed cycle; readings after it are ignored.
    rho : float, optional
        Smoothing penalty, chosen by cross-validation if not given.
    grid : sequence(float)
        Candidate penalties for cross-validation.

    Returns
    -------
    tuple(float, float)
        Level and slope at `observed_up_to`.
    """
    cycles = np.asarray(cycles, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    mask = cycles <= observed_up_to
    t = cycles[mask] / observed_up_to
    z = values[mask]
    if rho is None:
        rho = select_smoothing_penalty(t, z, grid)
    fit = smooth_spline_fit(t, z, rho)
    level = fit(1.0)
    slope = fit(1.0, 1) / observed_up_to
    return float(level), float(slope)


def fuse_signals(
    cycles: FloatArray,
    sensors: np.ndarray,
    observed_up_to: int,
    rho: tp.Optional[float] = None,
) -> FloatArray:
    """
    Fuse observed sensor signals of a unit into a feature vector.

    For every sensor a smoothing spline is fitted on cycles ``1..observed_up_to`` with time
    normalized to ``(0, 1]``; its terminal level and slope per cycle are the features.

    Parameters
    ----------
    cycles : array-like
        Cycle numbers ``1..L``.
    sensors : np.ndarray
        Matrix ``L x S`` of sensor readings.
    observed_up_to : int
        Last observed cycle, at least 4.
    rho : float, optional
        Smoothing penalty, chosen per sensor by cross-validation if not given.

    Returns
    -------
    np.ndarray
        Vector ``(1, level_1, slope_1, ..., level_S, slope_S)``.
    """
    cycles = np.asarray(cycles, dtype=np.float64)
    sensors = np.asarray(sensors, dtype=np.float64)
    if sensors.ndim != 2 or sensors.shape[0] != cycles.size:
        raise ValueError("Sensors must be a matrix with one row per cycle")
    if observed_up_to < MIN_POINTS:
        raise ValueError(f"Observed window must have at least {MIN_POINTS} cycles, got {observed_up_to}")
    if np.count_nonzero(cycles <= observed_up_to) < MIN_POINTS:
        raise ValueError(f"Observed window has less than {MIN_POINTS} readings")
    features = [1.0]
    for k in range(sensors.shape[1]):
        features.extend(fit_sensor(cycles, sensors[:, k], observed_up_to, rho))
    return np.array(features)
