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

"""Damped Newton method for smooth convex objectives with one strictly positive coordinate."""

import logging
import typing as tp

import attr
import numpy as np

from pfltools.exceptions import ConvergenceError
from pfltools.types import ParamVector

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
BACKTRACK_FACTOR = 0.5
MAX_BACKTRACKS = 60
BOUNDARY_FRACTION = 0.99


@attr.s(frozen=True, slots=True)
class NewtonResult:
    """
    Result of `newton_minimize`.

    Parameters
    ----------
    x : np.ndarray
        Final iterate.
    n_iter : int
        Number of Newton steps made.
    residual : float
        Infinity norm of the gradient at `x`.
    escaped : bool
        Whether the positive coordinate exceeded `upper_bound` (objective unbounded below along it).
    """

    x: np.ndarray = attr.ib()
    n_iter: int = attr.ib()
    residual: float = attr.ib()
    escaped: bool = attr.ib(default=False)


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        return -np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(hess, grad, rcond=None)[0]


def _max_step(x: np.ndarray, direction: np.ndarray, positive_index: int) -> float:
    if direction[positive_index] >= 0:
        return 1.0
    return min(1.0, BOUNDARY_FRACTION * x[positive_index] / -direction[positive_index])


def newton_minimize(
    objective: tp.Callable[[ParamVector], float],
    grad: tp.Callable[[ParamVector], ParamVector],
    hess: tp.Callable[[ParamVector], np.ndarray],
    x0: ParamVector,
    tol: float = 1e-8,
    max_iter: int = 100,
    positive_index: int = -1,
    upper_bound: tp.Optional[float] = None,
    solver_name: str = "Newton solver",
) -> NewtonResult:
    """
    Minimize convex function with Newton steps and Armijo backtracking.

    Every trial step is truncated so that coordinate `positive_index` stays strictly positive,
    then halved until the Armijo condition with constant ``1e-4`` holds.
    Iterations also stop when the Newton step is below floating point resolution of the iterate,
    which happens for very stiff objectives before the gradient reaches `tol`.

    Parameters
    ----------
    objective, grad, hess : callable
        Objective, its gradient and Hessian as functions of parameter vector.
    x0 : np.ndarray
        Starting point, ``x0[positive_index] > 0``.
    tol : float, default 1e-8
        Tolerance for infinity norm of the gradient.
    max_iter : int, default 100
        Maximum number of Newton steps.
    positive_index : int, default -1
        Index of the coordinate that must stay positive.
    upper_bound : float, optional
        Stop with ``escaped=True`` when the positive coordinate exceeds this value.
    solver_name : str, default "Newton solver"
        Name used in error messages.

    Returns
    -------
    NewtonResult

    Raises
    ------
    ConvergenceError
        If tolerance is not reached in `max_iter` steps.
    """
    x = np.array(x0, dtype=np.float64)
    if x[positive_index] <= 0:
        raise ValueError("Starting point must have positive constrained coordinate")

    f = objective(x)
    g = grad(x)
    residual = float(np.max(np.abs(g)))
    for n_iter in range(max_iter + 1):
        if residual <= tol:
            return NewtonResult(x, n_iter, residual)
        if upper_bound is not None and x[positive_index] > upper_bound:
            return NewtonResult(x, n_iter, residual, escaped=True)
        if n_iter == max_iter:
            break

        direction = _newton_direction(hess(x), g)
        slope = float(g @ direction)
        if slope >= 0:
            # Hessian is numerically singular along the step, fall back to steepest descent
            direction = -g
            slope = -float(g @ g)
        if np.max(np.abs(direction)) <= 4 * np.finfo(float).eps * (1.0 + np.max(np.abs(x))):
            logger.debug("%s: step below precision, stopping with residual %.3e", solver_name, residual)
            return NewtonResult(x, n_iter, residual)

        step = _max_step(x, direction, positive_index)
        slack = 16 * np.finfo(float).eps * (1.0 + abs(f))
        for _ in range(MAX_BACKTRACKS):
            candidate = x + step * direction
            f_new = objective(candidate)
            if np.isfinite(f_new) and f_new <= f + ARMIJO_C * step * slope + slack:
                break
            step *= BACKTRACK_FACTOR
        else:
            logger.debug("%s: line search stalled at iteration %d, residual %.3e", solver_name, n_iter, residual)
            break

        x, f = candidate, f_new
        g = grad(x)
        residual = float(np.max(np.abs(g)))

    raise ConvergenceError(solver_name, n_iter, residual)
