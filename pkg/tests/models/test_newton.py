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

import numpy as np
import pytest

from pfltools.exceptions import ConvergenceError
from pfltools.models import newton_minimize


def barrier_objective(x: np.ndarray) -> float:
    return float(x[0] - np.log(x[0]))


def barrier_grad(x: np.ndarray) -> np.ndarray:
    return np.array([1 - 1 / x[0]])


def barrier_hess(x: np.ndarray) -> np.ndarray:
    return np.array([[1 / x[0] ** 2]])


class TestNewtonMinimize:
    def test_quadratic_in_one_step(self) -> None:
        center = np.array([1.0, 2.0])
        result = newton_minimize(
            lambda x: float(np.sum((x - center) ** 2)),
            lambda x: 2 * (x - center),
            lambda x: 2 * np.eye(2),
            np.array([5.0, 0.5]),
        )
        np.testing.assert_allclose(result.x, center)
        assert result.n_iter == 1
        assert not result.escaped

    def test_keeps_positive_coordinate_positive(self) -> None:
        iterates = []

        def objective(x: np.ndarray) -> float:
            iterates.append(x[0])
            return barrier_objective(x)

        result = newton_minimize(objective, barrier_grad, barrier_hess, np.array([10.0]), tol=1e-10)
        np.testing.assert_allclose(result.x, [1.0], atol=1e-8)
        assert min(iterates) > 0

    def test_raises_when_out_of_iterations(self) -> None:
        with pytest.raises(ConvergenceError, match="Barrier did not converge in 1 iterations") as e:
            newton_minimize(
                barrier_objective, barrier_grad, barrier_hess, np.array([10.0]), max_iter=1, solver_name="Barrier"
            )
        assert e.value.n_iter == 1
        assert e.value.residual > 0

    def test_escapes_unbounded_direction(self) -> None:
        result = newton_minimize(
            lambda x: float(-x[0]),
            lambda x: np.array([-1.0]),
            lambda x: np.zeros((1, 1)),
            np.array([1.0]),
            upper_bound=5.0,
        )
        assert result.escaped
        assert result.x[0] > 5.0

    def test_raises_on_bad_start(self) -> None:
        with pytest.raises(ValueError, match="positive"):
            newton_minimize(barrier_objective, barrier_grad, barrier_hess, np.array([0.0]))
