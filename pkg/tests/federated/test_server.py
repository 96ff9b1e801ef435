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

from pfltools.exceptions import ConfigError
from pfltools.federated import FedConfig, ParamsBoard, aggregate, aggregate_all, compute_weights
from pfltools.models import make_kernel
from pfltools.models.similarity import g_grad


class TestServer:
    def setup_method(self) -> None:
        self.board = ParamsBoard.from_matrix(
            np.array(
                [
                    [1.0, 0.5, 3.0],
                    [1.2, 0.4, 2.5],
                    [3.0, -1.0, 1.0],
                    [0.9, 0.6, 3.2],
                ]
            ),
            iteration=4,
        )
        self.cfg = FedConfig(lambda_=1.0, alpha=0.1, kernel=make_kernel("neg_exp", 5.0))

    def test_weights_form_convex_combination(self) -> None:
        for i in range(self.board.n_clients):
            weights = compute_weights(self.board, i, self.cfg).weights
            assert weights.min() >= 0
            assert weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_closer_clients_get_larger_weights(self) -> None:
        weights = compute_weights(self.board, 0, self.cfg).weights
        assert weights[3] > weights[1] > weights[2]

    def test_identical_parameters(self) -> None:
        board = ParamsBoard.from_matrix(np.ones((3, 2)))
        weights = compute_weights(board, 1, self.cfg).weights
        np.testing.assert_allclose(weights, [0.2 / 5, 1 - 0.4 / 5, 0.2 / 5])

    def test_aggregate_is_gradient_step_on_penalty(self) -> None:
        matrix = self.board.to_matrix()
        for i in range(self.board.n_clients):
            others = [matrix[h] for h in range(self.board.n_clients) if h != i]
            expected = matrix[i] - self.cfg.alpha * g_grad(self.cfg.kernel, matrix[i], others)
            actual = aggregate(self.board, i, self.cfg).to_vector()
            np.testing.assert_allclose(actual, expected, rtol=1e-12, atol=1e-12)

    def test_aggregate_all(self) -> None:
        cloud, simplex_error = aggregate_all(self.board, self.cfg)
        assert cloud.iteration == 4
        assert simplex_error <= 1e-12
        for i in range(self.board.n_clients):
            np.testing.assert_array_equal(cloud.to_matrix()[i], aggregate(self.board, i, self.cfg).to_vector())

    def test_zero_lambda_keeps_aggregation(self) -> None:
        cfg = FedConfig(lambda_=0.0, alpha=0.1, kernel=make_kernel("neg_exp", 5.0))
        cloud, _ = aggregate_all(self.board, cfg)
        assert cloud.n_clients == self.board.n_clients

    def test_raises_on_infeasible_config(self) -> None:
        cfg = FedConfig(lambda_=1.0, alpha=0.5, kernel=make_kernel("neg_exp", 0.5))
        with pytest.raises(ConfigError, match="feasibility"):
            compute_weights(self.board, 0, cfg)

    def test_raises_on_bad_index(self) -> None:
        with pytest.raises(IndexError, match="out of range"):
            compute_weights(self.board, 4, self.cfg)
