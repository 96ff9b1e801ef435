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
Server side of personalized federated training: similarity-weighted aggregation.

The server sees parameter boards only, never client data.
"""

import typing as tp

import numpy as np

from pfltools.exceptions import ConfigError
from pfltools.models.params import TransformedParams

from .board import ParamsBoard, WeightVector
from .config import FedConfig


def _check_index(board: ParamsBoard, i: int) -> None:
    if not 0 <= i < board.n_clients:
        raise IndexError(f"Client index {i} is out of range for board with {board.n_clients} clients")


def compute_weights(board: ParamsBoard, i: int, cfg: FedConfig) -> WeightVector:
    """
    Compute aggregation weights of client `i`.

    ``a_ih = gamma * A'(||w_i - w_h||^2)`` for ``h != i`` and ``a_ii = 1 - sum_{h != i} a_ih``.

    Parameters
    ----------
    board : ParamsBoard
        Parameters of all clients from the previous iteration.
    i : int
        Client position on the board.
    cfg : FedConfig
        Configuration with similarity kernel and ``gamma``.

    Returns
    -------
    WeightVector

    Raises
    ------
    ConfigError
        If the weight feasibility bound is violated, so the self-weight could be negative.

    Examples
    --------
    >>> board = ParamsBoard([TransformedParams([0.0], 1.0), TransformedParams([0.0], 1.0)])
    >>> compute_weights(board, 0, FedConfig(lambda_=1.0, alpha=0.05)).weights
    array([0.9, 0.1])
    """
    _check_index(board, i)
    cfg.check_feasible(board.n_clients)
    matrix = board.to_matrix()
    d2 = np.sum((matrix - matrix[i]) ** 2, axis=1)
    weights = cfg.gamma * np.atleast_1d(cfg.kernel.deriv(d2))
    weights[i] = 0.0
    self_weight = 1.0 - weights.sum()
    if self_weight < 0:
        raise ConfigError(
            f"Negative self-weight {self_weight:.3e} of client {i}; "
            f"max admissible gamma is {cfg.max_gamma(board.n_clients):.6g}"
        )
    weights[i] = self_weight
    return WeightVector(weights)


def aggregate(board: ParamsBoard, i: int, cfg: FedConfig) -> TransformedParams:
    """
    Build personalized cloud model of client `i` as a weighted combination of board columns.

    Computed as ``w_i + sum_{h != i} a_ih (w_h - w_i)``, equal to ``sum_h a_ih w_h``
    and to the gradient step ``w_i - alpha * grad g_i(w_i)`` on the similarity penalty.

    Parameters
    ----------
    board : ParamsBoard
        Parameters of all clients from the previous iteration.
    i : int
        Client position on the board.
    cfg : FedConfig
        Configuration.

    Returns
    -------
    TransformedParams
    """
    return TransformedParams.from_vector(_aggregate_row(board.to_matrix(), compute_weights(board, i, cfg), i))


def _aggregate_row(matrix: np.ndarray, weights: WeightVector, i: int) -> np.ndarray:
    neighbour = weights.weights.copy()
    neighbour[i] = 0.0
    return matrix[i] + neighbour @ (matrix - matrix[i])


def aggregate_all(board: ParamsBoard, cfg: FedConfig) -> tp.Tuple[ParamsBoard, float]:
    """
    Aggregate personalized cloud models of all clients.

    Parameters
    ----------
    board : ParamsBoard
        Parameters of all clients from the previous iteration.
    cfg : FedConfig
        Configuration.

    Returns
    -------
    tuple(ParamsBoard, float)
        Board of cloud models with the same iteration number and
        maximum deviation of weight sums from 1 over clients.
    """
    matrix = board.to_matrix()
    rows = []
    max_error = 0.0
    for i in range(board.n_clients):
        weights = compute_weights(board, i, cfg)
        max_error = max(max_error, weights.simplex_error)
        rows.append(_aggregate_row(matrix, weights, i))
    return ParamsBoard.from_matrix(np.vstack(rows), board.iteration), max_error
