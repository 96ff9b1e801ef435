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
Messages exchanged between clients and server.

Only parameter vectors cross the client/server boundary: a board of ``m`` columns of
``K + 2`` transformed parameters and the iteration number.
"""

import typing as tp

import attr
import numpy as np

from pfltools.models.params import TransformedParams

HEADER_DTYPE = np.dtype("<i8")
PAYLOAD_DTYPE = np.dtype("<f8")
HEADER_SIZE = 3
SIMPLEX_TOL = 1e-12


def _as_columns(value: tp.Iterable[TransformedParams]) -> tp.Tuple[TransformedParams, ...]:
    return tuple(value)


@attr.s(frozen=True, slots=True)
class ParamsBoard:
    """
    Transformed parameters of all clients at one iteration.

    Parameters
    ----------
    columns : sequence(TransformedParams)
        Parameters of clients in fixed client order.
    iteration : int, default 0
        Iteration number.
    """

    columns: tp.Tuple[TransformedParams, ...] = attr.ib(converter=_as_columns)
    iteration: int = attr.ib(default=0, converter=int)

    @columns.validator
    def _check_columns(self, _: str, value: tp.Tuple[TransformedParams, ...]) -> None:
        if not value:
            raise ValueError("Board must have at least one column")
        if len({col.beta_t.size for col in value}) != 1:
            raise ValueError("All board columns must have the same number of parameters")

    @iteration.validator
    def _check_iteration(self, _: str, value: int) -> None:
        if value < 0:
            raise ValueError("Iteration must be nonnegative")

    @property
    def n_clients(self) -> int:
        """Number of columns ``m``."""
        return len(self.columns)

    @property
    def n_params(self) -> int:
        """Number of parameters per client ``K + 2``."""
        return self.columns[0].beta_t.size + 1

    def to_matrix(self) -> np.ndarray:
        """Stack columns into matrix ``m x (K + 2)``, one row per client."""
        return np.vstack([col.to_vector() for col in self.columns])

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, iteration: int = 0) -> "ParamsBoard":
        """Build board from matrix ``m x (K + 2)``, one row per client."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        return cls([TransformedParams.from_vector(row) for row in matrix], iteration)


@attr.s(frozen=True, slots=True)
class WeightVector:
    """
    Aggregation weights of one client over all clients.

    Parameters
    ----------
    weights : np.ndarray
        Nonnegative weights summing to 1.
    """

    weights: np.ndarray = attr.ib(converter=lambda v: np.asarray(v, dtype=np.float64))

    @weights.validator
    def _check_weights(self, _: str, value: np.ndarray) -> None:
        if value.ndim != 1 or value.size < 1:
            raise ValueError("Weights must be a nonempty vector")
        if np.any(value < 0):
            raise ValueError("Weights must be nonnegative")
        if abs(value.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"Weights must sum to 1, got {value.sum()!r}")

    @property
    def simplex_error(self) -> float:
        """Absolute deviation of weights sum from 1."""
        return float(abs(self.weights.sum() - 1.0))


def encode_board(board: ParamsBoard) -> bytes:
    """
    Serialize board to bytes.

    Layout: little-endian int64 header ``(m, K + 2, iteration)`` followed by
    ``m * (K + 2)`` little-endian float64 values row by row.

    Parameters
    ----------
    board : ParamsBoard
        Board to serialize.

    Returns
    -------
    bytes
    """
    header = np.array([board.n_clients, board.n_params, board.iteration], dtype=HEADER_DTYPE)
    return header.tobytes() + board.to_matrix().astype(PAYLOAD_DTYPE).tobytes()


def decode_board(payload: bytes) -> ParamsBoard:
    """
    Deserialize board produced by `encode_board`.

    Parameters
    ----------
    payload : bytes
        Serialized board.

    Returns
    -------
    ParamsBoard
    """
    header_bytes = HEADER_SIZE * HEADER_DTYPE.itemsize
    if len(payload) < header_bytes:
        raise ValueError("Board message is too short")
    n_clients, n_params, iteration = (int(v) for v in np.frombuffer(payload[:header_bytes], dtype=HEADER_DTYPE))
    values = np.frombuffer(payload[header_bytes:], dtype=PAYLOAD_DTYPE)
    if values.size != n_clients * n_params:
        raise ValueError(f"Board message must carry {n_clients * n_params} values, got {values.size}")
    return ParamsBoard.from_matrix(values.reshape(n_clients, n_params), iteration)
