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

"""Personalized federated training loop."""

from __future__ import annotations

import logging
import typing as tp
from pathlib import Path

import attr
import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from pfltools.columns import Columns
from pfltools.exceptions import DivergenceError
from pfltools.models.params import ClientParams, TransformedParams, untransform
from pfltools.models.sev import nll
from pfltools.types import ClientId
from pfltools.utils import derive_seed

from .board import ParamsBoard, decode_board, encode_board
from .client import prox_step
from .config import FedConfig
from .server import aggregate_all

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset

logger = logging.getLogger(__name__)

INIT_LOW = 0.0
INIT_HIGH = 10.0


@attr.s(frozen=True, slots=True)
class FedResult:
    """
    Result of `run_federated`.

    Parameters
    ----------
    params : dict(hashable -> ClientParams)
        Natural parameters of every client.
    client_ids : tuple
        Client ids in board column order.
    board : ParamsBoard
        Final board.
    trace : tuple(ParamsBoard)
        Boards of all iterations, starting with the initialization.
    n_iter : int
        Number of iterations made.
    converged : bool
        Whether early stopping criterion was met.
    simplex_errors : np.ndarray
        Maximum deviation of aggregation weight sums from 1 at every iteration.
    """

    params: tp.Dict[ClientId, ClientParams] = attr.ib()
    client_ids: tp.Tuple[ClientId, ...] = attr.ib()
    board: ParamsBoard = attr.ib()
    trace: tp.Tuple[ParamsBoard, ...] = attr.ib()
    n_iter: int = attr.ib()
    converged: bool = attr.ib()
    simplex_errors: np.ndarray = attr.ib()


def init_params(client_id: ClientId, n_params: int, seed: int) -> TransformedParams:
    """
    Draw initial transformed parameters of a client from ``U(0, 10)``.

    The stream depends only on `(seed, client_id)`.
    """
    rng = np.random.default_rng(derive_seed(seed, client_id))
    vector = rng.uniform(INIT_LOW, INIT_HIGH, size=n_params)
    while vector[-1] <= 0:
        vector[-1] = rng.uniform(INIT_LOW, INIT_HIGH)
    return TransformedParams.from_vector(vector)


def _check_datasets(datasets: tp.Sequence[ClientDataset]) -> None:
    if not datasets:
        raise ValueError("At least one client dataset is required")
    if len({ds.n_features for ds in datasets}) != 1:
        raise ValueError("All clients must have the same number of features")
    client_ids = [ds.client_id for ds in datasets]
    if len(set(client_ids)) != len(client_ids):
        raise ValueError("Client ids must be unique")


def run_federated(
    datasets: tp.Sequence[ClientDataset],
    cfg: FedConfig,
    keep_trace: bool = True,
    verbose: int = 0,
) -> FedResult:
    """
    Train personalized models of all clients.

    Every iteration the server aggregates personalized cloud models from the board of
    the previous iteration, then every client refines its cloud model on own data.
    Boards travel between the parties serialized with `encode_board`.

    Parameters
    ----------
    datasets : sequence(ClientDataset)
        Training data of every client; client ids must be unique.
    cfg : FedConfig
        Configuration.
    keep_trace : bool, default ``True``
        Whether to keep boards of all iterations. Otherwise trace has initial and final boards only.
    verbose : int, default 0
        Degree of verbose output. If 0, no output will be provided.

    Returns
    -------
    FedResult

    Raises
    ------
    ConfigError
        If weight feasibility bound is violated for the number of clients.
    DivergenceError
        If some client parameters become non-finite.
    ConvergenceError
        If a client update does not converge.
    """
    _check_datasets(datasets)
    cfg.check_feasible(len(datasets))
    client_ids = tuple(ds.client_id for ds in datasets)
    n_params = datasets[0].n_features + 2

    board = ParamsBoard([init_params(client_id, n_params, cfg.seed) for client_id in client_ids], 0)
    trace = [board]
    simplex_errors = []
    converged = False
    iteration = 0
    for iteration in tqdm(range(1, cfg.max_iter + 1), disable=verbose == 0):
        cloud_board, simplex_error = aggregate_all(decode_board(encode_board(board)), cfg)
        simplex_errors.append(simplex_error)
        cloud_board = decode_board(encode_board(cloud_board))

        updated = []
        for ds, cloud in zip(datasets, cloud_board.columns):
            vector = prox_step(ds, cloud, cfg).to_vector()
            if not np.all(np.isfinite(vector)):
                raise DivergenceError("Personalized federated training", iteration)
            updated.append(vector)
        new_board = ParamsBoard.from_matrix(np.vstack(updated), iteration)

        change = float(np.max(np.abs(new_board.to_matrix() - board.to_matrix())))
        logger.debug("Iteration %d: max parameter change %.3e", iteration, change)
        board = new_board
        if keep_trace:
            trace.append(board)
        if change < cfg.early_stop_tol:
            converged = True
            logger.info("Early stop at iteration %d, max parameter change %.3e", iteration, change)
            break

    if not keep_trace:
        trace.append(board)
    params = {client_id: untransform(col) for client_id, col in zip(client_ids, board.columns)}
    return FedResult(
        params=params,
        client_ids=client_ids,
        board=board,
        trace=tuple(trace),
        n_iter=iteration,
        converged=converged,
        simplex_errors=np.array(simplex_errors),
    )


def global_objective(board: ParamsBoard, datasets: tp.Sequence[ClientDataset], cfg: FedConfig) -> float:
    """
    Joint objective whose stationary points are fixed points of federated training.

    ``sum_i l_i(w_i) + lambda_ * sum_{i < h} A(||w_i - w_h||^2)``.
    Needs access to all datasets, so it is never computed during training.

    Parameters
    ----------
    board : ParamsBoard
        Parameters of all clients.
    datasets : sequence(ClientDataset)
        Data of all clients in board order.
    cfg : FedConfig
        Configuration.

    Returns
    -------
    float
    """
    if len(datasets) != board.n_clients:
        raise ValueError("Number of datasets must match number of board columns")
    loss = sum(nll(col, ds) for col, ds in zip(board.columns, datasets))
    matrix = board.to_matrix()
    rows, cols = np.triu_indices(board.n_clients, k=1)
    d2 = np.sum((matrix[rows] - matrix[cols]) ** 2, axis=1)
    penalty = float(np.sum(cfg.kernel.value(d2))) if d2.size else 0.0
    return float(loss) + cfg.lambda_ * penalty


def dump_trace(
    trace: tp.Sequence[ParamsBoard],
    path: tp.Union[str, Path],
    client_ids: tp.Optional[tp.Sequence[ClientId]] = None,
) -> pd.DataFrame:
    """
    Write board trace to CSV.

    Parameters
    ----------
    trace : sequence(ParamsBoard)
        Boards, e.g. `FedResult.trace`.
    path : str or Path
        Output CSV file.
    client_ids : sequence(hashable), optional
        Client ids in board order, positions are used if not given.

    Returns
    -------
    pd.DataFrame
        Written table with columns `Columns.Iteration`, `Columns.Client`, ``w0..w{K+1}``.
    """
    if not trace:
        raise ValueError("Trace is empty")
    n_clients, n_params = trace[0].n_clients, trace[0].n_params
    ids = list(client_ids) if client_ids is not None else list(range(n_clients))
    if len(ids) != n_clients:
        raise ValueError("Number of client ids must match number of board columns")
    frames = []
    for board in trace:
        frame = pd.DataFrame(board.to_matrix(), columns=[f"w{k}" for k in range(n_params)])
        frame.insert(0, Columns.Client, ids)
        frame.insert(0, Columns.Iteration, board.iteration)
        frames.append(frame)
    df = pd.concat(frames, ignore_index=True)
    df.to_csv(path, index=False)
    return df
