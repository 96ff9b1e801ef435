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

"""Conventional federated learning baseline: one global model trained by federated averaging."""

from __future__ import annotations

import logging
import typing as tp

import attr
import numpy as np
from tqdm.auto import tqdm

from pfltools.exceptions import ConfigError, DivergenceError
from pfltools.utils import derive_seed

from .base import ModelBase
from .params import ClientParams, TransformedParams, untransform
from .sev import nll, nll_grad

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 50
BOUNDARY_FRACTION = 0.99
INIT_JITTER = 0.1


def _positive(_: object, attribute: "attr.Attribute[tp.Any]", value: float) -> None:
    if not value > 0:
        raise ConfigError(f"`{attribute.name}` must be positive, got {value}")


def _nonnegative(_: object, attribute: "attr.Attribute[float]", value: float) -> None:
    if not value >= 0:
        raise ConfigError(f"`{attribute.name}` must be nonnegative, got {value}")


@attr.s(frozen=True, slots=True)
class CflConfig:
    """
    Hyperparameters of federated averaging.

    Parameters
    ----------
    rounds : int, default 200
        Maximum number of communication rounds.
    local_steps : int, default 5
        Gradient descent steps every client makes per round.
    local_lr : float, default 0.1
        Initial learning rate of every local step, halved until sufficient decrease.
    early_stop_tol : float, default 1e-6
        Training stops when global parameters change less than this value (infinity norm).
    seed : int, default 0
        Seed of global model initialization.
    """

    rounds: int = attr.ib(default=200, converter=int, validator=_positive)
    local_steps: int = attr.ib(default=5, converter=int, validator=_positive)
    local_lr: float = attr.ib(default=0.1, converter=float, validator=_positive)
    early_stop_tol: float = attr.ib(default=1e-6, converter=float, validator=_nonnegative)
    seed: int = attr.ib(default=0, converter=int)


def _init_global(n_params: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(seed, "cfl"))
    vector = rng.uniform(-INIT_JITTER, INIT_JITTER, size=n_params)
    vector[-1] = 1.0
    return vector


def _local_update(w: np.ndarray, data: ClientDataset, cfg: CflConfig) -> np.ndarray:
    n = data.n_samples

    def loss(v: np.ndarray) -> float:
        return nll(TransformedParams.from_vector(v), data) / n

    value = loss(w)
    for _ in range(cfg.local_steps):
        grad = nll_grad(TransformedParams.from_vector(w), data) / n
        lr = cfg.local_lr
        if grad[-1] > 0:
            lr = min(lr, BOUNDARY_FRACTION * w[-1] / grad[-1])
        sq_norm = float(grad @ grad)
        for _ in range(MAX_BACKTRACKS):
            candidate = w - lr * grad
            new_value = loss(candidate)
            if np.isfinite(new_value) and new_value <= value - ARMIJO_C * lr * sq_norm:
                break
            lr /= 2
        else:
            break
        w, value = candidate, new_value
    return w


def cfl_train(
    datasets: tp.Sequence[ClientDataset],
    cfg: CflConfig,
    verbose: int = 0,
) -> ClientParams:
    """
    Train a single global model by federated averaging.

    Every round each client starts from the global model and makes `cfg.local_steps`
    gradient descent steps on its per-sample average negative log-likelihood, with
    backtracking from `cfg.local_lr`. Server replaces the global model with
    the average of client models weighted by client sample sizes.

    Parameters
    ----------
    datasets : sequence(ClientDataset)
        Training data of every client.
    cfg : CflConfig
        Configuration.
    verbose : int, default 0
        Degree of verbose output. If 0, no output will be provided.

    Returns
    -------
    ClientParams
        Parameters shared by all clients.

    Raises
    ------
    DivergenceError
        If global parameters become non-finite.
    """
    if not datasets:
        raise ValueError("At least one client dataset is required")
    if len({ds.n_features for ds in datasets}) != 1:
        raise ValueError("All clients must have the same number of features")

    sizes = np.array([ds.n_samples for ds in datasets], dtype=np.float64)
    shares = sizes / sizes.sum()
    w_global = _init_global(datasets[0].n_features + 2, cfg.seed)
    for round_idx in tqdm(range(1, cfg.rounds + 1), disable=verbose == 0):
        local = np.vstack([_local_update(w_global, ds, cfg) for ds in datasets])
        w_new = shares @ local
        if not np.all(np.isfinite(w_new)) or w_new[-1] <= 0:
            raise DivergenceError("Federated averaging", round_idx)
        change = float(np.max(np.abs(w_new - w_global)))
        w_global = w_new
        if change < cfg.early_stop_tol:
            logger.info("Federated averaging early stop at round %d", round_idx)
            break
    return untransform(TransformedParams.from_vector(w_global))


class CFLModel(ModelBase):
    """
    Conventional federated learning: one model shared by all clients.

    Parameters
    ----------
    rounds : int, default 200
        Maximum number of communication rounds.
    local_steps : int, default 5
        Gradient descent steps per client per round.
    local_lr : float, default 0.1
        Initial local learning rate.
    early_stop_tol : float, default 1e-6
        Early stopping tolerance on global parameter change.
    seed : int, default 0
        Seed of initialization.
    verbose : int, default 0
        Degree of verbose output. If 0, no output will be provided.
    """

    method = "CFL"

    def __init__(
        self,
        rounds: int = 200,
        local_steps: int = 5,
        local_lr: float = 0.1,
        early_stop_tol: float = 1e-6,
        seed: int = 0,
        verbose: int = 0,
    ):
        super().__init__(verbose=verbose)
        self.config = CflConfig(rounds, local_steps, local_lr, early_stop_tol, seed)

    @classmethod
    def from_config(cls, config: CflConfig, verbose: int = 0) -> "CFLModel":
        """Create model from config object."""
        return cls(config.rounds, config.local_steps, config.local_lr, config.early_stop_tol, config.seed, verbose)

    def _fit(self, datasets: tp.Sequence[ClientDataset]) -> None:  # type: ignore
        shared = cfl_train(datasets, self.config, self.verbose)
        self.params_ = {ds.client_id: shared for ds in datasets}
