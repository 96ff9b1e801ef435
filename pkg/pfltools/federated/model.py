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

"""Personalized federated model."""

from __future__ import annotations

import typing as tp

from pfltools.models.base import ModelBase
from pfltools.models.similarity import KernelKind, make_kernel

from .config import FedConfig
from .engine import FedResult, run_federated

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset


class PFLModel(ModelBase):
    """
    Personalized federated model: every client gets own parameters pulled towards similar clients.

    Parameters
    ----------
    lambda_ : float
        Weight of the similarity penalty and of the proximal term.
    alpha : float
        Gradient step on the similarity penalty.
    kernel : {"neg_exp", "mcp", "scad_std"}, default "neg_exp"
        Similarity function family.
    theta : float, default 1.0
        Shape parameter of similarity function.
    lambda_p : float, default 1.0
        Kernel-internal scale for `mcp` and `scad_std`.
    max_iter : int, default 200
        Maximum number of federated iterations.
    inner_tol : float, default 1e-8
        Tolerance of client updates.
    inner_max_iter : int, default 100
        Maximum number of Newton steps in client updates.
    early_stop_tol : float, default 1e-6
        Early stopping tolerance on parameter change.
    seed : int, default 0
        Seed of initialization.
    verbose : int, default 0
        Degree of verbose output. If 0, no output will be provided.
    """

    method = "PFL"

    def __init__(
        self,
        lambda_: float,
        alpha: float,
        kernel: tp.Union[str, KernelKind] = KernelKind.NEG_EXP,
        theta: float = 1.0,
        lambda_p: float = 1.0,
        max_iter: int = 200,
        inner_tol: float = 1e-8,
        inner_max_iter: int = 100,
        early_stop_tol: float = 1e-6,
        seed: int = 0,
        verbose: int = 0,
    ):
        super().__init__(verbose=verbose)
        self.config = FedConfig(
            lambda_=lambda_,
            alpha=alpha,
            kernel=make_kernel(kernel, theta, lambda_p),
            max_iter=max_iter,
            inner_tol=inner_tol,
            inner_max_iter=inner_max_iter,
            early_stop_tol=early_stop_tol,
            seed=seed,
        )
        self.result_: tp.Optional[FedResult] = None

    @classmethod
    def from_config(cls, config: FedConfig, verbose: int = 0) -> "PFLModel":
        """Create model from config object."""
        model = cls(config.lambda_, config.alpha, verbose=verbose)
        model.config = config
        return model

    def _fit(self, datasets: tp.Sequence[ClientDataset], keep_trace: bool = False) -> None:  # type: ignore
        self.result_ = run_federated(datasets, self.config, keep_trace=keep_trace, verbose=self.verbose)
        self.params_ = dict(self.result_.params)
