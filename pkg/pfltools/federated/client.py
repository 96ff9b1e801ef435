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

"""Client side of personalized federated training: proximal refinement on local data."""

from __future__ import annotations

import typing as tp

import numpy as np

from pfltools.models.newton import newton_minimize
from pfltools.models.params import TransformedParams
from pfltools.models.sev import nll, nll_grad, nll_hessian
from pfltools.types import ParamVector

from .config import FedConfig

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset


def prox_objective(w: ParamVector, data: ClientDataset, anchor: ParamVector, prox_coef: float) -> float:
    """Value of ``l(w) + prox_coef / 2 * ||w - anchor||^2``."""
    diff = w - anchor
    return nll(TransformedParams.from_vector(w), data) + 0.5 * prox_coef * float(diff @ diff)


def prox_residual(params_t: TransformedParams, data: ClientDataset, cloud: TransformedParams, cfg: FedConfig) -> float:
    """Infinity norm of the gradient of the proximal objective at `params_t`."""
    grad = nll_grad(params_t, data) + cfg.prox_coef * (params_t.to_vector() - cloud.to_vector())
    return float(np.max(np.abs(grad)))


def prox_step(data: ClientDataset, cloud: TransformedParams, cfg: FedConfig) -> TransformedParams:
    """
    Refine personalized cloud model on client data.

    Solves ``argmin_w l(w) + lambda_ / (2 alpha) ||w - cloud||^2`` by damped Newton method
    warm-started at `cloud`.

    Parameters
    ----------
    data : ClientDataset
        Client data.
    cloud : TransformedParams
        Personalized cloud model received from the server.
    cfg : FedConfig
        Configuration: ``lambda_``, ``alpha``, ``inner_tol``, ``inner_max_iter``.

    Returns
    -------
    TransformedParams

    Raises
    ------
    ConvergenceError
        If inner solver did not reach `cfg.inner_tol` in `cfg.inner_max_iter` steps.
    """
    anchor = cloud.to_vector()
    if anchor.size != data.n_features + 2:
        raise ValueError(f"Cloud model has {anchor.size} parameters, client data needs {data.n_features + 2}")
    coef = cfg.prox_coef
    eye = np.eye(anchor.size)

    result = newton_minimize(
        lambda w: prox_objective(w, data, anchor, coef),
        lambda w: nll_grad(TransformedParams.from_vector(w), data) + coef * (w - anchor),
        lambda w: nll_hessian(TransformedParams.from_vector(w), data) + coef * eye,
        anchor,
        tol=cfg.inner_tol,
        max_iter=cfg.inner_max_iter,
        solver_name=f"Proximal update of client '{data.client_id}'",
    )
    return TransformedParams.from_vector(result.x)
