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

"""Independent per-client maximum likelihood estimation."""

from __future__ import annotations

import logging
import typing as tp
import warnings

import numpy as np
from tqdm.auto import tqdm

from pfltools.exceptions import DegenerateFitWarning, UnderdeterminedError

from .base import ModelBase
from .newton import newton_minimize
from .params import ClientParams, TransformedParams, untransform
from .sev import nll, nll_grad, nll_hessian

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
SEV_STD_FACTOR = np.pi / np.sqrt(6)
MAX_SIGMA_T = 1e12
DEGENERATE_SIGMA = 1e-12


def _ols_start(data: ClientDataset) -> tp.Tuple[np.ndarray, float]:
    beta, *_ = np.linalg.lstsq(data.features, data.responses, rcond=None)
    resid = data.responses - data.features @ beta
    sigma = float(np.std(resid)) / SEV_STD_FACTOR
    return beta, sigma


def local_mle(data: ClientDataset, tol: float = 1e-8, max_iter: int = 100) -> ClientParams:
    """
    Fit SEV regression of one client by maximum likelihood.

    Newton method with line search runs in transformed parameters starting from
    least-squares estimates moved to the SEV location.

    Parameters
    ----------
    data : ClientDataset
        Client data with at least ``K + 2`` rows.
    tol : float, default 1e-8
        Tolerance for infinity norm of the gradient.
    max_iter : int, default 100
        Maximum number of Newton steps.

    Returns
    -------
    ClientParams
        Natural parameters. If the fitted scale collapses to zero `DegenerateFitWarning` is issued.

    Raises
    ------
    UnderdeterminedError
        If dataset has less than ``K + 2`` rows.
    ConvergenceError
        If solver did not reach tolerance.
    """
    n_params = data.n_features + 2
    if data.n_samples < n_params:
        raise UnderdeterminedError(data.n_samples, n_params)

    beta, sigma = _ols_start(data)
    scale = 1.0 + float(np.std(data.responses))
    if sigma <= DEGENERATE_SIGMA * scale:
        warnings.warn(
            f"Responses of client '{data.client_id}' are fitted exactly by a linear function, scale is degenerate",
            DegenerateFitWarning,
        )
        return ClientParams(beta, DEGENERATE_SIGMA)

    beta = beta.copy()
    beta[0] += EULER_GAMMA * sigma
    x0 = np.append(beta / sigma, 1.0 / sigma)

    result = newton_minimize(
        lambda w: nll(TransformedParams.from_vector(w), data),
        lambda w: nll_grad(TransformedParams.from_vector(w), data),
        lambda w: nll_hessian(TransformedParams.from_vector(w), data),
        x0,
        tol=tol,
        max_iter=max_iter,
        upper_bound=MAX_SIGMA_T,
        solver_name="Local MLE",
    )
    if result.escaped:
        warnings.warn(
            f"Scale estimate of client '{data.client_id}' collapsed towards zero",
            DegenerateFitWarning,
        )
    logger.debug("Local MLE of client '%s' converged in %d steps", data.client_id, result.n_iter)
    return untransform(TransformedParams.from_vector(result.x))


class LocalModel(ModelBase):
    """
    Independent model for every client fitted by maximum likelihood on its own data only.

    Parameters
    ----------
    tol : float, default 1e-8
        Tolerance for infinity norm of the likelihood gradient.
    max_iter : int, default 100
        Maximum number of Newton steps.
    verbose : int, default 0
        Degree of verbose output. If 0, no output will be provided.

    Examples
    --------
    >>> from pfltools.dataset import ClientDataset
    >>> rng = np.random.default_rng(0)
    >>> x = rng.normal(size=(30, 1))
    >>> y = 1.0 + 0.5 * x[:, 0] + np.log(-np.log(rng.uniform(size=30)))
    >>> model = LocalModel().fit([ClientDataset.from_features(x, y, "a")])
    >>> model.get_params("a").beta.shape
    (2,)
    """

    method = "Local"

    def __init__(self, tol: float = 1e-8, max_iter: int = 100, verbose: int = 0):
        super().__init__(verbose=verbose)
        self.tol = tol
        self.max_iter = max_iter

    def _fit(self, datasets: tp.Sequence[ClientDataset]) -> None:  # type: ignore
        self.params_ = {
            ds.client_id: local_mle(ds, self.tol, self.max_iter) for ds in tqdm(datasets, disable=self.verbose == 0)
        }
