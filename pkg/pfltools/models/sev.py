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
Smallest extreme value (SEV) log-location-scale regression.

Loss, derivatives and predictions are written in the transformed parameters
``beta_t = beta / sigma``, ``sigma_t = 1 / sigma`` where the negative log-likelihood is convex.
"""

from __future__ import annotations

import logging
import typing as tp

import numpy as np

from pfltools.types import FeatureMatrix, FloatArray, ParamVector

from .params import ClientParams, TransformedParams

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset

logger = logging.getLogger(__name__)

EXP_CLAMP = 700.0


class LocationScaleDistribution:
    """
    Standard member of a location-scale family.

    Warning: This class should not be used directly.
    Use derived classes instead.
    """

    name: str = NotImplemented

    def logpdf(self, eps: tp.Any) -> tp.Any:
        """Log-density of the standard distribution."""
        raise NotImplementedError()

    def pdf(self, eps: tp.Any) -> tp.Any:
        """Density of the standard distribution."""
        return np.exp(self.logpdf(eps))

    def cdf(self, eps: tp.Any) -> tp.Any:
        """Cumulative distribution function."""
        raise NotImplementedError()

    def quantile(self, p: tp.Any) -> tp.Any:
        """Quantile function (inverse of `cdf`)."""
        raise NotImplementedError()

    def sample(self, size: tp.Union[int, tp.Tuple[int, ...]], rng: np.random.Generator) -> np.ndarray:
        """Draw from the standard distribution by inversion."""
        return self.quantile(rng.uniform(np.finfo(float).tiny, 1.0, size=size))


class SEVDistribution(LocationScaleDistribution):
    """Standard smallest extreme value distribution with density ``exp(eps - exp(eps))``."""

    name = "sev"

    def logpdf(self, eps: tp.Any) -> tp.Any:
        eps = np.asarray(eps, dtype=np.float64)
        return eps - np.exp(eps)

    def pdf(self, eps: tp.Any) -> tp.Any:
        eps = np.asarray(eps, dtype=np.float64)
        return np.exp(eps - np.exp(eps))

    def cdf(self, eps: tp.Any) -> tp.Any:
        eps = np.asarray(eps, dtype=np.float64)
        return -np.expm1(-np.exp(eps))

    def quantile(self, p: tp.Any) -> tp.Any:
        p = np.asarray(p, dtype=np.float64)
        if np.any((p <= 0) | (p >= 1)) or np.any(np.isnan(p)):
            raise ValueError("Probability must be in the open interval (0, 1)")
        return np.log(-np.log1p(-p))


SEV = SEVDistribution()


def sev_pdf(eps: float) -> float:
    """
    SEV density ``exp(eps - exp(eps))``.

    Examples
    --------
    >>> round(sev_pdf(0.0), 7)
    0.3678794
    """
    return float(SEV.pdf(eps))


def sev_cdf(eps: float) -> float:
    """
    SEV distribution function ``1 - exp(-exp(eps))``.

    Examples
    --------
    >>> round(sev_cdf(0.0), 7)
    0.6321206
    """
    return float(SEV.cdf(eps))


def sev_quantile(p: float) -> float:
    """
    SEV quantile ``log(-log(1 - p))``.

    Parameters
    ----------
    p : float
        Probability in ``(0, 1)``.

    Returns
    -------
    float

    Raises
    ------
    ValueError
        If `p` is outside of ``(0, 1)``.

    Examples
    --------
    >>> round(sev_quantile(0.5), 7)
    -0.3665129
    """
    return float(SEV.quantile(p))


def _standardized_residuals(params_t: TransformedParams, features: FeatureMatrix, responses: FloatArray) -> FloatArray:
    if params_t.sigma_t <= 0:
        raise ValueError("`sigma_t` must be positive")
    if features.shape[1] != params_t.beta_t.size:
        raise ValueError(
            f"Parameters have {params_t.beta_t.size} coefficients, but features have {features.shape[1]} columns"
        )
    return responses * params_t.sigma_t - features @ params_t.beta_t


def _clamped_exp(z: FloatArray) -> FloatArray:
    n_clamped = int(np.count_nonzero(z > EXP_CLAMP))
    if n_clamped:
        logger.warning("exp(z) overflow guard: %d standardized residuals clamped at %.0f", n_clamped, EXP_CLAMP)
        z = np.minimum(z, EXP_CLAMP)
    return np.exp(z)


def nll(params_t: TransformedParams, data: ClientDataset) -> float:
    """
    Negative log-likelihood of a client's data in transformed parameters.

    ``l(w) = -sum_j [log(sigma_t) + z_j - exp(z_j)]`` with ``z_j = y_j * sigma_t - x_j^T beta_t``.

    Parameters
    ----------
    params_t : TransformedParams
        Transformed parameters.
    data : ClientDataset
        Client data.

    Returns
    -------
    float

    Examples
    --------
    >>> from pfltools.dataset import ClientDataset
    >>> data = ClientDataset([[1.0]], [0.0])
    >>> nll(TransformedParams([0.0], 1.0), data)
    1.0
    """
    z = _standardized_residuals(params_t, data.features, data.responses)
    return float(-np.sum(np.log(params_t.sigma_t) + z - _clamped_exp(z)))


def nll_grad(params_t: TransformedParams, data: ClientDataset) -> ParamVector:
    """
    Gradient of `nll` in order ``(beta_t_0, ..., beta_t_K, sigma_t)``.

    Parameters
    ----------
    params_t : TransformedParams
        Transformed parameters.
    data : ClientDataset
        Client data.

    Returns
    -------
    np.ndarray
        Vector of length ``K + 2``.
    """
    x, y = data.features, data.responses
    z = _standardized_residuals(params_t, x, y)
    resid = 1.0 - _clamped_exp(z)
    grad_beta = x.T @ resid
    grad_sigma = -np.sum(1.0 / params_t.sigma_t + y * resid)
    return np.append(grad_beta, grad_sigma)


def nll_hessian(params_t: TransformedParams, data: ClientDataset) -> np.ndarray:
    """
    Hessian of `nll` in order ``(beta_t_0, ..., beta_t_K, sigma_t)``.

    Equals ``sum_j exp(z_j) v_j v_j^T + n / sigma_t^2 e e^T`` with ``v_j = (x_j, -y_j)``,
    so it is positive semidefinite everywhere.

    Parameters
    ----------
    params_t : TransformedParams
        Transformed parameters.
    data : ClientDataset
        Client data.

    Returns
    -------
    np.ndarray
        Symmetric matrix ``(K + 2) x (K + 2)``.
    """
    x, y = data.features, data.responses
    z = _standardized_residuals(params_t, x, y)
    ez = _clamped_exp(z)
    v = np.hstack((x, -y[:, None]))
    hess = (v * ez[:, None]).T @ v
    hess[-1, -1] += data.n_samples / params_t.sigma_t**2
    return (hess + hess.T) / 2


def log_density(params: ClientParams, data: ClientDataset) -> FloatArray:
    """
    Log-density of every response under natural parameters.

    ``log f_Y(y) = -log(sigma) + log f((y - x^T beta) / sigma)`` with SEV ``f``.
    """
    eps = (data.responses - data.features @ params.beta) / params.sigma
    return -np.log(params.sigma) + SEV.logpdf(eps)


def predict_quantiles(params: ClientParams, features: FeatureMatrix, p: float = 0.5) -> FloatArray:
    """
    Quantiles of the predicted log failure time for every row of `features`.

    Parameters
    ----------
    params : ClientParams
        Natural parameters.
    features : np.ndarray
        Matrix ``n x (K + 1)`` with leading column of ones.
    p : float, default 0.5
        Probability in ``(0, 1)``.

    Returns
    -------
    np.ndarray
        ``X beta + sigma * q_SEV(p)``.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != params.beta.size:
        raise ValueError(
            f"Parameters have {params.beta.size} coefficients, but features have {features.shape[1]} columns"
        )
    return features @ params.beta + params.sigma * SEV.quantile(p)


def predict_quantile(params: ClientParams, x: tp.Union[tp.Sequence[float], np.ndarray], p: float = 0.5) -> float:
    """
    Quantile of the predicted log failure time for a single feature vector.

    Parameters
    ----------
    params : ClientParams
        Natural parameters.
    x : array-like
        Feature vector of length ``K + 1`` with leading 1.
    p : float, default 0.5
        Probability in ``(0, 1)``; the median is the point prediction.

    Returns
    -------
    float

    Examples
    --------
    >>> round(predict_quantile(ClientParams([2.0], 1.0), [1.0], 0.5), 7)
    1.6334871
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x[0] != 1.0:
        raise ValueError("Feature vector must be 1d with leading 1")
    return float(predict_quantiles(params, x[None, :], p)[0])


def predict_ttf(params: ClientParams, features: FeatureMatrix) -> FloatArray:
    """Median failure time on the original (positive) time scale."""
    return np.exp(predict_quantiles(params, features, 0.5))
