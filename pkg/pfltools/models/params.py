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

"""Parameter sets of the log-location-scale regression and their convex reparametrization."""

import typing as tp

import attr
import numpy as np

from pfltools.types import ParamVector


def _as_vector(value: tp.Any) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    arr.setflags(write=False)
    return arr


def _check_finite_vector(_: tp.Any, attribute: "attr.Attribute[np.ndarray]", value: np.ndarray) -> None:
    if value.ndim != 1 or value.size < 1:
        raise ValueError(f"`{attribute.name}` must be a nonempty vector")
    if not np.all(np.isfinite(value)):
        raise ValueError(f"`{attribute.name}` must be finite")


def _check_positive(_: tp.Any, attribute: "attr.Attribute[float]", value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"`{attribute.name}` must be positive and finite, got {value}")


@attr.s(frozen=True, slots=True)
class ClientParams:
    """
    Regression coefficients and scale of one client in the natural parametrization.

    Parameters
    ----------
    beta : np.ndarray
        Coefficients ``(beta_0, ..., beta_K)``, intercept first.
    sigma : float
        Positive scale in response units.
    """

    beta: np.ndarray = attr.ib(converter=_as_vector, validator=_check_finite_vector)
    sigma: float = attr.ib(converter=float, validator=_check_positive)

    @property
    def n_features(self) -> int:
        """Number of features ``K`` (intercept excluded)."""
        return self.beta.size - 1


@attr.s(frozen=True, slots=True)
class TransformedParams:
    """
    Parameters in the convex reparametrization ``beta_t = beta / sigma``, ``sigma_t = 1 / sigma``.

    Parameters
    ----------
    beta_t : np.ndarray
        Transformed coefficients, intercept first.
    sigma_t : float
        Positive transformed scale (inverse of the natural scale).
    """

    beta_t: np.ndarray = attr.ib(converter=_as_vector, validator=_check_finite_vector)
    sigma_t: float = attr.ib(converter=float, validator=_check_positive)

    @property
    def n_features(self) -> int:
        """Number of features ``K`` (intercept excluded)."""
        return self.beta_t.size - 1

    def to_vector(self) -> ParamVector:
        """
        Flatten into vector ``(beta_t_0, ..., beta_t_K, sigma_t)``.

        Examples
        --------
        >>> TransformedParams([1.0, 2.0], 0.5).to_vector()
        array([1. , 2. , 0.5])
        """
        return np.append(self.beta_t, self.sigma_t)

    @classmethod
    def from_vector(cls, vector: ParamVector) -> "TransformedParams":
        """Build from vector ``(beta_t_0, ..., beta_t_K, sigma_t)``."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.ndim != 1 or vector.size < 2:
            raise ValueError("Parameter vector must have at least 2 entries")
        return cls(vector[:-1].copy(), float(vector[-1]))


def transform(params: ClientParams) -> TransformedParams:
    """
    Map natural parameters to the convex parametrization.

    Parameters
    ----------
    params : ClientParams
        Natural parameters, ``sigma > 0``.

    Returns
    -------
    TransformedParams

    Examples
    --------
    >>> w = transform(ClientParams([2.0, 4.0], 2.0))
    >>> w.beta_t, w.sigma_t
    (array([1., 2.]), 0.5)
    """
    return TransformedParams(params.beta / params.sigma, 1.0 / params.sigma)


def untransform(params_t: TransformedParams) -> ClientParams:
    """
    Map transformed parameters back to ``(beta, sigma)``.

    Parameters
    ----------
    params_t : TransformedParams
        Transformed parameters, ``sigma_t > 0``.

    Returns
    -------
    ClientParams
    """
    sigma = 1.0 / params_t.sigma_t
    return ClientParams(params_t.beta_t * sigma, sigma)
