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

"""Configuration of personalized federated training."""

import attr
import numpy as np

from pfltools.exceptions import ConfigError
from pfltools.models.similarity import SimilarityKernel, make_kernel


def _positive(_: object, attribute: "attr.Attribute[float]", value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(f"`{attribute.name}` must be positive, got {value}")


def _nonnegative(_: object, attribute: "attr.Attribute[float]", value: float) -> None:
    if not np.isfinite(value) or value < 0:
        raise ConfigError(f"`{attribute.name}` must be nonnegative, got {value}")


def _positive_int(_: object, attribute: "attr.Attribute[int]", value: int) -> None:
    if value < 1:
        raise ConfigError(f"`{attribute.name}` must be positive integer, got {value}")


@attr.s(frozen=True, slots=True)
class FedConfig:
    """
    Hyperparameters of personalized federated training.

    Parameters
    ----------
    lambda_ : float
        Weight of the similarity penalty. The same value scales the proximal term of client updates:
        client ``i`` minimizes ``l_i(w) + lambda_ / (2 alpha) ||w - s_i||^2``.
        ``0`` turns off collaboration.
    alpha : float
        Gradient step on the similarity penalty. Aggregation weights use ``gamma = 2 * alpha``.
    kernel : SimilarityKernel, default negative exponential with ``theta = 1``
        Similarity function.
    max_iter : int, default 200
        Maximum number of federated iterations.
    inner_tol : float, default 1e-8
        Tolerance for infinity norm of the gradient in client updates.
    inner_max_iter : int, default 100
        Maximum number of Newton steps in client updates.
    early_stop_tol : float, default 1e-6
        Training stops when no client parameter changes more than this value (infinity norm).
    seed : int, default 0
        Seed of parameter initialization.

    Examples
    --------
    >>> FedConfig(lambda_=1.0, alpha=0.05).gamma
    0.1
    """

    lambda_: float = attr.ib(converter=float, validator=_nonnegative)
    alpha: float = attr.ib(converter=float, validator=_positive)
    kernel: SimilarityKernel = attr.ib(factory=lambda: make_kernel("neg_exp", 1.0))
    max_iter: int = attr.ib(default=200, converter=int, validator=_positive_int)
    inner_tol: float = attr.ib(default=1e-8, converter=float, validator=_positive)
    inner_max_iter: int = attr.ib(default=100, converter=int, validator=_positive_int)
    early_stop_tol: float = attr.ib(default=1e-6, converter=float, validator=_nonnegative)
    seed: int = attr.ib(default=0, converter=int)

    @property
    def gamma(self) -> float:
        """Aggregation weight scale ``2 * alpha``."""
        return 2 * self.alpha

    @property
    def prox_coef(self) -> float:
        """Coefficient ``lambda_ / alpha`` of the proximal term gradient."""
        return self.lambda_ / self.alpha

    def max_gamma(self, n_clients: int) -> float:
        """Largest ``gamma`` that keeps all self-weights nonnegative for `n_clients` clients."""
        if n_clients <= 1:
            return np.inf
        return 1.0 / ((n_clients - 1) * self.kernel.certificate.deriv_at_zero)

    def is_feasible(self, n_clients: int) -> bool:
        """Whether ``gamma * (m - 1) * A'(0) <= 1`` for ``m = n_clients``."""
        return self.gamma * (n_clients - 1) * self.kernel.certificate.deriv_at_zero <= 1.0

    def check_feasible(self, n_clients: int) -> None:
        """
        Check that aggregation weights are a convex combination for `n_clients` clients.

        Raises
        ------
        ConfigError
            If ``gamma * (m - 1) * A'(0) > 1``; message reports the largest admissible ``gamma``.
        """
        if not self.is_feasible(n_clients):
            raise ConfigError(
                f"Weight feasibility bound violated: gamma * (m - 1) * A'(0) = "
                f"{self.gamma * (n_clients - 1) * self.kernel.certificate.deriv_at_zero:.6g} > 1 "
                f"for m = {n_clients}; max admissible gamma is {self.max_gamma(n_clients):.6g} "
                f"(alpha <= {self.max_gamma(n_clients) / 2:.6g})"
            )
