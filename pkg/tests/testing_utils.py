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

import typing as tp

import numpy as np

from pfltools.dataset import ClientDataset
from pfltools.models import ClientParams, TransformedParams


def assert_params_close(actual: ClientParams, expected: ClientParams, atol: float = 1e-8) -> None:
    assert isinstance(actual, ClientParams)
    np.testing.assert_allclose(actual.beta, expected.beta, atol=atol)
    np.testing.assert_allclose(actual.sigma, expected.sigma, atol=atol)


def assert_datasets_equal(actual: ClientDataset, expected: ClientDataset) -> None:
    assert actual.client_id == expected.client_id
    np.testing.assert_equal(actual.features, expected.features)
    np.testing.assert_equal(actual.responses, expected.responses)


def numerical_grad(func: tp.Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for k in range(x.size):
        shift = np.zeros_like(x)
        shift[k] = step
        grad[k] = (func(x + shift) - func(x - shift)) / (2 * step)
    return grad


def vector_objective(
    func: tp.Callable[[TransformedParams, ClientDataset], float], data: ClientDataset
) -> tp.Callable[[np.ndarray], float]:
    return lambda w: func(TransformedParams.from_vector(w), data)
