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
from pfltools.models import SEV, ClientParams
from pfltools.types import ClientId


def make_sev_dataset(
    params: ClientParams,
    n_samples: int,
    seed: int = 0,
    client_id: ClientId = 0,
    feature_scale: float = 1.0,
) -> ClientDataset:
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=feature_scale, size=(n_samples, params.n_features))
    features = np.hstack((np.ones((n_samples, 1)), x))
    responses = features @ params.beta + params.sigma * SEV.sample(n_samples, rng)
    return ClientDataset(features, responses, client_id)


def make_clients(
    params: tp.Sequence[ClientParams],
    n_samples: int,
    seed: int = 0,
) -> tp.List[ClientDataset]:
    return [make_sev_dataset(p, n_samples, seed + i, client_id=f"c{i}") for i, p in enumerate(params)]


TRUE_PARAMS = ClientParams([1.0, 0.5], 0.3)
