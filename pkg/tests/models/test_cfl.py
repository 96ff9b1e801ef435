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

import numpy as np
import pytest

from pfltools.dataset import ClientDataset
from pfltools.exceptions import ConfigError
from pfltools.federated import PFLModel
from pfltools.metrics import calc_client_mape
from pfltools.models import CflConfig, CFLModel, ClientParams, cfl_train, local_mle
from tests.models.data import TRUE_PARAMS, make_clients, make_sev_dataset
from tests.testing_utils import assert_params_close


class TestCflConfig:
    @pytest.mark.parametrize(
        "kwargs",
        (
            {"rounds": 0},
            {"local_steps": 0},
            {"local_lr": -0.1},
            {"early_stop_tol": -1.0},
        ),
    )
    def test_raises_on_bad_values(self, kwargs: dict) -> None:
        with pytest.raises(ConfigError):
            CflConfig(**kwargs)


class TestCflTrain:
    def test_approaches_pooled_estimate(self) -> None:
        datasets = make_clients([TRUE_PARAMS] * 3, 200, seed=11)
        cfg = CflConfig(rounds=5000, local_steps=1, early_stop_tol=1e-12)
        pooled = local_mle(ClientDataset.concat(datasets))
        assert_params_close(cfl_train(datasets, cfg), pooled, atol=0.02)

    def test_identical_clients_are_one_client(self) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 30, seed=5)
        copies = [ClientDataset(data.features, data.responses, client_id=i) for i in range(3)]
        cfg = CflConfig(rounds=50)
        assert_params_close(cfl_train(copies, cfg), cfl_train([data], cfg), atol=1e-8)

    def test_is_seeded(self) -> None:
        datasets = make_clients([TRUE_PARAMS] * 2, 20)
        first = cfl_train(datasets, CflConfig(rounds=3, seed=1))
        second = cfl_train(datasets, CflConfig(rounds=3, seed=1))
        other = cfl_train(datasets, CflConfig(rounds=3, seed=2))
        assert_params_close(first, second, atol=0)
        assert not np.allclose(first.beta, other.beta)

    def test_single_client_gives_local_estimate(self) -> None:
        data = make_sev_dataset(ClientParams([0.0, 0.5], 1.0), 200, seed=6)
        cfg = CflConfig(rounds=2000, local_steps=5, early_stop_tol=1e-12)
        assert_params_close(cfl_train([data], cfg), local_mle(data), atol=1e-3)

    def test_loses_to_personalized_model_on_heterogeneous_clients(self) -> None:
        truths = (ClientParams([1.0, 0.5], 0.3), ClientParams([2.0, -0.5], 0.3))
        cfl_errors, pfl_errors = [], []
        for seed in range(20):
            train = make_clients(truths, 30, seed=100 * seed)
            test = make_clients(truths, 50, seed=100 * seed + 50)
            cfl = CFLModel(rounds=100).fit(train)
            pfl = PFLModel(lambda_=0.1, alpha=0.01).fit(train)
            for model, errors in ((cfl, cfl_errors), (pfl, pfl_errors)):
                for ds in test:
                    errors.append(calc_client_mape(model.predict_ttf(ds.client_id, ds.features), np.exp(ds.responses)))
        assert np.mean(pfl_errors) < np.mean(cfl_errors)

    def test_raises_without_clients(self) -> None:
        with pytest.raises(ValueError, match="At least one"):
            cfl_train([], CflConfig())


class TestCFLModel:
    def test_all_clients_share_parameters(self) -> None:
        datasets = make_clients([TRUE_PARAMS] * 3, 20)
        model = CFLModel(rounds=20).fit(datasets)
        shared = model.get_params("c0")
        for ds in datasets[1:]:
            assert model.get_params(ds.client_id) is shared
        assert set(model.params_to_dataframe()["method"]) == {"CFL"}

    def test_from_config(self) -> None:
        cfg = CflConfig(rounds=7, local_steps=2, local_lr=0.05, early_stop_tol=0.0, seed=3)
        assert CFLModel.from_config(cfg).config == cfg
