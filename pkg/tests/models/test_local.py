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
import pandas as pd
import pytest

from pfltools import Columns
from pfltools.dataset import ClientDataset
from pfltools.exceptions import DegenerateFitWarning, NotFittedError, UnderdeterminedError
from pfltools.models import (
    ClientParams,
    LocalModel,
    local_mle,
    nll,
    nll_grad,
    params_from_dataframe,
    predict_quantiles,
    transform,
)
from tests.models.data import TRUE_PARAMS, make_clients, make_sev_dataset
from tests.testing_utils import assert_params_close


class TestLocalMle:
    def test_recovers_parameters(self) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 5000, seed=7)
        assert_params_close(local_mle(data), TRUE_PARAMS, atol=0.05)

    def test_gradient_vanishes_at_estimate(self) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 40, seed=2)
        params = local_mle(data)
        assert np.max(np.abs(nll_grad(transform(params), data))) < 1e-5

    def test_predictions_do_not_depend_on_feature_units(self) -> None:
        data = make_sev_dataset(ClientParams([1.0, 0.5, -0.3], 0.4), 60, seed=3)
        scale, shift = np.array([2.5, -0.5]), np.array([1.0, 3.0])
        rescaled = ClientDataset.from_features(data.features[:, 1:] * scale + shift, data.responses)
        params, rescaled_params = local_mle(data), local_mle(rescaled)

        assert rescaled_params.sigma == pytest.approx(params.sigma, abs=1e-6)
        np.testing.assert_allclose(rescaled_params.beta[1:], params.beta[1:] / scale, atol=1e-6)
        np.testing.assert_allclose(
            predict_quantiles(rescaled_params, rescaled.features, 0.5),
            predict_quantiles(params, data.features, 0.5),
            atol=1e-6,
        )

    def test_no_perturbation_lowers_likelihood(self) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 40, seed=9)
        params = local_mle(data)
        best = nll(transform(params), data)
        rng = np.random.default_rng(0)
        for _ in range(100):
            beta = params.beta + rng.normal(scale=0.05, size=params.beta.size)
            sigma = params.sigma * np.exp(rng.normal(scale=0.05))
            assert nll(transform(ClientParams(beta, sigma)), data) >= best - 1e-9

    def test_raises_when_underdetermined(self) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 2, seed=4)
        with pytest.raises(UnderdeterminedError) as e:
            local_mle(data)
        assert (e.value.n_samples, e.value.n_params) == (2, 3)

    def test_warns_on_exact_linear_fit(self) -> None:
        x = np.array([0.0, 1.0, 2.0, 3.0])
        data = ClientDataset.from_features(x, 1 + 2 * x, client_id="exact")
        with pytest.warns(DegenerateFitWarning, match="exact"):
            params = local_mle(data)
        np.testing.assert_allclose(params.beta, [1.0, 2.0], atol=1e-10)
        assert params.sigma < 1e-10


class TestLocalModel:
    def setup_method(self) -> None:
        self.datasets = make_clients([TRUE_PARAMS, ClientParams([2.0, -0.5], 0.5)], 30)

    def test_fits_every_client_separately(self) -> None:
        model = LocalModel().fit(self.datasets)
        for ds in self.datasets:
            assert_params_close(model.get_params(ds.client_id), local_mle(ds))

    def test_predict(self) -> None:
        model = LocalModel().fit(self.datasets)
        features = self.datasets[0].features[:5]
        median = model.predict("c0", features)
        assert median.shape == (5,)
        np.testing.assert_allclose(model.predict_ttf("c0", features), np.exp(median))
        assert np.all(model.predict("c0", features, p=0.9) > median)

    def test_raises_when_not_fitted(self) -> None:
        with pytest.raises(NotFittedError, match="LocalModel isn't fitted"):
            LocalModel().get_params("c0")

    def test_raises_on_unknown_client(self) -> None:
        model = LocalModel().fit(self.datasets)
        with pytest.raises(KeyError, match="Unknown client 'c5'"):
            model.get_params("c5")

    def test_raises_on_duplicated_clients(self) -> None:
        with pytest.raises(ValueError, match="unique"):
            LocalModel().fit([self.datasets[0], self.datasets[0]])

    def test_raises_on_feature_mismatch(self) -> None:
        wide = ClientDataset.from_features(np.ones((6, 2)), np.zeros(6), client_id="wide")
        with pytest.raises(ValueError, match="same number of features"):
            LocalModel().fit([self.datasets[0], wide])

    def test_params_table(self) -> None:
        model = LocalModel().fit(self.datasets)
        df = model.params_to_dataframe()
        assert list(df.columns) == [Columns.Client, Columns.Method, "beta_0", "beta_1", Columns.Sigma]
        assert set(df[Columns.Method]) == {"Local"}
        restored = params_from_dataframe(df)
        for ds in self.datasets:
            assert_params_close(restored[ds.client_id], model.get_params(ds.client_id), atol=0)

    def test_params_table_misses_columns(self) -> None:
        with pytest.raises(KeyError, match="sigma"):
            params_from_dataframe(pd.DataFrame({Columns.Client: ["a"], "beta_0": [1.0]}))
