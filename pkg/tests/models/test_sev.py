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

import logging
import typing as tp

import numpy as np
import pytest
from scipy import integrate, stats

from pfltools.dataset import ClientDataset
from pfltools.models import (
    SEV,
    ClientParams,
    TransformedParams,
    nll,
    nll_grad,
    nll_hessian,
    predict_quantile,
    predict_quantiles,
    predict_ttf,
    sev_cdf,
    sev_pdf,
    sev_quantile,
    transform,
)
from pfltools.models.sev import EXP_CLAMP, log_density
from tests.models.data import TRUE_PARAMS, make_sev_dataset
from tests.testing_utils import numerical_grad, vector_objective


class TestSEVDistribution:
    def test_density_integrates_to_cdf(self) -> None:
        mass, _ = integrate.quad(sev_pdf, -20, 5)
        assert mass == pytest.approx(sev_cdf(5) - sev_cdf(-20), abs=1e-9)

    @pytest.mark.parametrize("p", (1e-6, 0.1, 0.5, 0.632, 0.99))
    def test_quantile_inverts_cdf(self, p: float) -> None:
        assert sev_cdf(sev_quantile(p)) == pytest.approx(p, rel=1e-10)

    def test_matches_scipy_left_gumbel(self) -> None:
        eps = np.linspace(-6, 2, 17)
        np.testing.assert_allclose(SEV.pdf(eps), stats.gumbel_l.pdf(eps), rtol=1e-12)
        np.testing.assert_allclose(SEV.cdf(eps), stats.gumbel_l.cdf(eps), rtol=1e-10)

    @pytest.mark.parametrize("p", (0.0, 1.0, -0.5, 1.5, np.nan))
    def test_quantile_raises_outside_unit_interval(self, p: float) -> None:
        with pytest.raises(ValueError, match="open interval"):
            sev_quantile(p)

    def test_sample_is_seeded(self) -> None:
        first = SEV.sample(100, np.random.default_rng(3))
        second = SEV.sample(100, np.random.default_rng(3))
        np.testing.assert_equal(first, second)
        assert np.all(np.isfinite(first))


class TestLikelihood:
    def setup_method(self) -> None:
        self.data = make_sev_dataset(TRUE_PARAMS, 50, seed=1)
        self.point = transform(ClientParams([0.8, 0.4], 0.5))

    def test_single_row_value(self) -> None:
        data = ClientDataset([[1.0]], [0.0])
        params_t = TransformedParams([0.0], 1.0)
        assert nll(params_t, data) == 1.0
        np.testing.assert_allclose(nll_grad(params_t, data), [0.0, -1.0])
        np.testing.assert_allclose(nll_hessian(params_t, data), [[1.0, 0.0], [0.0, 1.0]])

    def test_equals_negative_log_density(self) -> None:
        natural = ClientParams(self.point.beta_t / self.point.sigma_t, 1 / self.point.sigma_t)
        expected = -np.sum(log_density(natural, self.data))
        assert nll(self.point, self.data) == pytest.approx(expected, rel=1e-10)

    def test_gradient_matches_finite_differences(self) -> None:
        w = self.point.to_vector()
        expected = numerical_grad(vector_objective(nll, self.data), w)
        np.testing.assert_allclose(nll_grad(self.point, self.data), expected, rtol=1e-5, atol=1e-5)

    def test_hessian_matches_finite_differences(self) -> None:
        w = self.point.to_vector()
        hess = nll_hessian(self.point, self.data)
        for k in range(w.size):
            expected_row = numerical_grad(lambda v: nll_grad(TransformedParams.from_vector(v), self.data)[k], w)
            np.testing.assert_allclose(hess[k], expected_row, rtol=1e-5, atol=1e-5)

    def test_hessian_is_positive_semidefinite(self) -> None:
        hess = nll_hessian(self.point, self.data)
        np.testing.assert_allclose(hess, hess.T)
        assert np.linalg.eigvalsh(hess).min() > -1e-10

    def test_dimension_mismatch_raises(self) -> None:
        with pytest.raises(ValueError, match="coefficients"):
            nll(TransformedParams([0.0, 1.0, 2.0], 1.0), self.data)

    def test_overflow_guard_logs_warning(self, caplog: pytest.LogCaptureFixture) -> None:
        data = ClientDataset([[1.0]], [EXP_CLAMP + 300])
        with caplog.at_level(logging.WARNING):
            value = nll(TransformedParams([0.0], 1.0), data)
        assert np.isfinite(value)
        assert "overflow guard" in caplog.text


def _random_instance(seed: int) -> tp.Tuple[TransformedParams, ClientDataset]:
    rng = np.random.default_rng(seed)
    n_features = int(rng.integers(1, 4))
    truth = ClientParams(rng.normal(size=n_features + 1), rng.uniform(0.3, 2.0))
    data = make_sev_dataset(truth, int(rng.integers(5, 40)), seed=seed, feature_scale=rng.uniform(0.5, 2.0))
    w = transform(truth).to_vector() + rng.normal(scale=0.2, size=n_features + 2)
    w[-1] = abs(w[-1]) + 0.1
    return TransformedParams.from_vector(w), data


def _grad_component(data: ClientDataset, k: int) -> tp.Callable[[np.ndarray], float]:
    return lambda v: float(nll_grad(TransformedParams.from_vector(v), data)[k])


class TestLikelihoodDerivatives:
    def test_gradient_matches_finite_differences_on_random_instances(self) -> None:
        for seed in range(100):
            point, data = _random_instance(seed)
            grad = nll_grad(point, data)
            expected = numerical_grad(vector_objective(nll, data), point.to_vector())
            assert np.linalg.norm(grad - expected) <= 1e-5 * max(1.0, np.linalg.norm(expected)), seed

    def test_hessian_matches_finite_differences_on_random_instances(self) -> None:
        for seed in range(100):
            point, data = _random_instance(seed)
            w = point.to_vector()
            hess = nll_hessian(point, data)
            expected = np.vstack([numerical_grad(_grad_component(data, k), w) for k in range(w.size)])
            assert np.linalg.norm(hess - expected) <= 1e-4 * max(1.0, np.linalg.norm(expected)), seed

    def test_hessian_is_positive_semidefinite_on_random_instances(self) -> None:
        for seed in range(1000):
            point, data = _random_instance(seed)
            eigenvalues = np.linalg.eigvalsh(nll_hessian(point, data))
            assert eigenvalues.min() >= -1e-10 * max(1.0, eigenvalues.max()), seed


class TestQuantileCoverage:
    @pytest.mark.parametrize("p", (0.1, 0.5, 0.9))
    def test_predicted_quantile_covers_share_p(self, p: float) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 100_000, seed=17)
        quantiles = predict_quantiles(TRUE_PARAMS, data.features, p)
        assert np.mean(data.responses <= quantiles) == pytest.approx(p, abs=0.005)

    @pytest.mark.parametrize("p", (0.01, 0.5, 0.99))
    def test_quantiles_collapse_to_location_for_vanishing_scale(self, p: float) -> None:
        features = np.array([[1.0, -2.0], [1.0, 0.0], [1.0, 3.5]])
        location = features @ TRUE_PARAMS.beta
        for sigma in (1e-3, 1e-6, 1e-12):
            quantiles = predict_quantiles(ClientParams(TRUE_PARAMS.beta, sigma), features, p)
            np.testing.assert_allclose(quantiles - location, sigma * sev_quantile(p), rtol=1e-9, atol=1e-15)
        tiny = ClientParams(TRUE_PARAMS.beta, 1e-12)
        np.testing.assert_allclose(predict_ttf(tiny, features), np.exp(location), rtol=1e-9)

    def test_likelihood_penalizes_vanishing_scale(self) -> None:
        data = make_sev_dataset(TRUE_PARAMS, 50, seed=1)
        values = []
        for sigma in (0.3, 0.03, 0.003):
            values.append(nll(transform(ClientParams(TRUE_PARAMS.beta, sigma)), data))
        assert values[0] < values[1] < values[2]


class TestPredict:
    def test_median_quantile(self) -> None:
        expected = 2.0 + np.log(np.log(2))
        assert predict_quantile(ClientParams([2.0], 1.0), [1.0]) == pytest.approx(expected)

    def test_quantiles_are_monotonic(self) -> None:
        params = ClientParams([1.0, 0.5], 0.4)
        features = np.array([[1.0, 0.0], [1.0, 2.0]])
        low = predict_quantiles(params, features, 0.1)
        high = predict_quantiles(params, features, 0.9)
        assert np.all(low < high)
        np.testing.assert_allclose(high - low, 0.4 * (sev_quantile(0.9) - sev_quantile(0.1)))

    def test_ttf_is_exponent_of_median(self) -> None:
        params = ClientParams([1.0, 0.5], 0.4)
        features = np.array([[1.0, -1.0], [1.0, 3.0]])
        np.testing.assert_allclose(predict_ttf(params, features), np.exp(predict_quantiles(params, features)))

    def test_feature_vector_without_intercept_raises(self) -> None:
        with pytest.raises(ValueError, match="leading 1"):
            predict_quantile(ClientParams([2.0, 1.0], 1.0), [0.5, 1.0])

    def test_wrong_width_raises(self) -> None:
        with pytest.raises(ValueError, match="columns"):
            predict_quantiles(ClientParams([2.0, 1.0], 1.0), np.ones((3, 3)))
