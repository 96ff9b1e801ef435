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

from pfltools.metrics import calc_client_mape, mape, relative_errors


class TestMape:
    @pytest.mark.parametrize(
        "pred,truth,expected",
        (
            (110.0, 100.0, 10.0),
            (90.0, 100.0, 10.0),
            (100.0, 100.0, 0.0),
            (0.0, 50.0, 100.0),
        ),
    )
    def test_values(self, pred: float, truth: float, expected: float) -> None:
        assert mape(pred, truth) == pytest.approx(expected)

    @pytest.mark.parametrize("scale", (0.01, 3.0, 1e6))
    def test_scale_invariance(self, scale: float) -> None:
        assert mape(scale * 123.0, scale * 97.0) == pytest.approx(mape(123.0, 97.0), rel=1e-12)

    @pytest.mark.parametrize("truth", (0.0, -1.0, np.inf, np.nan))
    def test_rejects_nonpositive_truth(self, truth: float) -> None:
        with pytest.raises(ValueError, match="must be positive"):
            mape(1.0, truth)


class TestCalcClientMape:
    def test_mean(self) -> None:
        assert calc_client_mape([90.0, 120.0], [100.0, 100.0]) == pytest.approx(15.0)

    def test_equals_mean_of_relative_errors(self) -> None:
        rng = np.random.default_rng(0)
        truth = rng.uniform(10, 100, size=20)
        pred = truth * rng.uniform(0.5, 1.5, size=20)
        assert calc_client_mape(pred, truth) == pytest.approx(np.mean(relative_errors(pred, truth)), rel=1e-12)

    @pytest.mark.parametrize(
        "pred,truth",
        (
            ([1.0], [1.0, 2.0]),
            ([], []),
        ),
    )
    def test_shape_errors(self, pred: list, truth: list) -> None:
        with pytest.raises(ValueError, match="same shape"):
            calc_client_mape(pred, truth)

    def test_rejects_nonpositive_truth(self) -> None:
        with pytest.raises(ValueError, match="must be positive"):
            calc_client_mape([1.0, 2.0], [1.0, 0.0])


class TestRelativeErrors:
    def test_values(self) -> None:
        np.testing.assert_allclose(relative_errors([110.0, 50.0], [100.0, 100.0]), [10.0, 50.0])

    def test_shape_mismatch(self) -> None:
        with pytest.raises(ValueError, match="same shape"):
            relative_errors([1.0, 2.0], [1.0])
