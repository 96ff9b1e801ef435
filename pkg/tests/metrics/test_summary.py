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

from pfltools.metrics import summarize


class TestSummarize:
    @pytest.mark.parametrize(
        "samples,expected",
        (
            ([1, 2, 3, 4], (2.5, 2.0)),
            ([4, 3, 2, 1], (2.5, 2.0)),
            ([7], (7.0, 0.0)),
            ([1, 2, 3, 4, 5], (3.0, 2.0)),
            ([5.0, 5.0, 5.0], (5.0, 0.0)),
        ),
    )
    def test_values(self, samples: list, expected: tuple) -> None:
        median, iqr = summarize(samples)
        assert (median, iqr) == pytest.approx(expected)

    def test_iqr_is_nonnegative(self) -> None:
        samples = np.random.default_rng(1).lognormal(size=31)
        median, iqr = summarize(samples)
        assert iqr >= 0
        assert median == pytest.approx(np.median(samples))

    def test_empty(self) -> None:
        with pytest.raises(ValueError, match="empty"):
            summarize([])
