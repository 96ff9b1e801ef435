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
import pytest

from pfltools.utils import derive_seed, is_instance


class TestIsInstance:
    @pytest.mark.parametrize(
        "obj,types,expected",
        (
            (1, float, True),
            (0.5, (int, float), True),
            ("0.5", float, False),
            ([1, 2.5], tp.List[float], True),
            ((1, 2), tp.List[float], False),
            (None, tp.Optional[int], True),
        ),
    )
    def test_values(self, obj: tp.Any, types: tp.Any, expected: bool) -> None:
        assert is_instance(obj, types) is expected


class TestDeriveSeed:
    def test_deterministic(self) -> None:
        assert derive_seed(42, "client_1", 3) == derive_seed(42, "client_1", 3)

    @pytest.mark.parametrize("other", ((43, "client_1", 3), (42, "client_2", 3), (42, "client_1", 4), (42, "client_1")))
    def test_differs(self, other: tp.Tuple[tp.Any, ...]) -> None:
        assert derive_seed(42, "client_1", 3) != derive_seed(*other)

    def test_numpy_integer_key(self) -> None:
        assert derive_seed(0, np.int64(5)) == derive_seed(0, 5)

    @pytest.mark.parametrize(
        "first,second",
        (
            ((5,), ("5",)),
            ((-5,), (5,)),
            (("ab", "c"), ("a", "bc")),
            ((2**32 + 1,), (1,)),
            ((0,), ()),
        ),
    )
    def test_keys_do_not_collide(self, first: tp.Tuple[tp.Any, ...], second: tp.Tuple[tp.Any, ...]) -> None:
        assert derive_seed(7, *first) != derive_seed(7, *second)

    def test_large_seeds_are_not_truncated(self) -> None:
        assert derive_seed(2**32 + 3, "PFL") != derive_seed(3, "PFL")
        assert derive_seed(2**70, "PFL") != derive_seed(0, "PFL")

    def test_matches_spawned_sequence(self) -> None:
        state = np.random.SeedSequence(11, spawn_key=(0, 4)).generate_state(1, dtype=np.uint64)
        assert derive_seed(11, 4) == int(state[0]) >> 1

    def test_raises_on_negative_seed(self) -> None:
        with pytest.raises(ValueError, match="nonnegative"):
            derive_seed(-1, "PFL")

    def test_range(self) -> None:
        seeds = [derive_seed(seed, "PFL") for seed in range(50)]
        assert all(0 <= s < 2**63 for s in seeds)
        assert len(set(seeds)) == 50
        np.random.default_rng(seeds[0])
