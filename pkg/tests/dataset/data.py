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

from pfltools.dataset import EngineUnit
from pfltools.dataset.cmapss import N_SENSORS, N_SETTINGS

MODE_TRENDS = {
    1: np.array([1.0, 0.5, 2.0, -0.3]),
    2: np.array([2.0, -1.5, 0.5, 1.2]),
}
INFORMATIVE_POSITIONS = (3, 14, 16, 19)


def make_engine_unit(unit_id: int, length: int, mode: int, rng: np.random.Generator) -> EngineUnit:
    cycles = np.arange(1, length + 1)
    wear = (cycles / length) ** 2
    sensors = 100.0 * np.arange(1, N_SENSORS + 1) + rng.normal(0, 0.01, size=(length, N_SENSORS))
    for trend, position in zip(MODE_TRENDS[mode], INFORMATIVE_POSITIONS):
        sensors[:, position] += trend * wear
    op_settings = rng.normal(0, 0.001, size=(length, N_SETTINGS))
    return EngineUnit(unit_id, cycles, op_settings, sensors)


def make_fleet(
    n_fm1: int, n_fm2: int, seed: int = 0, min_length: int = 30, max_length: int = 60
) -> tp.Tuple[tp.List[EngineUnit], tp.Dict[int, int]]:
    rng = np.random.default_rng(seed)
    modes = [1] * n_fm1 + [2] * n_fm2
    rng.shuffle(modes)
    units, labels = [], {}
    for unit_id, mode in enumerate(modes, start=1):
        length = int(rng.integers(min_length, max_length + 1))
        units.append(make_engine_unit(unit_id, length, mode, rng))
        labels[unit_id] = mode
    return units, labels
