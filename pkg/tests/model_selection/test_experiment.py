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

import attr
import numpy as np
import pandas as pd
import pytest

from pfltools import Columns
from pfltools.dataset import ClientDataset
from pfltools.exceptions import ConfigError
from pfltools.model_selection import (
    ExperimentSpec,
    build_replication_clients,
    pooled_moments,
    resummarize,
    run_experiment,
    standardize_clients,
)
from pfltools.model_selection import experiment as experiment_module
from pfltools.model_selection import loocv as loocv_module

SMALL_STUDY = {
    "study": "three_client",
    "sizes": (6, 5, 4),
    "replications": 2,
    "seed": 13,
    "lambdas": (0.1,),
    "alphas": (0.01,),
    "thetas": (1.0,),
}


class TestExperimentSpec:
    @pytest.mark.parametrize(
        "overrides,message",
        (
            ({"replications": 0}, "`replications` must be positive integer"),
            ({"study": "study3"}, "`study` must be one of"),
            ({"methods": ("PFL", "Oracle")}, "nonempty subset"),
            ({"methods": ()}, "nonempty subset"),
            ({"methods": ("PFL", "PFL")}, "duplicates"),
            ({"lambdas": ()}, "Grid `lambdas` must be nonempty"),
            ({"max_folds": 0}, "`max_folds` must be positive integer"),
            ({"seed": -1}, "`seed` must be nonnegative"),
            ({"study": "case"}, "requires `data_path`"),
        ),
    )
    def test_invalid(self, overrides: tp.Dict[str, tp.Any], message: str) -> None:
        with pytest.raises(ConfigError, match=message):
            ExperimentSpec(**{**SMALL_STUDY, **overrides})

    def test_grid(self) -> None:
        spec = ExperimentSpec(**SMALL_STUDY)
        assert spec.grid.points() == [(0.1, 0.01, 1.0)]

    def test_fold_limit_defaults(self) -> None:
        assert ExperimentSpec(study="study2_imbalanced").max_folds == 20
        assert ExperimentSpec(study="study1").max_folds is None
        assert ExperimentSpec(**SMALL_STUDY).max_folds is None
        assert ExperimentSpec(study="study2_imbalanced", max_folds=None).max_folds is None
        assert ExperimentSpec(**{**SMALL_STUDY, "max_folds": "5"}).max_folds == 5

    def test_default_thresholds_are_shared(self) -> None:
        assert ExperimentSpec(**SMALL_STUDY).threshold_dispersion == 0.0

    def test_replication_seeds(self) -> None:
        spec = ExperimentSpec(**SMALL_STUDY)
        seeds = [spec.replication_seed(r) for r in range(5)]
        assert len(set(seeds)) == 5
        assert seeds == [ExperimentSpec(**SMALL_STUDY).replication_seed(r) for r in range(5)]
        assert seeds[0] != attr.evolve(spec, seed=14).replication_seed(0)


class TestStandardization:
    def test_pooled_moments(self) -> None:
        datasets = [
            ClientDataset.from_features([[1.0, 5.0], [3.0, 5.0]], [0.0, 0.0], client_id="a"),
            ClientDataset.from_features([[5.0, 5.0]], [0.0], client_id="b"),
        ]
        mean, scale = pooled_moments(datasets)
        np.testing.assert_allclose(mean, [3.0, 5.0])
        np.testing.assert_allclose(scale, [np.sqrt(8 / 3), 1.0])

    def test_training_features_are_standardized(self) -> None:
        spec = ExperimentSpec(**SMALL_STUDY)
        clients = build_replication_clients(spec, seed=1)
        pooled = np.vstack([client.train.features[:, 1:] for client in clients])
        np.testing.assert_allclose(pooled.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(pooled.std(axis=0), 1.0, rtol=1e-12)

    def test_test_features_use_training_moments(self) -> None:
        spec = ExperimentSpec(**{**SMALL_STUDY, "standardize": False})
        raw = build_replication_clients(spec, seed=1)
        mean, scale = pooled_moments([client.train for client in raw])
        scaled = standardize_clients(raw)
        for before, after in zip(raw, scaled):
            np.testing.assert_allclose(after.test.features[:, 1:], (before.test.features[:, 1:] - mean) / scale)
            np.testing.assert_array_equal(after.test.responses, before.test.responses)
            assert after.test_unit_ids == before.test_unit_ids

    def test_case_study_needs_data(self) -> None:
        spec = ExperimentSpec(study="case", data_path="train.txt")
        with pytest.raises(ValueError, match="Case data is required"):
            build_replication_clients(spec, seed=0)


class TestRunExperiment:
    def test_report_layout(self) -> None:
        spec = ExperimentSpec(**SMALL_STUDY)
        report = run_experiment(spec)
        assert not report.is_partial
        assert list(report.raw.columns) == Columns.RawReport
        assert len(report.raw) == 2 * 3 * 3
        assert set(report.raw[Columns.Method]) == {"PFL", "CFL", "Local"}
        assert (report.raw[Columns.Mape] >= 0).all()
        assert report.replication_seeds == (spec.replication_seed(0), spec.replication_seed(1))
        assert report.hyperparams[["lambda", "alpha", "theta"]].values.tolist() == [[0.1, 0.01, 1.0]] * 2
        assert set(report.summary()) == {"PFL", "CFL", "Local"}

    def test_deterministic(self) -> None:
        spec = ExperimentSpec(**SMALL_STUDY)
        pd.testing.assert_frame_equal(run_experiment(spec).raw, run_experiment(spec).raw)

    def test_methods_are_isolated(self) -> None:
        full = run_experiment(ExperimentSpec(**SMALL_STUDY)).raw
        part = run_experiment(ExperimentSpec(**{**SMALL_STUDY, "methods": ("CFL", "Local")})).raw
        expected = full[full[Columns.Method] != "PFL"].reset_index(drop=True)
        pd.testing.assert_frame_equal(part, expected)
        assert len(part) == 12

    def test_failed_replication_is_recorded(self, monkeypatch: pytest.MonkeyPatch) -> None:
        spec = ExperimentSpec(**SMALL_STUDY)
        original = experiment_module.build_replication_clients

        def build(spec: ExperimentSpec, seed: int, case_data: tp.Any = None) -> tp.List[tp.Any]:
            if seed == spec.replication_seed(1):
                raise ValueError("broken replication")
            return original(spec, seed, case_data)

        monkeypatch.setattr(experiment_module, "build_replication_clients", build)
        report = run_experiment(spec)
        assert report.is_partial
        assert report.errors == ({Columns.Replication: 1, "error": "ValueError", "message": "broken replication"},)
        assert set(report.raw[Columns.Replication]) == {0}
        assert len(report.hyperparams) == 1

    def test_imbalanced_study_caps_folds(self, monkeypatch: pytest.MonkeyPatch) -> None:
        limits: tp.List[tp.Optional[int]] = []

        def score(datasets: tp.Any, cfg: tp.Any, max_folds: tp.Optional[int] = None) -> float:
            limits.append(max_folds)
            return cfg.lambda_

        monkeypatch.setattr(loocv_module, "loocv_score", score)
        spec = ExperimentSpec(
            **{
                **SMALL_STUDY,
                "study": "study2_imbalanced",
                "sizes": (25, 22, 21),
                "replications": 1,
                "lambdas": (0.1, 1.0),
                "methods": ("PFL",),
            }
        )
        report = run_experiment(spec)
        assert limits == [20, 20]
        assert report.hyperparams["lambda"].tolist() == [0.1]


class TestResummarize:
    def test_values(self) -> None:
        raw = pd.DataFrame(
            {
                Columns.Method: ["PFL"] * 4 + ["Local"] * 2,
                Columns.Client: ["a", "b", "a", "b", "a", "a"],
                Columns.Replication: [0, 0, 1, 1, 0, 1],
                Columns.Mape: [1.0, 2.0, 3.0, 4.0, 10.0, 10.0],
            }
        )
        summary = resummarize(raw)
        assert list(summary) == ["PFL", "Local"]
        assert summary["PFL"]["median"] == 2.5
        assert summary["PFL"]["iqr"] == 2.0
        assert summary["PFL"]["clients"] == {"a": {"median": 2.0, "iqr": 0.0}, "b": {"median": 3.0, "iqr": 0.0}}
        assert summary["Local"] == {"median": 10.0, "iqr": 0.0, "clients": {"a": {"median": 10.0, "iqr": 0.0}}}
