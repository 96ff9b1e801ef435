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

"""Base model."""

from __future__ import annotations

import typing as tp

import numpy as np
import pandas as pd

from pfltools.columns import Columns
from pfltools.exceptions import NotFittedError
from pfltools.types import ClientId, FeatureMatrix, FloatArray

from .params import ClientParams
from .sev import predict_quantiles, predict_ttf

if tp.TYPE_CHECKING:
    from pfltools.dataset.client import ClientDataset

T = tp.TypeVar("T", bound="ModelBase")

BETA_PREFIX = "beta_"


class ModelBase:
    """
    Base class of per-client failure time models.

    Warning: This class should not be used directly.
    Use derived classes instead.
    """

    method: str = NotImplemented

    def __init__(self, *args: tp.Any, verbose: int = 0, **kwargs: tp.Any) -> None:
        self.is_fitted = False
        self.verbose = verbose
        self.params_: tp.Dict[ClientId, ClientParams] = {}

    def fit(self: T, datasets: tp.Sequence[ClientDataset], *args: tp.Any, **kwargs: tp.Any) -> T:
        """
        Fit model.

        Parameters
        ----------
        datasets : sequence(ClientDataset)
            Training data of every client, client ids must be unique.

        Returns
        -------
        self
        """
        self._check_datasets(datasets)
        self._fit(datasets, *args, **kwargs)
        self.is_fitted = True
        return self

    def _fit(self, datasets: tp.Sequence[ClientDataset], *args: tp.Any, **kwargs: tp.Any) -> None:
        raise NotImplementedError()

    @staticmethod
    def _check_datasets(datasets: tp.Sequence[ClientDataset]) -> None:
        if not datasets:
            raise ValueError("At least one client dataset is required")
        client_ids = [ds.client_id for ds in datasets]
        if len(set(client_ids)) != len(client_ids):
            raise ValueError("Client ids must be unique")
        if len({ds.n_features for ds in datasets}) != 1:
            raise ValueError("All clients must have the same number of features")

    def _check_is_fitted(self) -> None:
        if not self.is_fitted:
            raise NotFittedError(self.__class__.__name__)

    def get_params(self, client_id: ClientId) -> ClientParams:
        """
        Return fitted parameters of a client.

        Parameters
        ----------
        client_id : hashable
            Client identifier used in `fit`.

        Returns
        -------
        ClientParams

        Raises
        ------
        NotFittedError
            If called for not fitted model.
        KeyError
            If client was not present in `fit`.
        """
        self._check_is_fitted()
        try:
            return self.params_[client_id]
        except KeyError:
            raise KeyError(f"Unknown client '{client_id}'")

    def predict(self, client_id: ClientId, features: FeatureMatrix, p: float = 0.5) -> FloatArray:
        """
        Predict quantile of log failure time for client units.

        Parameters
        ----------
        client_id : hashable
            Client identifier used in `fit`.
        features : np.ndarray
            Matrix ``n x (K + 1)`` with leading column of ones.
        p : float, default 0.5
            Probability in ``(0, 1)``, median by default.

        Returns
        -------
        np.ndarray
            Predicted quantiles of log failure time.
        """
        return predict_quantiles(self.get_params(client_id), features, p)

    def predict_ttf(self, client_id: ClientId, features: FeatureMatrix) -> FloatArray:
        """Predict median failure time on the original time scale."""
        return predict_ttf(self.get_params(client_id), features)

    def params_to_dataframe(self) -> pd.DataFrame:
        """
        Convert fitted parameters to table.

        Returns
        -------
        pd.DataFrame
            Columns `Columns.Client`, `Columns.Method`, ``beta_0..beta_K``, `Columns.Sigma`.
        """
        self._check_is_fitted()
        rows = []
        for client_id, params in self.params_.items():
            row: tp.Dict[str, tp.Any] = {Columns.Client: client_id, Columns.Method: self.method}
            row.update({f"{BETA_PREFIX}{k}": value for k, value in enumerate(params.beta)})
            row[Columns.Sigma] = params.sigma
            rows.append(row)
        return pd.DataFrame(rows)


def params_from_dataframe(df: pd.DataFrame) -> tp.Dict[ClientId, ClientParams]:
    """
    Read fitted parameters from table in the format of `ModelBase.params_to_dataframe`.

    Parameters
    ----------
    df : pd.DataFrame
        Table with columns `Columns.Client`, ``beta_0..beta_K``, `Columns.Sigma`.

    Returns
    -------
    dict(hashable -> ClientParams)
    """
    beta_cols = [c for c in df.columns if str(c).startswith(BETA_PREFIX)]
    missing = {Columns.Client, Columns.Sigma} - set(df.columns)
    if missing or not beta_cols:
        raise KeyError(f"Parameters table misses columns: {sorted(missing) or BETA_PREFIX + '*'}")
    beta_cols = sorted(beta_cols, key=lambda c: int(str(c)[len(BETA_PREFIX) :]))
    return {
        row[Columns.Client]: ClientParams(np.array([row[c] for c in beta_cols], dtype=float), row[Columns.Sigma])
        for _, row in df.iterrows()
    }
