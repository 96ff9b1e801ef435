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

"""Per-client regression data."""

import typing as tp
from pathlib import Path

import attr
import numpy as np
import pandas as pd

from pfltools.columns import Columns
from pfltools.types import AnyFloats, ClientId

FEATURE_PREFIX = "f"
SIGNAL_SUFFIX = "_signal"


def _as_float_matrix(value: tp.Any) -> np.ndarray:
    return np.atleast_2d(np.asarray(value, dtype=np.float64))


def _as_float_vector(value: tp.Any) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=np.float64))


@attr.s(frozen=True, slots=True)
class ClientDataset:
    """
    Features and responses of one client.

    The object never leaves its client: federated server code works only with parameter vectors.

    Parameters
    ----------
    features : np.ndarray
        Matrix ``n x (K + 1)`` of feature vectors, the first column must be all ones (intercept).
    responses : np.ndarray
        Vector of ``n`` responses (log failure times).
    client_id : hashable, default ``0``
        Opaque client identifier.

    Examples
    --------
    >>> ds = ClientDataset.from_features([[0.5], [1.5]], [1.0, 2.0], client_id="a")
    >>> ds.n_samples, ds.n_features
    (2, 1)
    >>> ds.features
    array([[1. , 0.5],
           [1. , 1.5]])
    """

    features: np.ndarray = attr.ib(converter=_as_float_matrix)
    responses: np.ndarray = attr.ib(converter=_as_float_vector)
    client_id: ClientId = attr.ib(default=0)

    @features.validator
    def _check_features(self, _: str, value: np.ndarray) -> None:
        if value.ndim != 2 or value.shape[0] < 1:
            raise ValueError("Features must be a nonempty 2d matrix")
        if not np.all(np.isfinite(value)):
            raise ValueError("Features must be finite")
        if not np.all(value[:, 0] == 1.0):
            raise ValueError("First column of features must be identically 1 (intercept)")

    @responses.validator
    def _check_responses(self, _: str, value: np.ndarray) -> None:
        if value.ndim != 1 or value.size != self.features.shape[0]:
            raise ValueError(
                f"Number of responses is {value.size}, but number of feature rows is {self.features.shape[0]}"
            )
        if not np.all(np.isfinite(value)):
            raise ValueError("Responses must be finite")

    @classmethod
    def from_features(
        cls,
        features: tp.Iterable[tp.Iterable[float]],
        responses: AnyFloats,
        client_id: ClientId = 0,
    ) -> "ClientDataset":
        """
        Create dataset from features without intercept column; the column of ones is prepended.

        Parameters
        ----------
        features : iterable(iterable(float))
            Matrix ``n x K`` of features.
        responses : array-like
            Vector of ``n`` responses.
        client_id : hashable, default ``0``
            Client identifier.

        Returns
        -------
        ClientDataset
        """
        values = np.asarray(features, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        with_intercept = np.hstack((np.ones((values.shape[0], 1)), values))
        return cls(with_intercept, responses, client_id)

    @property
    def n_samples(self) -> int:
        """Number of rows ``n_i``."""
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        """Number of features ``K`` (intercept excluded)."""
        return self.features.shape[1] - 1

    def subset(self, rows: tp.Union[tp.Sequence[int], np.ndarray]) -> "ClientDataset":
        """Return dataset with selected rows only."""
        rows = np.asarray(rows, dtype=int)
        return self.__class__(self.features[rows], self.responses[rows], self.client_id)

    def without(self, row: int) -> "ClientDataset":
        """Return dataset with one row held out."""
        keep = np.delete(np.arange(self.n_samples), row)
        return self.subset(keep)

    @classmethod
    def concat(cls, datasets: tp.Sequence["ClientDataset"], client_id: ClientId = 0) -> "ClientDataset":
        """
        Stack several datasets with the same number of features.

        Parameters
        ----------
        datasets : sequence(ClientDataset)
            Datasets to stack.
        client_id : hashable, default ``0``
            Identifier of the result.

        Returns
        -------
        ClientDataset
        """
        if not datasets:
            raise ValueError("Nothing to concatenate")
        if len({ds.n_features for ds in datasets}) != 1:
            raise ValueError("All datasets must have the same number of features")
        features = np.vstack([ds.features for ds in datasets])
        responses = np.concatenate([ds.responses for ds in datasets])
        return cls(features, responses, client_id)

    def to_dataframe(self) -> pd.DataFrame:
        """Convert to table with columns `Columns.YLog`, ``f1..fK``."""
        df = pd.DataFrame(
            self.features[:, 1:], columns=[f"{FEATURE_PREFIX}{k}" for k in range(1, self.n_features + 1)]
        )
        df.insert(0, Columns.YLog, self.responses)
        return df

    @classmethod
    def from_dataframe(cls, df: pd.DataFrame, client_id: ClientId = 0) -> "ClientDataset":
        """
        Create dataset from table with column `Columns.YLog` and feature columns ``f1..fK``.

        Parameters
        ----------
        df : pd.DataFrame
            Table in the format produced by `to_dataframe`; other columns are ignored.
        client_id : hashable, default ``0``
            Identifier of the result.

        Returns
        -------
        ClientDataset
        """
        feature_cols = feature_columns(df)
        if Columns.YLog not in df.columns:
            raise KeyError(f"Missed column '{Columns.YLog}' in dataframe")
        return cls.from_features(df[feature_cols].values, df[Columns.YLog].values, client_id)


def feature_columns(df: pd.DataFrame) -> tp.List[str]:
    """Return names of ``f1..fK`` feature columns of a table in index order."""
    cols = [c for c in df.columns if str(c).startswith(FEATURE_PREFIX) and str(c)[1:].isdigit()]
    if not cols:
        raise KeyError("No feature columns `f1..fK` in dataframe")
    return sorted(cols, key=lambda c: int(str(c)[1:]))


def read_client_tables(path: tp.Union[str, Path]) -> tp.Dict[str, pd.DataFrame]:
    """
    Read per-client CSV tables from a directory (one ``<client_id>.csv`` per client).

    Parameters
    ----------
    path : str or Path
        Directory with CSV files.

    Returns
    -------
    dict(str -> pd.DataFrame)
        Tables keyed by client id, sorted by client id. Signal tables ``*_signal.csv`` are skipped.
    """
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"Directory with client tables does not exist: {path}")
    files = sorted(f for f in path.glob("*.csv") if not f.stem.endswith(SIGNAL_SUFFIX))
    if not files:
        raise FileNotFoundError(f"No client CSV files in {path}")
    return {file.stem: pd.read_csv(file) for file in files}
