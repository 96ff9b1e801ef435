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

"""Turbofan run-to-failure data: parsing, failure modes and case-study partition."""

import logging
import typing as tp
from pathlib import Path

import attr
import numpy as np
import pandas as pd
from scipy.cluster.vq import kmeans2
from tqdm.auto import tqdm

from pfltools.columns import Columns
from pfltools.exceptions import DataFormatError
from pfltools.types import ClientId, FloatArray
from pfltools.utils import derive_seed

from .client import ClientDataset
from .fusion import fuse_signals
from .simulation import ROLE_TEST, ROLE_TRAIN

logger = logging.getLogger(__name__)

N_SETTINGS = 3
N_SENSORS = 21
N_COLUMNS = 2 + N_SETTINGS + N_SENSORS
INFORMATIVE_SENSORS = (4, 15, 17, 20)
SIGNATURE_CYCLES = 5
FLOOR_EPS = 1e-9
FM1 = 1
FM2 = 2
CASE_CLIENTS = {FM1: ("client_1", "client_2"), FM2: ("client_3", "client_4")}


def _as_int_vector(value: tp.Any) -> np.ndarray:
    return np.asarray(value, dtype=np.int64)


def _as_float_matrix(value: tp.Any) -> np.ndarray:
    return np.atleast_2d(np.asarray(value, dtype=np.float64))


@attr.s(frozen=True, slots=True)
class EngineUnit:
    """
    Run-to-failure record of one engine.

    Parameters
    ----------
    unit_id : int
        Engine id.
    cycles : np.ndarray
        Cycle numbers ``1..L``.
    op_settings : np.ndarray
        Matrix ``L x 3`` of operational settings.
    sensors : np.ndarray
        Matrix ``L x S`` of sensor readings.
    sensor_ids : tuple(int), default ``(1, ..., 21)``
        One-based ids of columns of `sensors`.
    """

    unit_id: int = attr.ib(converter=int)
    cycles: np.ndarray = attr.ib(converter=_as_int_vector, eq=False)
    op_settings: np.ndarray = attr.ib(converter=_as_float_matrix, eq=False, repr=False)
    sensors: np.ndarray = attr.ib(converter=_as_float_matrix, eq=False, repr=False)
    sensor_ids: tp.Tuple[int, ...] = attr.ib(converter=tuple, factory=lambda: tuple(range(1, N_SENSORS + 1)))

    def __attrs_post_init__(self) -> None:
        n_cycles = self.cycles.size
        if n_cycles < 2:
            raise DataFormatError(f"Unit {self.unit_id} has {n_cycles} cycles, at least 2 are required")
        if not np.array_equal(self.cycles, np.arange(1, n_cycles + 1)):
            raise DataFormatError(f"Cycles of unit {self.unit_id} are not contiguous from 1")
        if self.op_settings.shape != (n_cycles, N_SETTINGS):
            raise ValueError(f"Operational settings of unit {self.unit_id} must have shape ({n_cycles}, 3)")
        if self.sensors.shape != (n_cycles, len(self.sensor_ids)):
            raise ValueError(f"Sensors of unit {self.unit_id} must have shape ({n_cycles}, {len(self.sensor_ids)})")

    @property
    def failure_time(self) -> int:
        """Run-to-failure length ``L`` in cycles."""
        return int(self.cycles.size)


def _parse_row(line: str, line_no: int) -> tp.List[float]:
    fields = line.split()
    if len(fields) != N_COLUMNS:
        raise DataFormatError(f"Expected {N_COLUMNS} columns, got {len(fields)}", line=line_no)
    try:
        values = [float(field) for field in fields]
    except ValueError as e:
        raise DataFormatError("Non-numeric value", line=line_no) from e
    if not np.all(np.isfinite(values)):
        raise DataFormatError("Non-finite value", line=line_no)
    if values[0] != int(values[0]) or values[1] != int(values[1]):
        raise DataFormatError("Unit id and cycle must be integers", line=line_no)
    return values


def parse_cmapss(path: tp.Union[str, Path]) -> tp.List[EngineUnit]:
    """
    Read whitespace-delimited run-to-failure file.

    Every nonblank row has 26 numeric columns: unit id, cycle, 3 operational settings and 21 sensors.

    Parameters
    ----------
    path : str or Path
        Path to file, e.g. ``train_FD003.txt``.

    Returns
    -------
    list(EngineUnit)
        Units sorted by id.

    Raises
    ------
    DataFormatError
        Malformed row (with its line number) or non-contiguous cycles.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Data file does not exist: {path}")
    rows = []
    with path.open() as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip():
                rows.append(_parse_row(line, line_no))
    if not rows:
        raise DataFormatError(f"No rows in {path}")

    columns = [Columns.Unit, Columns.Cycle] + [f"setting_{k}" for k in range(1, N_SETTINGS + 1)]
    columns += [f"sensor_{k}" for k in range(1, N_SENSORS + 1)]
    df = pd.DataFrame(rows, columns=columns)
    df[[Columns.Unit, Columns.Cycle]] = df[[Columns.Unit, Columns.Cycle]].astype(np.int64)

    units = []
    for unit_id, unit_df in df.groupby(Columns.Unit, sort=True):
        values = unit_df.values
        units.append(
            EngineUnit(
                unit_id=unit_id,
                cycles=values[:, 1],
                op_settings=values[:, 2 : 2 + N_SETTINGS],
                sensors=values[:, 2 + N_SETTINGS :],
            )
        )
    logger.info("Parsed %d units from %s", len(units), path)
    return units


def serialize_cmapss(units: tp.Sequence[EngineUnit], path: tp.Union[str, Path]) -> None:
    """Write units in the whitespace-delimited layout read by `parse_cmapss`."""
    frames = []
    for unit in units:
        if len(unit.sensor_ids) != N_SENSORS:
            raise ValueError(f"Unit {unit.unit_id} has {len(unit.sensor_ids)} sensors, cannot serialize")
        df = pd.DataFrame(np.hstack((unit.op_settings, unit.sensors)))
        df.insert(0, Columns.Cycle, unit.cycles)
        df.insert(0, Columns.Unit, unit.unit_id)
        frames.append(df)
    pd.concat(frames, ignore_index=True).to_csv(path, sep=" ", header=False, index=False)


def select_sensors(unit: EngineUnit, sensor_ids: tp.Sequence[int] = INFORMATIVE_SENSORS) -> EngineUnit:
    """
    Keep only given sensors of a unit.

    Parameters
    ----------
    unit : EngineUnit
        Parsed unit.
    sensor_ids : sequence(int), default ``(4, 15, 17, 20)``
        One-based sensor ids in output order.

    Returns
    -------
    EngineUnit
        Unit with `sensor_ids` columns only.
    """
    positions = []
    for sensor_id in sensor_ids:
        if sensor_id not in unit.sensor_ids:
            raise KeyError(f"Unit {unit.unit_id} has no sensor {sensor_id}")
        positions.append(unit.sensor_ids.index(sensor_id))
    return EngineUnit(unit.unit_id, unit.cycles, unit.op_settings, unit.sensors[:, positions], sensor_ids)


def _end_of_life_signatures(units: tp.Sequence[EngineUnit]) -> np.ndarray:
    signatures = np.array([select_sensors(unit).sensors[-SIGNATURE_CYCLES:].mean(axis=0) for unit in units])
    scale = signatures.std(axis=0)
    scale[scale == 0] = 1.0
    return (signatures - signatures.mean(axis=0)) / scale


def _cluster_failure_modes(units: tp.Sequence[EngineUnit]) -> tp.Dict[int, int]:
    units = sorted(units, key=lambda unit: unit.unit_id)
    signatures = _end_of_life_signatures(units)
    if np.allclose(signatures, signatures[0]):
        raise ValueError("All units have identical end-of-life signatures, failure modes cannot be separated")

    first = int(np.argmax(np.linalg.norm(signatures, axis=1)))
    second = int(np.argmax(np.linalg.norm(signatures - signatures[first], axis=1)))
    _, cluster = kmeans2(signatures, signatures[[first, second]], minit="matrix")

    sizes = np.bincount(cluster, minlength=2)
    if sizes[0] != sizes[1]:
        fm1_cluster = int(np.argmax(sizes))
    else:
        fm1_cluster = int(cluster[0])  # cluster of the smallest unit id
    labels = {unit.unit_id: FM1 if c == fm1_cluster else FM2 for unit, c in zip(units, cluster)}
    logger.info("Clustered failure modes: %d FM1, %d FM2", max(sizes), len(units) - max(sizes))
    return labels


def read_failure_mode_labels(path: tp.Union[str, Path]) -> tp.Dict[int, int]:
    """Read label CSV with columns `Columns.Unit` and `Columns.FailureMode`."""
    df = pd.read_csv(path)
    for col in (Columns.Unit, Columns.FailureMode):
        if col not in df.columns:
            raise DataFormatError(f"Missed column '{col}' in label file {path}")
    if not df[Columns.FailureMode].isin([FM1, FM2]).all():
        raise DataFormatError(f"Failure modes must be {FM1} or {FM2}")
    if df[Columns.Unit].duplicated().any():
        raise DataFormatError("Duplicated unit ids in label file")
    return dict(zip(df[Columns.Unit].astype(int).tolist(), df[Columns.FailureMode].astype(int).tolist()))


def assign_failure_modes(
    units: tp.Sequence[EngineUnit],
    labels_path: tp.Optional[tp.Union[str, Path]] = None,
) -> tp.Dict[int, int]:
    """
    Label every unit with failure mode 1 or 2.

    Labels from `labels_path` are used as is. Without a file units are split in two clusters
    by standardized end-of-life means of the informative sensors; the larger cluster is FM1.

    Parameters
    ----------
    units : sequence(EngineUnit)
        Parsed units.
    labels_path : str or Path, optional
        CSV with columns `Columns.Unit` and `Columns.FailureMode`.

    Returns
    -------
    dict(int -> int)
        Failure mode by unit id.
    """
    if labels_path is None:
        return _cluster_failure_modes(units)

    labels = read_failure_mode_labels(labels_path)
    unit_ids = {unit.unit_id for unit in units}
    unknown = sorted(set(labels) - unit_ids)
    if unknown:
        raise DataFormatError(f"Label file references unknown units: {unknown}")
    missing = sorted(unit_ids - set(labels))
    if missing:
        raise DataFormatError(f"Label file has no labels for units: {missing}")
    return labels


@attr.s(frozen=True, slots=True)
class UnitFeatures:
    """Fused features of a unit from full signal and from truncated signal."""

    unit_id: int = attr.ib()
    failure_time: int = attr.ib()
    observed: int = attr.ib()
    full: FloatArray = attr.ib(eq=False)
    truncated: FloatArray = attr.ib(eq=False)

    @property
    def rul_truth(self) -> int:
        """Remaining useful life at the end of the truncated window."""
        return self.failure_time - self.observed


def extract_case_features(unit: EngineUnit, observed_up_to: int, rho: tp.Optional[float] = None) -> FloatArray:
    """
    Feature vector of a unit observed up to cycle `observed_up_to`.

    Smoothing splines of sensors 4, 15, 17 and 20 give the terminal level and slope of each,
    so the result is ``(1, level_4, slope_4, ..., level_20, slope_20)`` of length 9.

    Parameters
    ----------
    unit : EngineUnit
        Parsed unit.
    observed_up_to : int
        Last observed cycle, at least 4.
    rho : float, optional
        Smoothing penalty, chosen by cross-validation per sensor if not given.

    Returns
    -------
    np.ndarray
    """
    selected = select_sensors(unit)
    return fuse_signals(selected.cycles, selected.sensors, observed_up_to, rho)


def truncation_point(failure_time: int, truncation: float) -> int:
    """
    Last observed cycle of a test unit, ``floor(truncation * L)``.

    Examples
    --------
    >>> truncation_point(300, 0.7)
    210
    """
    # representation error of the product must not drop a whole cycle
    return int(np.floor(truncation * failure_time + FLOOR_EPS))


def compute_unit_features(
    units: tp.Sequence[EngineUnit],
    truncation: float = 0.7,
    rho: tp.Optional[float] = None,
    verbose: int = 0,
) -> tp.Dict[int, UnitFeatures]:
    """
    Fuse every unit both as a training unit (full signal) and as a test unit (truncated signal).

    Parameters
    ----------
    units : sequence(EngineUnit)
        Parsed units.
    truncation : float, default 0.7
        Observed share of the life of test units.
    rho : float, optional
        Fixed smoothing penalty, chosen by cross-validation if not given.
    verbose : int, default 0
        Show progress bar if positive.

    Returns
    -------
    dict(int -> UnitFeatures)
    """
    if not 0 < truncation <= 1:
        raise ValueError(f"Truncation must be in (0, 1], got {truncation}")
    result = {}
    for unit in tqdm(units, desc="Fusing signals", disable=verbose == 0):
        observed = truncation_point(unit.failure_time, truncation)
        result[unit.unit_id] = UnitFeatures(
            unit_id=unit.unit_id,
            failure_time=unit.failure_time,
            observed=observed,
            full=extract_case_features(unit, unit.failure_time, rho),
            truncated=extract_case_features(unit, observed, rho),
        )
    return result


@attr.s(frozen=True, slots=True)
class CaseSplit:
    """
    Partition of units into clients.

    Parameters
    ----------
    train_units : dict(str -> tuple(int))
        Training unit ids per client.
    test_units : dict(str -> tuple(int))
        Test unit ids per client; clients of the same failure mode share the pool.
    failure_modes : dict(str -> int)
        Failure mode per client.
    truncation : float
        Observed share of the life of test units.
    seed : int
        Seed of the partition.
    """

    train_units: tp.Dict[str, tp.Tuple[int, ...]] = attr.ib()
    test_units: tp.Dict[str, tp.Tuple[int, ...]] = attr.ib()
    failure_modes: tp.Dict[str, int] = attr.ib()
    truncation: float = attr.ib()
    seed: int = attr.ib()

    @property
    def client_ids(self) -> tp.List[str]:
        """Client ids in order."""
        return list(self.train_units)


@attr.s(frozen=True, slots=True)
class CaseClient:
    """
    Case-study data of one client.

    Parameters
    ----------
    client_id : hashable
        Client identifier.
    train : ClientDataset
        Full-life features and log failure times of training units.
    test : ClientDataset
        Truncated-signal features and log failure times of test units.
    train_unit_ids, test_unit_ids : tuple(int)
        Unit ids of rows of `train` and `test`.
    observed : np.ndarray
        Last observed cycle of every test unit.
    rul_truth : np.ndarray
        True remaining useful life of every test unit.
    """

    client_id: ClientId = attr.ib()
    train: ClientDataset = attr.ib()
    test: ClientDataset = attr.ib()
    train_unit_ids: tp.Tuple[int, ...] = attr.ib(converter=tuple)
    test_unit_ids: tp.Tuple[int, ...] = attr.ib(converter=tuple)
    observed: np.ndarray = attr.ib(converter=_as_int_vector, eq=False)
    rul_truth: np.ndarray = attr.ib(converter=_as_int_vector, eq=False)

    def targets(self, pred_ttf: FloatArray) -> tp.Tuple[FloatArray, FloatArray]:
        """Predicted RUL (floored at 0) and true RUL of test units."""
        pred_rul = np.maximum(np.asarray(pred_ttf, dtype=np.float64) - self.observed, 0.0)
        return pred_rul, self.rul_truth.astype(np.float64)


@attr.s(frozen=True, slots=True)
class CaseStudy:
    """Case study: four clients built from one partition."""

    clients: tp.Tuple[CaseClient, ...] = attr.ib(converter=tuple)
    split: CaseSplit = attr.ib()

    @property
    def train(self) -> tp.List[ClientDataset]:
        """Training datasets of all clients."""
        return [client.train for client in self.clients]

    @property
    def test(self) -> tp.List[ClientDataset]:
        """Test datasets of all clients."""
        return [client.test for client in self.clients]

    @property
    def client_ids(self) -> tp.List[ClientId]:
        """Client ids in order."""
        return [client.client_id for client in self.clients]


def split_units(
    labels: tp.Dict[int, int],
    seed: int,
    train_fraction: float = 0.4,
    truncation: float = 0.7,
) -> CaseSplit:
    """
    Partition labelled units into four clients.

    Units of every failure mode are shuffled and distributed evenly over its two clients
    (the first client gets the extra unit). The first ``floor(train_fraction * n)`` units of a client
    are its training units, all others go to the test pool shared by both clients of the mode.

    Parameters
    ----------
    labels : dict(int -> int)
        Failure mode by unit id.
    seed : int
        Partition seed.
    train_fraction : float, default 0.4
        Share of training units of every client.
    truncation : float, default 0.7
        Observed share of the life of test units.

    Returns
    -------
    CaseSplit
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"Train fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(derive_seed(seed, "split"))
    train_units, test_units, failure_modes = {}, {}, {}
    for fm, client_ids in CASE_CLIENTS.items():
        unit_ids = np.array(sorted(unit_id for unit_id, label in labels.items() if label == fm), dtype=np.int64)
        rng.shuffle(unit_ids)
        halves = np.array_split(unit_ids, 2)
        pool: tp.List[int] = []
        for client_id, assigned in zip(client_ids, halves):
            n_train = int(np.floor(train_fraction * assigned.size))
            if n_train == 0:
                raise ValueError(f"Client {client_id} has no training units ({assigned.size} units of FM{fm})")
            train_units[client_id] = tuple(int(u) for u in assigned[:n_train])
            pool.extend(int(u) for u in assigned[n_train:])
            failure_modes[client_id] = fm
        for client_id in client_ids:
            test_units[client_id] = tuple(sorted(pool))
    order = [client_id for fm in CASE_CLIENTS for client_id in CASE_CLIENTS[fm]]
    return CaseSplit(
        train_units={c: train_units[c] for c in order},
        test_units={c: test_units[c] for c in order},
        failure_modes=failure_modes,
        truncation=truncation,
        seed=seed,
    )


def build_case_split(
    units: tp.Sequence[EngineUnit],
    labels: tp.Dict[int, int],
    seed: int,
    train_fraction: float = 0.4,
    truncation: float = 0.7,
    features: tp.Optional[tp.Dict[int, UnitFeatures]] = None,
) -> CaseStudy:
    """
    Build the four-client case study for one partition seed.

    Training rows use features of full run-to-failure signals, test rows use features of signals
    truncated at ``floor(truncation * L)`` cycles. Responses are log failure times.

    Parameters
    ----------
    units : sequence(EngineUnit)
        Parsed units.
    labels : dict(int -> int)
        Failure mode of every unit.
    seed : int
        Partition seed.
    train_fraction : float, default 0.4
        Share of training units of every client.
    truncation : float, default 0.7
        Observed share of the life of test units.
    features : dict(int -> UnitFeatures), optional
        Precomputed features, see `compute_unit_features`.

    Returns
    -------
    CaseStudy
    """
    unit_ids = {unit.unit_id for unit in units}
    unlabelled = sorted(unit_ids - set(labels))
    if unlabelled:
        raise ValueError(f"No failure mode labels for units: {unlabelled}")
    labels = {unit_id: labels[unit_id] for unit_id in unit_ids}
    if features is None:
        features = compute_unit_features(units, truncation)

    split = split_units(labels, seed, train_fraction, truncation)
    clients = []
    for client_id in split.client_ids:
        train_feats = [features[u] for u in split.train_units[client_id]]
        test_feats = [features[u] for u in split.test_units[client_id]]
        train = ClientDataset(
            [f.full for f in train_feats], np.log([f.failure_time for f in train_feats]), client_id
        )
        test = ClientDataset(
            [f.truncated for f in test_feats], np.log([f.failure_time for f in test_feats]), client_id
        )
        clients.append(
            CaseClient(
                client_id=client_id,
                train=train,
                test=test,
                train_unit_ids=split.train_units[client_id],
                test_unit_ids=split.test_units[client_id],
                observed=[f.observed for f in test_feats],
                rul_truth=[f.rul_truth for f in test_feats],
            )
        )
    return CaseStudy(clients, split)


def case_client_frame(client: CaseClient) -> pd.DataFrame:
    """
    Table of one client with columns `Columns.Unit`, `Columns.Role`, `Columns.YLog`, ``f1..fK``
    and `Columns.RulTruth` (empty for training rows).
    """
    frames = []
    for role, ds, unit_ids in (
        (ROLE_TRAIN, client.train, client.train_unit_ids),
        (ROLE_TEST, client.test, client.test_unit_ids),
    ):
        df = ds.to_dataframe()
        df.insert(0, Columns.Role, role)
        df.insert(0, Columns.Unit, unit_ids)
        frames.append(df)
    df = pd.concat(frames, ignore_index=True)
    rul = np.full(len(df), np.nan)
    rul[len(client.train_unit_ids) :] = client.rul_truth
    df[Columns.RulTruth] = rul
    return df


def dump_case_study(study: CaseStudy, path: tp.Union[str, Path]) -> None:
    """Write one ``<client_id>.csv`` table per client, see `case_client_frame`."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for client in study.clients:
        case_client_frame(client).to_csv(path / f"{client.client_id}.csv", index=False)
