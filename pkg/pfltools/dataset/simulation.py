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

"""Seeded generators of simulated degradation studies."""

import logging
import typing as tp
from pathlib import Path

import attr
import numpy as np
import pandas as pd
from scipy.stats import gumbel_l

from pfltools.columns import Columns
from pfltools.exceptions import DataFormatError
from pfltools.types import ClientId, FloatArray
from pfltools.utils import derive_seed

from .client import SIGNAL_SUFFIX, ClientDataset

logger = logging.getLogger(__name__)

TTF_MAX = 0.999
TTF_MIN_MARGIN = 1e-9
ROLE_TRAIN = "train"
ROLE_TEST = "test"


def _positive(_: object, attribute: "attr.Attribute[tp.Any]", value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"`{attribute.name}` must be positive, got {value}")


def _nonnegative(_: object, attribute: "attr.Attribute[tp.Any]", value: float) -> None:
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"`{attribute.name}` must be nonnegative, got {value}")


def _as_sizes(value: tp.Union[int, tp.Sequence[int]]) -> tp.Tuple[int, ...]:
    if isinstance(value, (int, np.integer)):
        return (int(value),)
    return tuple(int(v) for v in value)


@attr.s(frozen=True, slots=True)
class SimScenario:
    """
    Parameters of a simulated study.

    Unit ``j`` of client ``i`` has degradation path ``x(tau) = -c / ln(tau)`` with ``c ~ N(c_mean, sigma_scenario^2)``
    and fails at log time ``y = -c / D_i + eps``, ``eps ~ SEV(0, 1)``.
    Client threshold is ``D_i = D * exp(threshold_dispersion * sigma_scenario * xi_i)``, ``xi_i ~ N(0, 1)``,
    so ``threshold_dispersion = 0`` gives the same threshold ``D`` to all clients.

    Parameters
    ----------
    m : int
        Number of clients.
    n_train : int or sequence(int)
        Training units per client, one value for all clients or one per client.
    n_test : int or sequence(int)
        Test units per client.
    sigma_scenario : float
        Standard deviation of path coefficients.
    D : float, default 2.0
        Failure threshold.
    dt : float, default 0.001
        Signal sampling interval, in ``(0, 1)``.
    sigma_obs : float, default 0.05
        Standard deviation of observation noise.
    c_mean : float, default 4.0
        Mean of path coefficients.
    threshold_dispersion : float, default 0.0
        Client-level dispersion of failure thresholds relative to `sigma_scenario`.
    seed : int, default 0
        Base seed.
    """

    m: int = attr.ib(converter=int)
    n_train: tp.Tuple[int, ...] = attr.ib(converter=_as_sizes)
    n_test: tp.Tuple[int, ...] = attr.ib(converter=_as_sizes)
    sigma_scenario: float = attr.ib(converter=float, validator=_positive)
    D: float = attr.ib(default=2.0, converter=float, validator=_positive)
    dt: float = attr.ib(default=0.001, converter=float)
    sigma_obs: float = attr.ib(default=0.05, converter=float, validator=_nonnegative)
    c_mean: float = attr.ib(default=4.0, converter=float)
    threshold_dispersion: float = attr.ib(default=0.0, converter=float, validator=_nonnegative)
    seed: int = attr.ib(default=0, converter=int)

    @m.validator
    def _check_m(self, _: str, value: int) -> None:
        if value < 1:
            raise ValueError("Number of clients must be positive")

    @n_train.validator
    def _check_n_train(self, attribute: "attr.Attribute[tp.Tuple[int, ...]]", value: tp.Tuple[int, ...]) -> None:
        self._check_sizes(attribute.name, value, minimum=1)

    @n_test.validator
    def _check_n_test(self, attribute: "attr.Attribute[tp.Tuple[int, ...]]", value: tp.Tuple[int, ...]) -> None:
        self._check_sizes(attribute.name, value, minimum=1)

    def _check_sizes(self, name: str, value: tp.Tuple[int, ...], minimum: int) -> None:
        if len(value) not in (1, self.m):
            raise ValueError(f"`{name}` must have 1 or {self.m} values, got {len(value)}")
        if min(value) < minimum:
            raise ValueError(f"`{name}` values must be at least {minimum}")

    @dt.validator
    def _check_dt(self, _: str, value: float) -> None:
        if not 0 < value < 1:
            raise ValueError(f"`dt` must be in (0, 1), got {value}")

    def client_sizes(self, i: int) -> tp.Tuple[int, int]:
        """Numbers of training and test units of client with position `i`."""
        n_train = self.n_train[i] if len(self.n_train) > 1 else self.n_train[0]
        n_test = self.n_test[i] if len(self.n_test) > 1 else self.n_test[0]
        return n_train, n_test


@attr.s(frozen=True, slots=True)
class SimUnit:
    """
    Simulated run-to-failure unit.

    Parameters
    ----------
    unit_id : int
        Unit number within client.
    c : float
        True path coefficient.
    y_log : float
        Log failure time.
    ttf : float
        Failure time ``exp(y_log)`` in ``(dt, 0.999]``.
    tau : np.ndarray
        Sampling times ``dt, 2 dt, ...`` before failure.
    signal : np.ndarray
        Observed signal at `tau`.
    threshold : float, default 2.0
        Failure threshold of the client the unit belongs to.
    """

    unit_id: int = attr.ib()
    c: float = attr.ib()
    y_log: float = attr.ib()
    ttf: float = attr.ib()
    tau: np.ndarray = attr.ib(eq=False)
    signal: np.ndarray = attr.ib(eq=False)
    threshold: float = attr.ib(default=2.0)


def degradation_path(c: float, tau: tp.Union[float, FloatArray]) -> tp.Union[float, FloatArray]:
    """
    Noiseless degradation path ``-c / ln(tau)``.

    Examples
    --------
    >>> round(float(degradation_path(4.0, np.exp(-1))), 12)
    4.0
    """
    return -c / np.log(tau)


def simulate_unit(
    unit_id: int,
    c: float,
    eps: float,
    threshold: float,
    dt: float,
    sigma_obs: float,
    rng: np.random.Generator,
) -> tp.Tuple[SimUnit, bool]:
    """
    Build one unit from its path coefficient and SEV noise.

    Failure times outside ``(dt, 0.999]`` are clamped into it. The lower end is ``dt * (1 + 1e-9)``,
    the smallest time that still leaves the reading at ``dt`` before failure.

    Returns
    -------
    tuple(SimUnit, bool)
        Unit and whether its failure time was clamped.
    """
    ttf_min = dt * (1 + TTF_MIN_MARGIN)
    y_log = -c / threshold + eps
    ttf = float(np.exp(y_log))
    clamped = not ttf_min <= ttf <= TTF_MAX
    if clamped:
        ttf = float(np.clip(ttf, ttf_min, TTF_MAX))
        y_log = float(np.log(ttf))
    n_steps = int(np.ceil(ttf / dt)) - 1
    tau = dt * np.arange(1, n_steps + 1)
    tau = tau[tau < ttf]
    signal = degradation_path(c, tau)
    if sigma_obs > 0:
        signal = signal + rng.normal(0.0, sigma_obs, size=tau.size)
    return SimUnit(unit_id, float(c), float(y_log), ttf, tau, signal, float(threshold)), clamped


def client_threshold(scenario: SimScenario, rng: np.random.Generator) -> float:
    """
    Failure threshold of a client, ``D * exp(threshold_dispersion * sigma_scenario * xi)``.

    Without dispersion every client gets ``D`` and nothing is drawn from `rng`.
    """
    if scenario.threshold_dispersion == 0:
        return scenario.D
    xi = rng.standard_normal()
    return float(scenario.D * np.exp(scenario.threshold_dispersion * scenario.sigma_scenario * xi))


def gen_client(
    scenario: SimScenario,
    client_seed: int,
    n_units: tp.Optional[int] = None,
    c_mean: tp.Optional[float] = None,
) -> tp.List[SimUnit]:
    """
    Generate run-to-failure units of one client.

    Parameters
    ----------
    scenario : SimScenario
        Study parameters.
    client_seed : int
        Seed of the client stream.
    n_units : int, optional
        Number of units, ``sum(scenario.client_sizes(0))`` by default.
    c_mean : float, optional
        Mean of path coefficients, `scenario.c_mean` by default.

    Returns
    -------
    list(SimUnit)
    """
    if n_units is None:
        n_units = sum(scenario.client_sizes(0))
    c_mean = scenario.c_mean if c_mean is None else c_mean
    rng = np.random.default_rng(client_seed)
    threshold = client_threshold(scenario, rng)
    c_values = rng.normal(c_mean, scenario.sigma_scenario, size=n_units)
    eps_values = gumbel_l.rvs(size=n_units, random_state=rng)

    units = []
    n_clamped = 0
    for unit_id, (c, eps) in enumerate(zip(c_values, eps_values), start=1):
        unit, clamped = simulate_unit(unit_id, c, eps, threshold, scenario.dt, scenario.sigma_obs, rng)
        n_clamped += clamped
        units.append(unit)
    if n_clamped:
        logger.info("%d of %d failure times clamped into (dt, %.3f]", n_clamped, n_units, TTF_MAX)
    return units


def extract_feature(unit: SimUnit) -> FloatArray:
    """
    Least-squares projection of observed signal onto the path shape.

    ``c_hat = sum(x * u) / sum(u^2)`` with ``u = -1 / ln(tau)``.

    Parameters
    ----------
    unit : SimUnit
        Unit with nonempty signal.

    Returns
    -------
    np.ndarray
        Feature vector ``(1, c_hat)``.
    """
    if unit.tau.size == 0:
        raise ValueError(f"Unit {unit.unit_id} has empty signal")
    u = -1.0 / np.log(unit.tau)
    c_hat = float(np.sum(unit.signal * u) / np.sum(u**2))
    return np.array([1.0, c_hat])


def units_to_dataset(units: tp.Sequence[SimUnit], client_id: ClientId) -> ClientDataset:
    """Build regression data: features ``(1, c_hat)``, responses log failure times."""
    features = np.vstack([extract_feature(unit) for unit in units])
    responses = np.array([unit.y_log for unit in units])
    return ClientDataset(features, responses, client_id)


def units_to_signal_frame(units: tp.Sequence[SimUnit]) -> pd.DataFrame:
    """Long table of signals with columns `Columns.SignalLong`."""
    frames = [
        pd.DataFrame({Columns.Unit: unit.unit_id, Columns.Tau: unit.tau, Columns.Signal: unit.signal}) for unit in units
    ]
    if not frames:
        return pd.DataFrame(columns=Columns.SignalLong)
    return pd.concat(frames, ignore_index=True)


@attr.s(frozen=True, slots=True)
class SimClient:
    """
    Simulated data of one client.

    Parameters
    ----------
    client_id : hashable
        Client identifier.
    train : ClientDataset
        Training data.
    test : ClientDataset
        Test data.
    train_unit_ids, test_unit_ids : tuple(int)
        Unit ids of rows of `train` and `test`.
    signals : pd.DataFrame, optional
        Long table of signals of all units.
    threshold : float, optional
        Failure threshold the units were generated with.
    """

    client_id: ClientId = attr.ib()
    train: ClientDataset = attr.ib()
    test: ClientDataset = attr.ib()
    train_unit_ids: tp.Tuple[int, ...] = attr.ib(converter=tuple)
    test_unit_ids: tp.Tuple[int, ...] = attr.ib(converter=tuple)
    signals: tp.Optional[pd.DataFrame] = attr.ib(default=None, eq=False, repr=False)
    threshold: tp.Optional[float] = attr.ib(default=None)

    @property
    def test_ttf(self) -> FloatArray:
        """Failure times of test units."""
        return np.exp(self.test.responses)

    def targets(self, pred_ttf: FloatArray) -> tp.Tuple[FloatArray, FloatArray]:
        """Predicted and true failure times of test units."""
        return np.asarray(pred_ttf, dtype=np.float64), self.test_ttf


@attr.s(frozen=True, slots=True)
class SimStudy:
    """
    Simulated study: per-client training and test data.

    Parameters
    ----------
    clients : tuple(SimClient)
        Clients in fixed order.
    scenario : SimScenario, optional
        Parameters the study was generated with.
    """

    clients: tp.Tuple[SimClient, ...] = attr.ib(converter=tuple)
    scenario: tp.Optional[SimScenario] = attr.ib(default=None)

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


def client_name(i: int) -> str:
    """Name of client with zero-based position `i`."""
    return f"client_{i + 1}"


def build_study(scenario: SimScenario) -> SimStudy:
    """
    Generate all clients of a scenario.

    Client ``i`` gets id ``client_{i+1}`` and a stream seeded by ``(scenario.seed, client_id)``.
    Its first ``n_train`` units are used for training and the rest for testing.

    Parameters
    ----------
    scenario : SimScenario
        Study parameters.

    Returns
    -------
    SimStudy
    """
    clients = []
    for i in range(scenario.m):
        client_id = client_name(i)
        n_train, n_test = scenario.client_sizes(i)
        units = gen_client(scenario, derive_seed(scenario.seed, client_id), n_train + n_test)
        train_units, test_units = units[:n_train], units[n_train:]
        clients.append(
            SimClient(
                client_id=client_id,
                train=units_to_dataset(train_units, client_id),
                test=units_to_dataset(test_units, client_id),
                train_unit_ids=[unit.unit_id for unit in train_units],
                test_unit_ids=[unit.unit_id for unit in test_units],
                signals=units_to_signal_frame(units),
                threshold=units[0].threshold,
            )
        )
    return SimStudy(clients, scenario)


def build_study1(sigma_scenario: float, seed: int = 0, threshold_dispersion: float = 0.0) -> SimStudy:
    """
    First simulation study: 10 clients with 50 training and 50 test units each.

    Parameters
    ----------
    sigma_scenario : float
        Heterogeneity, 0.5 (low) or 1.0 (high) in reference experiments.
    seed : int, default 0
        Base seed.
    threshold_dispersion : float, default 0.0
        Client-level dispersion of failure thresholds.

    Returns
    -------
    SimStudy
    """
    scenario = SimScenario(
        m=10,
        n_train=50,
        n_test=50,
        sigma_scenario=sigma_scenario,
        threshold_dispersion=threshold_dispersion,
        seed=seed,
    )
    return build_study(scenario)


def build_study2_balanced(
    n_per_client: int,
    seed: int = 0,
    sigma_scenario: float = 0.5,
    threshold_dispersion: float = 0.0,
) -> SimStudy:
    """
    Balanced scenario of the second study: 20 clients with `n_per_client` training and 100 test units.

    Reference experiments use `n_per_client` from 5 to 15.
    """
    scenario = SimScenario(
        m=20,
        n_train=n_per_client,
        n_test=100,
        sigma_scenario=sigma_scenario,
        threshold_dispersion=threshold_dispersion,
        seed=seed,
    )
    return build_study(scenario)


IMBALANCED_SIZES = tuple(range(50, 250, 10))
THREE_CLIENT_SIZES = (25, 10, 5)


def build_study2_imbalanced(
    sizes: tp.Sequence[int] = IMBALANCED_SIZES,
    seed: int = 0,
    n_clients: tp.Optional[int] = None,
    n_test: int = 100,
    sigma_scenario: float = 0.5,
    threshold_dispersion: float = 0.0,
) -> SimStudy:
    """
    Imbalanced scenario of the second study: one training size per client, 100 test units each.

    Parameters
    ----------
    sizes : sequence(int), default ``(50, 60, ..., 240)``
        Training units of every client.
    seed : int, default 0
        Base seed.
    n_clients : int, optional
        Expected number of clients, checked against `sizes`.
    n_test : int, default 100
        Test units per client.
    sigma_scenario : float, default 0.5
        Heterogeneity.
    threshold_dispersion : float, default 0.0
        Client-level dispersion of failure thresholds.

    Returns
    -------
    SimStudy
    """
    sizes = tuple(sizes)
    if n_clients is not None and len(sizes) != n_clients:
        raise ValueError(f"Got {len(sizes)} client sizes for {n_clients} clients")
    scenario = SimScenario(
        m=len(sizes),
        n_train=sizes,
        n_test=n_test,
        sigma_scenario=sigma_scenario,
        threshold_dispersion=threshold_dispersion,
        seed=seed,
    )
    return build_study(scenario)


def build_three_client(
    sizes: tp.Sequence[int] = THREE_CLIENT_SIZES,
    seed: int = 0,
    sigma_scenario: float = 0.5,
    threshold_dispersion: float = 0.0,
) -> SimStudy:
    """Three clients with 25, 10 and 5 training units and 50 test units each."""
    return build_study2_imbalanced(
        sizes,
        seed=seed,
        n_clients=3,
        n_test=50,
        sigma_scenario=sigma_scenario,
        threshold_dispersion=threshold_dispersion,
    )


def _client_frame(client: SimClient) -> pd.DataFrame:
    frames = []
    for role, ds, unit_ids in (
        (ROLE_TRAIN, client.train, client.train_unit_ids),
        (ROLE_TEST, client.test, client.test_unit_ids),
    ):
        frames.append(
            pd.DataFrame(
                {
                    Columns.Unit: unit_ids,
                    Columns.Role: role,
                    Columns.YLog: ds.responses,
                    Columns.Ttf: np.exp(ds.responses),
                    Columns.CHat: ds.features[:, 1],
                }
            )
        )
    return pd.concat(frames, ignore_index=True).sort_values(Columns.Unit, kind="stable")


def dump_scenario(study: SimStudy, path: tp.Union[str, Path], with_signals: bool = False) -> None:
    """
    Write study to a directory.

    Every client gets ``<client_id>.csv`` with columns `Columns.Unit`, `Columns.Role`, `Columns.YLog`,
    `Columns.Ttf`, `Columns.CHat` and, if `with_signals`, ``<client_id>_signal.csv``
    with columns `Columns.SignalLong`.

    Parameters
    ----------
    study : SimStudy
        Study to write.
    path : str or Path
        Output directory, created if missing.
    with_signals : bool, default ``False``
        Whether to write signal tables.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for client in study.clients:
        _client_frame(client).to_csv(path / f"{client.client_id}.csv", index=False)
        if with_signals and client.signals is not None:
            client.signals.to_csv(path / f"{client.client_id}{SIGNAL_SUFFIX}.csv", index=False)


def _frame_to_dataset(df: pd.DataFrame, client_id: ClientId) -> ClientDataset:
    return ClientDataset.from_features(df[Columns.CHat].values, df[Columns.YLog].values, client_id)


def load_scenario(path: tp.Union[str, Path]) -> SimStudy:
    """
    Read study written by `dump_scenario`.

    Parameters
    ----------
    path : str or Path
        Directory with client tables.

    Returns
    -------
    SimStudy
        Study without scenario parameters; clients are sorted by their number.

    Raises
    ------
    DataFormatError
        If a table misses required columns or has no training units.
    """
    path = Path(path)
    files = [f for f in path.glob("*.csv") if not f.stem.endswith(SIGNAL_SUFFIX)]
    if not files:
        raise FileNotFoundError(f"No client tables in {path}")

    def order(file: Path) -> tp.Tuple[int, str]:
        suffix = file.stem.rsplit("_", 1)[-1]
        return (int(suffix), file.stem) if suffix.isdigit() else (0, file.stem)

    clients = []
    for file in sorted(files, key=order):
        df = pd.read_csv(file)
        missing = {Columns.Unit, Columns.Role, Columns.YLog, Columns.CHat} - set(df.columns)
        if missing:
            raise DataFormatError(f"{file.name}: missing columns {sorted(missing)}")
        client_id = file.stem
        train_df = df[df[Columns.Role] == ROLE_TRAIN]
        test_df = df[df[Columns.Role] == ROLE_TEST]
        if train_df.empty or test_df.empty:
            raise DataFormatError(f"{file.name}: both training and test units are required")
        signal_file = path / f"{client_id}{SIGNAL_SUFFIX}.csv"
        clients.append(
            SimClient(
                client_id=client_id,
                train=_frame_to_dataset(train_df, client_id),
                test=_frame_to_dataset(test_df, client_id),
                train_unit_ids=train_df[Columns.Unit].tolist(),
                test_unit_ids=test_df[Columns.Unit].tolist(),
                signals=pd.read_csv(signal_file) if signal_file.exists() else None,
            )
        )
    return SimStudy(clients)
