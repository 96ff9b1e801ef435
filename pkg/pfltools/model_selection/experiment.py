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

"""Seeded replications of federated prognostic studies."""

import logging
import time
import typing as tp

import attr
import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from pfltools.columns import Columns
from pfltools.dataset import (
    ClientDataset,
    EngineUnit,
    UnitFeatures,
    assign_failure_modes,
    build_case_split,
    build_study1,
    build_study2_balanced,
    build_study2_imbalanced,
    build_three_client,
    compute_unit_features,
    parse_cmapss,
)
from pfltools.dataset.cmapss import CaseClient
from pfltools.dataset.simulation import IMBALANCED_SIZES, THREE_CLIENT_SIZES, SimClient
from pfltools.exceptions import ConfigError
from pfltools.federated import FedConfig, PFLModel
from pfltools.metrics import calc_client_mape, summarize
from pfltools.models import CflConfig, CFLModel, LocalModel, ModelBase
from pfltools.utils import derive_seed

from .loocv import DEFAULT_ALPHAS, DEFAULT_LAMBDAS, DEFAULT_THETAS, HyperGrid, HyperParams, loocv_select, point_config

logger = logging.getLogger(__name__)

STUDIES = ("study1", "study2_balanced", "study2_imbalanced", "three_client", "case")
METHODS = ("PFL", "CFL", "Local")
HYPER_COLUMNS = [Columns.Replication, "lambda", "alpha", "theta"]
STUDY_FOLD_LIMITS = {"study2_imbalanced": 20}

AnyClient = tp.Union[SimClient, CaseClient]


def _one_of(options: tp.Sequence[str]) -> tp.Callable[[object, "attr.Attribute[tp.Any]", str], None]:
    def check(_: object, attribute: "attr.Attribute[tp.Any]", value: str) -> None:
        if value not in options:
            raise ConfigError(f"`{attribute.name}` must be one of {list(options)}, got '{value}'")

    return check


def _check_methods(_: object, attribute: "attr.Attribute[tp.Any]", value: tp.Tuple[str, ...]) -> None:
    unknown = [m for m in value if m not in METHODS]
    if not value or unknown:
        raise ConfigError(f"`{attribute.name}` must be a nonempty subset of {list(METHODS)}, got {list(value)}")
    if len(set(value)) != len(value):
        raise ConfigError(f"`{attribute.name}` has duplicates: {list(value)}")


def _positive_int(_: object, attribute: "attr.Attribute[int]", value: int) -> None:
    if value < 1:
        raise ConfigError(f"`{attribute.name}` must be positive integer, got {value}")


def _optional_tuple(value: tp.Optional[tp.Iterable[int]]) -> tp.Optional[tp.Tuple[int, ...]]:
    return None if value is None else tuple(int(v) for v in value)


def _floats(value: tp.Iterable[float]) -> tp.Tuple[float, ...]:
    return tuple(float(v) for v in value)


def _nonempty(_: object, attribute: "attr.Attribute[tp.Any]", value: tp.Tuple[float, ...]) -> None:
    if not value:
        raise ConfigError(f"Grid `{attribute.name}` must be nonempty")


@attr.s(frozen=True, slots=True)
class ExperimentSpec:
    """
    Description of an experiment.

    Parameters
    ----------
    study : {"study1", "study2_balanced", "study2_imbalanced", "three_client", "case"}
        Data source.
    methods : sequence(str), default ``("PFL", "CFL", "Local")``
        Methods to compare.
    replications : int, default 20
        Number of independent replications.
    seed : int, default 0
        Nonnegative base seed, every replication derives its own.
    sigma_scenario : float, default 0.5
        Heterogeneity of simulated studies.
    threshold_dispersion : float, default 0.0
        Client-level threshold dispersion of simulated studies, all clients share one threshold if 0.
    n_per_client : int, default 5
        Training units per client of the balanced study.
    sizes : sequence(int), optional
        Training units per client of imbalanced and three-client studies.
    data_path : str, optional
        Run-to-failure file of the case study.
    labels_path : str, optional
        Failure mode labels of the case study, clustering is used if not given.
    train_fraction : float, default 0.4
        Training share of case-study clients.
    truncation : float, default 0.7
        Observed life share of case-study test units.
    lambdas, alphas, thetas : sequence(float)
        Hyperparameter grid of the personalized model.
    max_folds : int, optional
        Limit of leave-one-out folds, 20 for the imbalanced study and all folds otherwise.
        Capped folds are drawn by a seeded subsample.
    standardize : bool, default ``True``
        Whether to standardize features with pooled training moments.
    out : str, optional
        Output directory.
    """

    study: str = attr.ib(validator=_one_of(STUDIES))
    methods: tp.Tuple[str, ...] = attr.ib(default=METHODS, converter=tuple, validator=_check_methods)
    replications: int = attr.ib(default=20, converter=int, validator=_positive_int)
    seed: int = attr.ib(default=0, converter=int)
    sigma_scenario: float = attr.ib(default=0.5, converter=float)
    threshold_dispersion: float = attr.ib(default=0.0, converter=float)
    n_per_client: int = attr.ib(default=5, converter=int, validator=_positive_int)
    sizes: tp.Optional[tp.Tuple[int, ...]] = attr.ib(default=None, converter=_optional_tuple)
    data_path: tp.Optional[str] = attr.ib(default=None)
    labels_path: tp.Optional[str] = attr.ib(default=None)
    train_fraction: float = attr.ib(default=0.4, converter=float)
    truncation: float = attr.ib(default=0.7, converter=float)
    lambdas: tp.Tuple[float, ...] = attr.ib(default=DEFAULT_LAMBDAS, converter=_floats, validator=_nonempty)
    alphas: tp.Tuple[float, ...] = attr.ib(default=DEFAULT_ALPHAS, converter=_floats, validator=_nonempty)
    thetas: tp.Tuple[float, ...] = attr.ib(default=DEFAULT_THETAS, converter=_floats, validator=_nonempty)
    max_folds: tp.Optional[int] = attr.ib(
        default=attr.Factory(lambda self: STUDY_FOLD_LIMITS.get(self.study), takes_self=True),
        converter=attr.converters.optional(int),
    )
    standardize: bool = attr.ib(default=True)
    out: tp.Optional[str] = attr.ib(default=None)

    def __attrs_post_init__(self) -> None:
        if self.study == "case" and self.data_path is None:
            raise ConfigError("Case study requires `data_path`")
        if self.max_folds is not None and self.max_folds < 1:
            raise ConfigError(f"`max_folds` must be positive integer, got {self.max_folds}")
        if self.seed < 0:
            raise ConfigError(f"`seed` must be nonnegative, got {self.seed}")

    @property
    def grid(self) -> HyperGrid:
        """Hyperparameter grid."""
        return HyperGrid(self.lambdas, self.alphas, self.thetas)

    def replication_seed(self, replication: int) -> int:
        """Seed of replication `replication`."""
        return derive_seed(self.seed, "replication", replication)


@attr.s(frozen=True, slots=True)
class ExperimentReport:
    """
    Outcome of an experiment.

    Parameters
    ----------
    spec : ExperimentSpec
        Experiment description.
    raw : pd.DataFrame
        One row per method, client and replication with columns `Columns.RawReport`.
    hyperparams : pd.DataFrame
        Selected personalized hyperparameters per replication.
    errors : tuple(dict)
        Failed replications with error class and message.
    replication_seeds : tuple(int)
        Seed of every replication.
    wall_clock : float
        Total run time in seconds.
    """

    spec: ExperimentSpec = attr.ib()
    raw: pd.DataFrame = attr.ib(eq=False, repr=False)
    hyperparams: pd.DataFrame = attr.ib(eq=False, repr=False)
    errors: tp.Tuple[tp.Dict[str, tp.Any], ...] = attr.ib(converter=tuple, factory=tuple)
    replication_seeds: tp.Tuple[int, ...] = attr.ib(converter=tuple, factory=tuple)
    wall_clock: float = attr.ib(default=0.0)

    @property
    def is_partial(self) -> bool:
        """Whether some replications failed."""
        return bool(self.errors)

    def summary(self) -> tp.Dict[str, tp.Any]:
        """Median and IQR of percentage errors per method and per method and client."""
        return resummarize(self.raw)


def resummarize(raw: pd.DataFrame) -> tp.Dict[str, tp.Any]:
    """
    Summarize raw per-replication errors.

    Parameters
    ----------
    raw : pd.DataFrame
        Table with columns `Columns.RawReport`.

    Returns
    -------
    dict
        ``{method: {"median", "iqr", "clients": {client_id: {"median", "iqr"}}}}``.
    """
    result: tp.Dict[str, tp.Any] = {}
    for method, method_df in raw.groupby(Columns.Method, sort=False):
        median, iqr = summarize(method_df[Columns.Mape].values)
        clients = {}
        for client_id, client_df in method_df.groupby(Columns.Client, sort=False):
            c_median, c_iqr = summarize(client_df[Columns.Mape].values)
            clients[str(client_id)] = {"median": c_median, "iqr": c_iqr}
        result[str(method)] = {"median": median, "iqr": iqr, "clients": clients}
    return result


def pooled_moments(datasets: tp.Sequence[ClientDataset]) -> tp.Tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of features (intercept excluded) over all training units."""
    pooled = np.vstack([ds.features[:, 1:] for ds in datasets])
    mean = pooled.mean(axis=0)
    scale = pooled.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def standardize_dataset(ds: ClientDataset, mean: np.ndarray, scale: np.ndarray) -> ClientDataset:
    """Apply feature standardization."""
    return ClientDataset.from_features((ds.features[:, 1:] - mean) / scale, ds.responses, ds.client_id)


def standardize_clients(clients: tp.Sequence[AnyClient]) -> tp.List[AnyClient]:
    """Standardize train and test features of all clients with pooled training moments."""
    mean, scale = pooled_moments([client.train for client in clients])
    return [
        attr.evolve(
            client,
            train=standardize_dataset(client.train, mean, scale),
            test=standardize_dataset(client.test, mean, scale),
        )
        for client in clients
    ]


@attr.s(slots=True)
class CaseData:
    """Parsed units, their failure modes and fused features."""

    units: tp.List[EngineUnit] = attr.ib()
    labels: tp.Dict[int, int] = attr.ib()
    features: tp.Dict[int, UnitFeatures] = attr.ib()


def load_case_data(spec: ExperimentSpec, verbose: int) -> CaseData:
    units = parse_cmapss(tp.cast(str, spec.data_path))
    labels = assign_failure_modes(units, spec.labels_path)
    features = compute_unit_features(units, spec.truncation, verbose=verbose)
    return CaseData(units, labels, features)


def build_replication_clients(
    spec: ExperimentSpec,
    seed: int,
    case_data: tp.Optional[CaseData] = None,
) -> tp.List[AnyClient]:
    """Generate or partition the data of one replication."""
    if spec.study == "study1":
        study: tp.Any = build_study1(spec.sigma_scenario, seed, spec.threshold_dispersion)
    elif spec.study == "study2_balanced":
        study = build_study2_balanced(spec.n_per_client, seed, spec.sigma_scenario, spec.threshold_dispersion)
    elif spec.study == "study2_imbalanced":
        study = build_study2_imbalanced(
            spec.sizes or IMBALANCED_SIZES,
            seed,
            sigma_scenario=spec.sigma_scenario,
            threshold_dispersion=spec.threshold_dispersion,
        )
    elif spec.study == "three_client":
        study = build_three_client(
            spec.sizes or THREE_CLIENT_SIZES, seed, spec.sigma_scenario, spec.threshold_dispersion
        )
    else:
        if case_data is None:
            raise ValueError("Case data is required for case study")
        study = build_case_split(
            case_data.units, case_data.labels, seed, spec.train_fraction, spec.truncation, case_data.features
        )
    clients = list(study.clients)
    if spec.standardize:
        clients = standardize_clients(clients)
    return clients


def _fit_method(
    method: str,
    train: tp.List[ClientDataset],
    spec: ExperimentSpec,
    seed: int,
    fed: FedConfig,
    cfl: CflConfig,
) -> tp.Tuple[ModelBase, tp.Optional[HyperParams]]:
    method_seed = derive_seed(seed, method)
    if method == "Local":
        return LocalModel().fit(train), None
    if method == "CFL":
        return CFLModel.from_config(attr.evolve(cfl, seed=method_seed)).fit(train), None
    template = attr.evolve(fed, seed=method_seed)
    selection = loocv_select(train, spec.grid, template, spec.max_folds)
    best = selection.best
    cfg = point_config(template, best.lambda_, best.alpha, best.theta)
    return PFLModel.from_config(cfg).fit(train), best


def _score_clients(method: str, model: ModelBase, clients: tp.Sequence[AnyClient], replication: int) -> tp.List[dict]:
    rows = []
    for client in clients:
        pred_ttf = model.predict_ttf(client.client_id, client.test.features)
        pred, truth = client.targets(pred_ttf)
        rows.append(
            {
                Columns.Method: method,
                Columns.Client: client.client_id,
                Columns.Replication: replication,
                Columns.Mape: calc_client_mape(pred, truth),
            }
        )
    return rows


def run_experiment(
    spec: ExperimentSpec,
    fed: tp.Optional[FedConfig] = None,
    cfl: tp.Optional[CflConfig] = None,
    verbose: int = 0,
) -> ExperimentReport:
    """
    Run all replications of an experiment.

    Replication ``r`` regenerates (or re-partitions) the data with its own seed, selects
    personalized hyperparameters by leave-one-out, fits every method on training data and
    scores percentage errors on test data of every client. Each method gets a seed derived from
    the replication seed and its name, so adding a method never changes results of others.
    A failing replication is logged, recorded in `ExperimentReport.errors` and skipped.

    Parameters
    ----------
    spec : ExperimentSpec
        Experiment description.
    fed : FedConfig, optional
        Settings of personalized training other than the grid.
    cfl : CflConfig, optional
        Settings of conventional federated training.
    verbose : int, default 0
        Show progress bar if positive.

    Returns
    -------
    ExperimentReport
    """
    fed = fed or FedConfig(lambda_=spec.lambdas[0], alpha=spec.alphas[0])
    cfl = cfl or CflConfig()
    start = time.perf_counter()
    case_data = load_case_data(spec, verbose) if spec.study == "case" else None

    raw_rows: tp.List[dict] = []
    hyper_rows: tp.List[dict] = []
    errors: tp.List[tp.Dict[str, tp.Any]] = []
    seeds = [spec.replication_seed(r) for r in range(spec.replications)]
    for replication in tqdm(range(spec.replications), desc="Replications", disable=verbose == 0):
        seed = seeds[replication]
        try:
            clients = build_replication_clients(spec, seed, case_data)
            train = [client.train for client in clients]
            rows = []
            best = None
            for method in spec.methods:
                model, chosen = _fit_method(method, train, spec, seed, fed, cfl)
                best = chosen or best
                rows.extend(_score_clients(method, model, clients, replication))
        except (ValueError, RuntimeError, ArithmeticError) as e:
            logger.warning("Replication %d failed: %s: %s", replication, e.__class__.__name__, e)
            errors.append({Columns.Replication: replication, "error": e.__class__.__name__, "message": str(e)})
            continue
        raw_rows.extend(rows)
        if best is not None:
            hyper_rows.append({Columns.Replication: replication, **best.to_dict()})

    raw = pd.DataFrame(raw_rows, columns=Columns.RawReport)
    hyperparams = pd.DataFrame(hyper_rows, columns=HYPER_COLUMNS)
    wall_clock = time.perf_counter() - start
    logger.info("Experiment finished in %.1f s, %d replications failed", wall_clock, len(errors))
    return ExperimentReport(spec, raw, hyperparams, errors, seeds, wall_clock)
