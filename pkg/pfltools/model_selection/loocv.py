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

"""Leave-one-out selection of personalized federated hyperparameters."""

import itertools
import logging
import typing as tp

import attr
import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from pfltools.dataset import ClientDataset
from pfltools.exceptions import ConfigError, ConvergenceError, DivergenceError
from pfltools.federated import FedConfig, PFLModel
from pfltools.metrics import relative_errors
from pfltools.models import make_kernel
from pfltools.utils import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (0.01, 0.1, 1.0, 10.0)
DEFAULT_ALPHAS = (0.001, 0.005, 0.01, 0.05)
DEFAULT_THETAS = (0.5, 1.0, 5.0, 10.0)


def _nonempty(_: object, attribute: "attr.Attribute[tp.Any]", value: tp.Tuple[float, ...]) -> None:
    if not value:
        raise ConfigError(f"Grid `{attribute.name}` must be nonempty")


def _as_floats(value: tp.Iterable[float]) -> tp.Tuple[float, ...]:
    return tuple(float(v) for v in value)


@attr.s(frozen=True, slots=True)
class HyperGrid:
    """
    Candidate values of personalized federated hyperparameters.

    Parameters
    ----------
    lambdas : sequence(float), default ``(0.01, 0.1, 1, 10)``
        Similarity penalty weights.
    alphas : sequence(float), default ``(0.001, 0.005, 0.01, 0.05)``
        Step sizes; infeasible ones are skipped.
    thetas : sequence(float), default ``(0.5, 1, 5, 10)``
        Kernel shape parameters.
    """

    lambdas: tp.Tuple[float, ...] = attr.ib(default=DEFAULT_LAMBDAS, converter=_as_floats, validator=_nonempty)
    alphas: tp.Tuple[float, ...] = attr.ib(default=DEFAULT_ALPHAS, converter=_as_floats, validator=_nonempty)
    thetas: tp.Tuple[float, ...] = attr.ib(default=DEFAULT_THETAS, converter=_as_floats, validator=_nonempty)

    def points(self) -> tp.List[tp.Tuple[float, float, float]]:
        """All ``(lambda, alpha, theta)`` combinations."""
        return list(itertools.product(self.lambdas, self.alphas, self.thetas))


@attr.s(frozen=True, slots=True)
class HyperParams:
    """Chosen ``(lambda, alpha, theta)``."""

    lambda_: float = attr.ib()
    alpha: float = attr.ib()
    theta: float = attr.ib()

    def to_dict(self) -> tp.Dict[str, float]:
        """Convert to plain dict."""
        return {"lambda": self.lambda_, "alpha": self.alpha, "theta": self.theta}


@attr.s(frozen=True, slots=True)
class LoocvResult:
    """
    Result of hyperparameter search.

    Parameters
    ----------
    best : HyperParams
        Selected point.
    scores : pd.DataFrame
        Columns ``lambda``, ``alpha``, ``theta``, ``score`` for every evaluated point.
    """

    best: HyperParams = attr.ib()
    scores: pd.DataFrame = attr.ib(eq=False, repr=False)


def point_config(template: FedConfig, lambda_: float, alpha: float, theta: float) -> FedConfig:
    """Config `template` with given hyperparameters; kernel family and scale are kept."""
    kernel = make_kernel(template.kernel.kind, theta, template.kernel.lambda_p)
    return attr.evolve(template, lambda_=lambda_, alpha=alpha, kernel=kernel)


def feasible_points(
    grid: HyperGrid,
    n_clients: int,
    template: FedConfig,
) -> tp.List[tp.Tuple[float, float, float]]:
    """
    Grid points satisfying the aggregation weight bound for `n_clients` clients.

    Raises
    ------
    ConfigError
        If no point is feasible.
    """
    feasible = []
    for lambda_, alpha, theta in grid.points():
        cfg = point_config(template, lambda_, alpha, theta)
        if cfg.is_feasible(n_clients):
            feasible.append((lambda_, alpha, theta))
        else:
            logger.info(
                "Skip infeasible point lambda=%g, alpha=%g, theta=%g: max alpha is %g",
                lambda_,
                alpha,
                theta,
                cfg.max_gamma(n_clients) / 2,
            )
    if not feasible:
        bounds = sorted({point_config(template, 1.0, 1.0, t).max_gamma(n_clients) / 2 for t in grid.thetas})
        raise ConfigError(f"All grid points are infeasible for {n_clients} clients, max alpha per theta: {bounds}")
    return feasible


def fold_indices(datasets: tp.Sequence[ClientDataset], max_folds: tp.Optional[int] = None, seed: int = 0) -> np.ndarray:
    """
    Leave-one-out folds to evaluate, in increasing order.

    All ``max n_i`` folds are used unless `max_folds` is smaller, then `max_folds` of them are
    drawn without replacement from a stream seeded by `seed`.

    Examples
    --------
    >>> from pfltools.dataset import ClientDataset
    >>> ds = ClientDataset([[1.0]] * 4, [0.0] * 4)
    >>> fold_indices([ds])
    array([0, 1, 2, 3])
    >>> len(fold_indices([ds], max_folds=2, seed=1))
    2
    """
    n_folds = max(ds.n_samples for ds in datasets)
    if max_folds is None or max_folds >= n_folds:
        return np.arange(n_folds)
    rng = np.random.default_rng(derive_seed(seed, "loocv_folds"))
    return np.sort(rng.choice(n_folds, size=max_folds, replace=False))


def loocv_score(
    datasets: tp.Sequence[ClientDataset],
    cfg: FedConfig,
    max_folds: tp.Optional[int] = None,
) -> float:
    """
    Mean held-out percentage error of failure time predictions.

    Fold ``j`` holds out unit ``j mod n_i`` of every client ``i`` at once, the model is fitted
    on the remaining units and predicts the held-out ones.

    Parameters
    ----------
    datasets : sequence(ClientDataset)
        Training data, every client with at least 2 units.
    cfg : FedConfig
        Configuration to evaluate.
    max_folds : int, optional
        Limit of folds; all ``max n_i`` folds are used if not given, otherwise a subsample seeded
        by `cfg.seed`, see `fold_indices`.

    Returns
    -------
    float
        Pooled mean absolute percentage error, ``inf`` if training failed.
    """
    errors: tp.List[float] = []
    for fold in fold_indices(datasets, max_folds, cfg.seed).tolist():
        rows = [fold % ds.n_samples for ds in datasets]
        train = [ds.without(row) for ds, row in zip(datasets, rows)]
        try:
            model = PFLModel.from_config(cfg).fit(train)
        except (ConvergenceError, DivergenceError) as e:
            logger.warning("Fold %d failed for lambda=%g, alpha=%g: %s", fold, cfg.lambda_, cfg.alpha, e)
            return np.inf
        for ds, row in zip(datasets, rows):
            pred = model.predict_ttf(ds.client_id, ds.features[[row]])
            errors.extend(relative_errors(pred, np.exp(ds.responses[[row]])))
    return float(np.mean(errors))


def loocv_select(
    datasets: tp.Sequence[ClientDataset],
    grid: tp.Optional[HyperGrid] = None,
    template: tp.Optional[FedConfig] = None,
    max_folds: tp.Optional[int] = None,
    verbose: int = 0,
) -> LoocvResult:
    """
    Select ``(lambda, alpha, theta)`` by leave-one-out cross-validation.

    Infeasible points are dropped before the search. The point with the smallest score wins,
    ties go to larger ``lambda`` and then to smaller ``alpha``.
    A single feasible point is returned without fitting.

    Parameters
    ----------
    datasets : sequence(ClientDataset)
        Training data, every client with at least 2 units.
    grid : HyperGrid, optional
        Candidate values, default grid if not given.
    template : FedConfig, optional
        Other training settings (kernel family, iterations, tolerances, seed).
    max_folds : int, optional
        Limit of folds, see `loocv_score`.
    verbose : int, default 0
        Show progress bar if positive.

    Returns
    -------
    LoocvResult
    """
    grid = grid or HyperGrid()
    template = template or FedConfig(lambda_=grid.lambdas[0], alpha=grid.alphas[0])
    small = [ds.client_id for ds in datasets if ds.n_samples < 2]
    if small:
        raise ValueError(f"Leave-one-out needs at least 2 units per client, clients with less: {small}")

    points = feasible_points(grid, len(datasets), template)
    if len(points) == 1:
        best = HyperParams(*points[0])
        scores = pd.DataFrame([{**best.to_dict(), "score": np.nan}])
        return LoocvResult(best, scores)

    rows = []
    for lambda_, alpha, theta in tqdm(points, desc="LOOCV", disable=verbose == 0):
        score = loocv_score(datasets, point_config(template, lambda_, alpha, theta), max_folds)
        rows.append({"lambda": lambda_, "alpha": alpha, "theta": theta, "score": score})
    scores = pd.DataFrame(rows)

    ranked = sorted(rows, key=lambda r: (r["score"], -r["lambda"], r["alpha"], r["theta"]))
    if not np.isfinite(ranked[0]["score"]):
        raise ConvergenceError("loocv", len(points), np.inf)
    best = HyperParams(ranked[0]["lambda"], ranked[0]["alpha"], ranked[0]["theta"])
    logger.info("Selected %s with score %.4f", best, ranked[0]["score"])
    return LoocvResult(best, scores)
