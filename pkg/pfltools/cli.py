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

# pylint: disable=no-value-for-parameter

"""Command line interface."""

import functools
import logging
import sys
import typing as tp
from pathlib import Path

import attr
import click
import numpy as np
import pandas as pd

from pfltools.columns import Columns
from pfltools.config import RunConfig, load_config
from pfltools.dataset import ClientDataset, build_case_split, dump_case_study, dump_scenario, read_client_tables
from pfltools.dataset.client import FEATURE_PREFIX
from pfltools.dataset.simulation import SimStudy
from pfltools.federated import PFLModel
from pfltools.model_selection import (
    ExperimentSpec,
    HyperGrid,
    build_replication_clients,
    emit_report,
    loocv_select,
    point_config,
    run_experiment,
)
from pfltools.model_selection.experiment import load_case_data
from pfltools.models import CFLModel, LocalModel, ModelBase, params_from_dataframe, predict_quantiles, predict_ttf

PARAMS_FILE = "params.csv"
PREDICTIONS_FILE = "predictions.csv"
STUDY2_SCENARIOS = {"balanced": "study2_balanced", "imbalanced": "study2_imbalanced", "three-client": "three_client"}

F = tp.TypeVar("F", bound=tp.Callable[..., tp.Any])


def handle_errors(func: F) -> F:
    """Print library errors as one ``error: <Class>: <message>`` line and exit with code 1."""

    @functools.wraps(func)
    def wrapper(*args: tp.Any, **kwargs: tp.Any) -> tp.Any:
        try:
            return func(*args, **kwargs)
        except (ValueError, RuntimeError, ArithmeticError, KeyError, OSError) as e:
            message = e.args[0] if isinstance(e, KeyError) and e.args else e
            click.echo(f"error: {e.__class__.__name__}: {message}", err=True)
            sys.exit(1)

    return tp.cast(F, wrapper)


def common_options(func: F) -> F:
    """Options shared by experiment commands."""
    options = [
        click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file."),
        click.option("--seed", type=int, default=None, help="Base seed."),
        click.option("--out", type=click.Path(), default=None, help="Output directory."),
        click.option("--reps", type=int, default=None, help="Number of replications."),
        click.option("--max-folds", type=int, default=None, help="Limit of leave-one-out folds."),
        click.option("--dump-data", is_flag=True, default=False, help="Also write data of the first replication."),
        click.option("-v", "--verbose", count=True, help="Show progress bars."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


threshold_option = click.option(
    "--threshold-dispersion", type=float, default=None, help="Client-level threshold dispersion, 0 by default."
)


def _read_config(config_path: tp.Optional[str]) -> RunConfig:
    return load_config(config_path) if config_path is not None else RunConfig()


def _run(spec: ExperimentSpec, config: RunConfig, dump_data: bool, verbose: int) -> None:
    if spec.out is None:
        raise ValueError("Output directory is not set, use `--out` or `experiment.out`")
    report = run_experiment(spec, config.fed_config(), config.cfl_config(), verbose=verbose)
    raw_path, summary_path = emit_report(report, spec.out)
    click.echo(f"Raw errors: {raw_path}")
    click.echo(f"Summary: {summary_path}")
    if dump_data:
        _dump_first_replication(spec, verbose)
    if report.is_partial:
        click.echo(f"{len(report.errors)} of {spec.replications} replications failed", err=True)


def _dump_first_replication(spec: ExperimentSpec, verbose: int) -> None:
    seed = spec.replication_seed(0)
    data_path = Path(tp.cast(str, spec.out)) / "data"
    unscaled = attr.evolve(spec, standardize=False)
    if spec.study == "case":
        case_data = load_case_data(unscaled, verbose)
        study = build_case_split(
            case_data.units, case_data.labels, seed, spec.train_fraction, spec.truncation, case_data.features
        )
        dump_case_study(study, data_path)
    else:
        dump_scenario(SimStudy(build_replication_clients(unscaled, seed)), data_path)
    click.echo(f"Data: {data_path}")


@click.group()
def cli() -> None:
    """Personalized federated prognostics."""


@cli.group()
def simulate() -> None:
    """Run simulation studies."""


@simulate.command("study1")
@click.option("--sigma", type=float, required=True, help="Heterogeneity of path coefficients, e.g. 0.5 or 1.0.")
@threshold_option
@common_options
@handle_errors
def simulate_study1(
    sigma: float,
    threshold_dispersion: tp.Optional[float],
    config_path: tp.Optional[str],
    seed: tp.Optional[int],
    out: tp.Optional[str],
    reps: tp.Optional[int],
    max_folds: tp.Optional[int],
    dump_data: bool,
    verbose: int,
) -> None:
    """Ten clients with 50 training units each."""
    config = _read_config(config_path)
    spec = config.experiment_spec(
        study="study1",
        sigma_scenario=sigma,
        threshold_dispersion=threshold_dispersion,
        seed=seed,
        out=out,
        replications=reps,
        max_folds=max_folds,
    )
    _run(spec, config, dump_data, verbose)


@simulate.command("study2")
@click.argument("scenario", type=click.Choice(sorted(STUDY2_SCENARIOS)))
@click.option("--n-per-client", type=int, default=None, help="Training units per client (balanced scenario).")
@threshold_option
@common_options
@handle_errors
def simulate_study2(
    scenario: str,
    n_per_client: tp.Optional[int],
    threshold_dispersion: tp.Optional[float],
    config_path: tp.Optional[str],
    seed: tp.Optional[int],
    out: tp.Optional[str],
    reps: tp.Optional[int],
    max_folds: tp.Optional[int],
    dump_data: bool,
    verbose: int,
) -> None:
    """Small and imbalanced client data."""
    config = _read_config(config_path)
    spec = config.experiment_spec(
        study=STUDY2_SCENARIOS[scenario],
        n_per_client=n_per_client,
        threshold_dispersion=threshold_dispersion,
        seed=seed,
        out=out,
        replications=reps,
        max_folds=max_folds,
    )
    _run(spec, config, dump_data, verbose)


@cli.command("case-study")
@click.option("--data", "data_path", type=click.Path(), required=True, help="Run-to-failure file.")
@click.option("--labels", "labels_path", type=click.Path(), default=None, help="Failure mode labels CSV.")
@common_options
@handle_errors
def case_study(
    data_path: str,
    labels_path: tp.Optional[str],
    config_path: tp.Optional[str],
    seed: tp.Optional[int],
    out: tp.Optional[str],
    reps: tp.Optional[int],
    max_folds: tp.Optional[int],
    dump_data: bool,
    verbose: int,
) -> None:
    """Four turbofan clients split by failure mode."""
    if not Path(data_path).is_file():
        raise FileNotFoundError(f"Data file does not exist: {data_path}")
    config = _read_config(config_path)
    spec = config.experiment_spec(
        study="case",
        data_path=data_path,
        labels_path=labels_path,
        seed=seed,
        out=out,
        replications=reps,
        max_folds=max_folds,
    )
    _run(spec, config, dump_data, verbose)


def _frame_dataset(df: pd.DataFrame, client_id: str) -> ClientDataset:
    if Columns.CHat in df.columns:
        df = df.rename(columns={Columns.CHat: f"{FEATURE_PREFIX}1"})
    return ClientDataset.from_dataframe(df, client_id)


def _read_datasets(data_dir: str, role: tp.Optional[str]) -> tp.List[ClientDataset]:
    datasets = []
    for client_id, df in read_client_tables(data_dir).items():
        if role is not None and Columns.Role in df.columns:
            df = df[df[Columns.Role] == role]
        datasets.append(_frame_dataset(df, client_id))
    return datasets


def _grid(config: RunConfig) -> HyperGrid:
    keys = ("lambdas", "alphas", "thetas")
    return HyperGrid(**{key: config.experiment[key] for key in keys if key in config.experiment})


def _fit_model(
    method: str,
    datasets: tp.List[ClientDataset],
    config: RunConfig,
    max_folds: tp.Optional[int],
) -> ModelBase:
    if method == "Local":
        return LocalModel().fit(datasets)
    if method == "CFL":
        return CFLModel.from_config(config.cfl_config()).fit(datasets)
    template = config.fed_config()
    if not {"lambda_", "alpha"} <= set(config.fed):
        best = loocv_select(datasets, _grid(config), template, max_folds).best
        click.echo(f"Selected lambda={best.lambda_}, alpha={best.alpha}, theta={best.theta}")
        template = point_config(template, best.lambda_, best.alpha, best.theta)
    return PFLModel.from_config(template).fit(datasets)


@cli.command("fit")
@click.option("--data", "data_dir", type=click.Path(), required=True, help="Directory with client CSV tables.")
@click.option("--method", type=click.Choice(["PFL", "CFL", "Local"]), default="PFL", help="Method to fit.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file.")
@click.option("--seed", type=int, default=None, help="Seed of initialization.")
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--max-folds", type=int, default=None, help="Limit of leave-one-out folds.")
@handle_errors
def fit(
    data_dir: str,
    method: str,
    config_path: tp.Optional[str],
    seed: tp.Optional[int],
    out: str,
    max_folds: tp.Optional[int],
) -> None:
    """Fit a method on training rows of client tables and write parameters."""
    config = _read_config(config_path)
    if seed is not None:
        config = RunConfig({**config.fed, "seed": seed}, {**config.cfl, "seed": seed}, config.experiment)
    datasets = _read_datasets(data_dir, role="train")
    model = _fit_model(method, datasets, config, max_folds)
    out_path = Path(out)
    out_path.mkdir(parents=True, exist_ok=True)
    model.params_to_dataframe().to_csv(out_path / PARAMS_FILE, index=False)
    click.echo(f"Parameters: {out_path / PARAMS_FILE}")


@cli.command("predict")
@click.option("--params", "params_path", type=click.Path(), required=True, help="Fitted parameters CSV.")
@click.option("--data", "data_dir", type=click.Path(), required=True, help="Directory with client CSV tables.")
@click.option("--quantile", "quantiles", type=float, multiple=True, help="Extra quantile of failure time.")
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@handle_errors
def predict(params_path: str, data_dir: str, quantiles: tp.Tuple[float, ...], out: str) -> None:
    """Predict median failure time, and optionally other quantiles, for every row of client tables."""
    if not Path(params_path).is_file():
        raise FileNotFoundError(f"Parameters file does not exist: {params_path}")
    params = {str(k): v for k, v in params_from_dataframe(pd.read_csv(params_path)).items()}
    frames = []
    for client_id, df in read_client_tables(data_dir).items():
        if client_id not in params:
            raise KeyError(f"No fitted parameters for client '{client_id}'")
        ds = _frame_dataset(df, client_id)
        result = pd.DataFrame(
            {
                Columns.Client: client_id,
                Columns.Unit: df[Columns.Unit].values if Columns.Unit in df.columns else np.arange(len(df)),
                Columns.Ttf: predict_ttf(params[client_id], ds.features),
            }
        )
        for p in quantiles:
            result[f"q_{p:g}"] = np.exp(predict_quantiles(params[client_id], ds.features, p))
        frames.append(result)
    out_path = Path(out)
    out_path.mkdir(parents=True, exist_ok=True)
    pd.concat(frames, ignore_index=True).to_csv(out_path / PREDICTIONS_FILE, index=False)
    click.echo(f"Predictions: {out_path / PREDICTIONS_FILE}")


def main() -> None:
    """CLI entry point."""
    logging.basicConfig(level=logging.INFO)
    cli()


if __name__ == "__main__":
    main()
