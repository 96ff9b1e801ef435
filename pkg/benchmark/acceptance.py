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

"""
Reproduction of the reference studies.

Study criteria run full-scale experiments and compare median percentage errors of methods.
The generator criterion refits the known regression of simulated units over many seeds.
Run ``python -m benchmark.acceptance --help`` for options.
"""

import logging
import typing as tp
from pathlib import Path

import attr
import click
import numpy as np
import pandas as pd
from scipy.stats import spearmanr
from tqdm.auto import tqdm

from pfltools.dataset import ClientDataset, SimScenario, gen_client
from pfltools.model_selection import ExperimentSpec, emit_report, run_experiment
from pfltools.models import local_mle
from pfltools.utils import derive_seed

logger = logging.getLogger(__name__)

CASE_FILE = Path(__file__).parents[1] / "datasets" / "CMAPSS" / "train_FD003.txt"
BALANCED_SIZES = tuple(range(5, 16))
PARITY_TOL = 0.5
SPREAD_TOL = 3.0
CLOSE_TOL = 5.0
GENERATOR_UNITS = 5000
GENERATOR_TOL = 0.05
GENERATOR_TRUTH = {"beta_0": 0.0, "beta_1": -0.5, "sigma": 1.0}

Summary = tp.Dict[str, tp.Any]


@attr.s(slots=True)
class Check:
    """Outcome of one comparison."""

    name: str = attr.ib()
    passed: bool = attr.ib()
    details: str = attr.ib()


def _run(spec: ExperimentSpec, out: Path, verbose: int) -> Summary:
    report = run_experiment(spec, verbose=verbose)
    emit_report(report, out)
    if report.is_partial:
        logger.warning("%d replications of %s failed", len(report.errors), spec.study)
    return report.summary()


def _median(summary: Summary, method: str, client: tp.Optional[str] = None) -> float:
    if client is None:
        return summary[method]["median"]
    return summary[method]["clients"][client]["median"]


def check_study1(out: Path, seed: int, reps: int, verbose: int) -> tp.List[Check]:
    checks = []
    orders = {0.5: ("PFL", "CFL", "Local"), 1.0: ("PFL", "Local", "CFL")}
    for sigma, order in orders.items():
        spec = ExperimentSpec(study="study1", sigma_scenario=sigma, seed=seed, replications=reps)
        summary = _run(spec, out / f"study1_sigma{sigma}", verbose)
        medians = [_median(summary, method) for method in order]
        passed = all(a < b for a, b in zip(medians, medians[1:]))
        details = ", ".join(f"{m}={v:.2f}" for m, v in zip(order, medians))
        checks.append(Check(f"study1 sigma={sigma}: {' < '.join(order)}", passed, details))
    return checks


def check_study2_balanced(out: Path, seed: int, reps: int, verbose: int) -> tp.List[Check]:
    medians: tp.Dict[str, tp.List[float]] = {"PFL": [], "CFL": [], "Local": []}
    for n in BALANCED_SIZES:
        spec = ExperimentSpec(study="study2_balanced", n_per_client=n, seed=seed, replications=reps)
        summary = _run(spec, out / f"study2_balanced_n{n}", verbose)
        for method, values in medians.items():
            values.append(_median(summary, method))

    checks = []
    for method, values in medians.items():
        rho = spearmanr(BALANCED_SIZES, values).correlation
        checks.append(Check(f"study2 balanced: {method} decreases in n", rho < -0.9, f"spearman={rho:.3f}"))
    local, pfl = medians["Local"][0], medians["PFL"][0]
    details = f"Local={local:.2f}, PFL={pfl:.2f}"
    checks.append(Check("study2 balanced n=5: Local >= 2 PFL", local >= 2 * pfl, details))
    for n, p, c in zip(BALANCED_SIZES, medians["PFL"], medians["CFL"]):
        tol = PARITY_TOL if n == 7 else 0.0
        checks.append(Check(f"study2 balanced n={n}: PFL <= CFL", p <= c + tol, f"PFL={p:.2f}, CFL={c:.2f}"))
    return checks


def check_study2_imbalanced(out: Path, seed: int, reps: int, verbose: int) -> tp.List[Check]:
    spec = ExperimentSpec(study="study2_imbalanced", seed=seed, replications=reps)
    summary = _run(spec, out / "study2_imbalanced", verbose)
    client_medians = [c["median"] for c in summary["PFL"]["clients"].values()]
    spread = max(client_medians) - min(client_medians)
    checks = [Check("study2 imbalanced: PFL spread over clients", spread < SPREAD_TOL, f"spread={spread:.2f}")]

    spec = ExperimentSpec(study="three_client", seed=seed, replications=reps)
    summary = _run(spec, out / "three_client", verbose)
    for client in ("client_2", "client_3"):
        pfl, local = _median(summary, "PFL", client), _median(summary, "Local", client)
        checks.append(Check(f"three clients {client}: PFL < Local", pfl < local, f"PFL={pfl:.2f}, Local={local:.2f}"))
    pfl, local = _median(summary, "PFL", "client_1"), _median(summary, "Local", "client_1")
    details = f"PFL={pfl:.2f}, Local={local:.2f}"
    checks.append(Check("three clients client_1: PFL close to Local", abs(pfl - local) < CLOSE_TOL, details))
    return checks


def check_case(out: Path, seed: int, reps: int, verbose: int) -> tp.List[Check]:
    if not CASE_FILE.is_file():
        logger.warning("Skip case study: %s is not available", CASE_FILE)
        return []
    spec = ExperimentSpec(study="case", data_path=str(CASE_FILE), seed=seed, replications=reps)
    summary = _run(spec, out / "case", verbose)
    checks = []
    for client in summary["PFL"]["clients"]:
        pfl = _median(summary, "PFL", client)
        others = {method: _median(summary, method, client) for method in ("CFL", "Local")}
        passed = all(pfl < value for value in others.values())
        details = f"PFL={pfl:.3f}, " + ", ".join(f"{m}={v:.3f}" for m, v in others.items())
        checks.append(Check(f"case {client}: PFL best", passed, details))
    return checks


def check_generator(out: Path, seed: int, reps: int, verbose: int) -> tp.List[Check]:
    scenario = SimScenario(m=1, n_train=GENERATOR_UNITS, n_test=1, sigma_scenario=0.5, sigma_obs=0.0)
    rows = []
    for rep in tqdm(range(reps), disable=verbose == 0, desc="generator"):
        units = gen_client(scenario, derive_seed(seed, "generator", rep), n_units=GENERATOR_UNITS)
        c_values = np.array([unit.c for unit in units])
        params = local_mle(ClientDataset.from_features(c_values, np.array([unit.y_log for unit in units])))
        rows.append((*params.beta, params.sigma))
    estimates = pd.DataFrame(rows, columns=list(GENERATOR_TRUTH))
    out.mkdir(parents=True, exist_ok=True)
    estimates.to_csv(out / "generator_estimates.csv", index=False)

    checks = []
    for name, truth in GENERATOR_TRUTH.items():
        mean = estimates[name].mean()
        se = estimates[name].std() / np.sqrt(reps)
        passed = abs(mean - truth) < GENERATOR_TOL
        checks.append(Check(f"generator: {name} = {truth}", passed, f"mean={mean:.4f}, se={se:.4f}"))
    return checks


CRITERIA: tp.Dict[str, tp.Tuple[tp.Callable[[Path, int, int, int], tp.List[Check]], int]] = {
    "study1": (check_study1, 20),
    "study2-balanced": (check_study2_balanced, 20),
    "study2-imbalanced": (check_study2_imbalanced, 20),
    "case": (check_case, 30),
    "generator": (check_generator, 50),
}


@click.command()
@click.option("--criterion", "criteria", type=click.Choice(sorted(CRITERIA)), multiple=True, help="Criteria to run.")
@click.option("--out", type=click.Path(), default="acceptance", show_default=True, help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed.")
@click.option("--reps", type=int, default=None, help="Replications instead of the reference number.")
@click.option("-v", "--verbose", count=True, help="Show progress bars.")
def main(criteria: tp.Tuple[str, ...], out: str, seed: int, reps: tp.Optional[int], verbose: int) -> None:
    """Run reference studies and check orderings of methods."""
    logging.basicConfig(level=logging.INFO)
    failed = 0
    for name in criteria or sorted(CRITERIA):
        check_func, default_reps = CRITERIA[name]
        for check in check_func(Path(out), seed, reps or default_reps, verbose):
            click.echo(f"{'PASS' if check.passed else 'FAIL'}  {check.name}  ({check.details})")
            failed += not check.passed
    if failed:
        raise click.ClickException(f"{failed} checks failed")


if __name__ == "__main__":
    main()
