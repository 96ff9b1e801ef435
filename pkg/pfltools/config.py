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

"""Configuration files."""

import typing as tp
from pathlib import Path

import attr
import yaml

from pfltools.exceptions import ConfigError
from pfltools.federated import FedConfig
from pfltools.model_selection import ExperimentSpec
from pfltools.models import CflConfig, make_kernel
from pfltools.utils import is_instance

FED_KEYS: tp.Dict[str, tp.Any] = {
    "lambda_": float,
    "alpha": float,
    "kernel": str,
    "theta": float,
    "lambda_p": float,
    "max_iter": int,
    "inner_tol": float,
    "inner_max_iter": int,
    "early_stop_tol": float,
    "seed": int,
}
CFL_KEYS: tp.Dict[str, tp.Any] = {
    "rounds": int,
    "local_steps": int,
    "local_lr": float,
    "early_stop_tol": float,
    "seed": int,
}
EXPERIMENT_KEYS: tp.Dict[str, tp.Any] = {
    "study": str,
    "methods": tp.List[str],
    "replications": int,
    "seed": int,
    "sigma_scenario": float,
    "threshold_dispersion": float,
    "n_per_client": int,
    "sizes": tp.Optional[tp.List[int]],
    "data_path": tp.Optional[str],
    "labels_path": tp.Optional[str],
    "train_fraction": float,
    "truncation": float,
    "lambdas": tp.List[float],
    "alphas": tp.List[float],
    "thetas": tp.List[float],
    "max_folds": tp.Optional[int],
    "standardize": bool,
    "out": tp.Optional[str],
}
SECTIONS = {"fed": FED_KEYS, "cfl": CFL_KEYS, "experiment": EXPERIMENT_KEYS}


def _check_section(name: str, values: tp.Any) -> tp.Dict[str, tp.Any]:
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ConfigError(f"Section '{name}' must be a mapping")
    keys = SECTIONS[name]
    for key, value in values.items():
        if key not in keys:
            raise ConfigError(f"Unknown key '{key}' in section '{name}', allowed keys: {sorted(keys)}")
        if keys[key] is not bool and isinstance(value, bool):
            raise ConfigError(f"Invalid value of '{name}.{key}': {value!r}")
        if not is_instance(value, keys[key]):
            raise ConfigError(f"Invalid value of '{name}.{key}': {value!r}")
    return dict(values)


@attr.s(frozen=True, slots=True)
class RunConfig:
    """
    Checked content of a configuration file.

    Every section maps field names of the corresponding config class to values.

    Parameters
    ----------
    fed : dict
        Personalized training settings, keys of `FED_KEYS`.
    cfl : dict
        Conventional federated training settings, keys of `CFL_KEYS`.
    experiment : dict
        Experiment settings, keys of `EXPERIMENT_KEYS`.
    """

    fed: tp.Dict[str, tp.Any] = attr.ib(factory=dict)
    cfl: tp.Dict[str, tp.Any] = attr.ib(factory=dict)
    experiment: tp.Dict[str, tp.Any] = attr.ib(factory=dict)

    def fed_config(self, lambda_: float = 1.0, alpha: float = 0.01) -> FedConfig:
        """
        Build `FedConfig`; `lambda_` and `alpha` are used only if absent in the file.
        """
        values = dict(self.fed)
        kernel = make_kernel(
            values.pop("kernel", "neg_exp"),
            values.pop("theta", 1.0),
            values.pop("lambda_p", 1.0),
        )
        values.setdefault("lambda_", lambda_)
        values.setdefault("alpha", alpha)
        return FedConfig(kernel=kernel, **values)

    def cfl_config(self) -> CflConfig:
        """Build `CflConfig`."""
        return CflConfig(**self.cfl)

    def experiment_spec(self, **overrides: tp.Any) -> ExperimentSpec:
        """
        Build `ExperimentSpec`; non-None `overrides` take precedence over file values.
        """
        values = dict(self.experiment)
        values.update({key: value for key, value in overrides.items() if value is not None})
        if "study" not in values:
            raise ConfigError("Experiment study is not set")
        return ExperimentSpec(**values)


def parse_config(content: tp.Any) -> RunConfig:
    """
    Check parsed configuration mapping.

    Parameters
    ----------
    content : any
        Mapping with optional sections ``fed``, ``cfl``, ``experiment``.

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigError
        Unknown section or key, or value of wrong type.

    Examples
    --------
    >>> parse_config({"fed": {"lambda_": 1, "alpha": 0.01}}).fed_config().lambda_
    1.0
    """
    if content is None:
        return RunConfig()
    if not isinstance(content, dict):
        raise ConfigError("Configuration must be a mapping")
    unknown = sorted(set(content) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"Unknown sections {unknown}, allowed sections: {sorted(SECTIONS)}")
    return RunConfig(**{name: _check_section(name, content.get(name)) for name in SECTIONS})


def load_config(path: tp.Union[str, Path]) -> RunConfig:
    """
    Read YAML configuration file.

    Parameters
    ----------
    path : str or Path
        Path to file.

    Returns
    -------
    RunConfig
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file does not exist: {path}")
    with path.open() as f:
        try:
            content = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    return parse_config(content)
