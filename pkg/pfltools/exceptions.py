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

"""Exceptions module"""

import typing as tp


class NotFittedError(Exception):
    """The error is raised when some fittable object is attempted to be used without fitting first."""

    def __init__(self, obj_name: str) -> None:
        super().__init__()
        self.obj_name = obj_name

    def __str__(self) -> str:
        return f"{self.obj_name} isn't fitted, call method `fit` first."


class ConfigError(ValueError):
    """The error is raised when configuration values are invalid or mutually inconsistent."""


class ConvergenceError(RuntimeError):
    """The error is raised when an iterative solver runs out of iterations without meeting its tolerance."""

    def __init__(self, solver: str, n_iter: int, residual: float) -> None:
        super().__init__()
        self.solver = solver
        self.n_iter = n_iter
        self.residual = residual

    def __str__(self) -> str:
        return (
            f"{self.solver} did not converge in {self.n_iter} iterations, "
            f"final residual norm is {self.residual:.3e}"
        )


class DivergenceError(ArithmeticError):
    """The error is raised when a training loop produces non-finite parameters."""

    def __init__(self, procedure: str, iteration: int) -> None:
        super().__init__()
        self.procedure = procedure
        self.iteration = iteration

    def __str__(self) -> str:
        return f"{self.procedure} produced non-finite parameters at iteration {self.iteration}"


class KernelValidationError(ValueError):
    """The error is raised when a similarity kernel violates one of the required properties."""

    def __init__(self, prop: str, point: tp.Optional[float] = None, details: str = "") -> None:
        super().__init__()
        self.prop = prop
        self.point = point
        self.details = details

    def __str__(self) -> str:
        where = f" at d2={self.point:.6g}" if self.point is not None else ""
        suffix = f": {self.details}" if self.details else ""
        return f"Similarity kernel violates property '{self.prop}'{where}{suffix}"


class DataFormatError(ValueError):
    """The error is raised when an input file cannot be parsed."""

    def __init__(self, message: str, line: tp.Optional[int] = None) -> None:
        super().__init__()
        self.message = message
        self.line = line

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"line {self.line}: {self.message}"


class UnderdeterminedError(ValueError):
    """The error is raised when a dataset has fewer rows than free parameters."""

    def __init__(self, n_samples: int, n_params: int) -> None:
        super().__init__()
        self.n_samples = n_samples
        self.n_params = n_params

    def __str__(self) -> str:
        return (
            f"Dataset has {self.n_samples} rows, "
            f"at least {self.n_params} are required to fit {self.n_params} parameters"
        )


class DegenerateFitWarning(UserWarning):
    """Warning about a fit whose scale estimate collapsed towards zero."""
