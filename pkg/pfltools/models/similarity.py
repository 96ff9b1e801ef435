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

"""
Similarity functions ``A(d2)`` of squared parameter distance and their derivatives.

A similarity function must satisfy ``A(0) = 0``, be nondecreasing and concave on ``[0, inf)``
and have a finite derivative at ``0+``. Every kernel is checked numerically on construction.
"""

import typing as tp
from enum import Enum

import attr
import numpy as np

from pfltools.exceptions import ConfigError, KernelValidationError
from pfltools.types import ParamVector

GRID_SIZE = 4001
GRID_MIN = 1e-8
VALIDATION_TOL = 1e-10


class KernelKind(str, Enum):
    """Available similarity function families."""

    NEG_EXP = "neg_exp"
    MCP = "mcp"
    SCAD_STD = "scad_std"


@attr.s(frozen=True, slots=True)
class KernelCertificate:
    """
    Result of the numerical check of a similarity kernel.

    Parameters
    ----------
    grid_max : float
        Largest squared distance of the check grid.
    n_points : int
        Number of grid points.
    deriv_at_zero : float
        ``A'(0)``.
    max_monotonicity_violation : float
        Largest decrease of ``A`` between neighbouring grid points (0 if nondecreasing).
    max_concavity_violation : float
        Largest increase of chord slopes of ``A`` between neighbouring grid intervals (0 if concave).
    max_derivative_increase : float
        Largest increase of ``A'`` between neighbouring grid points (0 if nonincreasing).
    """

    grid_max: float = attr.ib()
    n_points: int = attr.ib()
    deriv_at_zero: float = attr.ib()
    max_monotonicity_violation: float = attr.ib()
    max_concavity_violation: float = attr.ib()
    max_derivative_increase: float = attr.ib()


def _check_d2(d2: tp.Any) -> np.ndarray:
    arr = np.asarray(d2, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("Squared distance `d2` must be nonnegative")
    return arr


def _neg_exp_value(d2: np.ndarray, theta: float, lambda_p: float) -> np.ndarray:
    return -np.expm1(-d2 / theta)


def _neg_exp_deriv(d2: np.ndarray, theta: float, lambda_p: float) -> np.ndarray:
    return np.exp(-d2 / theta) / theta


def _mcp_value(d2: np.ndarray, theta: float, lambda_p: float) -> np.ndarray:
    knot = theta * lambda_p
    inner = lambda_p * d2 - d2**2 / (2 * theta)
    return np.where(d2 <= knot, inner, theta * lambda_p**2 / 2)


def _mcp_deriv(d2: np.ndarray, theta: float, lambda_p: float) -> np.ndarray:
    knot = theta * lambda_p
    return np.where(d2 <= knot, lambda_p - d2 / theta, 0.0)


def _scad_value(d2: np.ndarray, theta: float, lambda_p: float) -> np.ndarray:
    knot = theta * lambda_p
    linear = lambda_p * d2
    quadratic = (2 * theta * lambda_p * d2 - d2**2 - lambda_p**2) / (2 * (theta - 1))
    flat = lambda_p**2 * (theta + 1) / 2
    return np.where(d2 <= lambda_p, linear, np.where(d2 <= knot, quadratic, flat))


def _scad_deriv(d2: np.ndarray, theta: float, lambda_p: float) -> np.ndarray:
    knot = theta * lambda_p
    return np.where(d2 <= lambda_p, lambda_p, np.where(d2 <= knot, (knot - d2) / (theta - 1), 0.0))


_FUNCTIONS: tp.Dict[KernelKind, tp.Tuple[tp.Callable, tp.Callable]] = {
    KernelKind.NEG_EXP: (_neg_exp_value, _neg_exp_deriv),
    KernelKind.MCP: (_mcp_value, _mcp_deriv),
    KernelKind.SCAD_STD: (_scad_value, _scad_deriv),
}


@attr.s(frozen=True, slots=True)
class SimilarityKernel:
    """
    Similarity function of squared distance between two clients' parameter vectors.

    Parameters
    ----------
    kind : KernelKind or {"neg_exp", "mcp", "scad_std"}
        Family of the function:
        - `neg_exp` - ``1 - exp(-d2 / theta)``;
        - `mcp` - minimax concave penalty, ``lambda_p * d2 - d2^2 / (2 theta)`` up to ``theta * lambda_p``,
          constant ``theta * lambda_p^2 / 2`` after;
        - `scad_std` - textbook smoothly clipped absolute deviation with ``a = theta``, ``lambda = lambda_p``.
    theta : float
        Shape parameter. ``theta > 0`` for `neg_exp`, ``theta > 1`` for `mcp`, ``theta > 2`` for `scad_std`.
    lambda_p : float, default 1.0
        Kernel-internal scale for `mcp` and `scad_std`, not used by `neg_exp`.

    Attributes
    ----------
    certificate : KernelCertificate
        Result of `validate_kernel`, computed on construction.

    Examples
    --------
    >>> kernel = SimilarityKernel("neg_exp", theta=2.0)
    >>> kernel.deriv(0.0)
    0.5
    """

    kind: KernelKind = attr.ib(converter=KernelKind)
    theta: float = attr.ib(converter=float)
    lambda_p: float = attr.ib(default=1.0, converter=float)
    certificate: KernelCertificate = attr.ib(init=False, eq=False, repr=False)

    @theta.validator
    def _check_theta(self, _: str, value: float) -> None:
        min_theta = {KernelKind.NEG_EXP: 0.0, KernelKind.MCP: 1.0, KernelKind.SCAD_STD: 2.0}[self.kind]
        if not np.isfinite(value) or value <= min_theta:
            raise ConfigError(f"`theta` of `{self.kind.value}` kernel must be greater than {min_theta}, got {value}")

    @lambda_p.validator
    def _check_lambda_p(self, _: str, value: float) -> None:
        if not np.isfinite(value) or value <= 0:
            raise ConfigError(f"`lambda_p` must be positive, got {value}")

    def __attrs_post_init__(self) -> None:
        """Validate properties of the function on a grid."""
        object.__setattr__(self, "certificate", validate_kernel(self))

    def value(self, d2: tp.Any) -> tp.Any:
        """Vectorized ``A(d2)``."""
        res = _FUNCTIONS[self.kind][0](_check_d2(d2), self.theta, self.lambda_p)
        return float(res) if np.ndim(res) == 0 else res

    def deriv(self, d2: tp.Any) -> tp.Any:
        """Vectorized ``A'(d2)``."""
        res = _FUNCTIONS[self.kind][1](_check_d2(d2), self.theta, self.lambda_p)
        return float(res) if np.ndim(res) == 0 else res

    @property
    def grid_max(self) -> float:
        """Upper end of the validation grid, far beyond every kink of the function."""
        if self.kind == KernelKind.NEG_EXP:
            return 50 * self.theta
        return 4 * self.theta * self.lambda_p


def a_value(kernel: SimilarityKernel, d2: float) -> float:
    """
    Value of similarity function.

    Parameters
    ----------
    kernel : SimilarityKernel
        Similarity function.
    d2 : float
        Nonnegative squared distance.

    Returns
    -------
    float

    Raises
    ------
    ValueError
        If `d2` is negative.

    Examples
    --------
    >>> round(a_value(SimilarityKernel("neg_exp", 1.0), 1.0), 7)
    0.6321206
    >>> a_value(SimilarityKernel("mcp", theta=2.0, lambda_p=1.0), 5.0)
    1.0
    """
    return float(kernel.value(d2))


def a_deriv(kernel: SimilarityKernel, d2: float) -> float:
    """
    Derivative of similarity function.

    Parameters
    ----------
    kernel : SimilarityKernel
        Similarity function.
    d2 : float
        Nonnegative squared distance.

    Returns
    -------
    float
        Nonnegative value, nonincreasing in `d2`.

    Examples
    --------
    >>> a_deriv(SimilarityKernel("neg_exp", 2.0), 0.0)
    0.5
    >>> a_deriv(SimilarityKernel("mcp", theta=2.0, lambda_p=1.0), 3.0)
    0.0
    """
    return float(kernel.deriv(d2))


def validate_kernel(kernel: SimilarityKernel) -> KernelCertificate:
    """
    Check similarity function properties on a dense grid.

    The grid consists of 0 and log-spaced points from ``1e-8`` to `kernel.grid_max`.
    Checked properties are ``A(0) = 0``, finite ``A'(0)``, nondecreasing ``A``,
    concave ``A`` (nonincreasing chord slopes) and nonincreasing ``A'``.

    Parameters
    ----------
    kernel : SimilarityKernel
        Kernel to check.

    Returns
    -------
    KernelCertificate

    Raises
    ------
    KernelValidationError
        Naming the violated property and the grid point.
    """
    value_func, deriv_func = _FUNCTIONS[kernel.kind]
    grid = np.concatenate(([0.0], np.geomspace(GRID_MIN, kernel.grid_max, GRID_SIZE - 1)))
    values = value_func(grid, kernel.theta, kernel.lambda_p)
    derivs = deriv_func(grid, kernel.theta, kernel.lambda_p)
    scale = max(1.0, float(np.max(np.abs(values))), float(np.max(np.abs(derivs))))
    tol = VALIDATION_TOL * scale

    if values[0] != 0:
        raise KernelValidationError("zero_at_origin", 0.0, f"A(0) = {values[0]}")
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(derivs)):
        bad = int(np.argmin(np.isfinite(values) & np.isfinite(derivs)))
        raise KernelValidationError("finite_derivative", float(grid[bad]))
    if derivs[0] < 0:
        raise KernelValidationError("nondecreasing", 0.0, f"A'(0) = {derivs[0]}")

    decrease = -np.diff(values)
    if decrease.max() > tol:
        idx = int(np.argmax(decrease))
        raise KernelValidationError("nondecreasing", float(grid[idx + 1]))

    slopes = np.diff(values) / np.diff(grid)
    slope_increase = np.diff(slopes)
    if slope_increase.max() > tol:
        idx = int(np.argmax(slope_increase))
        raise KernelValidationError("concave", float(grid[idx + 1]))

    deriv_increase = np.diff(derivs)
    if deriv_increase.max() > tol:
        idx = int(np.argmax(deriv_increase))
        raise KernelValidationError("nonincreasing_derivative", float(grid[idx + 1]))

    return KernelCertificate(
        grid_max=float(grid[-1]),
        n_points=grid.size,
        deriv_at_zero=float(derivs[0]),
        max_monotonicity_violation=float(max(decrease.max(), 0.0)),
        max_concavity_violation=float(max(slope_increase.max(), 0.0)),
        max_derivative_increase=float(max(deriv_increase.max(), 0.0)),
    )


def make_kernel(
    kind: tp.Union[str, KernelKind] = KernelKind.NEG_EXP,
    theta: float = 1.0,
    lambda_p: float = 1.0,
) -> SimilarityKernel:
    """
    Create and validate a similarity kernel from config values.

    Parameters
    ----------
    kind : {"neg_exp", "mcp", "scad_std"}, default "neg_exp"
        Kernel family.
    theta : float, default 1.0
        Shape parameter.
    lambda_p : float, default 1.0
        Kernel-internal scale for `mcp` and `scad_std`.

    Returns
    -------
    SimilarityKernel
    """
    try:
        kind = KernelKind(kind)
    except ValueError:
        available = ", ".join(k.value for k in KernelKind)
        raise ConfigError(f"Unknown similarity kernel '{kind}', available: {available}")
    return SimilarityKernel(kind, theta, lambda_p)


def g_value(kernel: SimilarityKernel, w: ParamVector, others: tp.Sequence[ParamVector]) -> float:
    """Similarity penalty of one client ``sum_h A(||w - w_h||^2)`` over the other clients."""
    w = np.asarray(w, dtype=np.float64)
    if not others:
        return 0.0
    d2 = np.sum((np.asarray(others, dtype=np.float64) - w) ** 2, axis=1)
    return float(np.sum(kernel.value(d2)))


def g_grad(kernel: SimilarityKernel, w: ParamVector, others: tp.Sequence[ParamVector]) -> ParamVector:
    """Gradient of `g_value` with respect to `w`: ``sum_h 2 A'(||w - w_h||^2) (w - w_h)``."""
    w = np.asarray(w, dtype=np.float64)
    if not others:
        return np.zeros_like(w)
    diff = w - np.asarray(others, dtype=np.float64)
    d2 = np.sum(diff**2, axis=1)
    coef = 2 * np.atleast_1d(kernel.deriv(d2))
    return coef @ diff
