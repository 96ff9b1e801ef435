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
Failure time models (:mod:`pfltools.models`)
============================================

Smallest extreme value regression of log failure time, similarity functions
and baseline models.

Models
------
`models.LocalModel`
`models.CFLModel`

Parameters
----------
`models.ClientParams`
`models.TransformedParams`
`models.transform`
`models.untransform`

Distribution and likelihood
---------------------------
`models.SEV`
`models.sev_pdf`
`models.sev_cdf`
`models.sev_quantile`
`models.nll`
`models.nll_grad`
`models.nll_hessian`
`models.predict_quantile`
`models.predict_quantiles`
`models.predict_ttf`

Similarity
----------
`models.SimilarityKernel`
`models.make_kernel`
`models.validate_kernel`
`models.a_value`
`models.a_deriv`

Baselines
---------
`models.local_mle`
`models.CflConfig`
`models.cfl_train`
"""

from .base import ModelBase, params_from_dataframe
from .cfl import CflConfig, CFLModel, cfl_train
from .local import LocalModel, local_mle
from .newton import NewtonResult, newton_minimize
from .params import ClientParams, TransformedParams, transform, untransform
from .sev import (
    SEV,
    LocationScaleDistribution,
    SEVDistribution,
    nll,
    nll_grad,
    nll_hessian,
    predict_quantile,
    predict_quantiles,
    predict_ttf,
    sev_cdf,
    sev_pdf,
    sev_quantile,
)
from .similarity import (
    KernelCertificate,
    KernelKind,
    SimilarityKernel,
    a_deriv,
    a_value,
    g_grad,
    g_value,
    make_kernel,
    validate_kernel,
)

__all__ = (
    "ModelBase",
    "params_from_dataframe",
    "LocalModel",
    "CFLModel",
    "CflConfig",
    "cfl_train",
    "local_mle",
    "NewtonResult",
    "newton_minimize",
    "ClientParams",
    "TransformedParams",
    "transform",
    "untransform",
    "SEV",
    "LocationScaleDistribution",
    "SEVDistribution",
    "sev_pdf",
    "sev_cdf",
    "sev_quantile",
    "nll",
    "nll_grad",
    "nll_hessian",
    "predict_quantile",
    "predict_quantiles",
    "predict_ttf",
    "KernelCertificate",
    "KernelKind",
    "SimilarityKernel",
    "a_value",
    "a_deriv",
    "g_value",
    "g_grad",
    "make_kernel",
    "validate_kernel",
)
