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
Personalized federated training (`federated`).

Server aggregates similarity-weighted personalized cloud models from parameter boards,
clients refine them on own data with a proximal step.

Configuration
-------------
`federated.FedConfig`

Messages
--------
`federated.ParamsBoard`
`federated.WeightVector`
`federated.encode_board`
`federated.decode_board`

Server
------
`federated.compute_weights`
`federated.aggregate`
`federated.aggregate_all`

Client
------
`federated.prox_step`

Training
--------
`federated.FedResult`
`federated.run_federated`
`federated.global_objective`
`federated.dump_trace`

Model
-----
`federated.PFLModel`
"""

from .board import ParamsBoard, WeightVector, decode_board, encode_board
from .client import prox_step
from .config import FedConfig
from .engine import FedResult, dump_trace, global_objective, init_params, run_federated
from .model import PFLModel
from .server import aggregate, aggregate_all, compute_weights

__all__ = (
    "FedConfig",
    "ParamsBoard",
    "WeightVector",
    "encode_board",
    "decode_board",
    "compute_weights",
    "aggregate",
    "aggregate_all",
    "prox_step",
    "FedResult",
    "run_federated",
    "global_objective",
    "dump_trace",
    "init_params",
    "PFLModel",
)
