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

"""Column names."""


class Columns:
    """Fixed column names for tables with client data, fitted parameters and experiment results."""

    Client = "client_id"
    Unit = "unit_id"
    Role = "role"
    YLog = "y_log"
    Ttf = "ttf"
    CHat = "feature_c_hat"
    Tau = "tau"
    Signal = "x"
    RulTruth = "rul_truth"
    Iteration = "iteration"
    Method = "method"
    Replication = "replication"
    Mape = "mape_pct"
    Sigma = "sigma"
    FailureMode = "fm"
    Cycle = "cycle"
    Scenario = [Unit, YLog, Ttf, CHat]
    SignalLong = [Unit, Tau, Signal]
    RawReport = [Method, Client, Replication, Mape]
