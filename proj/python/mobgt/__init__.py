# Copyright 2026 The MobGT Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Python bindings for the MobGT next-POI recommendation core."""

from ._mobgt import (
    Checkpoint,
    DataError,
    NumericError,
    UsageError,
    bin_index,
    fd_bin_count,
    haversine,
    local_graph,
    make_bins,
    markov_baseline,
    metrics_for_rank,
    run_cli,
    tail_loss,
)

__all__ = [
    "Checkpoint",
    "DataError",
    "NumericError",
    "UsageError",
    "bin_index",
    "fd_bin_count",
    "haversine",
    "local_graph",
    "make_bins",
    "markov_baseline",
    "metrics_for_rank",
    "run_cli",
    "tail_loss",
]
__version__ = "0.1.0"
