# Copyright 2026 The HyCNN Toolkit Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convex-shape-constrained networks with two-lane gating.

The heavy lifting lives in the C++ extension `hycnn._core`: forward and
gradient kernels, principled initializers, certified piecewise-affine
approximation constructions, and entropic optimal transport utilities.
"""

from ._core import (  # noqa: F401
    ConfigError,
    ContractViolation,
    Net,
    Regressor,
    barycentric_map,
    build_monomial,
    build_multivariate_quadratic,
    build_quadratic,
    build_quadratic_width2,
    check_convexity,
    embedding_checks,
    generate_regression,
    init_groupmax,
    init_hycnn,
    init_icnn,
    init_mlp,
    logsumexp2,
    lower_bound_search,
    ot_map,
    piece_count,
    quadratic_sup_error,
    sample_lognormal,
    sample_source,
    sample_target,
    saddle_train,
    sinkhorn,
    sinkhorn_divergence,
    softplus,
    softplus_inverse,
    train_regression,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
