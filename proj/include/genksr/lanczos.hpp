// Copyright 2026 The genksr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Dense>

namespace genksr {

struct LanczosOptions {
  /// Relative to max(1, |ritz value|) for both the Ritz-value change and the residual norm.
  double tol = 1e-10;
  int max_iter = 1000;
  std::uint64_t seed = 0;
};

struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  double residual = 0.0;
};

using MatVec = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

/// Lowest eigenpair of a real symmetric operator by Lanczos with full
/// reorthogonalization. The Krylov space is kept orthogonal to `deflate`,
/// which must be orthonormal. Throws ConvergenceError after max_iter.
LanczosResult lanczos_lowest(const MatVec& matvec, Eigen::Index dim, const LanczosOptions& options,
                             std::span<const Eigen::VectorXd> deflate = {});

}  // namespace genksr
