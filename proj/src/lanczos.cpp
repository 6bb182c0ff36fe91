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

#include "genksr/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "genksr/errors.hpp"
#include "genksr/rng.hpp"

namespace genksr {

namespace {

void orthogonalize(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis, std::span<const Eigen::VectorXd> deflate) {
  // two passes of classical Gram-Schmidt
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& d : deflate) w -= d.dot(w) * d;
    for (const auto& v : basis) w -= v.dot(w) * v;
  }
}

}  // namespace

LanczosResult lanczos_lowest(const MatVec& matvec, Eigen::Index dim, const LanczosOptions& options,
                             std::span<const Eigen::VectorXd> deflate) {
  require(dim >= 1, "Lanczos needs a nonempty space");
  require(static_cast<Eigen::Index>(deflate.size()) < dim, "deflation set spans the whole space");

  RngStream rng = RngStream::keyed(options.seed, {static_cast<std::uint64_t>(StreamPurpose::kLanczosStart)});
  Eigen::VectorXd start(dim);
  for (Eigen::Index i = 0; i < dim; ++i) start[i] = rng.uniform(-1.0, 1.0);
  std::vector<Eigen::VectorXd> basis;
  orthogonalize(start, basis, deflate);
  start.normalize();
  basis.push_back(std::move(start));

  std::vector<double> alpha, beta;
  Eigen::VectorXd w(dim);
  double previous = std::numeric_limits<double>::infinity();
  const Eigen::Index free_dim = dim - static_cast<Eigen::Index>(deflate.size());

  for (int step = 0; step < options.max_iter; ++step) {
    matvec(basis.back(), w);
    alpha.push_back(basis.back().dot(w));
    orthogonalize(w, basis, deflate);
    const double b = w.norm();

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd off = Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1);
    tri.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    const double theta = tri.eigenvalues()[0];
    const double residual = b * std::abs(tri.eigenvectors()(m - 1, 0));
    const double scale = std::max(1.0, std::abs(theta));
    // invariant subspace reached: the Ritz value is exact
    const bool exhausted = b < 1e-13 * scale || m >= free_dim;
    const bool converged = std::abs(theta - previous) < options.tol * scale && residual < options.tol * scale;

    if (exhausted || converged) {
      LanczosResult result;
      result.value = theta;
      result.iterations = static_cast<int>(m);
      result.residual = exhausted ? 0.0 : residual;
      result.vector = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index i = 0; i < m; ++i) result.vector += tri.eigenvectors()(i, 0) * basis[i];
      result.vector.normalize();
      return result;
    }
    if (step + 1 == options.max_iter) {
      throw ConvergenceError("Lanczos did not converge in " + std::to_string(m) + " iterations (residual " +
                             std::to_string(residual) + ")");
    }
    previous = theta;
    beta.push_back(b);
    basis.push_back(w / b);
  }
  throw ConvergenceError("Lanczos needs max_iter >= 1");
}

}  // namespace genksr
