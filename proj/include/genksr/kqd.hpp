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

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "genksr/pauli.hpp"
#include "genksr/shadows.hpp"
#include "genksr/simulator.hpp"

namespace genksr {

/// Projected Hamiltonian and overlap matrix over the Krylov basis; both
/// Hermitian Toeplitz.
struct KrylovMatrices {
  int dim = 0;
  Eigen::MatrixXcd h_tilde;
  Eigen::MatrixXcd s_tilde;
};

enum class ThresholdMode { kExact, kSampled };

struct ThresholdConfig {
  /// Overlap eigenvalues at or below eps_cut * lambda_max are discarded.
  double eps_cut = 1e-12;
  ThresholdMode mode = ThresholdMode::kExact;

  /// 1e-12 for exact elements, 1e-1 for sampled ones.
  static ThresholdConfig defaults(ThresholdMode mode);
  void validate() const;
};

/// S_jk = s_{k-j} for k >= j and conj(s_{j-k}) otherwise; H likewise. The
/// diagonal uses the real parts of s_0 and h_0.
KrylovMatrices assemble(std::span<const Complex> s, std::span<const Complex> h);

struct KqdSolution {
  double energy = 0.0;
  int kept_dim = 0;
};

/// Canonical orthogonalization: whiten the retained overlap eigenspace and
/// return the lowest eigenvalue of the whitened projected Hamiltonian.
KqdSolution threshold_solve(const KrylovMatrices& m, const ThresholdConfig& cfg);

struct KqdPoint {
  int d = 0;
  double energy = 0.0;
  int kept_dim = 0;
};

using ElementProvider = std::function<std::pair<Complex, Complex>(int k)>;

/// E(D) for D = 1..d_max from the leading DxD blocks. In sampled mode all
/// elements are first divided by Re(s_0).
std::vector<KqdPoint> kqd_energy_curve(const ElementProvider& provider, int d_max, const ThresholdConfig& cfg);
std::vector<KqdPoint> kqd_energy_curve(const KrylovElements& elements, int d_max, const ThresholdConfig& cfg);

/// <psi0|U^k|psi0> and <psi0|H U^k|psi0> by direct state overlaps.
KrylovElements direct_krylov_elements(const PauliSum& h, int d, const EvolutionConfig& cfg);

}  // namespace genksr
