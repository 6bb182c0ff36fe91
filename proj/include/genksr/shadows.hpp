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
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "genksr/pauli.hpp"
#include "genksr/records.hpp"
#include "genksr/simulator.hpp"

namespace genksr {

struct ShadowEstimate {
  double value = 0.0;
  /// Sample standard deviation / sqrt(M); 0 for a single snapshot or an exact value.
  double std_error = 0.0;
  std::size_t n_snapshots = 0;
};

enum class Estimator { kMean, kMedianOfMeans };

struct EstimatorConfig {
  Estimator kind = Estimator::kMean;
  std::size_t n_batches = 9;
};

/// Snapshot value of P for one Pauli-6 record: the product over the support
/// of 3 (-1)^bit when the measured basis matches the Pauli, 0 otherwise.
double snapshot_value(const ShotRecord& record, const PauliTerm& p);

ShadowEstimate estimate_pauli(std::span<const ShotRecord> records, const PauliTerm& p, const EstimatorConfig& cfg = {});

/// Median of contiguous batch means; the first (size % n_batches) batches get one extra value.
double median_of_means(std::span<const double> values, std::size_t n_batches);

/// Per-step overlap and Hamiltonian elements s_k = <psi0|U^k|psi0>, h_k = <psi0|H U^k|psi0>.
struct KrylovElements {
  std::vector<Complex> s;
  std::vector<Complex> h;
  std::vector<ShadowEstimate> s_re, s_im, h_re, h_im;

  int size() const { return static_cast<int>(s.size()); }
};

/// Shadow reconstruction from Hadamard-test records over n + 1 qubits
/// (ancilla last), for k = 0..d-1.
KrylovElements estimate_krylov_elements(const std::map<int, std::vector<ShotRecord>>& records_by_k, const PauliSum& h,
                                        int d, const EstimatorConfig& cfg = {});

/// Infinite-shot limit: the same observables evaluated exactly on hadamard_test_state.
KrylovElements exact_krylov_elements(const PauliSum& h, int d, const EvolutionConfig& cfg);

/// Shadow size ceil(34 4^k / eps^2) * ceil(2 ln(2L / delta)) for L Pauli
/// observables of locality at most k_max.
std::uint64_t sample_complexity(double eps, std::size_t n_observables, int k_max, double delta = 0.01);

}  // namespace genksr
