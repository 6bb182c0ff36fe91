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
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "genksr/pauli.hpp"

namespace genksr {

/// Sorted, deduplicated set of computational basis states.
class SubspaceBasis {
 public:
  SubspaceBasis() = default;
  SubspaceBasis(std::size_t n_qubits, std::vector<Bitstring> states);

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<Bitstring>& states() const { return states_; }
  std::optional<std::size_t> index_of(Bitstring state) const;

 private:
  std::size_t n_qubits_ = 0;
  std::vector<Bitstring> states_;
};

/// All n-bit strings of Hamming weight `weight`, ascending.
SubspaceBasis sector_basis(std::size_t n_qubits, std::size_t weight);

/// Hamming weight of the Neel state on n qubits.
inline std::size_t neel_weight(std::size_t n_qubits) { return (n_qubits + 1) / 2; }

struct MatrixEntry {
  std::size_t row;
  std::size_t col;
  double value;
  bool operator==(const MatrixEntry&) const = default;
};

/// Real symmetric matrix in coordinate form, entries sorted by (row, col).
struct SparseProjection {
  std::size_t dim = 0;
  std::vector<MatrixEntry> entries;

  Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse() const;
  Eigen::MatrixXd to_dense() const;
};

PauliAction apply_pauli_to_bitstring(const PauliTerm& term, Bitstring a);

/// P_B H P_B restricted to B. Throws NumericError when an entry keeps an
/// imaginary part above 1e-12 (the Hamiltonian is not real symmetric).
SparseProjection project_hamiltonian(const PauliSum& h, const SubspaceBasis& basis);

struct EigenOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  /// Dimensions up to this size are diagonalized densely.
  std::size_t dense_limit = 512;
};

double lowest_eigenvalue(const SparseProjection& m, const EigenOptions& options = {});

/// Union of the samples of Krylov steps k < d, optionally restricted to the
/// Neel magnetization sector.
SubspaceBasis collect_basis(const std::map<int, std::vector<Bitstring>>& samples_by_k, int d, std::size_t n_qubits,
                            bool sz_filter);

struct SkqdPoint {
  int d = 0;
  double energy = 0.0;
  std::size_t basis_size = 0;
};

/// E(D) for D = 1..d_max over the nested sampled subspaces.
std::vector<SkqdPoint> skqd_energy_curve(const PauliSum& h, const std::map<int, std::vector<Bitstring>>& samples_by_k,
                                         int d_max, bool sz_filter, const EigenOptions& options = {});

}  // namespace genksr
