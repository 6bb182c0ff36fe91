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
#include <vector>

#include <Eigen/Dense>

#include "genksr/pauli.hpp"
#include "genksr/records.hpp"
#include "genksr/rng.hpp"

namespace genksr {

/// Normalized amplitude vector over 2^n basis states; qubit q is bit q of the index.
class StateVector {
 public:
  /// |0...0>
  explicit StateVector(std::size_t n_qubits);
  static StateVector basis_state(std::size_t n_qubits, Bitstring state);
  /// Throws unless the amplitudes have unit norm within 1e-10.
  static StateVector from_amplitudes(std::size_t n_qubits, Eigen::VectorXcd amplitudes);

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }

  /// exp(-i theta P)|psi>
  void apply_pauli_rotation(const PauliMasks& p, double theta);
  void apply_hadamard(std::size_t qubit);
  void apply_sdg(std::size_t qubit);

 private:
  StateVector(std::size_t n_qubits, Eigen::VectorXcd amplitudes) : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {}

  std::size_t n_qubits_;
  Eigen::VectorXcd amplitudes_;
};

inline constexpr std::size_t kMaxStateQubits = 26;

/// How U = exp(-i H dt) is realized when building Krylov states.
enum class Propagator { kTrotter, kExact };

struct EvolutionConfig {
  double dt = 0.0;
  int trotter_steps = 6;
  int trotter_order = 2;
  Propagator propagator = Propagator::kTrotter;

  /// dt = pi / norm_bound(H), 6 second-order steps.
  static EvolutionConfig for_hamiltonian(const PauliSum& h);
  void validate() const;
};

/// |1010...>: qubit 0 is 1.
StateVector neel_state(std::size_t n_qubits);
Bitstring neel_bitstring(std::size_t n_qubits);

/// Applies k Trotterized copies of U = exp(-i H dt).
StateVector trotter_evolve(const StateVector& state, const PauliSum& h, int k, const EvolutionConfig& cfg);

/// U^k|psi> with U chosen by cfg.propagator.
StateVector krylov_evolve(const StateVector& state, const PauliSum& h, int k, const EvolutionConfig& cfg);

/// exp(-i H t)|psi>: dense eigendecomposition up to 8 qubits, Lanczos propagator above.
StateVector exact_evolve(const StateVector& state, const PauliSum& h, double t);

/// H|psi> (not normalized).
Eigen::VectorXcd apply_hamiltonian(const PauliSum& h, const Eigen::VectorXcd& psi);

/// <psi|alpha P|psi>, including the term's coefficient.
double expectation(const StateVector& state, const PauliTerm& p);
double expectation(const StateVector& state, const PauliSum& h);
/// <lhs|alpha P|rhs> for complex matrix elements.
Complex matrix_element(const StateVector& lhs, const PauliTerm& p, const StateVector& rhs);
Complex overlap(const StateVector& lhs, const StateVector& rhs);

std::vector<Bitstring> sample_computational(const StateVector& state, std::size_t shots, const RngStream& rng);
std::vector<ShotRecord> sample_pauli6(const StateVector& state, std::size_t shots, const RngStream& rng);

struct GroundState {
  double energy = 0.0;
  /// Squared norm of the Neel state's projection on the ground eigenspace.
  double overlap_sq = 0.0;
};

enum class GroundMethod { kAuto, kDense, kSectorLanczos };

/// Dense path up to 12 qubits; sector path (Neel magnetization sector) up to
/// 24 qubits. The sector path returns the lowest energy in that sector, which
/// for all in-scope families contains the ground state.
GroundState exact_ground_energy(const PauliSum& h, GroundMethod method = GroundMethod::kAuto);

/// (|0>_a |psi0> + |1>_a U^k |psi0>)/sqrt(2) with the ancilla as qubit n.
StateVector hadamard_test_state(const PauliSum& h, int k, const EvolutionConfig& cfg);
/// Same register from precomputed branches |psi0> and |psik>.
StateVector hadamard_test_state(const StateVector& psi0, const StateVector& psik);

}  // namespace genksr
