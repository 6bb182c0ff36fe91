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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "genksr/pauli.hpp"

namespace genksr {

enum class Family : std::uint8_t { kHeis1d, kJ1J2, kXxzChain };

std::string family_name(Family family);
Family parse_family(std::string_view name);

/// Size and boundary of a Hamiltonian family.
struct FamilySpec {
  Family family = Family::kHeis1d;
  std::size_t n_qubits = 0;
  /// Ignored for j1j2_2d, which is always a torus.
  bool periodic = false;

  /// Family with its default boundary (heis1d open, xxz and j1j2 periodic).
  static FamilySpec with_defaults(Family family, std::size_t n_qubits);
};

struct HamiltonianInstance {
  Family family = Family::kHeis1d;
  /// heis1d: one coupling per edge; j1j2_2d: (J1, J2); xxz_chain: (J_xy).
  std::vector<double> params;
  std::uint64_t seed = 0;
  bool periodic = false;
  PauliSum pauli_sum;

  std::size_t n_qubits() const { return pauli_sum.n_qubits(); }
  const InteractionGraph& graph() const { return pauli_sum.graph(); }
};

HamiltonianInstance build_heisenberg_1d(std::size_t n, const std::vector<double>& weights);
HamiltonianInstance build_j1j2_2d(std::size_t side, double j1, double j2);
HamiltonianInstance build_xxz_chain(std::size_t n, double j_xy, bool periodic);

/// Draws the instance for (spec, seed): couplings U[0,2] per edge for
/// heis1d, J1 = 1 and J2 ~ U[0,1] for j1j2_2d, J_xy ~ U[0,1] for xxz_chain.
HamiltonianInstance regenerate_instance(const FamilySpec& spec, std::uint64_t seed);

/// `count` instances; instance i uses a seed derived from (seed, i).
std::vector<HamiltonianInstance> sample_instances(const FamilySpec& spec, std::size_t count, std::uint64_t seed);

/// {family, n_qubits, seed, params, edges:[[i,j,weight,kind],...]}
nlohmann::ordered_json instance_to_json(const HamiltonianInstance& inst);
HamiltonianInstance instance_from_json(const nlohmann::json& doc);

}  // namespace genksr
