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

#include "genksr/hamiltonians.hpp"

#include <cmath>

#include "genksr/errors.hpp"
#include "genksr/rng.hpp"

namespace genksr {

std::string family_name(Family family) {
  switch (family) {
    case Family::kHeis1d: return "heis1d";
    case Family::kJ1J2: return "j1j2_2d";
    case Family::kXxzChain: return "xxz_chain";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "heis1d") return Family::kHeis1d;
  if (name == "j1j2_2d") return Family::kJ1J2;
  if (name == "xxz_chain" || name == "xxz") return Family::kXxzChain;
  throw ValidationError("unknown Hamiltonian family '" + std::string(name) + "'");
}

FamilySpec FamilySpec::with_defaults(Family family, std::size_t n_qubits) {
  return {family, n_qubits, family != Family::kHeis1d};
}

HamiltonianInstance build_heisenberg_1d(std::size_t n, const std::vector<double>& weights) {
  require(n >= 2, "heis1d needs at least 2 qubits");
  require(weights.size() == n - 1, "heis1d needs one weight per chain edge (n - 1)");
  InteractionGraph graph(n);
  for (std::size_t i = 0; i + 1 < n; ++i) graph.add_edge(i, i + 1, weights[i], InteractionKind::kHeisenberg);
  HamiltonianInstance inst;
  inst.family = Family::kHeis1d;
  inst.params = weights;
  inst.pauli_sum = pauli_sum_from_graph(graph);
  return inst;
}

HamiltonianInstance build_j1j2_2d(std::size_t side, double j1, double j2) {
  require(side >= 2, "j1j2_2d needs side >= 2");
  const std::size_t n = side * side;
  auto site = [side](std::size_t x, std::size_t y) { return (y % side) * side + (x % side); };
  InteractionGraph graph(n);
  // nearest neighbours first, then diagonals; wrap-around duplicates (side 2) are dropped
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      graph.add_edge(site(x, y), site(x + 1, y), j1, InteractionKind::kJ1);
      graph.add_edge(site(x, y), site(x, y + 1), j1, InteractionKind::kJ1);
    }
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      graph.add_edge(site(x, y), site(x + 1, y + 1), j2, InteractionKind::kJ2);
      graph.add_edge(site(x, y), site(x + 1, y + side - 1), j2, InteractionKind::kJ2);
    }
  HamiltonianInstance inst;
  inst.family = Family::kJ1J2;
  inst.params = {j1, j2};
  inst.periodic = true;
  inst.pauli_sum = pauli_sum_from_graph(graph);
  return inst;
}

HamiltonianInstance build_xxz_chain(std::size_t n, double j_xy, bool periodic) {
  require(n >= 2, "xxz_chain needs at least 2 qubits");
  InteractionGraph graph(n);
  for (std::size_t i = 0; i + 1 < n; ++i) graph.add_edge(i, i + 1, j_xy, InteractionKind::kXxz);
  if (periodic && n > 2) graph.add_edge(n - 1, 0, j_xy, InteractionKind::kXxz);
  HamiltonianInstance inst;
  inst.family = Family::kXxzChain;
  inst.params = {j_xy};
  inst.periodic = periodic;
  inst.pauli_sum = pauli_sum_from_graph(graph);
  return inst;
}

HamiltonianInstance regenerate_instance(const FamilySpec& spec, std::uint64_t seed) {
  RngStream rng = RngStream::keyed(seed, {static_cast<std::uint64_t>(StreamPurpose::kInstances)});
  HamiltonianInstance inst;
  switch (spec.family) {
    case Family::kHeis1d: {
      require(spec.n_qubits >= 2, "heis1d needs at least 2 qubits");
      std::vector<double> weights(spec.n_qubits - 1);
      for (double& w : weights) w = rng.uniform(0.0, 2.0);
      inst = build_heisenberg_1d(spec.n_qubits, weights);
      break;
    }
    case Family::kJ1J2: {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spec.n_qubits))));
      require(side * side == spec.n_qubits, "j1j2_2d needs a square qubit count");
      inst = build_j1j2_2d(side, 1.0, rng.uniform());
      break;
    }
    case Family::kXxzChain:
      inst = build_xxz_chain(spec.n_qubits, rng.uniform(), spec.periodic);
      break;
  }
  inst.seed = seed;
  return inst;
}

std::vector<HamiltonianInstance> sample_instances(const FamilySpec& spec, std::size_t count, std::uint64_t seed) {
  require(count >= 1, "sample_instances needs count >= 1");
  std::vector<HamiltonianInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t instance_seed = RngStream::keyed(seed, {static_cast<std::uint64_t>(StreamPurpose::kInstances), i}).key();
    out.push_back(regenerate_instance(spec, instance_seed));
  }
  return out;
}

nlohmann::ordered_json instance_to_json(const HamiltonianInstance& inst) {
  nlohmann::ordered_json doc;
  doc["family"] = family_name(inst.family);
  doc["n_qubits"] = inst.n_qubits();
  doc["seed"] = inst.seed;
  doc["params"] = inst.params;
  auto edges = nlohmann::ordered_json::array();
  for (const Edge& e : inst.graph().edges()) edges.push_back({e.i, e.j, e.weight, kind_name(e.kind)});
  doc["edges"] = std::move(edges);
  return doc;
}

HamiltonianInstance instance_from_json(const nlohmann::json& doc) {
  try {
    HamiltonianInstance inst;
    inst.family = parse_family(doc.at("family").get<std::string>());
    const auto n = doc.at("n_qubits").get<std::size_t>();
    inst.seed = doc.at("seed").get<std::uint64_t>();
    inst.params = doc.at("params").get<std::vector<double>>();
    InteractionGraph graph(n);
    for (const auto& e : doc.at("edges")) {
      require(e.is_array() && e.size() == 4, "edge entries are [i, j, weight, kind]");
      graph.add_edge(e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>(),
                     parse_kind(e[3].get<std::string>()));
    }
    inst.pauli_sum = pauli_sum_from_graph(graph);
    if (inst.family == Family::kJ1J2) {
      inst.periodic = true;
    } else {
      inst.periodic = graph.edges().size() == n && n > 2;
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed Hamiltonian instance: ") + e.what());
  }
}

}  // namespace genksr
