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

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace genksr {

using Complex = std::complex<double>;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_char(Pauli p);
Pauli pauli_from_char(char c);

/// Computational basis states are bit masks: bit q is the value of qubit q.
using Bitstring = std::uint64_t;

inline int popcount(std::uint64_t x) { return __builtin_popcountll(x); }

/// Action of a Pauli string on a basis state: P|a> = phase * |a'>.
struct PauliAction {
  Bitstring target;
  Complex phase;
};

/// Precomputed bit masks of a Pauli string. P|a> = i^y_count (-1)^{|a & z_mask|} |a ^ x_mask>.
struct PauliMasks {
  std::uint64_t x_mask = 0;
  std::uint64_t z_mask = 0;
  int y_count = 0;

  Complex phase(Bitstring a) const;
  PauliAction apply(Bitstring a) const { return {a ^ x_mask, phase(a)}; }
};

struct PauliTerm {
  double coefficient = 0.0;
  std::vector<Pauli> axes;

  PauliTerm() = default;
  PauliTerm(double coeff, std::vector<Pauli> ax) : coefficient(coeff), axes(std::move(ax)) {}

  /// Term acting as `a` on qubit i and `b` on qubit j.
  static PauliTerm two_body(std::size_t n, std::size_t i, Pauli a, std::size_t j, Pauli b, double coeff);
  static PauliTerm from_label(double coeff, std::string_view label);

  std::size_t n_qubits() const { return axes.size(); }
  std::vector<std::size_t> support() const;
  std::string label() const;
  PauliMasks masks() const;
  bool is_identity() const;
};

enum class InteractionKind : std::uint8_t { kHeisenberg = 0, kJ1 = 1, kJ2 = 2, kXxz = 3 };
inline constexpr int kNumInteractionKinds = 4;

std::string kind_name(InteractionKind kind);
InteractionKind parse_kind(std::string_view name);

struct Edge {
  std::size_t i;
  std::size_t j;
  double weight;
  InteractionKind kind;
};

class InteractionGraph {
 public:
  InteractionGraph() = default;
  explicit InteractionGraph(std::size_t n_nodes) : n_nodes_(n_nodes) {}

  /// Adds an edge; returns false (and adds nothing) when an edge with the
  /// same unordered pair and kind is already present.
  bool add_edge(std::size_t i, std::size_t j, double weight, InteractionKind kind);

  std::size_t n_nodes() const { return n_nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool empty() const { return edges_.empty(); }

 private:
  std::size_t n_nodes_ = 0;
  std::vector<Edge> edges_;
};

class PauliSum {
 public:
  PauliSum() = default;
  explicit PauliSum(std::size_t n_qubits) : n_qubits_(n_qubits), graph_(n_qubits) {}

  void add_term(PauliTerm term);

  std::size_t n_qubits() const { return n_qubits_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  const InteractionGraph& graph() const { return graph_; }
  InteractionGraph& graph() { return graph_; }

  /// Sum of |coefficient|, an upper bound on the operator norm.
  double norm_bound() const;

  /// Dense 2^n x 2^n matrix; n <= 12.
  Eigen::MatrixXcd dense_matrix() const;

 private:
  std::size_t n_qubits_ = 0;
  std::vector<PauliTerm> terms_;
  InteractionGraph graph_;
};

/// Hamiltonian defined by an interaction graph: every edge expands into its
/// two-body Pauli terms (XX, YY, ZZ order) according to its kind.
PauliSum pauli_sum_from_graph(const InteractionGraph& graph);

/// Relabel qubits: qubit q becomes perm[q]. Applies to terms and graph alike.
PauliSum relabel(const PauliSum& h, std::span<const std::size_t> perm);

}  // namespace genksr
