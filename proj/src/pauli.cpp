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

#include "genksr/pauli.hpp"

#include <cmath>

#include "genksr/errors.hpp"

namespace genksr {

char pauli_char(Pauli p) {
  static constexpr char kChars[] = {'I', 'X', 'Y', 'Z'};
  return kChars[static_cast<int>(p)];
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw ValidationError(std::string("invalid Pauli label '") + c + "'");
  }
}

Complex PauliMasks::phase(Bitstring a) const {
  static const Complex kIPow[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex base = kIPow[y_count & 3];
  return (popcount(a & z_mask) & 1) ? -base : base;
}

PauliTerm PauliTerm::two_body(std::size_t n, std::size_t i, Pauli a, std::size_t j, Pauli b, double coeff) {
  require(i < n && j < n && i != j, "two-body term needs distinct in-range qubits");
  std::vector<Pauli> axes(n, Pauli::I);
  axes[i] = a;
  axes[j] = b;
  return {coeff, std::move(axes)};
}

PauliTerm PauliTerm::from_label(double coeff, std::string_view label) {
  std::vector<Pauli> axes;
  axes.reserve(label.size());
  for (char c : label) axes.push_back(pauli_from_char(c));
  return {coeff, std::move(axes)};
}

std::vector<std::size_t> PauliTerm::support() const {
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < axes.size(); ++q)
    if (axes[q] != Pauli::I) out.push_back(q);
  return out;
}

std::string PauliTerm::label() const {
  std::string out;
  out.reserve(axes.size());
  for (Pauli p : axes) out.push_back(pauli_char(p));
  return out;
}

PauliMasks PauliTerm::masks() const {
  require(axes.size() <= 64, "Pauli strings are limited to 64 qubits");
  PauliMasks m;
  for (std::size_t q = 0; q < axes.size(); ++q) {
    const std::uint64_t bit = std::uint64_t{1} << q;
    switch (axes[q]) {
      case Pauli::X: m.x_mask |= bit; break;
      case Pauli::Y:
        m.x_mask |= bit;
        m.z_mask |= bit;
        ++m.y_count;
        break;
      case Pauli::Z: m.z_mask |= bit; break;
      case Pauli::I: break;
    }
  }
  return m;
}

bool PauliTerm::is_identity() const {
  for (Pauli p : axes)
    if (p != Pauli::I) return false;
  return true;
}

std::string kind_name(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::kHeisenberg: return "heis";
    case InteractionKind::kJ1: return "J1";
    case InteractionKind::kJ2: return "J2";
    case InteractionKind::kXxz: return "xxz";
  }
  return "?";
}

InteractionKind parse_kind(std::string_view name) {
  if (name == "heis") return InteractionKind::kHeisenberg;
  if (name == "J1") return InteractionKind::kJ1;
  if (name == "J2") return InteractionKind::kJ2;
  if (name == "xxz") return InteractionKind::kXxz;
  throw ValidationError("unknown interaction kind '" + std::string(name) + "'");
}

bool InteractionGraph::add_edge(std::size_t i, std::size_t j, double weight, InteractionKind kind) {
  require(i != j, "self-loop edges are not allowed");
  require(i < n_nodes_ && j < n_nodes_, "edge endpoint out of range");
  require(std::isfinite(weight), "edge weight must be finite");
  const auto lo = std::min(i, j), hi = std::max(i, j);
  for (const Edge& e : edges_)
    if (std::min(e.i, e.j) == lo && std::max(e.i, e.j) == hi && e.kind == kind) return false;
  edges_.push_back({i, j, weight, kind});
  return true;
}

void PauliSum::add_term(PauliTerm term) {
  require(term.n_qubits() == n_qubits_, "term width does not match Hamiltonian");
  require(std::isfinite(term.coefficient), "term coefficient must be finite");
  terms_.push_back(std::move(term));
}

double PauliSum::norm_bound() const {
  double total = 0.0;
  for (const auto& t : terms_) total += std::abs(t.coefficient);
  return total;
}

Eigen::MatrixXcd PauliSum::dense_matrix() const {
  require(n_qubits_ <= 12, "dense matrix limited to 12 qubits");
  const std::size_t dim = std::size_t{1} << n_qubits_;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& term : terms_) {
    const PauliMasks masks = term.masks();
    for (Bitstring a = 0; a < dim; ++a) {
      const PauliAction act = masks.apply(a);
      m(act.target, a) += term.coefficient * act.phase;
    }
  }
  return m;
}

PauliSum pauli_sum_from_graph(const InteractionGraph& graph) {
  const std::size_t n = graph.n_nodes();
  PauliSum h(n);
  for (const Edge& e : graph.edges()) {
    double xy = e.weight, zz = e.weight;
    switch (e.kind) {
      case InteractionKind::kHeisenberg: break;
      case InteractionKind::kJ1:
      case InteractionKind::kJ2:
        xy = zz = 0.25 * e.weight;
        break;
      case InteractionKind::kXxz: zz = 1.0; break;
    }
    h.add_term(PauliTerm::two_body(n, e.i, Pauli::X, e.j, Pauli::X, xy));
    h.add_term(PauliTerm::two_body(n, e.i, Pauli::Y, e.j, Pauli::Y, xy));
    h.add_term(PauliTerm::two_body(n, e.i, Pauli::Z, e.j, Pauli::Z, zz));
    h.graph().add_edge(e.i, e.j, e.weight, e.kind);
  }
  return h;
}

PauliSum relabel(const PauliSum& h, std::span<const std::size_t> perm) {
  const std::size_t n = h.n_qubits();
  require(perm.size() == n, "permutation size mismatch");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    require(p < n && !seen[p], "not a permutation");
    seen[p] = true;
  }
  PauliSum out(n);
  for (const auto& term : h.terms()) {
    std::vector<Pauli> axes(n, Pauli::I);
    for (std::size_t q = 0; q < n; ++q) axes[perm[q]] = term.axes[q];
    out.add_term({term.coefficient, std::move(axes)});
  }
  for (const Edge& e : h.graph().edges()) out.graph().add_edge(perm[e.i], perm[e.j], e.weight, e.kind);
  return out;
}

}  // namespace genksr
