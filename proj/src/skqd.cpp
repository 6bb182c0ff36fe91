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

#include "genksr/skqd.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "genksr/errors.hpp"
#include "genksr/lanczos.hpp"

namespace genksr {

SubspaceBasis::SubspaceBasis(std::size_t n_qubits, std::vector<Bitstring> states)
    : n_qubits_(n_qubits), states_(std::move(states)) {
  require(n_qubits <= 64, "subspace bases are limited to 64 qubits");
  const Bitstring limit = n_qubits == 64 ? ~Bitstring{0} : (Bitstring{1} << n_qubits) - 1;
  for (Bitstring s : states_) require(s <= limit, "bitstring wider than the qubit count");
  std::sort(states_.begin(), states_.end());
  states_.erase(std::unique(states_.begin(), states_.end()), states_.end());
}

std::optional<std::size_t> SubspaceBasis::index_of(Bitstring state) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), state);
  if (it == states_.end() || *it != state) return std::nullopt;
  return static_cast<std::size_t>(it - states_.begin());
}

SubspaceBasis sector_basis(std::size_t n_qubits, std::size_t weight) {
  require(n_qubits <= 62 && weight <= n_qubits, "invalid sector");
  std::vector<Bitstring> states;
  if (weight == 0) return SubspaceBasis(n_qubits, {0});
  Bitstring s = (Bitstring{1} << weight) - 1;
  const Bitstring end = Bitstring{1} << n_qubits;
  while (s < end) {
    states.push_back(s);
    // next integer with the same popcount
    const Bitstring c = s & (~s + 1);
    const Bitstring r = s + c;
    s = (((r ^ s) >> 2) / c) | r;
  }
  return SubspaceBasis(n_qubits, std::move(states));
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SparseProjection::to_sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(entries.size());
  for (const auto& e : entries) triplets.emplace_back(e.row, e.col, e.value);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Eigen::MatrixXd SparseProjection::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : entries) m(e.row, e.col) += e.value;
  return m;
}

PauliAction apply_pauli_to_bitstring(const PauliTerm& term, Bitstring a) { return term.masks().apply(a); }

SparseProjection project_hamiltonian(const PauliSum& h, const SubspaceBasis& basis) {
  require(h.n_qubits() == basis.n_qubits(), "basis width does not match Hamiltonian");
  std::vector<PauliMasks> masks;
  masks.reserve(h.terms().size());
  for (const auto& t : h.terms()) masks.push_back(t.masks());

  const std::size_t dim = basis.size();
  const double scale = std::max(1.0, h.norm_bound());
  std::vector<std::pair<std::size_t, Complex>> column;
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> raw;
  for (std::size_t c = 0; c < dim; ++c) {
    column.clear();
    const Bitstring a = basis.states()[c];
    for (std::size_t p = 0; p < masks.size(); ++p) {
      const PauliAction act = masks[p].apply(a);
      if (auto r = basis.index_of(act.target)) column.emplace_back(*r, h.terms()[p].coefficient * act.phase);
    }
    std::sort(column.begin(), column.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t i = 0; i < column.size();) {
      std::size_t j = i;
      Complex sum = 0.0;
      while (j < column.size() && column[j].first == column[i].first) sum += column[j++].second;
      if (std::abs(sum.imag()) > 1e-12 * scale) {
        throw NumericError("projected Hamiltonian has an imaginary entry; input is not real symmetric");
      }
      raw.push_back({{column[i].first, c}, sum.real()});
      i = j;
    }
  }
  std::sort(raw.begin(), raw.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  // symmetrize so the transpose entries agree bit for bit
  SparseProjection out;
  out.dim = dim;
  auto lookup = [&raw](std::size_t r, std::size_t c) -> double {
    auto it = std::lower_bound(raw.begin(), raw.end(), std::make_pair(r, c),
                               [](const auto& x, const auto& key) { return x.first < key; });
    return (it != raw.end() && it->first == std::make_pair(r, c)) ? it->second : 0.0;
  };
  for (const auto& [rc, v] : raw) {
    const auto [r, c] = rc;
    const double value = r == c ? v : 0.5 * (v + lookup(c, r));
    if (r != c && std::abs(value) <= 1e-14 * scale) continue;
    out.entries.push_back({r, c, value});
  }
  // transposes present only on one side (impossible for Hermitian input, kept for safety of the contract)
  std::vector<MatrixEntry> missing;
  for (const auto& e : out.entries)
    if (e.row != e.col && lookup(e.col, e.row) == 0.0) missing.push_back({e.col, e.row, e.value});
  if (!missing.empty()) {
    out.entries.insert(out.entries.end(), missing.begin(), missing.end());
    std::sort(out.entries.begin(), out.entries.end(),
              [](const auto& x, const auto& y) { return std::tie(x.row, x.col) < std::tie(y.row, y.col); });
  }
  return out;
}

double lowest_eigenvalue(const SparseProjection& m, const EigenOptions& options) {
  require(m.dim >= 1, "lowest_eigenvalue needs dim >= 1");
  if (m.dim <= options.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.to_dense(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()[0];
  }
  const auto sparse = m.to_sparse();
  LanczosOptions lanczos{options.tol, options.max_iter, 0};
  return lanczos_lowest([&sparse](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out.noalias() = sparse * in; },
                        static_cast<Eigen::Index>(m.dim), lanczos)
      .value;
}

SubspaceBasis collect_basis(const std::map<int, std::vector<Bitstring>>& samples_by_k, int d, std::size_t n_qubits,
                            bool sz_filter) {
  std::vector<Bitstring> states;
  for (const auto& [k, samples] : samples_by_k) {
    if (k >= d) continue;
    for (Bitstring s : samples) {
      if (sz_filter && static_cast<std::size_t>(popcount(s)) != neel_weight(n_qubits)) continue;
      states.push_back(s);
    }
  }
  return SubspaceBasis(n_qubits, std::move(states));
}

std::vector<SkqdPoint> skqd_energy_curve(const PauliSum& h, const std::map<int, std::vector<Bitstring>>& samples_by_k,
                                         int d_max, bool sz_filter, const EigenOptions& options) {
  require(d_max >= 1, "d_max must be >= 1");
  for (int k = 0; k < d_max; ++k) {
    require(samples_by_k.count(k) != 0, "missing samples for Krylov step " + std::to_string(k));
  }
  std::vector<SkqdPoint> curve;
  std::size_t previous_size = 0;
  for (int d = 1; d <= d_max; ++d) {
    const SubspaceBasis basis = collect_basis(samples_by_k, d, h.n_qubits(), sz_filter);
    if (basis.size() == 0) throw ValidationError("empty sampled subspace at D = " + std::to_string(d));
    if (!curve.empty() && basis.size() == previous_size) {
      curve.push_back({d, curve.back().energy, basis.size()});
      continue;
    }
    curve.push_back({d, lowest_eigenvalue(project_hamiltonian(h, basis), options), basis.size()});
    previous_size = basis.size();
  }
  return curve;
}

}  // namespace genksr
