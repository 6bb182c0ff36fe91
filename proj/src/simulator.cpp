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

#include "genksr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "genksr/errors.hpp"
#include "genksr/lanczos.hpp"
#include "genksr/skqd.hpp"

namespace genksr {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_width(const StateVector& state, const PauliSum& h) {
  require(state.n_qubits() == h.n_qubits(), "state and Hamiltonian qubit counts differ");
}

void check_width(const StateVector& state, const PauliTerm& p) {
  require(p.n_qubits() <= state.n_qubits(), "Pauli term wider than the state");
}

PauliMasks masks_of(const PauliTerm& p) { return p.masks(); }

std::vector<PauliMasks> all_masks(const PauliSum& h) {
  std::vector<PauliMasks> out;
  out.reserve(h.terms().size());
  for (const auto& t : h.terms()) out.push_back(t.masks());
  return out;
}

}  // namespace

char basis_char(Basis b) {
  static constexpr char kChars[] = {'X', 'Y', 'Z'};
  return kChars[static_cast<int>(b)];
}

Basis basis_from_char(char c) {
  switch (c) {
    case 'X': return Basis::X;
    case 'Y': return Basis::Y;
    case 'Z': return Basis::Z;
    default: throw ValidationError(std::string("invalid measurement basis '") + c + "'");
  }
}

std::string ShotRecord::bases_string() const {
  std::string out;
  for (Basis b : bases) out.push_back(basis_char(b));
  return out;
}

std::string ShotRecord::bits_string() const {
  std::string out;
  for (auto b : bits) out.push_back(b ? '1' : '0');
  return out;
}

StateVector::StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
  require(n_qubits <= kMaxStateQubits, "state vector too large");
  amplitudes_ = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
  amplitudes_[0] = 1.0;
}

StateVector StateVector::basis_state(std::size_t n_qubits, Bitstring state) {
  StateVector out(n_qubits);
  require(state < out.dim(), "basis state out of range");
  out.amplitudes_[0] = 0.0;
  out.amplitudes_[static_cast<Eigen::Index>(state)] = 1.0;
  return out;
}

StateVector StateVector::from_amplitudes(std::size_t n_qubits, Eigen::VectorXcd amplitudes) {
  require(n_qubits <= kMaxStateQubits, "state vector too large");
  require(amplitudes.size() == (Eigen::Index{1} << n_qubits), "amplitude count must be 2^n");
  require(std::abs(amplitudes.norm() - 1.0) < 1e-10, "amplitudes must have unit norm");
  return StateVector(n_qubits, std::move(amplitudes));
}

void StateVector::apply_pauli_rotation(const PauliMasks& p, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const auto dim = static_cast<Bitstring>(amplitudes_.size());
  Complex* psi = amplitudes_.data();
  if (p.x_mask == 0) {
    const Complex plus = Complex(c, 0) - kI * s * p.phase(0).real();
    const Complex minus = Complex(c, 0) + kI * s * p.phase(0).real();
    for (Bitstring a = 0; a < dim; ++a) psi[a] *= (popcount(a & p.z_mask) & 1) ? minus : plus;
    return;
  }
  const Bitstring pivot = p.x_mask & (~p.x_mask + 1);
  for (Bitstring a = 0; a < dim; ++a) {
    if (a & pivot) continue;
    const Bitstring b = a ^ p.x_mask;
    const Complex pa = p.phase(a), pb = p.phase(b);
    const Complex va = psi[a], vb = psi[b];
    psi[a] = c * va - kI * s * pb * vb;
    psi[b] = c * vb - kI * s * pa * va;
  }
}

void StateVector::apply_hadamard(std::size_t qubit) {
  require(qubit < n_qubits_, "qubit out of range");
  const Bitstring bit = Bitstring{1} << qubit;
  const double r = std::numbers::sqrt2 / 2.0;
  Complex* psi = amplitudes_.data();
  for (Bitstring a = 0; a < static_cast<Bitstring>(amplitudes_.size()); ++a) {
    if (a & bit) continue;
    const Complex v0 = psi[a], v1 = psi[a | bit];
    psi[a] = r * (v0 + v1);
    psi[a | bit] = r * (v0 - v1);
  }
}

void StateVector::apply_sdg(std::size_t qubit) {
  require(qubit < n_qubits_, "qubit out of range");
  const Bitstring bit = Bitstring{1} << qubit;
  Complex* psi = amplitudes_.data();
  for (Bitstring a = 0; a < static_cast<Bitstring>(amplitudes_.size()); ++a)
    if (a & bit) psi[a] *= -kI;
}

EvolutionConfig EvolutionConfig::for_hamiltonian(const PauliSum& h) {
  const double bound = h.norm_bound();
  require(bound > 0.0, "time step from norm bound needs a nonzero Hamiltonian");
  return {std::numbers::pi / bound, 6, 2, Propagator::kTrotter};
}

void EvolutionConfig::validate() const {
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(trotter_steps >= 1, "trotter_steps must be >= 1");
  require(trotter_order == 1 || trotter_order == 2, "trotter_order must be 1 or 2");
}

Bitstring neel_bitstring(std::size_t n_qubits) {
  Bitstring out = 0;
  for (std::size_t q = 0; q < n_qubits; q += 2) out |= Bitstring{1} << q;
  return out;
}

StateVector neel_state(std::size_t n_qubits) {
  require(n_qubits >= 1, "Neel state needs at least one qubit");
  return StateVector::basis_state(n_qubits, neel_bitstring(n_qubits));
}

StateVector trotter_evolve(const StateVector& state, const PauliSum& h, int k, const EvolutionConfig& cfg) {
  check_width(state, h);
  cfg.validate();
  require(k >= 0, "Krylov power must be >= 0");
  const auto masks = all_masks(h);
  const double tau = cfg.dt / cfg.trotter_steps;
  StateVector out = state;
  for (int rep = 0; rep < k; ++rep) {
    for (int step = 0; step < cfg.trotter_steps; ++step) {
      if (cfg.trotter_order == 1) {
        for (std::size_t p = 0; p < masks.size(); ++p) out.apply_pauli_rotation(masks[p], h.terms()[p].coefficient * tau);
      } else {
        for (std::size_t p = 0; p < masks.size(); ++p)
          out.apply_pauli_rotation(masks[p], 0.5 * h.terms()[p].coefficient * tau);
        for (std::size_t p = masks.size(); p-- > 0;)
          out.apply_pauli_rotation(masks[p], 0.5 * h.terms()[p].coefficient * tau);
      }
    }
  }
  return out;
}

Eigen::VectorXcd apply_hamiltonian(const PauliSum& h, const Eigen::VectorXcd& psi) {
  require(psi.size() == (Eigen::Index{1} << h.n_qubits()), "vector length does not match Hamiltonian");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
  const auto dim = static_cast<Bitstring>(psi.size());
  for (const auto& term : h.terms()) {
    const PauliMasks m = term.masks();
    for (Bitstring a = 0; a < dim; ++a) out[a ^ m.x_mask] += term.coefficient * m.phase(a) * psi[a];
  }
  return out;
}

namespace {

// Short-iteration Lanczos propagator for exp(-i H t) psi.
Eigen::VectorXcd krylov_propagate(const PauliSum& h, Eigen::VectorXcd psi, double t) {
  constexpr int kMaxKrylov = 40;
  const double bound = std::max(h.norm_bound(), 1e-300);
  const int substeps = std::max(1, static_cast<int>(std::ceil(bound * std::abs(t) / 4.0)));
  const double tau = t / substeps;
  for (int step = 0; step < substeps; ++step) {
    const double norm0 = psi.norm();
    std::vector<Eigen::VectorXcd> basis{psi / norm0};
    std::vector<double> alpha, beta;
    Eigen::VectorXcd coeffs;
    for (int j = 0; j < kMaxKrylov; ++j) {
      Eigen::VectorXcd w = apply_hamiltonian(h, basis.back());
      alpha.push_back(basis.back().dot(w).real());
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& v : basis) w -= v.dot(w) * v;
      const double b = w.norm();
      const auto m = static_cast<Eigen::Index>(alpha.size());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(Eigen::Map<Eigen::VectorXd>(alpha.data(), m),
                                 Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1), Eigen::ComputeEigenvectors);
      const Eigen::MatrixXd& v = tri.eigenvectors();
      Eigen::VectorXcd phases = (-kI * tau * tri.eigenvalues().cast<Complex>()).array().exp();
      coeffs = v.cast<Complex>() * (phases.asDiagonal() * v.row(0).transpose().cast<Complex>());
      if (b < 1e-14 || b * std::abs(coeffs[m - 1]) < 1e-14) break;
      if (j + 1 == kMaxKrylov) throw ConvergenceError("Krylov propagator did not converge");
      beta.push_back(b);
      basis.push_back(w / b);
    }
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(psi.size());
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) next += coeffs[i] * basis[i];
    psi = norm0 * next;
  }
  return psi;
}

}  // namespace

StateVector krylov_evolve(const StateVector& state, const PauliSum& h, int k, const EvolutionConfig& cfg) {
  if (cfg.propagator == Propagator::kTrotter) return trotter_evolve(state, h, k, cfg);
  cfg.validate();
  require(k >= 0, "Krylov power must be >= 0");
  return exact_evolve(state, h, k * cfg.dt);
}

StateVector exact_evolve(const StateVector& state, const PauliSum& h, double t) {
  check_width(state, h);
  require(std::isfinite(t), "evolution time must be finite");
  require(h.n_qubits() <= 20, "exact evolution oracle limited to 20 qubits");
  if (t == 0.0) return state;
  Eigen::VectorXcd psi;
  if (h.n_qubits() <= 8) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.dense_matrix());
    const Eigen::MatrixXcd& v = solver.eigenvectors();
    Eigen::VectorXcd phases = (-kI * t * solver.eigenvalues().cast<Complex>()).array().exp();
    psi = v * (phases.asDiagonal() * (v.adjoint() * state.amplitudes()));
  } else {
    psi = krylov_propagate(h, state.amplitudes(), t);
  }
  psi.normalize();
  return StateVector::from_amplitudes(state.n_qubits(), std::move(psi));
}

Complex matrix_element(const StateVector& lhs, const PauliTerm& p, const StateVector& rhs) {
  check_width(lhs, p);
  require(lhs.dim() == rhs.dim(), "state dimensions differ");
  PauliMasks m = masks_of(p);
  const Complex* l = lhs.amplitudes().data();
  const Complex* r = rhs.amplitudes().data();
  Complex sum = 0.0;
  for (Bitstring a = 0; a < static_cast<Bitstring>(lhs.dim()); ++a) sum += std::conj(l[a ^ m.x_mask]) * m.phase(a) * r[a];
  return p.coefficient * sum;
}

double expectation(const StateVector& state, const PauliTerm& p) {
  if (p.is_identity()) return p.coefficient;
  const Complex v = matrix_element(state, p, state);
  if (std::abs(v.imag()) > 1e-10) throw NumericError("expectation of a Pauli string has an imaginary part");
  return v.real();
}

double expectation(const StateVector& state, const PauliSum& h) {
  check_width(state, h);
  const Complex v = state.amplitudes().dot(apply_hamiltonian(h, state.amplitudes()));
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, h.norm_bound())) throw NumericError("Hamiltonian expectation is not real");
  return v.real();
}

Complex overlap(const StateVector& lhs, const StateVector& rhs) {
  require(lhs.dim() == rhs.dim(), "state dimensions differ");
  return lhs.amplitudes().dot(rhs.amplitudes());
}

namespace {

std::vector<double> cumulative_probabilities(const Eigen::VectorXcd& amps) {
  std::vector<double> cdf(static_cast<std::size_t>(amps.size()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    total += std::norm(amps[i]);
    cdf[static_cast<std::size_t>(i)] = total;
  }
  return cdf;
}

Bitstring draw(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) --it;
  // skip zero-probability entries sitting on the boundary
  while (it != cdf.begin() && *it == *(it - 1)) --it;
  return static_cast<Bitstring>(it - cdf.begin());
}

}  // namespace

std::vector<Bitstring> sample_computational(const StateVector& state, std::size_t shots, const RngStream& rng) {
  require(shots >= 1, "shots must be >= 1");
  const auto cdf = cumulative_probabilities(state.amplitudes());
  RngStream stream = rng;
  std::vector<Bitstring> out(shots);
  for (auto& s : out) s = draw(cdf, stream.uniform());
  return out;
}

std::vector<ShotRecord> sample_pauli6(const StateVector& state, std::size_t shots, const RngStream& rng) {
  require(shots >= 1, "shots must be >= 1");
  const std::size_t n = state.n_qubits();
  RngStream basis_stream = rng.split(0);
  std::vector<ShotRecord> out(shots);
  std::vector<std::uint64_t> pattern(shots);
  for (std::size_t s = 0; s < shots; ++s) {
    out[s].bases.resize(n);
    out[s].bits.resize(n);
    std::uint64_t code = 0;
    for (std::size_t q = 0; q < n; ++q) {
      out[s].bases[q] = static_cast<Basis>(basis_stream.below(3));
      code = code * 3 + static_cast<std::uint64_t>(out[s].bases[q]);
    }
    pattern[s] = code;
  }
  // one basis rotation per distinct pattern; each shot's outcome uses its own substream
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> groups;
  std::vector<std::uint64_t> order;
  for (std::size_t s = 0; s < shots; ++s) {
    auto [it, inserted] = groups.try_emplace(pattern[s]);
    if (inserted) order.push_back(pattern[s]);
    it->second.push_back(s);
  }
  for (std::uint64_t code : order) {
    const auto& members = groups[code];
    StateVector rotated = state;
    for (std::size_t q = 0; q < n; ++q) {
      const Basis b = out[members.front()].bases[q];
      if (b == Basis::Y) rotated.apply_sdg(q);
      if (b != Basis::Z) rotated.apply_hadamard(q);
    }
    const auto cdf = cumulative_probabilities(rotated.amplitudes());
    for (std::size_t s : members) {
      RngStream outcome = rng.split(1 + s);
      const Bitstring result = draw(cdf, outcome.uniform());
      for (std::size_t q = 0; q < n; ++q) out[s].bits[q] = static_cast<std::uint8_t>((result >> q) & 1);
    }
  }
  return out;
}

namespace {

GroundState ground_from_dense(const Eigen::MatrixXd& m, std::optional<std::size_t> neel_index) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  const double e0 = solver.eigenvalues()[0];
  const double tol = 1e-8 * std::max(1.0, std::abs(e0));
  GroundState out{e0, 0.0};
  for (Eigen::Index i = 0; i < solver.eigenvalues().size() && solver.eigenvalues()[i] - e0 < tol; ++i) {
    if (neel_index) out.overlap_sq += std::pow(solver.eigenvectors()(static_cast<Eigen::Index>(*neel_index), i), 2);
  }
  return out;
}

}  // namespace

GroundState exact_ground_energy(const PauliSum& h, GroundMethod method) {
  const std::size_t n = h.n_qubits();
  require(n >= 1, "empty Hamiltonian");
  if (method == GroundMethod::kAuto) method = n <= 10 ? GroundMethod::kDense : GroundMethod::kSectorLanczos;
  const Bitstring neel = neel_bitstring(n);

  if (method == GroundMethod::kDense) {
    require(n <= 12, "dense ground-state oracle limited to 12 qubits");
    std::vector<Bitstring> all(std::size_t{1} << n);
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
    const SubspaceBasis full(n, std::move(all));
    return ground_from_dense(project_hamiltonian(h, full).to_dense(), full.index_of(neel));
  }

  require(n <= 24, "sector Lanczos oracle limited to 24 qubits");
  const SubspaceBasis sector = sector_basis(n, neel_weight(n));
  const SparseProjection projected = project_hamiltonian(h, sector);
  const std::size_t neel_index = *sector.index_of(neel);
  if (sector.size() <= 512) return ground_from_dense(projected.to_dense(), neel_index);

  const auto sparse = projected.to_sparse();
  const MatVec matvec = [&sparse](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out.noalias() = sparse * in; };
  const LanczosOptions options{1e-10, 500, 0};
  std::vector<Eigen::VectorXd> ground_vectors;
  const LanczosResult first = lanczos_lowest(matvec, static_cast<Eigen::Index>(sector.size()), options);
  ground_vectors.push_back(first.vector);
  const double tol = 1e-7 * std::max(1.0, std::abs(first.value));
  // deflate to detect a degenerate ground space
  while (ground_vectors.size() < 16 && ground_vectors.size() < sector.size()) {
    LanczosResult next = lanczos_lowest(matvec, static_cast<Eigen::Index>(sector.size()), options, ground_vectors);
    if (next.value - first.value > tol) break;
    for (const auto& v : ground_vectors) next.vector -= v.dot(next.vector) * v;
    ground_vectors.push_back(next.vector.normalized());
  }
  GroundState out{first.value, 0.0};
  for (const auto& v : ground_vectors) out.overlap_sq += v[static_cast<Eigen::Index>(neel_index)] * v[static_cast<Eigen::Index>(neel_index)];
  return out;
}

StateVector hadamard_test_state(const StateVector& psi0, const StateVector& psik) {
  require(psi0.n_qubits() == psik.n_qubits(), "Hadamard-test branches differ in size");
  require(psi0.n_qubits() + 1 <= kMaxStateQubits, "Hadamard-test register too large");
  const auto half = static_cast<Eigen::Index>(psi0.dim());
  Eigen::VectorXcd amps(2 * half);
  amps.head(half) = psi0.amplitudes() / std::numbers::sqrt2;
  amps.tail(half) = psik.amplitudes() / std::numbers::sqrt2;
  return StateVector::from_amplitudes(psi0.n_qubits() + 1, std::move(amps));
}

StateVector hadamard_test_state(const PauliSum& h, int k, const EvolutionConfig& cfg) {
  require(k >= 0, "Krylov power must be >= 0");
  require(h.n_qubits() + 1 <= kMaxStateQubits, "Hadamard-test register too large");
  const StateVector psi0 = neel_state(h.n_qubits());
  return hadamard_test_state(psi0, krylov_evolve(psi0, h, k, cfg));
}

}  // namespace genksr
