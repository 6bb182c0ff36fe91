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

#include "genksr/kqd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "genksr/errors.hpp"

namespace genksr {

ThresholdConfig ThresholdConfig::defaults(ThresholdMode mode) {
  return {mode == ThresholdMode::kExact ? 1e-12 : 1e-1, mode};
}

void ThresholdConfig::validate() const { require(eps_cut >= 0.0 && eps_cut < 1.0, "eps_cut must be in [0, 1)"); }

KrylovMatrices assemble(std::span<const Complex> s, std::span<const Complex> h) {
  require(s.size() == h.size(), "s and h must have equal length");
  require(!s.empty(), "need at least one Krylov element");
  require(std::abs(s[0] - 1.0) <= 0.2, "s_0 is far from 1; elements are not normalized");
  const auto d = static_cast<Eigen::Index>(s.size());
  KrylovMatrices m;
  m.dim = static_cast<int>(d);
  m.s_tilde.resize(d, d);
  m.h_tilde.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      const auto lag = static_cast<std::size_t>(k - j);
      const Complex sv = lag == 0 ? Complex(s[0].real(), 0.0) : s[lag];
      const Complex hv = lag == 0 ? Complex(h[0].real(), 0.0) : h[lag];
      m.s_tilde(j, k) = sv;
      m.h_tilde(j, k) = hv;
      m.s_tilde(k, j) = std::conj(sv);
      m.h_tilde(k, j) = std::conj(hv);
    }
  }
  return m;
}

namespace {

void check_hermitian(const Eigen::MatrixXcd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError(std::string(name) + " is not Hermitian");
  }
}

}  // namespace

KqdSolution threshold_solve(const KrylovMatrices& m, const ThresholdConfig& cfg) {
  cfg.validate();
  require(m.dim >= 1 && m.s_tilde.rows() == m.dim && m.s_tilde.cols() == m.dim && m.h_tilde.rows() == m.dim &&
              m.h_tilde.cols() == m.dim,
          "Krylov matrices have inconsistent shapes");
  check_hermitian(m.s_tilde, "overlap matrix");
  check_hermitian(m.h_tilde, "projected Hamiltonian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> overlap(m.s_tilde);
  const Eigen::VectorXd& lambda = overlap.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  if (!(lambda_max > 0.0)) throw NumericError("overlap matrix has no positive eigenvalue");

  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > cfg.eps_cut * lambda_max) kept.push_back(i);
  // lambda_max always survives since eps_cut < 1
  Eigen::MatrixXcd w(m.dim, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    w.col(static_cast<Eigen::Index>(c)) = overlap.eigenvectors().col(kept[c]) / std::sqrt(lambda[kept[c]]);
  }
  Eigen::MatrixXcd reduced = w.adjoint() * m.h_tilde * w;
  reduced = 0.5 * (reduced + reduced.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(reduced, Eigen::EigenvaluesOnly);
  return {solver.eigenvalues()[0], static_cast<int>(kept.size())};
}

std::vector<KqdPoint> kqd_energy_curve(const ElementProvider& provider, int d_max, const ThresholdConfig& cfg) {
  require(d_max >= 1, "d_max must be >= 1");
  std::vector<Complex> s, h;
  for (int k = 0; k < d_max; ++k) {
    auto [sk, hk] = provider(k);
    s.push_back(sk);
    h.push_back(hk);
  }
  if (cfg.mode == ThresholdMode::kSampled) {
    // a non-positive estimate of s_0 carries no scale information; fall back to the exact value 1
    const double norm = s[0].real() > 0.0 ? s[0].real() : 1.0;
    if (!std::isfinite(norm)) throw NumericError("sampled s_0 is not finite");
    for (auto& v : s) v /= norm;
    for (auto& v : h) v /= norm;
    // lag-0 elements are real; their imaginary estimates are pure noise
    s[0] = 1.0;
    h[0] = h[0].real();
  }
  std::vector<KqdPoint> curve;
  for (int d = 1; d <= d_max; ++d) {
    const auto sol = threshold_solve(assemble(std::span(s).first(d), std::span(h).first(d)), cfg);
    curve.push_back({d, sol.energy, sol.kept_dim});
  }
  return curve;
}

std::vector<KqdPoint> kqd_energy_curve(const KrylovElements& elements, int d_max, const ThresholdConfig& cfg) {
  require(elements.size() >= d_max, "not enough Krylov elements for d_max");
  return kqd_energy_curve([&elements](int k) { return std::make_pair(elements.s[k], elements.h[k]); }, d_max, cfg);
}

KrylovElements direct_krylov_elements(const PauliSum& h, int d, const EvolutionConfig& cfg) {
  require(d >= 1, "need at least one Krylov step");
  const StateVector psi0 = neel_state(h.n_qubits());
  const Eigen::VectorXcd h_psi0 = apply_hamiltonian(h, psi0.amplitudes());
  KrylovElements out;
  StateVector psi = psi0;
  for (int k = 0; k < d; ++k) {
    if (k > 0) psi = krylov_evolve(psi, h, 1, cfg);
    out.s.push_back(overlap(psi0, psi));
    out.h.push_back(h_psi0.dot(psi.amplitudes()));
    out.s_re.push_back({out.s.back().real(), 0.0, 1});
    out.s_im.push_back({out.s.back().imag(), 0.0, 1});
    out.h_re.push_back({out.h.back().real(), 0.0, 1});
    out.h_im.push_back({out.h.back().imag(), 0.0, 1});
  }
  return out;
}

}  // namespace genksr
