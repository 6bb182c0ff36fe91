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

#include "genksr/shadows.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genksr/errors.hpp"

namespace genksr {

namespace {

struct SupportFactor {
  std::size_t qubit;
  Basis basis;
};

std::vector<SupportFactor> support_of(const PauliTerm& p) {
  std::vector<SupportFactor> out;
  for (std::size_t q = 0; q < p.axes.size(); ++q) {
    if (p.axes[q] == Pauli::I) continue;
    out.push_back({q, static_cast<Basis>(static_cast<int>(p.axes[q]) - 1)});
  }
  return out;
}

double product_over(const ShotRecord& r, const std::vector<SupportFactor>& support) {
  double value = 1.0;
  for (const auto& f : support) {
    if (r.bases[f.qubit] != f.basis) return 0.0;
    value *= r.bits[f.qubit] ? -3.0 : 3.0;
  }
  return value;
}

ShadowEstimate summarize(std::span<const double> values, const EstimatorConfig& cfg) {
  require(!values.empty(), "no snapshots");
  const auto m = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= m;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double std_error = values.size() > 1 ? std::sqrt(var / (m - 1.0) / m) : 0.0;
  const double value = cfg.kind == Estimator::kMedianOfMeans
                           ? median_of_means(values, std::min(cfg.n_batches, values.size()))
                           : mean;
  return {value, std_error, values.size()};
}

}  // namespace

double snapshot_value(const ShotRecord& record, const PauliTerm& p) {
  require(record.bases.size() == record.bits.size(), "record bases and bits differ in length");
  require(p.n_qubits() <= record.width(), "Pauli term wider than the record");
  return product_over(record, support_of(p));
}

ShadowEstimate estimate_pauli(std::span<const ShotRecord> records, const PauliTerm& p, const EstimatorConfig& cfg) {
  require(!records.empty(), "estimate_pauli needs at least one record");
  if (p.is_identity()) return {1.0, 0.0, records.size()};
  const auto support = support_of(p);
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) {
    require(p.n_qubits() <= r.width() && r.bases.size() == r.bits.size(), "record narrower than the Pauli term");
    values.push_back(product_over(r, support));
  }
  return summarize(values, cfg);
}

double median_of_means(std::span<const double> values, std::size_t n_batches) {
  require(!values.empty(), "median_of_means needs values");
  require(n_batches >= 1 && n_batches <= values.size(), "n_batches must be in [1, len(values)]");
  const std::size_t base = values.size() / n_batches, extra = values.size() % n_batches;
  std::vector<double> means;
  means.reserve(n_batches);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) sum += values[pos + i];
    means.push_back(sum / static_cast<double>(len));
    pos += len;
  }
  std::sort(means.begin(), means.end());
  const std::size_t mid = means.size() / 2;
  return means.size() % 2 ? means[mid] : 0.5 * (means[mid - 1] + means[mid]);
}

KrylovElements estimate_krylov_elements(const std::map<int, std::vector<ShotRecord>>& records_by_k, const PauliSum& h,
                                        int d, const EstimatorConfig& cfg) {
  require(d >= 1, "need at least one Krylov step");
  const std::size_t n = h.n_qubits();
  std::vector<std::vector<SupportFactor>> supports;
  for (const auto& t : h.terms()) supports.push_back(support_of(t));

  KrylovElements out;
  std::vector<double> s_re, s_im, h_re, h_im;
  for (int k = 0; k < d; ++k) {
    auto it = records_by_k.find(k);
    if (it == records_by_k.end() || it->second.empty()) {
      throw ValidationError("missing records for Krylov step " + std::to_string(k));
    }
    const auto& records = it->second;
    s_re.assign(records.size(), 0.0);
    s_im.assign(records.size(), 0.0);
    h_re.assign(records.size(), 0.0);
    h_im.assign(records.size(), 0.0);
    for (std::size_t m = 0; m < records.size(); ++m) {
      const ShotRecord& r = records[m];
      if (r.width() != n + 1 || r.bases.size() != r.bits.size()) {
        throw ValidationError("Hadamard-test records must have width n + 1");
      }
      const Basis ancilla = r.bases[n];
      if (ancilla == Basis::Z) continue;
      const double fa = r.bits[n] ? -3.0 : 3.0;
      double energy = 0.0;
      for (std::size_t p = 0; p < supports.size(); ++p) {
        const double v = product_over(r, supports[p]);
        if (v != 0.0) energy += h.terms()[p].coefficient * v;
      }
      if (ancilla == Basis::X) {
        s_re[m] = fa;
        h_re[m] = fa * energy;
      } else {
        s_im[m] = fa;
        h_im[m] = fa * energy;
      }
    }
    out.s_re.push_back(summarize(s_re, cfg));
    out.s_im.push_back(summarize(s_im, cfg));
    out.h_re.push_back(summarize(h_re, cfg));
    out.h_im.push_back(summarize(h_im, cfg));
    out.s.emplace_back(out.s_re.back().value, out.s_im.back().value);
    out.h.emplace_back(out.h_re.back().value, out.h_im.back().value);
  }
  return out;
}

KrylovElements exact_krylov_elements(const PauliSum& h, int d, const EvolutionConfig& cfg) {
  require(d >= 1, "need at least one Krylov step");
  const std::size_t n = h.n_qubits();
  auto with_ancilla = [n](const PauliTerm& t, Pauli a) {
    std::vector<Pauli> axes = t.axes;
    axes.resize(n + 1, Pauli::I);
    axes[n] = a;
    return PauliTerm(t.coefficient, std::move(axes));
  };
  const PauliTerm x_a = with_ancilla(PauliTerm(1.0, std::vector<Pauli>(n, Pauli::I)), Pauli::X);
  const PauliTerm y_a = with_ancilla(PauliTerm(1.0, std::vector<Pauli>(n, Pauli::I)), Pauli::Y);
  KrylovElements out;
  for (int k = 0; k < d; ++k) {
    const StateVector state = hadamard_test_state(h, k, cfg);
    const double sr = expectation(state, x_a), si = expectation(state, y_a);
    double hr = 0.0, hi = 0.0;
    for (const auto& t : h.terms()) {
      hr += t.coefficient * expectation(state, with_ancilla(PauliTerm(1.0, t.axes), Pauli::X));
      hi += t.coefficient * expectation(state, with_ancilla(PauliTerm(1.0, t.axes), Pauli::Y));
    }
    out.s.emplace_back(sr, si);
    out.h.emplace_back(hr, hi);
    out.s_re.push_back({sr, 0.0, 1});
    out.s_im.push_back({si, 0.0, 1});
    out.h_re.push_back({hr, 0.0, 1});
    out.h_im.push_back({hi, 0.0, 1});
  }
  return out;
}

std::uint64_t sample_complexity(double eps, std::size_t n_observables, int k_max, double delta) {
  require(eps > 0.0 && std::isfinite(eps), "eps must be positive");
  require(n_observables >= 1, "need at least one observable");
  require(k_max >= 0 && k_max <= 20, "locality must be in [0, 20]");
  require(delta > 0.0 && delta < 1.0, "delta must be in (0, 1)");
  double variance_term = 34.0 * std::pow(4.0, k_max) / (eps * eps);
  // absorb rounding noise so exact ratios survive the ceiling
  if (std::abs(variance_term - std::round(variance_term)) < 1e-9 * variance_term) variance_term = std::round(variance_term);
  variance_term = std::ceil(variance_term);
  const double batches = std::ceil(2.0 * std::log(2.0 * static_cast<double>(n_observables) / delta));
  return static_cast<std::uint64_t>(variance_term) * static_cast<std::uint64_t>(batches);
}

}  // namespace genksr
