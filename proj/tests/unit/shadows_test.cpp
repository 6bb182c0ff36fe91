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


#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "genksr/errors.hpp"
#include "genksr/hamiltonians.hpp"
#include "genksr/kqd.hpp"
#include "genksr/shadows.hpp"
#include "genksr/simulator.hpp"
#include "test_support.hpp"

namespace genksr {
namespace {

ShotRecord record(const char* bases, const char* bits) {
  ShotRecord r;
  for (const char* c = bases; *c; ++c) r.bases.push_back(basis_from_char(*c));
  for (const char* c = bits; *c; ++c) r.bits.push_back(static_cast<std::uint8_t>(*c - '0'));
  return r;
}

TEST(SnapshotValue, InverseChannelRule) {
  EXPECT_EQ(snapshot_value(record("Z", "0"), PauliTerm::from_label(1.0, "Z")), 3.0);
  EXPECT_EQ(snapshot_value(record("Z", "1"), PauliTerm::from_label(1.0, "Z")), -3.0);
  EXPECT_EQ(snapshot_value(record("X", "0"), PauliTerm::from_label(1.0, "Z")), 0.0);
  EXPECT_EQ(snapshot_value(record("X", "1"), PauliTerm::from_label(1.0, "Z")), 0.0);
  EXPECT_EQ(snapshot_value(record("XYZ", "011"), PauliTerm::from_label(1.0, "XYI")), -9.0);
  EXPECT_EQ(snapshot_value(record("XYZ", "011"), PauliTerm::from_label(1.0, "XYZ")), 27.0);
}

TEST(EstimatePauli, ZeroStateVariance) {
  const std::size_t m = 50000;
  const auto records = sample_pauli6(StateVector(1), m, RngStream(1));
  const auto est = estimate_pauli(records, PauliTerm::from_label(1.0, "Z"));
  EXPECT_EQ(est.n_snapshots, m);
  EXPECT_LT(std::abs(est.value - 1.0), 5.0 * est.std_error);
  // snapshot values are 3 w.p. 1/3 and 0 otherwise: variance 2
  EXPECT_NEAR(est.std_error, std::sqrt(2.0 / m), 0.05 * std::sqrt(2.0 / m));
}

TEST(EstimatePauli, IdentityAndErrors) {
  const std::vector<ShotRecord> records{record("XZ", "01")};
  const auto est = estimate_pauli(records, PauliTerm::from_label(1.0, "II"));
  EXPECT_EQ(est.value, 1.0);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_THROW(estimate_pauli(std::vector<ShotRecord>{}, PauliTerm::from_label(1.0, "Z")), ValidationError);
  EXPECT_THROW(estimate_pauli(records, PauliTerm::from_label(1.0, "ZZZ")), ValidationError);
}

TEST(EstimatePauli, UnbiasedOverRepetitions) {
  const StateVector s = StateVector::from_amplitudes(3, testing::random_state(3, 21));
  for (const char* label : {"XIZ", "YYI", "ZXY"}) {
    const PauliTerm p = PauliTerm::from_label(1.0, label);
    const double exact = expectation(s, p);
    double grand = 0.0, pooled_var = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
      const auto est = estimate_pauli(sample_pauli6(s, 2000, RngStream::keyed(5, {static_cast<std::uint64_t>(r)})), p);
      grand += est.value / reps;
      pooled_var += est.std_error * est.std_error / (reps * reps);
    }
    EXPECT_LT(std::abs(grand - exact), 5.0 * std::sqrt(pooled_var)) << label;
  }
}

TEST(EstimatePauli, VarianceScalesInverselyWithShots) {
  const StateVector s = StateVector::from_amplitudes(2, testing::random_state(2, 22));
  const PauliTerm p = PauliTerm::from_label(1.0, "XZ");
  std::vector<double> lx, ly;
  const int reps = 200;
  for (std::size_t m : {100u, 1000u, 10000u}) {
    std::vector<double> values;
    for (int r = 0; r < reps; ++r)
      values.push_back(estimate_pauli(sample_pauli6(s, m, RngStream::keyed(m, {static_cast<std::uint64_t>(r)})), p).value);
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / reps;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean) / (reps - 1);
    lx.push_back(std::log(static_cast<double>(m)));
    ly.push_back(std::log(var));
  }
  const double slope = ((ly[2] - ly[0]) / (lx[2] - lx[0]));
  EXPECT_NEAR(slope, -1.0, 0.1);
}

TEST(EstimatePauli, IgnoresColumnsOutsideSupport) {
  auto records = sample_pauli6(StateVector::from_amplitudes(3, testing::random_state(3, 23)), 500, RngStream(3));
  const PauliTerm p = PauliTerm::from_label(1.0, "ZIX");
  const double before = estimate_pauli(records, p).value;
  for (auto& r : records) {
    r.bases[1] = Basis::Y;
    r.bits[1] ^= 1;
  }
  EXPECT_EQ(estimate_pauli(records, p).value, before);
}

TEST(MedianOfMeans, Examples) {
  const std::vector<double> values{1.0, 2.0, 3.0, 4.0, 10.0};
  EXPECT_DOUBLE_EQ(median_of_means(values, 1), 4.0);
  EXPECT_DOUBLE_EQ(median_of_means(std::vector<double>(7, 2.5), 3), 2.5);
  // 5 values in 2 batches: {1,2,3} and {4,10}
  EXPECT_DOUBLE_EQ(median_of_means(values, 2), 0.5 * (2.0 + 7.0));
  EXPECT_THROW(median_of_means(std::vector<double>{}, 1), ValidationError);
  EXPECT_THROW(median_of_means(values, 6), ValidationError);
}

TEST(MedianOfMeans, RobustToOutlier) {
  std::vector<double> values(900, 1.0);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += (i % 2 ? 0.1 : -0.1);
  values[17] = 1e6;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  EXPECT_GT(mean, 1000.0);
  EXPECT_NEAR(median_of_means(values, 9), 1.0, 1e-3);
}

TEST(KrylovElements, ExactModeMatchesDirectOverlaps) {
  const auto inst = regenerate_instance(FamilySpec::with_defaults(Family::kHeis1d, 4), 5);
  const auto cfg = EvolutionConfig::for_hamiltonian(inst.pauli_sum);
  const auto shadow = exact_krylov_elements(inst.pauli_sum, 6, cfg);
  const auto direct = direct_krylov_elements(inst.pauli_sum, 6, cfg);
  for (int k = 0; k < 6; ++k) {
    EXPECT_LT(std::abs(shadow.s[k] - direct.s[k]), 1e-10);
    EXPECT_LT(std::abs(shadow.h[k] - direct.h[k]), 1e-10);
    EXPECT_EQ(shadow.s_re[k].n_snapshots, 1u);
  }
}

TEST(KrylovElements, SampledWithinStandardErrors) {
  const auto inst = regenerate_instance(FamilySpec::with_defaults(Family::kHeis1d, 4), 6);
  const auto cfg = EvolutionConfig::for_hamiltonian(inst.pauli_sum);
  const int d = 4;
  std::map<int, std::vector<ShotRecord>> records;
  for (int k = 0; k < d; ++k)
    records[k] = sample_pauli6(hadamard_test_state(inst.pauli_sum, k, cfg), 10000,
                               RngStream::keyed(9, {static_cast<std::uint64_t>(k)}));
  const auto est = estimate_krylov_elements(records, inst.pauli_sum, d);
  const auto exact = direct_krylov_elements(inst.pauli_sum, d, cfg);
  EXPECT_LT(std::abs(est.s[0].real() - 1.0), 5.0 * est.s_re[0].std_error);
  for (int k = 0; k < d; ++k) {
    EXPECT_LT(std::abs(est.s[k].real() - exact.s[k].real()), 5.0 * est.s_re[k].std_error) << k;
    EXPECT_LT(std::abs(est.s[k].imag() - exact.s[k].imag()), 5.0 * est.s_im[k].std_error) << k;
    EXPECT_LT(std::abs(est.h[k].real() - exact.h[k].real()), 5.0 * est.h_re[k].std_error) << k;
    EXPECT_LT(std::abs(est.h[k].imag() - exact.h[k].imag()), 5.0 * est.h_im[k].std_error) << k;
  }
}

TEST(KrylovElements, RejectsMissingStepOrWidth) {
  const auto inst = build_heisenberg_1d(2, {1.0});
  std::map<int, std::vector<ShotRecord>> records;
  records[0] = {record("XZZ", "000")};
  EXPECT_THROW(estimate_krylov_elements(records, inst.pauli_sum, 2), ValidationError);
  records[1] = {record("XZ", "00")};
  EXPECT_THROW(estimate_krylov_elements(records, inst.pauli_sum, 2), ValidationError);
}

TEST(SampleComplexity, RatioAndLogGrowth) {
  for (std::size_t l : {1u, 12u, 57u, 1000u})
    for (int k : {1, 2, 3}) EXPECT_EQ(sample_complexity(0.1, l, k), 100 * sample_complexity(1.0, l, k));
  // the log factor is ceil(2 ln(2L/delta)); doubling L adds 2 ln 2 < 2 to its argument
  for (std::size_t l = 1; l < 4096; l *= 2) {
    const auto a = sample_complexity(0.5, l, 2), b = sample_complexity(0.5, 2 * l, 2);
    const auto unit = sample_complexity(0.5, 1, 2) / static_cast<std::uint64_t>(std::ceil(2.0 * std::log(2.0 / 0.01)));
    EXPECT_GE(b, a);
    EXPECT_LE(b - a, 2 * unit);
  }
  EXPECT_EQ(sample_complexity(1.0, 1, 0, 0.5), 34u * 3u);  // ceil(2 ln 4) = 3
  EXPECT_THROW(sample_complexity(0.0, 1, 1), ValidationError);
  EXPECT_THROW(sample_complexity(0.1, 0, 1), ValidationError);
  EXPECT_THROW(sample_complexity(0.1, 1, 1, 1.0), ValidationError);
}

}  // namespace
}  // namespace genksr
