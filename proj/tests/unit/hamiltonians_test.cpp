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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "genksr/errors.hpp"
#include "genksr/hamiltonians.hpp"
#include "genksr/rng.hpp"
#include "test_support.hpp"

namespace genksr {
namespace {

using testing::kron_hamiltonian;

TEST(PauliTerm, LabelRoundTripAndSupport) {
  const PauliTerm t = PauliTerm::from_label(0.5, "XIZY");
  EXPECT_EQ(t.label(), "XIZY");
  EXPECT_EQ(t.support(), (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_FALSE(t.is_identity());
  EXPECT_TRUE(PauliTerm::from_label(1.0, "III").is_identity());
  EXPECT_THROW(PauliTerm::from_label(1.0, "XQ"), ValidationError);
}

TEST(PauliTerm, MaskActionMatchesKronecker) {
  for (const char* label : {"XYZ", "YYI", "ZIZ", "IXY", "YZX"}) {
    const PauliTerm t = PauliTerm::from_label(1.0, label);
    const Eigen::MatrixXcd m = testing::kron_term(t);
    const PauliMasks masks = t.masks();
    for (Bitstring a = 0; a < 8; ++a) {
      const PauliAction act = masks.apply(a);
      for (Bitstring b = 0; b < 8; ++b) {
        const Complex expected = b == act.target ? act.phase : Complex(0.0);
        EXPECT_NEAR(std::abs(m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) - expected), 0.0, 1e-15)
            << label << " a=" << a << " b=" << b;
      }
    }
  }
}

TEST(PauliSum, DenseMatrixMatchesKronecker) {
  const auto inst = build_xxz_chain(4, 0.3, true);
  EXPECT_LT((inst.pauli_sum.dense_matrix() - kron_hamiltonian(inst.pauli_sum)).norm(), 1e-14);
}

TEST(InteractionGraph, RejectsDuplicatesAndSelfLoops) {
  InteractionGraph g(3);
  EXPECT_TRUE(g.add_edge(0, 1, 1.0, InteractionKind::kHeisenberg));
  EXPECT_FALSE(g.add_edge(1, 0, 2.0, InteractionKind::kHeisenberg));
  EXPECT_TRUE(g.add_edge(1, 0, 2.0, InteractionKind::kJ2));
  EXPECT_THROW(g.add_edge(1, 1, 1.0, InteractionKind::kJ1), ValidationError);
  EXPECT_THROW(g.add_edge(0, 3, 1.0, InteractionKind::kJ1), ValidationError);
  EXPECT_EQ(g.edges().size(), 2u);
}

TEST(Heisenberg1d, TwoSiteGroundEnergy) {
  const auto inst = build_heisenberg_1d(2, {1.0});
  ASSERT_EQ(inst.pauli_sum.terms().size(), 3u);
  EXPECT_EQ(inst.pauli_sum.terms()[0].label(), "XX");
  EXPECT_EQ(inst.pauli_sum.terms()[1].label(), "YY");
  EXPECT_EQ(inst.pauli_sum.terms()[2].label(), "ZZ");
  for (const auto& t : inst.pauli_sum.terms()) EXPECT_EQ(t.coefficient, 1.0);
  EXPECT_NEAR(testing::dense_ground(inst.pauli_sum), -3.0, 1e-12);
  ASSERT_EQ(inst.graph().edges().size(), 1u);
  EXPECT_EQ(inst.graph().edges()[0].kind, InteractionKind::kHeisenberg);
}

TEST(Heisenberg1d, ZeroCouplingIsZeroOperator) {
  const auto inst = build_heisenberg_1d(2, {0.0});
  EXPECT_LT(kron_hamiltonian(inst.pauli_sum).norm(), 1e-15);
}

TEST(Heisenberg1d, SeededInstanceNormBound) {
  const auto inst = regenerate_instance(FamilySpec::with_defaults(Family::kHeis1d, 5), 7);
  EXPECT_EQ(inst.pauli_sum.terms().size(), 12u);
  RngStream rng = RngStream::keyed(7, {static_cast<std::uint64_t>(StreamPurpose::kInstances)});
  double sum = 0.0;
  for (int e = 0; e < 4; ++e) {
    const double w = rng.uniform(0.0, 2.0);
    EXPECT_DOUBLE_EQ(inst.params[e], w);
    sum += w;
  }
  EXPECT_NEAR(inst.pauli_sum.norm_bound(), 3.0 * sum, 1e-12);
}

TEST(Heisenberg1d, RejectsBadInput) {
  EXPECT_THROW(build_heisenberg_1d(1, {}), ValidationError);
  EXPECT_THROW(build_heisenberg_1d(4, {1.0, 1.0}), ValidationError);
}

TEST(J1J2, FourByFourCounts) {
  const auto inst = build_j1j2_2d(4, 1.0, 0.0);
  int j1 = 0, j2 = 0;
  for (const auto& e : inst.graph().edges()) (e.kind == InteractionKind::kJ1 ? j1 : j2)++;
  EXPECT_EQ(j1, 32);
  EXPECT_EQ(j2, 32);
  int nonzero = 0;
  for (const auto& t : inst.pauli_sum.terms())
    if (t.coefficient != 0.0) {
      ++nonzero;
      EXPECT_EQ(t.coefficient, 0.25);
    }
  EXPECT_EQ(nonzero, 96);
}

TEST(J1J2, TwoByTwoIsDeduplicated) {
  const auto inst = build_j1j2_2d(2, 1.0, 0.5);
  std::set<std::tuple<std::size_t, std::size_t, InteractionKind>> seen;
  for (const auto& e : inst.graph().edges()) {
    EXPECT_NE(e.i, e.j);
    EXPECT_TRUE(seen.insert({std::min(e.i, e.j), std::max(e.i, e.j), e.kind}).second);
  }
  EXPECT_EQ(seen.size(), 6u);  // 4 nearest-neighbour pairs, 2 diagonals
  EXPECT_THROW(build_j1j2_2d(1, 1.0, 0.0), ValidationError);
}

TEST(J1J2, SingleBondCarriesQuarterCoupling) {
  // one J1 bond between spins 1/2 is J S.S with spectrum {J/4 x3, -3J/4}
  const auto inst = build_j1j2_2d(2, 1.0, 0.0);
  PauliSum bond(4);
  for (int p = 0; p < 3; ++p) bond.add_term(inst.pauli_sum.terms()[p]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kron_hamiltonian(bond));
  EXPECT_NEAR(es.eigenvalues()(0), -0.75, 1e-12);
  EXPECT_NEAR(es.eigenvalues()(15), 0.25, 1e-12);
}

TEST(Xxz, TwoSiteDiagonal) {
  const auto inst = build_xxz_chain(2, 0.0, false);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kron_hamiltonian(inst.pauli_sum));
  EXPECT_NEAR(es.eigenvalues()(0), -1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(3), 1.0, 1e-14);
  EXPECT_LT((kron_hamiltonian(inst.pauli_sum) - testing::kron_term(PauliTerm::from_label(1.0, "ZZ"))).norm(), 1e-14);
}

TEST(Xxz, PeriodicFourSiteTerms) {
  const auto inst = build_xxz_chain(4, 1.0, true);
  EXPECT_EQ(inst.pauli_sum.terms().size(), 12u);
  EXPECT_DOUBLE_EQ(inst.pauli_sum.norm_bound(), 12.0);
  EXPECT_THROW(build_xxz_chain(1, 1.0, true), ValidationError);
}

TEST(Xxz, EightSiteGroundEnergyFromDense) {
  // independent construction of the same operator from 2x2 Pauli matrices
  const std::size_t n = 8;
  PauliSum ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    ref.add_term(PauliTerm::two_body(n, i, Pauli::X, j, Pauli::X, 0.5));
    ref.add_term(PauliTerm::two_body(n, i, Pauli::Y, j, Pauli::Y, 0.5));
    ref.add_term(PauliTerm::two_body(n, i, Pauli::Z, j, Pauli::Z, 1.0));
  }
  const auto inst = build_xxz_chain(n, 0.5, true);
  EXPECT_NEAR(testing::dense_ground(inst.pauli_sum), testing::dense_ground(ref), 1e-10);
}

TEST(SampleInstances, DeterministicAndInRange) {
  const auto spec = FamilySpec::with_defaults(Family::kHeis1d, 5);
  const auto a = sample_instances(spec, 50, 0);
  const auto b = sample_instances(spec, 50, 0);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].params, b[i].params);
    for (double w : a[i].params) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 2.0);
    }
  }
  EXPECT_NE(a[0].params, a[1].params);

  for (const auto& inst : sample_instances(FamilySpec::with_defaults(Family::kJ1J2, 16), 50, 1)) {
    ASSERT_EQ(inst.params.size(), 2u);
    EXPECT_EQ(inst.params[0], 1.0);
    EXPECT_GE(inst.params[1], 0.0);
    EXPECT_LE(inst.params[1], 1.0);
  }

  const auto xxz = sample_instances(FamilySpec::with_defaults(Family::kXxzChain, 20), 100, 2);
  double mean = 0.0;
  for (const auto& inst : xxz) mean += inst.params[0];
  mean /= 100.0;
  EXPECT_GE(mean, 0.4);
  EXPECT_LE(mean, 0.6);
  EXPECT_THROW(sample_instances(FamilySpec::with_defaults(Family::kXxzChain, 4), 0, 0), ValidationError);
  EXPECT_THROW(parse_family("kagome"), ValidationError);
}

TEST(SampleInstances, ParamsRegenerateFromSeed) {
  const auto spec = FamilySpec::with_defaults(Family::kXxzChain, 6);
  for (const auto& inst : sample_instances(spec, 5, 3)) {
    const auto again = regenerate_instance(spec, inst.seed);
    EXPECT_EQ(again.params, inst.params);
    EXPECT_LT((kron_hamiltonian(again.pauli_sum) - kron_hamiltonian(inst.pauli_sum)).norm(), 1e-15);
  }
}

TEST(InstanceJson, RoundTripAndKeyOrder) {
  const auto inst = regenerate_instance(FamilySpec::with_defaults(Family::kHeis1d, 4), 11);
  const auto doc = instance_to_json(inst);
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"family", "n_qubits", "seed", "params", "edges"}));
  EXPECT_EQ(doc["edges"][0][3], "heis");
  const auto back = instance_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(back.params, inst.params);
  EXPECT_EQ(back.seed, inst.seed);
  ASSERT_EQ(back.pauli_sum.terms().size(), inst.pauli_sum.terms().size());
  for (std::size_t p = 0; p < back.pauli_sum.terms().size(); ++p) {
    EXPECT_EQ(back.pauli_sum.terms()[p].label(), inst.pauli_sum.terms()[p].label());
    EXPECT_EQ(back.pauli_sum.terms()[p].coefficient, inst.pauli_sum.terms()[p].coefficient);
  }
  EXPECT_THROW(instance_from_json(nlohmann::json::parse(R"({"family":"heis1d"})")), ValidationError);
}

std::vector<HamiltonianInstance> property_instances() {
  std::vector<HamiltonianInstance> out;
  for (std::uint64_t s = 0; s < 3; ++s) {
    out.push_back(regenerate_instance(FamilySpec::with_defaults(Family::kHeis1d, 6), s));
    out.push_back(regenerate_instance(FamilySpec::with_defaults(Family::kXxzChain, 7), s));
    out.push_back(regenerate_instance(FamilySpec::with_defaults(Family::kJ1J2, 4), s));
  }
  out.push_back(build_j1j2_2d(3, 1.0, 0.7));
  return out;
}

TEST(HamiltonianProperties, HermitianAndNormBounded) {
  for (const auto& inst : property_instances()) {
    const Eigen::MatrixXcd m = kron_hamiltonian(inst.pauli_sum);
    EXPECT_EQ((m - m.adjoint()).norm(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    const double largest = es.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_GE(inst.pauli_sum.norm_bound(), largest - 1e-12);
  }
}

TEST(HamiltonianProperties, ConserveTotalMagnetization) {
  for (const auto& inst : property_instances()) {
    if (inst.n_qubits() > 8) continue;
    const Eigen::MatrixXcd m = kron_hamiltonian(inst.pauli_sum);
    const Eigen::MatrixXcd z = testing::total_z(inst.n_qubits());
    EXPECT_LT((m * z - z * m).norm(), 1e-12);
  }
}

TEST(HamiltonianProperties, RelabelingPermutesTermsAndGraph) {
  const auto inst = regenerate_instance(FamilySpec::with_defaults(Family::kHeis1d, 5), 4);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const PauliSum moved = relabel(inst.pauli_sum, perm);
  for (std::size_t p = 0; p < moved.terms().size(); ++p)
    for (std::size_t q = 0; q < 5; ++q) EXPECT_EQ(moved.terms()[p].axes[perm[q]], inst.pauli_sum.terms()[p].axes[q]);
  for (std::size_t e = 0; e < moved.graph().edges().size(); ++e) {
    const Edge& a = inst.graph().edges()[e];
    const Edge& b = moved.graph().edges()[e];
    EXPECT_EQ(b.i, perm[a.i]);
    EXPECT_EQ(b.j, perm[a.j]);
    EXPECT_EQ(b.weight, a.weight);
  }
  // spectrum is invariant under relabeling
  EXPECT_NEAR(testing::dense_ground(moved), testing::dense_ground(inst.pauli_sum), 1e-10);
  // graph-derived terms agree with the relabeled terms
  const PauliSum rebuilt = pauli_sum_from_graph(moved.graph());
  EXPECT_LT((kron_hamiltonian(rebuilt) - kron_hamiltonian(moved)).norm(), 1e-12);
}

}  // namespace
}  // namespace genksr
