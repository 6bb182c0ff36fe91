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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "genksr/errors.hpp"
#include "genksr/hamiltonians.hpp"
#include "genksr/kqd.hpp"
#include "genksr/pipeline.hpp"
#include "genksr/shadows.hpp"
#include "genksr/simulator.hpp"
#include "genksr/skqd.hpp"

namespace py = pybind11;
using namespace genksr;

namespace {

std::vector<std::pair<double, std::string>> terms_of(const HamiltonianInstance& inst) {
  std::vector<std::pair<double, std::string>> out;
  for (const auto& t : inst.pauli_sum.terms()) out.emplace_back(t.coefficient, t.label());
  return out;
}

ExperimentConfig config_from(const std::string& json_text) {
  try {
    return ExperimentConfig::from_json(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::vector<double> energies(const std::vector<KqdPoint>& curve) {
  std::vector<double> out;
  for (const auto& p : curve) out.push_back(p.energy);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Krylov diagonalization simulators, classical shadows and the conditional generative model";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  py::class_<HamiltonianInstance>(m, "Instance")
      .def_property_readonly("family", [](const HamiltonianInstance& x) { return family_name(x.family); })
      .def_property_readonly("n_qubits", &HamiltonianInstance::n_qubits)
      .def_readonly("params", &HamiltonianInstance::params)
      .def_readonly("seed", &HamiltonianInstance::seed)
      .def_property_readonly("terms", &terms_of)
      .def_property_readonly("norm_bound", [](const HamiltonianInstance& x) { return x.pauli_sum.norm_bound(); })
      .def("to_json", [](const HamiltonianInstance& x) { return instance_to_json(x).dump(); })
      .def("__repr__", [](const HamiltonianInstance& x) {
        return "<Instance " + family_name(x.family) + " n=" + std::to_string(x.n_qubits()) + ">";
      });

  m.def("build_heisenberg_1d", &build_heisenberg_1d, py::arg("n"), py::arg("weights"));
  m.def("build_j1j2_2d", &build_j1j2_2d, py::arg("side"), py::arg("j1"), py::arg("j2"));
  m.def("build_xxz_chain", &build_xxz_chain, py::arg("n"), py::arg("j_xy"), py::arg("periodic") = true);
  m.def("instance_from_json", [](const std::string& text) { return instance_from_json(nlohmann::json::parse(text)); });
  m.def(
      "sample_instances",
      [](const std::string& family, std::size_t n_qubits, std::size_t count, std::uint64_t seed) {
        return sample_instances(FamilySpec::with_defaults(parse_family(family), n_qubits), count, seed);
      },
      py::arg("family"), py::arg("n_qubits"), py::arg("count"), py::arg("seed") = 0);

  m.def(
      "ground_state",
      [](const HamiltonianInstance& x) {
        const GroundState g = exact_ground_energy(x.pauli_sum);
        return std::make_pair(g.energy, g.overlap_sq);
      },
      py::arg("instance"), "(E0, squared Neel overlap with the ground space)");

  m.def(
      "kqd_exact_curve",
      [](const HamiltonianInstance& x, int d_max, double eps_cut, bool exact_propagator) {
        EvolutionConfig cfg = EvolutionConfig::for_hamiltonian(x.pauli_sum);
        if (exact_propagator) cfg.propagator = Propagator::kExact;
        return energies(
            kqd_energy_curve(direct_krylov_elements(x.pauli_sum, d_max, cfg), d_max, {eps_cut, ThresholdMode::kExact}));
      },
      py::arg("instance"), py::arg("d_max"), py::arg("eps_cut") = 1e-12, py::arg("exact_propagator") = false,
      "E(D) for D = 1 .. d_max from noise-free Krylov elements");

  m.def(
      "kqd_shadow_curve",
      [](const HamiltonianInstance& x, int d_max, std::size_t shots, std::uint64_t seed, double eps_cut) {
        const EvolutionConfig cfg = EvolutionConfig::for_hamiltonian(x.pauli_sum);
        std::map<int, std::vector<ShotRecord>> records;
        for (int k = 0; k < d_max; ++k)
          records[k] = sample_pauli6(hadamard_test_state(x.pauli_sum, k, cfg), shots,
                                     RngStream::keyed(seed, {static_cast<std::uint64_t>(StreamPurpose::kPauliShots),
                                                             static_cast<std::uint64_t>(k)}));
        return energies(kqd_energy_curve(estimate_krylov_elements(records, x.pauli_sum, d_max),
                                         d_max, {eps_cut, ThresholdMode::kSampled}));
      },
      py::arg("instance"), py::arg("d_max"), py::arg("shots"), py::arg("seed") = 0, py::arg("eps_cut") = 1e-1,
      "E(D) from Hadamard-test shots estimated with classical shadows");

  m.def(
      "skqd_curve",
      [](const HamiltonianInstance& x, int d_max, std::size_t shots, std::uint64_t seed) {
        const EvolutionConfig cfg = EvolutionConfig::for_hamiltonian(x.pauli_sum);
        std::map<int, std::vector<Bitstring>> samples;
        StateVector psi = neel_state(x.n_qubits());
        for (int k = 0; k < d_max; ++k) {
          if (k > 0) psi = trotter_evolve(psi, x.pauli_sum, 1, cfg);
          samples[k] = sample_computational(psi, shots,
                                            RngStream::keyed(seed, {static_cast<std::uint64_t>(StreamPurpose::kComputationalShots),
                                                                    static_cast<std::uint64_t>(k)}));
        }
        std::vector<std::pair<double, std::size_t>> out;
        for (const auto& p : skqd_energy_curve(x.pauli_sum, samples, d_max, true)) out.emplace_back(p.energy, p.basis_size);
        return out;
      },
      py::arg("instance"), py::arg("d_max"), py::arg("shots"), py::arg("seed") = 0,
      "(E(D), subspace dimension) for D = 1 .. d_max from sampled bitstrings");

  m.def("sample_complexity", &sample_complexity, py::arg("eps"), py::arg("n_observables"), py::arg("k_max"),
        py::arg("delta") = 0.01);

  m.def("default_config", [] { return ExperimentConfig{}.to_json().dump(); }, "default experiment config as JSON text");
  m.def("gen_data", [](const std::string& cfg) { cmd_gen_data(config_from(cfg)); }, py::arg("config_json"));
  m.def(
      "train",
      [](const std::string& cfg, bool resume) {
        std::vector<std::tuple<int, double, double>> out;
        for (const auto& e : cmd_train(config_from(cfg), resume).trace) out.emplace_back(e.epoch, e.train_nll, e.heldout_nll);
        return out;
      },
      py::arg("config_json"), py::arg("resume") = false, "returns [(epoch, train_nll, heldout_nll)]");
  m.def("generate", [](const std::string& cfg) { cmd_generate(config_from(cfg)); }, py::arg("config_json"));
  m.def(
      "evaluate",
      [](const std::string& cfg) {
        std::map<std::string, double> out;
        for (const auto& s : cmd_eval(config_from(cfg)).summaries) out[s.source] = s.rmse;
        return out;
      },
      py::arg("config_json"), "RMSE per source against the reference curves");
  m.def("report", [](const std::string& cfg) { return cmd_report(config_from(cfg)); }, py::arg("config_json"));
}
