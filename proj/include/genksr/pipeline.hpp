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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genksr/dataset.hpp"
#include "genksr/genmodel.hpp"
#include "genksr/hamiltonians.hpp"
#include "genksr/kqd.hpp"
#include "genksr/shadows.hpp"
#include "genksr/simulator.hpp"
#include "genksr/skqd.hpp"

namespace genksr {

enum class PipelineMode : std::uint8_t { kKqd, kSkqd };
std::string pipeline_mode_name(PipelineMode m);
PipelineMode parse_pipeline_mode(std::string_view name);

/// A whole experiment. Instances 0 .. n_train - 1 train the model, the rest
/// are held out for evaluation. model.seed and training.master_seed always
/// follow `seed`.
struct ExperimentConfig {
  FamilySpec family = FamilySpec::with_defaults(Family::kHeis1d, 5);
  std::size_t n_train = 30;
  std::size_t n_test = 20;
  std::uint64_t seed = 0;
  PipelineMode mode = PipelineMode::kKqd;
  std::size_t shots = 1000;
  int d_train = 5;
  int d_eval = 15;
  /// 0 selects pi / norm_bound(H) per instance.
  double dt = 0.0;
  int trotter_steps = 6;
  int trotter_order = 2;
  Architecture model;
  TrainConfig training;
  double eps_cut_exact = 1e-12;
  double eps_cut_sampled = 1e-1;
  bool sz_filter = false;
  /// Samples per (instance, t_index) drawn from the model; 0 means `shots`.
  std::size_t generate_samples = 0;
  /// Largest generated t_index; -1 means d_eval - 1.
  int generate_t_max = -1;
  /// Energy-curve sources for eval; empty selects the mode's defaults.
  std::vector<std::string> sources;
  EstimatorConfig estimator;
  std::string out_dir = "run";
  int threads = 1;

  void validate() const;
  /// Every field, defaults included.
  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::string& path);

  std::size_t n_instances() const { return n_train + n_test; }
  RecordMode record_mode() const { return mode == PipelineMode::kKqd ? RecordMode::kPauli6 : RecordMode::kComputational; }
  std::size_t samples_per_condition() const { return generate_samples ? generate_samples : shots; }
  int t_max() const { return generate_t_max >= 0 ? generate_t_max : d_eval - 1; }
  std::vector<std::string> eval_sources() const;
  /// Source whose curve is the RMSE reference: exact_sim (kqd) or device_sim (skqd).
  std::string reference_source() const;
};

/// Runs fn(0) .. fn(n - 1) on up to `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// --threads default: GENKSR_THREADS when set, else 1.
int default_threads();

std::vector<HamiltonianInstance> experiment_instances(const ExperimentConfig& cfg);
EvolutionConfig evolution_for(const ExperimentConfig& cfg, const PauliSum& h);

/// Shots of the simulated device for instances [first, last) and k < d.
ShotDataset simulate_shots(const ExperimentConfig& cfg, const std::vector<HamiltonianInstance>& instances,
                           std::size_t first, std::size_t last, int d);

/// Training set with one condition per (ham_id, t_index).
Dataset training_set(const ShotDataset& shots, const std::vector<HamiltonianInstance>& instances);

/// Model samples for each listed instance and t_index 0 .. t_max.
ShotDataset generate_shots(const ModelParams& params, const std::vector<HamiltonianInstance>& instances,
                           const std::vector<std::size_t>& ham_ids, int t_max, std::size_t n_samples,
                           std::uint64_t seed, std::uint64_t dataset_seed);

struct CurvePoint {
  std::size_t ham_id = 0;
  int d = 0;
  double energy = 0.0;
  /// Kept overlap rank (kqd) or subspace dimension (skqd).
  std::size_t dim = 0;
};
using EnergyCurves = std::vector<CurvePoint>;

/// Noise-free Krylov curves from simulated states (kqd mode only).
EnergyCurves exact_sim_curves(const ExperimentConfig& cfg, const std::vector<HamiltonianInstance>& instances,
                              const std::vector<std::size_t>& ham_ids);
/// Curves from shot data: shadow estimates (kqd) or sampled subspaces (skqd).
EnergyCurves sampled_curves(const ExperimentConfig& cfg, const std::vector<HamiltonianInstance>& instances,
                            const ShotDataset& shots, const std::vector<std::size_t>& ham_ids);

/// sqrt(mean over shared (ham_id, d) of (a - b)^2); throws when a reference
/// point is missing from `curves`.
double rmse(const EnergyCurves& curves, const EnergyCurves& reference);

/// Box-plot numbers with Tukey whiskers (furthest points within 1.5 IQR).
struct Quantiles {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, whisker_low = 0, whisker_high = 0;
  std::size_t count = 0;
};
/// Linear-interpolation quantiles of a nonempty sample.
Quantiles quantiles(std::vector<double> values);

/// Shortest round-trip decimal form, used for every CSV number.
std::string format_number(double v);

std::string curves_csv(const EnergyCurves& curves);
EnergyCurves parse_curves_csv(const std::string& text);

struct SourceSummary {
  std::string source;
  double rmse = 0.0;
  /// |E(d_eval) - E0| per evaluated instance.
  std::vector<double> delta_e;
};

struct EvalResult {
  std::map<std::string, EnergyCurves> curves;
  std::map<std::size_t, GroundState> ground;
  std::vector<SourceSummary> summaries;
};

// ---- commands; each reads and writes files under cfg.out_dir

/// config.json (frozen), instances.json, train.jsonl, test.jsonl.
void cmd_gen_data(const ExperimentConfig& cfg);
/// model.gksr (full training state, rewritten every epoch) and loss_trace.csv.
/// With `resume`, continues from an existing model.gksr.
TrainState cmd_train(const ExperimentConfig& cfg, bool resume = false);
/// generated.jsonl from model.gksr for the test instances (or `ham_ids`);
/// `n_samples` overrides the config, and zero yields a header-only file.
void cmd_generate(const ExperimentConfig& cfg, const std::vector<std::size_t>& ham_ids = {},
                  std::optional<std::size_t> n_samples = std::nullopt);
/// curves_<source>.csv, ground.csv, summary.csv, quantiles.csv.
EvalResult cmd_eval(const ExperimentConfig& cfg);
/// report.md from the eval outputs; returns its text.
std::string cmd_report(const ExperimentConfig& cfg);

struct ComplexityRow {
  double eps = 0.0;
  std::size_t n_qubits = 0;
  std::size_t n_observables = 0;
  std::uint64_t shadow_size = 0;
};
/// One row per (eps, n); L(n) is the term count of the family at size n.
std::vector<ComplexityRow> complexity_table(Family family, const std::vector<double>& eps,
                                            const std::vector<std::size_t>& sizes, int k_max, double delta);
std::string complexity_csv(const std::vector<ComplexityRow>& rows);

}  // namespace genksr
