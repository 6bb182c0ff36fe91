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
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "genksr/hamiltonians.hpp"
#include "genksr/records.hpp"
#include "genksr/rng.hpp"

namespace genksr {

/// Alphabet 2 (computational bits) or 6 (Pauli-6: token = 2 * basis + bit).
/// Position q is qubit q; a Hadamard-test ancilla is the last position.
struct TokenScheme {
  int alphabet_size = 6;
  int sequence_length = 0;

  static TokenScheme computational(std::size_t n_qubits);
  static TokenScheme pauli6(std::size_t width);
  bool is_pauli6() const { return alphabet_size == 6; }
  std::string name() const { return is_pauli6() ? "pauli6" : "computational"; }
  void validate() const;
  bool operator==(const TokenScheme&) const = default;
};

using TokenSequence = std::vector<std::uint8_t>;

TokenSequence encode_record(const ShotRecord& record);
ShotRecord decode_record(std::span<const std::uint8_t> tokens);
TokenSequence encode_bits(Bitstring bits, std::size_t n_qubits);
Bitstring decode_bits(std::span<const std::uint8_t> tokens);

enum class Backbone : std::uint8_t { kAttention, kSsm };
std::string backbone_name(Backbone b);
Backbone parse_backbone(std::string_view name);

struct Architecture {
  Backbone backbone = Backbone::kAttention;
  int d_model = 64;
  int n_blocks = 4;
  int n_heads = 4;
  int state_size = 16;
  int gcn_depth = 2;
  int gcn_hidden = 64;
  int mlp_hidden = 256;
  /// The time embedder sees t_index / t_max_train.
  double t_max_train = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static Architecture from_json(const nlohmann::json& doc);
};

/// Node features: [1, degree, sum of incident weights, per-kind incident edge counts].
inline constexpr int kNodeFeatures = 3 + kNumInteractionKinds;

/// Input of the graph-convolution embedder.
struct GraphFeatures {
  /// D^-1/2 (A + I) D^-1/2 with A the edge-weighted adjacency.
  Eigen::MatrixXd adjacency;
  Eigen::MatrixXd features;

  static GraphFeatures from_graph(const InteractionGraph& graph);
};

struct Condition {
  GraphFeatures graph;
  double t_index = 0.0;
};

/// Learnable tensors in a fixed, architecture-determined order.
class ModelParams {
 public:
  ModelParams() = default;
  static ModelParams zeros(const Architecture& arch, const TokenScheme& scheme);
  /// Random initialization from arch.seed.
  static ModelParams initialize(const Architecture& arch, const TokenScheme& scheme);
  ModelParams zeros_like() const { return zeros(arch_, scheme_); }

  const Architecture& arch() const { return arch_; }
  const TokenScheme& scheme() const { return scheme_; }
  void set_t_max_train(double t_max);

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Eigen::MatrixXd& tensor(std::size_t i) { return tensors_[i]; }
  const Eigen::MatrixXd& tensor(std::size_t i) const { return tensors_[i]; }
  /// Index of a named tensor; throws when absent.
  std::size_t index_of(std::string_view name) const;
  std::size_t parameter_count() const;
  bool all_finite() const;

 private:
  Architecture arch_;
  TokenScheme scheme_;
  std::vector<std::string> names_;
  std::vector<Eigen::MatrixXd> tensors_;
};

/// Work counters for the cost contract: attention scores grow as L^2, SSM
/// state updates as L.
struct OpCounts {
  std::uint64_t attention_scores = 0;
  std::uint64_t ssm_updates = 0;
  std::uint64_t positions = 0;
};

/// c = g(x) + h(t): mean-pooled GCN node states plus the linear time embedding.
Eigen::VectorXd embed_condition(const Condition& condition, const ModelParams& params);
Eigen::VectorXd embed_condition(const HamiltonianInstance& x, int t_index, const ModelParams& params);

/// Probability rows for a prefix: row i is the distribution of token i given
/// tokens < i (row 0 sees only the begin-of-sequence symbol). Returns
/// min(len + 1, sequence_length) rows.
Eigen::MatrixXd forward(std::span<const std::uint8_t> prefix, const Eigen::VectorXd& context, const ModelParams& params,
                        OpCounts* counts = nullptr);

struct Example {
  TokenSequence tokens;
  std::size_t condition = 0;
};

struct LossStats {
  double nll = 0.0;
  /// Tokens whose probability fell below the 1e-30 log floor.
  std::size_t clamped = 0;
};

/// Mean over sequences of -sum_i log p(a_i | a_<i, c).
double nll(std::span<const Condition> conditions, std::span<const Example> batch, const ModelParams& params,
           LossStats* stats = nullptr);

/// Exact gradient of nll with respect to every tensor.
ModelParams gradients(std::span<const Condition> conditions, std::span<const Example> batch, const ModelParams& params,
                      LossStats* stats = nullptr);

/// Ancestral sampling; sequence i draws from rng.split(i).
std::vector<TokenSequence> sample(const Condition& condition, std::size_t n_samples, const ModelParams& params,
                                  const RngStream& rng);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  int max_epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  int early_stop_patience = 10;
  double holdout_fraction = 0.1;
  std::uint64_t master_seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

struct Dataset {
  TokenScheme scheme;
  std::vector<Condition> conditions;
  std::vector<Example> examples;
};

struct EpochStats {
  int epoch = 0;
  double train_nll = 0.0;
  double heldout_nll = 0.0;
};

/// Everything needed to continue training bit-exactly.
struct TrainState {
  ModelParams params;
  ModelParams best;
  ModelParams adam_m;
  ModelParams adam_v;
  std::uint64_t step = 0;
  int epoch = 0;
  double best_heldout = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  bool finished = false;
  std::vector<EpochStats> trace;

  static TrainState start(const ModelParams& init);
};

/// Runs epochs until max_epochs, early stop, or `epoch_limit` epochs have
/// been run in this call (negative for no limit). Throws NumericError on a
/// non-finite loss.
void train_epochs(TrainState& state, const Dataset& data, const TrainConfig& cfg, int epoch_limit = -1);

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> trace;
};

/// Fresh model trained to completion; returns the best held-out parameters.
TrainResult train(const Dataset& data, const TrainConfig& cfg, Architecture arch);

/// "GKSR", u32 version, u64 header length, JSON header, little-endian f64 payload.
void write_checkpoint(std::ostream& out, const TrainState& state, const nlohmann::json& metadata = nlohmann::json::object());
void write_checkpoint(const std::string& path, const TrainState& state, const nlohmann::json& metadata = nlohmann::json::object());

struct Checkpoint {
  TrainState state;
  nlohmann::json metadata;
};

Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace genksr
