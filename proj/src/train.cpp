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
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "genksr/errors.hpp"
#include "genksr/genmodel.hpp"

namespace genksr {

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must be in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
  require(grad_clip > 0.0, "grad_clip must be positive");
  require(early_stop_patience >= 1, "early_stop_patience must be >= 1");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, "holdout_fraction must be in [0, 1)");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["grad_clip"] = grad_clip;
  j["early_stop_patience"] = early_stop_patience;
  j["holdout_fraction"] = holdout_fraction;
  j["master_seed"] = master_seed;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.max_epochs = doc.value("max_epochs", c.max_epochs);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.adam_eps = doc.value("adam_eps", c.adam_eps);
    c.grad_clip = doc.value("grad_clip", c.grad_clip);
    c.early_stop_patience = doc.value("early_stop_patience", c.early_stop_patience);
    c.holdout_fraction = doc.value("holdout_fraction", c.holdout_fraction);
    c.master_seed = doc.value("master_seed", c.master_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainState TrainState::start(const ModelParams& init) {
  TrainState s;
  s.params = init;
  s.best = init;
  s.adam_m = init.zeros_like();
  s.adam_v = init.zeros_like();
  return s;
}

namespace {

void shuffle(std::vector<std::size_t>& v, RngStream rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

struct Split {
  std::vector<std::size_t> train, heldout;
};

Split split_examples(std::size_t n, const TrainConfig& cfg) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, RngStream::keyed(cfg.master_seed, {static_cast<std::uint64_t>(StreamPurpose::kSplit)}));
  auto n_held = static_cast<std::size_t>(std::ceil(cfg.holdout_fraction * static_cast<double>(n)));
  if (n_held >= n) n_held = n - 1;
  Split s;
  s.heldout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
  std::sort(s.heldout.begin(), s.heldout.end());
  return s;
}

std::vector<Example> gather(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.examples[i]);
  return out;
}

double mean_nll(const Dataset& data, const std::vector<std::size_t>& idx, const ModelParams& p, std::size_t chunk) {
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += chunk) {
    const std::size_t len = std::min(chunk, idx.size() - start);
    const auto batch = gather(data, std::span(idx).subspan(start, len));
    total += nll(data.conditions, batch, p) * static_cast<double>(len);
  }
  return total / static_cast<double>(idx.size());
}

void adam_step(TrainState& s, ModelParams& grad, const TrainConfig& cfg) {
  double norm2 = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) norm2 += grad.tensor(i).squaredNorm();
  const double norm = std::sqrt(norm2);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient");
  const double scale = norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;
  ++s.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const Eigen::MatrixXd g = grad.tensor(i) * scale;
    auto& m = s.adam_m.tensor(i);
    auto& v = s.adam_v.tensor(i);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    s.params.tensor(i).array() -=
        cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
  }
}

}  // namespace

void train_epochs(TrainState& state, const Dataset& data, const TrainConfig& cfg, int epoch_limit) {
  cfg.validate();
  require(data.examples.size() >= 2, "training needs at least two examples");
  require(state.params.scheme() == data.scheme, "model token scheme does not match the dataset");
  const Split split = split_examples(data.examples.size(), cfg);
  const auto& monitor = split.heldout.empty() ? split.train : split.heldout;
  int run = 0;
  while (!state.finished && (epoch_limit < 0 || run < epoch_limit)) {
    std::vector<std::size_t> order = split.train;
    shuffle(order, RngStream::keyed(cfg.master_seed, {static_cast<std::uint64_t>(StreamPurpose::kShuffle),
                                                      static_cast<std::uint64_t>(state.epoch)}));
    double train_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const auto batch = gather(data, std::span(order).subspan(start, len));
      LossStats stats;
      ModelParams grad = gradients(data.conditions, batch, state.params, &stats);
      if (!std::isfinite(stats.nll)) throw NumericError("non-finite training loss at epoch " + std::to_string(state.epoch));
      train_total += stats.nll * static_cast<double>(len);
      adam_step(state, grad, cfg);
    }
    if (!state.params.all_finite()) throw NumericError("parameters became non-finite");
    const double held = mean_nll(data, monitor, state.params, 1024);
    if (!std::isfinite(held)) throw NumericError("non-finite held-out loss at epoch " + std::to_string(state.epoch));
    state.trace.push_back({state.epoch, train_total / static_cast<double>(order.size()), held});
    if (held < state.best_heldout) {
      state.best_heldout = held;
      state.best = state.params;
      state.bad_epochs = 0;
    } else {
      ++state.bad_epochs;
    }
    ++state.epoch;
    ++run;
    if (state.bad_epochs >= cfg.early_stop_patience || state.epoch >= cfg.max_epochs) state.finished = true;
  }
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, Architecture arch) {
  double t_max = 0.0;
  for (const auto& c : data.conditions) t_max = std::max(t_max, c.t_index);
  arch.t_max_train = t_max > 0.0 ? t_max : 1.0;
  TrainState state = TrainState::start(ModelParams::initialize(arch, data.scheme));
  train_epochs(state, data, cfg);
  return {state.best, state.trace};
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[4] = {'G', 'K', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFFU));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ValidationError("checkpoint is truncated");
    bits |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

constexpr const char* kGroups[4] = {"params", "best", "adam_m", "adam_v"};

ModelParams* group_of(TrainState& s, int g) {
  switch (g) {
    case 0: return &s.params;
    case 1: return &s.best;
    case 2: return &s.adam_m;
    default: return &s.adam_v;
  }
}

const ModelParams* group_of(const TrainState& s, int g) { return group_of(const_cast<TrainState&>(s), g); }

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_checkpoint(std::ostream& out, const TrainState& state, const nlohmann::json& metadata) {
  const ModelParams& p = state.params;
  nlohmann::ordered_json header;
  header["format"] = "genksr-checkpoint";
  header["architecture"] = p.arch().to_json();
  header["token_scheme"] = {{"alphabet_size", p.scheme().alphabet_size},
                            {"sequence_length", p.scheme().sequence_length},
                            {"name", p.scheme().name()}};
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& e : state.trace)
    trace.push_back({{"epoch", e.epoch}, {"train_nll", e.train_nll}, {"heldout_nll", e.heldout_nll}});
  header["training"] = {{"step", state.step},
                        {"epoch", state.epoch},
                        {"best_heldout", finite_or_null(state.best_heldout)},
                        {"bad_epochs", state.bad_epochs},
                        {"finished", state.finished},
                        {"trace", trace}};
  header["metadata"] = metadata;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (int g = 0; g < 4; ++g) {
    const ModelParams& mp = *group_of(state, g);
    require(mp.size() == p.size(), "checkpoint groups have different layouts");
    for (std::size_t i = 0; i < mp.size(); ++i)
      tensors.push_back({{"group", kGroups[g]},
                         {"name", mp.name(i)},
                         {"rows", mp.tensor(i).rows()},
                         {"cols", mp.tensor(i).cols()}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();
  out.write(kMagic, 4);
  put_le(out, kVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (int g = 0; g < 4; ++g) {
    const ModelParams& mp = *group_of(state, g);
    for (std::size_t i = 0; i < mp.size(); ++i) {
      const auto& t = mp.tensor(i);
      for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c) put_le(out, t(r, c));
    }
  }
  if (!out) throw ValidationError("failed to write checkpoint");
}

void write_checkpoint(const std::string& path, const TrainState& state, const nlohmann::json& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  write_checkpoint(out, state, metadata);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) throw ValidationError("not a checkpoint file");
  if (get_le<std::uint32_t>(in) != kVersion) throw ValidationError("unsupported checkpoint version");
  const auto len = get_le<std::uint64_t>(in);
  require(len < (1ULL << 32), "checkpoint header is too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw ValidationError("checkpoint is truncated");
  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format") != "genksr-checkpoint") throw ValidationError("unknown checkpoint format");
    const Architecture arch = Architecture::from_json(header.at("architecture"));
    TokenScheme scheme{header.at("token_scheme").at("alphabet_size").get<int>(),
                       header.at("token_scheme").at("sequence_length").get<int>()};
    scheme.validate();
    const auto& tr = header.at("training");
    TrainState& s = ck.state;
    for (int g = 0; g < 4; ++g) *group_of(s, g) = ModelParams::zeros(arch, scheme);
    s.step = tr.at("step").get<std::uint64_t>();
    s.epoch = tr.at("epoch").get<int>();
    s.best_heldout = tr.at("best_heldout").is_null() ? std::numeric_limits<double>::infinity()
                                                     : tr.at("best_heldout").get<double>();
    s.bad_epochs = tr.at("bad_epochs").get<int>();
    s.finished = tr.at("finished").get<bool>();
    for (const auto& e : tr.at("trace"))
      s.trace.push_back({e.at("epoch").get<int>(), e.at("train_nll").get<double>(), e.at("heldout_nll").get<double>()});
    ck.metadata = header.value("metadata", nlohmann::json::object());
    const auto& tensors = header.at("tensors");
    const std::size_t per_group = s.params.size();
    if (tensors.size() != 4 * per_group) throw ValidationError("checkpoint tensor list does not match the architecture");
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const int g = static_cast<int>(k / per_group);
      const std::size_t i = k % per_group;
      ModelParams& mp = *group_of(s, g);
      const auto& spec = tensors[k];
      if (spec.at("group") != kGroups[g] || spec.at("name") != mp.name(i) ||
          spec.at("rows").get<Eigen::Index>() != mp.tensor(i).rows() ||
          spec.at("cols").get<Eigen::Index>() != mp.tensor(i).cols())
        throw ValidationError("checkpoint tensor '" + mp.name(i) + "' does not match the architecture");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint header: ") + e.what());
  }
  for (int g = 0; g < 4; ++g) {
    ModelParams& mp = *group_of(ck.state, g);
    for (std::size_t i = 0; i < mp.size(); ++i) {
      auto& t = mp.tensor(i);
      for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = get_le<double>(in);
    }
  }
  return ck;
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace genksr
