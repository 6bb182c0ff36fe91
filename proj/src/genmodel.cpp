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


#include "genksr/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "genksr/errors.hpp"

namespace genksr {

// ---------------------------------------------------------------- tokens

TokenScheme TokenScheme::computational(std::size_t n_qubits) { return {2, static_cast<int>(n_qubits)}; }
TokenScheme TokenScheme::pauli6(std::size_t width) { return {6, static_cast<int>(width)}; }

void TokenScheme::validate() const {
  require(alphabet_size == 2 || alphabet_size == 6, "alphabet size must be 2 or 6");
  require(sequence_length >= 1 && sequence_length <= 64, "sequence length must be in [1, 64]");
}

TokenSequence encode_record(const ShotRecord& record) {
  require(record.bases.size() == record.bits.size(), "record bases and bits differ in length");
  TokenSequence out(record.width());
  for (std::size_t q = 0; q < out.size(); ++q) {
    require(record.bits[q] <= 1, "bits must be 0 or 1");
    out[q] = static_cast<std::uint8_t>(2 * static_cast<int>(record.bases[q]) + record.bits[q]);
  }
  return out;
}

ShotRecord decode_record(std::span<const std::uint8_t> tokens) {
  ShotRecord out;
  out.bases.reserve(tokens.size());
  out.bits.reserve(tokens.size());
  for (std::uint8_t t : tokens) {
    require(t < 6, "Pauli-6 token out of range");
    out.bases.push_back(static_cast<Basis>(t / 2));
    out.bits.push_back(static_cast<std::uint8_t>(t % 2));
  }
  return out;
}

TokenSequence encode_bits(Bitstring bits, std::size_t n_qubits) {
  require(n_qubits <= 64, "too many qubits");
  TokenSequence out(n_qubits);
  for (std::size_t q = 0; q < n_qubits; ++q) out[q] = static_cast<std::uint8_t>((bits >> q) & 1U);
  return out;
}

Bitstring decode_bits(std::span<const std::uint8_t> tokens) {
  Bitstring out = 0;
  for (std::size_t q = 0; q < tokens.size(); ++q) {
    require(tokens[q] < 2, "computational token out of range");
    out |= static_cast<Bitstring>(tokens[q]) << q;
  }
  return out;
}

std::string backbone_name(Backbone b) { return b == Backbone::kAttention ? "attention" : "ssm"; }

Backbone parse_backbone(std::string_view name) {
  if (name == "attention" || name == "transformer") return Backbone::kAttention;
  if (name == "ssm" || name == "mamba") return Backbone::kSsm;
  throw ValidationError("unknown backbone '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- architecture

void Architecture::validate() const {
  require(d_model >= 2 && d_model % 2 == 0, "d_model must be even and >= 2");
  require(n_blocks >= 0, "n_blocks must be >= 0");
  require(n_heads >= 1 && d_model % n_heads == 0, "n_heads must divide d_model");
  require(state_size >= 1, "state_size must be >= 1");
  require(gcn_depth >= 1, "gcn_depth must be >= 1");
  require(gcn_hidden >= 1, "gcn_hidden must be >= 1");
  require(mlp_hidden >= 1, "mlp_hidden must be >= 1");
  require(t_max_train > 0.0 && std::isfinite(t_max_train), "t_max_train must be positive");
}

nlohmann::ordered_json Architecture::to_json() const {
  nlohmann::ordered_json j;
  j["backbone"] = backbone_name(backbone);
  j["d_model"] = d_model;
  j["n_blocks"] = n_blocks;
  j["n_heads"] = n_heads;
  j["state_size"] = state_size;
  j["gcn_depth"] = gcn_depth;
  j["gcn_hidden"] = gcn_hidden;
  j["mlp_hidden"] = mlp_hidden;
  j["t_max_train"] = t_max_train;
  j["seed"] = seed;
  return j;
}

Architecture Architecture::from_json(const nlohmann::json& doc) {
  Architecture a;
  try {
    if (doc.contains("backbone")) a.backbone = parse_backbone(doc.at("backbone").get<std::string>());
    a.d_model = doc.value("d_model", a.d_model);
    a.n_blocks = doc.value("n_blocks", a.n_blocks);
    a.n_heads = doc.value("n_heads", a.n_heads);
    a.state_size = doc.value("state_size", a.state_size);
    a.gcn_depth = doc.value("gcn_depth", a.gcn_depth);
    a.gcn_hidden = doc.value("gcn_hidden", a.gcn_hidden);
    a.mlp_hidden = doc.value("mlp_hidden", a.mlp_hidden);
    a.t_max_train = doc.value("t_max_train", a.t_max_train);
    a.seed = doc.value("seed", a.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed architecture: ") + e.what());
  }
  a.validate();
  return a;
}

// ---------------------------------------------------------------- graph features

GraphFeatures GraphFeatures::from_graph(const InteractionGraph& graph) {
  require(!graph.empty(), "graph embedder needs at least one edge");
  const auto n = static_cast<Eigen::Index>(graph.n_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  GraphFeatures out;
  out.features = Eigen::MatrixXd::Zero(n, kNodeFeatures);
  out.features.col(0).setOnes();
  for (const Edge& e : graph.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
    a(i, j) += e.weight;
    a(j, i) += e.weight;
    for (Eigen::Index v : {i, j}) {
      out.features(v, 1) += 1.0;
      out.features(v, 2) += e.weight;
      out.features(v, 3 + static_cast<int>(e.kind)) += 1.0;
    }
  }
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(a.row(i).cwiseAbs().sum());
  out.adjacency = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  return out;
}

// ---------------------------------------------------------------- parameter layout

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kLogFloor = 1e-30;

struct BlockLayout {
  std::size_t ln1_g, ln1_b;
  std::size_t wq, wk, wv, wo;
  std::size_t w_in, w_gate, w_dt, b_dt, w_b, w_c, a_log, d_skip, w_out;
  std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Layout {
  std::size_t tok_emb;
  std::vector<std::size_t> gcn_w, gcn_b;
  std::size_t time_w;
  std::vector<BlockLayout> blocks;
  std::size_t lnf_g, lnf_b, head_w, head_b;
};

struct TensorSpec {
  std::string name;
  int rows, cols;
};

Layout build_layout(const Architecture& a, const TokenScheme& s, std::vector<TensorSpec>* specs) {
  std::size_t next = 0;
  auto add = [&](std::string name, int rows, int cols) {
    if (specs) specs->push_back({std::move(name), rows, cols});
    return next++;
  };
  const int d = a.d_model;
  Layout l;
  l.tok_emb = add("embed.token", s.alphabet_size + 1, d);
  for (int k = 0; k < a.gcn_depth; ++k) {
    const int in = k == 0 ? kNodeFeatures : a.gcn_hidden;
    const int out = k + 1 == a.gcn_depth ? d : a.gcn_hidden;
    l.gcn_w.push_back(add("gcn." + std::to_string(k) + ".w", in, out));
    l.gcn_b.push_back(add("gcn." + std::to_string(k) + ".b", 1, out));
  }
  l.time_w = add("time.w", 1, d);
  for (int b = 0; b < a.n_blocks; ++b) {
    const std::string p = "block." + std::to_string(b) + ".";
    BlockLayout bl{};
    bl.ln1_g = add(p + "ln1.g", 1, d);
    bl.ln1_b = add(p + "ln1.b", 1, d);
    if (a.backbone == Backbone::kAttention) {
      bl.wq = add(p + "attn.wq", d, d);
      bl.wk = add(p + "attn.wk", d, d);
      bl.wv = add(p + "attn.wv", d, d);
      bl.wo = add(p + "attn.wo", d, d);
    } else {
      bl.w_in = add(p + "ssm.w_in", d, d);
      bl.w_gate = add(p + "ssm.w_gate", d, d);
      bl.w_dt = add(p + "ssm.w_dt", d, d);
      bl.b_dt = add(p + "ssm.b_dt", 1, d);
      bl.w_b = add(p + "ssm.w_b", d, a.state_size);
      bl.w_c = add(p + "ssm.w_c", d, a.state_size);
      bl.a_log = add(p + "ssm.a_log", d, a.state_size);
      bl.d_skip = add(p + "ssm.d_skip", 1, d);
      bl.w_out = add(p + "ssm.w_out", d, d);
    }
    bl.ln2_g = add(p + "ln2.g", 1, d);
    bl.ln2_b = add(p + "ln2.b", 1, d);
    bl.w1 = add(p + "mlp.w1", d, a.mlp_hidden);
    bl.b1 = add(p + "mlp.b1", 1, a.mlp_hidden);
    bl.w2 = add(p + "mlp.w2", a.mlp_hidden, d);
    bl.b2 = add(p + "mlp.b2", 1, d);
    l.blocks.push_back(bl);
  }
  l.lnf_g = add("final.ln.g", 1, d);
  l.lnf_b = add("final.ln.b", 1, d);
  l.head_w = add("head.w", d, s.alphabet_size);
  l.head_b = add("head.b", 1, s.alphabet_size);
  return l;
}

}  // namespace

ModelParams ModelParams::zeros(const Architecture& arch, const TokenScheme& scheme) {
  arch.validate();
  scheme.validate();
  std::vector<TensorSpec> specs;
  build_layout(arch, scheme, &specs);
  ModelParams p;
  p.arch_ = arch;
  p.scheme_ = scheme;
  for (auto& s : specs) {
    p.names_.push_back(std::move(s.name));
    p.tensors_.push_back(Eigen::MatrixXd::Zero(s.rows, s.cols));
  }
  return p;
}

ModelParams ModelParams::initialize(const Architecture& arch, const TokenScheme& scheme) {
  ModelParams p = zeros(arch, scheme);
  const Layout l = build_layout(arch, scheme, nullptr);
  RngStream rng = RngStream::keyed(arch.seed, {static_cast<std::uint64_t>(StreamPurpose::kModelInit)});
  auto fill = [&](std::size_t idx, double std_dev) {
    auto& t = p.tensors_[idx];
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = std_dev * rng.normal();
  };
  const double d = arch.d_model;
  const double residual = 1.0 / std::sqrt(2.0 * std::max(1, arch.n_blocks));
  fill(l.tok_emb, 1.0);
  for (std::size_t k = 0; k < l.gcn_w.size(); ++k) fill(l.gcn_w[k], 1.0 / std::sqrt(p.tensors_[l.gcn_w[k]].rows()));
  fill(l.time_w, 1.0);
  for (const auto& b : l.blocks) {
    p.tensors_[b.ln1_g].setOnes();
    p.tensors_[b.ln2_g].setOnes();
    if (arch.backbone == Backbone::kAttention) {
      fill(b.wq, 1.0 / std::sqrt(d));
      fill(b.wk, 1.0 / std::sqrt(d));
      fill(b.wv, 1.0 / std::sqrt(d));
      fill(b.wo, residual / std::sqrt(d));
    } else {
      fill(b.w_in, 1.0 / std::sqrt(d));
      fill(b.w_gate, 1.0 / std::sqrt(d));
      fill(b.w_dt, 0.1 / std::sqrt(d));
      fill(b.w_b, 1.0 / std::sqrt(d));
      fill(b.w_c, 1.0 / std::sqrt(d));
      fill(b.w_out, residual / std::sqrt(d));
      auto& b_dt = p.tensors_[b.b_dt];
      for (Eigen::Index c = 0; c < b_dt.cols(); ++c) {
        // step sizes log-uniform in [0.01, 0.1], stored through the softplus inverse
        const double dt = std::exp(std::log(0.01) + rng.uniform() * (std::log(0.1) - std::log(0.01)));
        b_dt(0, c) = std::log(std::expm1(dt));
      }
      auto& a_log = p.tensors_[b.a_log];
      for (Eigen::Index r = 0; r < a_log.rows(); ++r)
        for (Eigen::Index s = 0; s < a_log.cols(); ++s) a_log(r, s) = std::log(static_cast<double>(s + 1));
      p.tensors_[b.d_skip].setOnes();
    }
    fill(b.w1, 1.0 / std::sqrt(d));
    fill(b.w2, residual / std::sqrt(static_cast<double>(arch.mlp_hidden)));
  }
  p.tensors_[l.lnf_g].setOnes();
  fill(l.head_w, 0.1 / std::sqrt(d));
  return p;
}

void ModelParams::set_t_max_train(double t_max) {
  require(t_max > 0.0 && std::isfinite(t_max), "t_max_train must be positive");
  arch_.t_max_train = t_max;
}

std::size_t ModelParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw ValidationError("no tensor named '" + std::string(name) + "'");
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors_)
    if (!t.allFinite()) return false;
  return true;
}

// ---------------------------------------------------------------- engine

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

double positional(int pos, int dim, int d) {
  const double freq = std::pow(10000.0, -static_cast<double>(dim - dim % 2) / d);
  return dim % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

inline double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }
inline double gelu_grad(double x) {
  const double u = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LnCache {
  MatrixXd xhat;
  VectorXd inv_sigma;
};

MatrixXd layer_norm(const MatrixXd& x, const MatrixXd& g, const MatrixXd& b, LnCache& cache) {
  const Index d = x.cols();
  cache.xhat.resize(x.rows(), d);
  cache.inv_sigma.resize(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    cache.inv_sigma(r) = inv;
    cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
  }
  MatrixXd y = cache.xhat.array().rowwise() * g.row(0).array();
  y.rowwise() += b.row(0);
  return y;
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const LnCache& cache, const MatrixXd& g, MatrixXd& dg, MatrixXd& db) {
  dg.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  const MatrixXd dxhat = dy.array().rowwise() * g.row(0).array();
  MatrixXd dx(dy.rows(), dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const double m1 = dxhat.row(r).mean();
    const double m2 = dxhat.row(r).dot(cache.xhat.row(r)) / static_cast<double>(dy.cols());
    dx.row(r) = cache.inv_sigma(r) * (dxhat.row(r).array() - m1 - cache.xhat.row(r).array() * m2);
  }
  return dx;
}

struct BlockCache {
  LnCache ln1, ln2;
  MatrixXd h1, h2;
  // attention
  MatrixXd q, k, v, o;
  std::vector<MatrixXd> probs;  // [b * heads + h], T x T
  // ssm
  MatrixXd u, z, dt_raw, delta, bm, cm, y, gated;
  // row r holds h_t and exp(-delta * lambda) flattened as c * S + s
  RowMat states, decay;
  // mlp
  MatrixXd a1, g1;
};

struct GcnCache {
  std::vector<MatrixXd> aggregated;  // A H_l
  std::vector<MatrixXd> outputs;     // H_{l+1}
};

class Engine {
 public:
  Engine(const ModelParams& p) : p_(p), a_(p.arch()), s_(p.scheme()), l_(build_layout(a_, s_, nullptr)) {}

  VectorXd context(const Condition& c, GcnCache* cache) const {
    MatrixXd h = c.graph.features;
    require(h.cols() == kNodeFeatures && c.graph.adjacency.rows() == h.rows(), "malformed graph features");
    for (std::size_t k = 0; k < l_.gcn_w.size(); ++k) {
      MatrixXd agg = c.graph.adjacency * h;
      MatrixXd pre = agg * t(l_.gcn_w[k]);
      pre.rowwise() += t(l_.gcn_b[k]).row(0);
      h = k + 1 < l_.gcn_w.size() ? MatrixXd(pre.array().tanh()) : pre;
      if (cache) {
        cache->aggregated.push_back(std::move(agg));
        cache->outputs.push_back(h);
      }
    }
    VectorXd out = h.colwise().mean().transpose();
    out += (c.t_index / a_.t_max_train) * t(l_.time_w).row(0).transpose();
    return out;
  }

  void context_backward(const Condition& c, const VectorXd& dc, const GcnCache& cache, ModelParams& grad) const {
    g(grad, l_.time_w).row(0) += (c.t_index / a_.t_max_train) * dc.transpose();
    const Index n = c.graph.features.rows();
    MatrixXd dh = (dc.transpose() / static_cast<double>(n)).replicate(n, 1);
    for (std::size_t k = l_.gcn_w.size(); k-- > 0;) {
      if (k + 1 < l_.gcn_w.size()) dh = dh.array() * (1.0 - cache.outputs[k].array().square());
      g(grad, l_.gcn_w[k]).noalias() += cache.aggregated[k].transpose() * dh;
      g(grad, l_.gcn_b[k]).row(0) += dh.colwise().sum();
      if (k > 0) dh = c.graph.adjacency.transpose() * (dh * t(l_.gcn_w[k]).transpose());
    }
  }

  /// Probability rows (b * T + i) for inputs `in` (BOS-shifted tokens).
  /// With `grad`, backpropagates the mean NLL of `targets` and returns it.
  MatrixXd run(int batch, int steps, const std::vector<int>& in, const MatrixXd& contexts, const std::vector<int>* targets,
               ModelParams* grad, MatrixXd* dcontexts, LossStats* stats, OpCounts* counts) const {
    const int d = a_.d_model;
    const Index rows = static_cast<Index>(batch) * steps;
    MatrixXd pe(steps, d);
    for (int i = 0; i < steps; ++i)
      for (int c = 0; c < d; ++c) pe(i, c) = positional(i, c, d);
    MatrixXd x(rows, d);
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < steps; ++i) {
        const Index r = static_cast<Index>(b) * steps + i;
        x.row(r) = t(l_.tok_emb).row(in[r]) + contexts.row(b) + pe.row(i);
      }
    if (counts) counts->positions += static_cast<std::uint64_t>(rows);

    std::vector<BlockCache> caches(l_.blocks.size());
    for (std::size_t bi = 0; bi < l_.blocks.size(); ++bi) block_forward(l_.blocks[bi], batch, steps, x, caches[bi], counts);

    LnCache lnf;
    const MatrixXd hf = layer_norm(x, t(l_.lnf_g), t(l_.lnf_b), lnf);
    MatrixXd logits = hf * t(l_.head_w);
    logits.rowwise() += t(l_.head_b).row(0);
    MatrixXd probs(rows, logits.cols());
    for (Index r = 0; r < rows; ++r) {
      const double m = logits.row(r).maxCoeff();
      RowVectorXd e = (logits.row(r).array() - m).exp();
      probs.row(r) = e / e.sum();
    }
    if (!targets) return probs;

    double loss = 0.0;
    std::size_t clamped = 0;
    for (Index r = 0; r < rows; ++r) {
      const double pr = probs(r, (*targets)[r]);
      if (pr < kLogFloor) ++clamped;
      loss -= std::log(std::max(pr, kLogFloor));
    }
    loss /= batch;
    if (stats) {
      stats->nll = loss;
      stats->clamped = clamped;
    }
    if (!grad) return probs;

    MatrixXd dlogits = probs;
    for (Index r = 0; r < rows; ++r) dlogits(r, (*targets)[r]) -= 1.0;
    dlogits /= batch;
    g(*grad, l_.head_w).noalias() += hf.transpose() * dlogits;
    g(*grad, l_.head_b).row(0) += dlogits.colwise().sum();
    MatrixXd dx = layer_norm_backward(dlogits * t(l_.head_w).transpose(), lnf, t(l_.lnf_g), g(*grad, l_.lnf_g),
                                      g(*grad, l_.lnf_b));
    for (std::size_t bi = l_.blocks.size(); bi-- > 0;) block_backward(l_.blocks[bi], batch, steps, caches[bi], dx, *grad);

    auto& demb = g(*grad, l_.tok_emb);
    dcontexts->setZero(batch, d);
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < steps; ++i) {
        const Index r = static_cast<Index>(b) * steps + i;
        demb.row(in[r]) += dx.row(r);
        dcontexts->row(b) += dx.row(r);
      }
    return probs;
  }

 private:
  const MatrixXd& t(std::size_t i) const { return p_.tensor(i); }
  static MatrixXd& g(ModelParams& grad, std::size_t i) { return grad.tensor(i); }

  void block_forward(const BlockLayout& bl, int batch, int steps, MatrixXd& x, BlockCache& c, OpCounts* counts) const {
    c.h1 = layer_norm(x, t(bl.ln1_g), t(bl.ln1_b), c.ln1);
    if (a_.backbone == Backbone::kAttention) {
      x += attention_forward(bl, batch, steps, c, counts);
    } else {
      x += ssm_forward(bl, batch, steps, c, counts);
    }
    c.h2 = layer_norm(x, t(bl.ln2_g), t(bl.ln2_b), c.ln2);
    c.a1 = c.h2 * t(bl.w1);
    c.a1.rowwise() += t(bl.b1).row(0);
    c.g1 = c.a1.unaryExpr([](double v) { return gelu(v); });
    MatrixXd m = c.g1 * t(bl.w2);
    m.rowwise() += t(bl.b2).row(0);
    x += m;
  }

  void block_backward(const BlockLayout& bl, int batch, int steps, const BlockCache& c, MatrixXd& dx,
                      ModelParams& grad) const {
    // mlp branch
    g(grad, bl.w2).noalias() += c.g1.transpose() * dx;
    g(grad, bl.b2).row(0) += dx.colwise().sum();
    MatrixXd da1 = (dx * t(bl.w2).transpose()).array() * c.a1.unaryExpr([](double v) { return gelu_grad(v); }).array();
    g(grad, bl.w1).noalias() += c.h2.transpose() * da1;
    g(grad, bl.b1).row(0) += da1.colwise().sum();
    dx += layer_norm_backward(da1 * t(bl.w1).transpose(), c.ln2, t(bl.ln2_g), g(grad, bl.ln2_g), g(grad, bl.ln2_b));
    // mixer branch
    MatrixXd dh1 = a_.backbone == Backbone::kAttention ? attention_backward(bl, batch, steps, c, dx, grad)
                                                       : ssm_backward(bl, batch, steps, c, dx, grad);
    dx += layer_norm_backward(dh1, c.ln1, t(bl.ln1_g), g(grad, bl.ln1_g), g(grad, bl.ln1_b));
  }

  MatrixXd attention_forward(const BlockLayout& bl, int batch, int steps, BlockCache& c, OpCounts* counts) const {
    const int heads = a_.n_heads, dh = a_.d_model / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    c.q = c.h1 * t(bl.wq);
    c.k = c.h1 * t(bl.wk);
    c.v = c.h1 * t(bl.wv);
    c.o.resize(c.h1.rows(), a_.d_model);
    c.probs.assign(static_cast<std::size_t>(batch) * heads, MatrixXd());
    for (int b = 0; b < batch; ++b) {
      const Index r0 = static_cast<Index>(b) * steps;
      for (int h = 0; h < heads; ++h) {
        const auto q = c.q.block(r0, h * dh, steps, dh);
        const auto k = c.k.block(r0, h * dh, steps, dh);
        MatrixXd pm = MatrixXd::Zero(steps, steps);
        for (int i = 0; i < steps; ++i) {
          double mx = -std::numeric_limits<double>::infinity();
          for (int j = 0; j <= i; ++j) {
            pm(i, j) = scale * q.row(i).dot(k.row(j));
            mx = std::max(mx, pm(i, j));
          }
          double sum = 0.0;
          for (int j = 0; j <= i; ++j) {
            pm(i, j) = std::exp(pm(i, j) - mx);
            sum += pm(i, j);
          }
          for (int j = 0; j <= i; ++j) pm(i, j) /= sum;
        }
        if (counts) counts->attention_scores += static_cast<std::uint64_t>(steps) * (steps + 1) / 2;
        c.o.block(r0, h * dh, steps, dh).noalias() = pm * c.v.block(r0, h * dh, steps, dh);
        c.probs[static_cast<std::size_t>(b) * heads + h] = std::move(pm);
      }
    }
    return c.o * t(bl.wo);
  }

  MatrixXd attention_backward(const BlockLayout& bl, int batch, int steps, const BlockCache& c, const MatrixXd& dout,
                              ModelParams& grad) const {
    const int heads = a_.n_heads, dh = a_.d_model / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    g(grad, bl.wo).noalias() += c.o.transpose() * dout;
    const MatrixXd d_o = dout * t(bl.wo).transpose();
    MatrixXd dq = MatrixXd::Zero(c.q.rows(), c.q.cols()), dk = dq, dv = dq;
    for (int b = 0; b < batch; ++b) {
      const Index r0 = static_cast<Index>(b) * steps;
      for (int h = 0; h < heads; ++h) {
        const MatrixXd& pm = c.probs[static_cast<std::size_t>(b) * heads + h];
        const auto dob = d_o.block(r0, h * dh, steps, dh);
        const auto vb = c.v.block(r0, h * dh, steps, dh);
        dv.block(r0, h * dh, steps, dh).noalias() += pm.transpose() * dob;
        MatrixXd dp = dob * vb.transpose();
        MatrixXd ds = MatrixXd::Zero(steps, steps);
        for (int i = 0; i < steps; ++i) {
          double dot = 0.0;
          for (int j = 0; j <= i; ++j) dot += pm(i, j) * dp(i, j);
          for (int j = 0; j <= i; ++j) ds(i, j) = pm(i, j) * (dp(i, j) - dot) * scale;
        }
        dq.block(r0, h * dh, steps, dh).noalias() += ds * c.k.block(r0, h * dh, steps, dh);
        dk.block(r0, h * dh, steps, dh).noalias() += ds.transpose() * c.q.block(r0, h * dh, steps, dh);
      }
    }
    g(grad, bl.wq).noalias() += c.h1.transpose() * dq;
    g(grad, bl.wk).noalias() += c.h1.transpose() * dk;
    g(grad, bl.wv).noalias() += c.h1.transpose() * dv;
    MatrixXd dh1 = dq * t(bl.wq).transpose();
    dh1.noalias() += dk * t(bl.wk).transpose();
    dh1.noalias() += dv * t(bl.wv).transpose();
    return dh1;
  }

  MatrixXd ssm_forward(const BlockLayout& bl, int batch, int steps, BlockCache& c, OpCounts* counts) const {
    const int d = a_.d_model, ns = a_.state_size;
    c.u = c.h1 * t(bl.w_in);
    c.z = c.h1 * t(bl.w_gate);
    c.dt_raw = c.h1 * t(bl.w_dt);
    c.dt_raw.rowwise() += t(bl.b_dt).row(0);
    c.delta = c.dt_raw.unaryExpr([](double v) { return softplus(v); });
    c.bm = c.h1 * t(bl.w_b);
    c.cm = c.h1 * t(bl.w_c);
    const RowMat lambda = t(bl.a_log).array().exp();
    const auto& dskip = t(bl.d_skip);
    const RowMat u = c.u, delta = c.delta, bm = c.bm, cm = c.cm;
    RowMat y(c.h1.rows(), d);
    c.states.resize(c.h1.rows(), static_cast<Index>(d) * ns);
    c.decay.resize(c.h1.rows(), static_cast<Index>(d) * ns);
    for (Index r = 0; r < c.h1.rows(); ++r) {
      Eigen::Map<RowMat> dec(c.decay.row(r).data(), d, ns);
      dec = (lambda.array().colwise() * (-delta.row(r).transpose().array())).exp();
    }
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < steps; ++i) {
        const Index r = static_cast<Index>(b) * steps + i;
        const double* prev = i > 0 ? c.states.row(r - 1).data() : nullptr;
        double* st = c.states.row(r).data();
        const double* dec = c.decay.row(r).data();
        const double* bmr = bm.row(r).data();
        const double* cmr = cm.row(r).data();
        for (int ch = 0; ch < d; ++ch) {
          const double uu = u(r, ch);
          double yv = dskip(0, ch) * uu;
          for (int s = 0; s < ns; ++s) {
            const int idx = ch * ns + s;
            const double hv = dec[idx] * (prev ? prev[idx] : 0.0) + bmr[s] * uu;
            st[idx] = hv;
            yv += cmr[s] * hv;
          }
          y(r, ch) = yv;
        }
      }
      if (counts) counts->ssm_updates += static_cast<std::uint64_t>(steps);
    }
    c.y = y;
    c.gated = c.y.array() * c.z.unaryExpr([](double v) { return v * sigmoid(v); }).array();
    return c.gated * t(bl.w_out);
  }

  MatrixXd ssm_backward(const BlockLayout& bl, int batch, int steps, const BlockCache& c, const MatrixXd& dout,
                        ModelParams& grad) const {
    const int d = a_.d_model, ns = a_.state_size;
    g(grad, bl.w_out).noalias() += c.gated.transpose() * dout;
    const MatrixXd dgated = dout * t(bl.w_out).transpose();
    const MatrixXd silu = c.z.unaryExpr([](double v) { return v * sigmoid(v); });
    const MatrixXd silu_grad = c.z.unaryExpr([](double v) {
      const double sg = sigmoid(v);
      return sg * (1.0 + v * (1.0 - sg));
    });
    const RowMat dy = dgated.array() * silu.array();
    const MatrixXd dz = dgated.array() * c.y.array() * silu_grad.array();

    const RowMat lambda = t(bl.a_log).array().exp();
    const auto& dskip = t(bl.d_skip);
    const RowMat u = c.u, delta = c.delta, bm = c.bm, cm = c.cm;
    RowMat du = RowMat::Zero(c.u.rows(), d), ddelta = du;
    RowMat dbm = RowMat::Zero(c.u.rows(), ns), dcm = dbm;
    RowMat dlambda = RowMat::Zero(d, ns);
    auto& gdskip = g(grad, bl.d_skip);
    std::vector<double> carry(static_cast<std::size_t>(d) * ns);
    for (int b = 0; b < batch; ++b) {
      std::fill(carry.begin(), carry.end(), 0.0);
      for (int i = steps - 1; i >= 0; --i) {
        const Index r = static_cast<Index>(b) * steps + i;
        const double* st = c.states.row(r).data();
        const double* dec = c.decay.row(r).data();
        const double* prev = i > 0 ? c.states.row(r - 1).data() : nullptr;
        const double* bmr = bm.row(r).data();
        const double* cmr = cm.row(r).data();
        double* dbmr = dbm.row(r).data();
        double* dcmr = dcm.row(r).data();
        for (int ch = 0; ch < d; ++ch) {
          const double dyv = dy(r, ch), uu = u(r, ch), dl = delta(r, ch);
          const double* lam = lambda.row(ch).data();
          double* dlam = dlambda.row(ch).data();
          gdskip(0, ch) += dyv * uu;
          double duv = du(r, ch) + dyv * dskip(0, ch);
          double ddl = ddelta(r, ch);
          for (int s = 0; s < ns; ++s) {
            const std::size_t idx = static_cast<std::size_t>(ch) * ns + s;
            dcmr[s] += dyv * st[idx];
            const double dhv = carry[idx] + cmr[s] * dyv;
            dbmr[s] += dhv * uu;
            duv += dhv * bmr[s];
            const double decay = dec[idx];
            const double ddecay = dhv * (prev ? prev[idx] : 0.0);
            ddl -= ddecay * decay * lam[s];
            dlam[s] -= ddecay * decay * dl;
            carry[idx] = dhv * decay;
          }
          du(r, ch) = duv;
          ddelta(r, ch) = ddl;
        }
      }
    }
    g(grad, bl.a_log).array() += dlambda.array() * lambda.array();
    const MatrixXd ddt_raw = ddelta.array() * c.dt_raw.unaryExpr([](double v) { return sigmoid(v); }).array();
    g(grad, bl.w_in).noalias() += c.h1.transpose() * du;
    g(grad, bl.w_gate).noalias() += c.h1.transpose() * dz;
    g(grad, bl.w_dt).noalias() += c.h1.transpose() * ddt_raw;
    g(grad, bl.b_dt).row(0) += ddt_raw.colwise().sum();
    g(grad, bl.w_b).noalias() += c.h1.transpose() * dbm;
    g(grad, bl.w_c).noalias() += c.h1.transpose() * dcm;
    MatrixXd dh1 = du * t(bl.w_in).transpose();
    dh1.noalias() += dz * t(bl.w_gate).transpose();
    dh1.noalias() += ddt_raw * t(bl.w_dt).transpose();
    dh1.noalias() += dbm * t(bl.w_b).transpose();
    dh1.noalias() += dcm * t(bl.w_c).transpose();
    return dh1;
  }

  const ModelParams& p_;
  Architecture a_;
  TokenScheme s_;
  Layout l_;
};

int bos(const ModelParams& p) { return p.scheme().alphabet_size; }

void check_tokens(std::span<const std::uint8_t> tokens, const ModelParams& p) {
  for (std::uint8_t tk : tokens) require(tk < p.scheme().alphabet_size, "token outside the alphabet");
}

struct PreparedBatch {
  int batch = 0, steps = 0;
  std::vector<int> in, targets;
  std::vector<std::size_t> unique;        // condition ids in first-seen order
  std::vector<std::size_t> slot_of_example;
};

PreparedBatch prepare(std::span<const Condition> conditions, std::span<const Example> batch, const ModelParams& p) {
  require(!batch.empty(), "nll needs a nonempty batch");
  PreparedBatch out;
  out.batch = static_cast<int>(batch.size());
  out.steps = p.scheme().sequence_length;
  out.in.resize(batch.size() * out.steps);
  out.targets.resize(batch.size() * out.steps);
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Example& ex = batch[b];
    require(static_cast<int>(ex.tokens.size()) == out.steps, "sequence length does not match the token scheme");
    require(ex.condition < conditions.size(), "example refers to a missing condition");
    check_tokens(ex.tokens, p);
    for (int i = 0; i < out.steps; ++i) {
      out.in[b * out.steps + i] = i == 0 ? bos(p) : ex.tokens[i - 1];
      out.targets[b * out.steps + i] = ex.tokens[i];
    }
    auto [it, inserted] = slot.emplace(ex.condition, out.unique.size());
    if (inserted) out.unique.push_back(ex.condition);
    out.slot_of_example.push_back(it->second);
  }
  return out;
}

double evaluate(std::span<const Condition> conditions, std::span<const Example> batch, const ModelParams& p,
                ModelParams* grad, LossStats* stats) {
  const PreparedBatch pb = prepare(conditions, batch, p);
  Engine engine(p);
  std::vector<GcnCache> gcn(pb.unique.size());
  std::vector<Eigen::VectorXd> ctx(pb.unique.size());
  for (std::size_t u = 0; u < pb.unique.size(); ++u)
    ctx[u] = engine.context(conditions[pb.unique[u]], grad ? &gcn[u] : nullptr);
  Eigen::MatrixXd contexts(pb.batch, p.arch().d_model);
  for (int b = 0; b < pb.batch; ++b) contexts.row(b) = ctx[pb.slot_of_example[b]].transpose();
  LossStats local;
  Eigen::MatrixXd dcontexts;
  engine.run(pb.batch, pb.steps, pb.in, contexts, &pb.targets, grad, &dcontexts, &local, nullptr);
  if (grad) {
    std::vector<Eigen::VectorXd> dctx(pb.unique.size(), Eigen::VectorXd::Zero(p.arch().d_model));
    for (int b = 0; b < pb.batch; ++b) dctx[pb.slot_of_example[b]] += dcontexts.row(b).transpose();
    for (std::size_t u = 0; u < pb.unique.size(); ++u) engine.context_backward(conditions[pb.unique[u]], dctx[u], gcn[u], *grad);
  }
  if (stats) *stats = local;
  return local.nll;
}

}  // namespace

Eigen::VectorXd embed_condition(const Condition& condition, const ModelParams& params) {
  return Engine(params).context(condition, nullptr);
}

Eigen::VectorXd embed_condition(const HamiltonianInstance& x, int t_index, const ModelParams& params) {
  return embed_condition(Condition{GraphFeatures::from_graph(x.graph()), static_cast<double>(t_index)}, params);
}

Eigen::MatrixXd forward(std::span<const std::uint8_t> prefix, const Eigen::VectorXd& context, const ModelParams& params,
                        OpCounts* counts) {
  const int length = params.scheme().sequence_length;
  require(static_cast<int>(prefix.size()) <= length, "prefix longer than the sequence length");
  require(context.size() == params.arch().d_model, "context has the wrong dimension");
  check_tokens(prefix, params);
  const int steps = std::min(static_cast<int>(prefix.size()) + 1, length);
  std::vector<int> in(steps);
  for (int i = 0; i < steps; ++i) in[i] = i == 0 ? bos(params) : prefix[i - 1];
  return Engine(params).run(1, steps, in, context.transpose(), nullptr, nullptr, nullptr, nullptr, counts);
}

double nll(std::span<const Condition> conditions, std::span<const Example> batch, const ModelParams& params,
           LossStats* stats) {
  return evaluate(conditions, batch, params, nullptr, stats);
}

ModelParams gradients(std::span<const Condition> conditions, std::span<const Example> batch, const ModelParams& params,
                      LossStats* stats) {
  ModelParams grad = params.zeros_like();
  evaluate(conditions, batch, params, &grad, stats);
  return grad;
}

std::vector<TokenSequence> sample(const Condition& condition, std::size_t n_samples, const ModelParams& params,
                                  const RngStream& rng) {
  const int length = params.scheme().sequence_length;
  const int alphabet = params.scheme().alphabet_size;
  Engine engine(params);
  const Eigen::RowVectorXd ctx = engine.context(condition, nullptr).transpose();
  std::vector<TokenSequence> out(n_samples, TokenSequence(length));
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < n_samples; start += kChunk) {
    const int batch = static_cast<int>(std::min(kChunk, n_samples - start));
    std::vector<RngStream> streams;
    streams.reserve(batch);
    for (int b = 0; b < batch; ++b) streams.push_back(rng.split(start + b));
    const Eigen::MatrixXd contexts = ctx.replicate(batch, 1);
    for (int pos = 0; pos < length; ++pos) {
      const int steps = pos + 1;
      std::vector<int> in(static_cast<std::size_t>(batch) * steps);
      for (int b = 0; b < batch; ++b)
        for (int i = 0; i < steps; ++i) in[b * steps + i] = i == 0 ? alphabet : out[start + b][i - 1];
      const Eigen::MatrixXd probs = engine.run(batch, steps, in, contexts, nullptr, nullptr, nullptr, nullptr, nullptr);
      for (int b = 0; b < batch; ++b) {
        const auto row = probs.row(static_cast<Eigen::Index>(b) * steps + pos);
        const double u = streams[b].uniform();
        double acc = 0.0;
        int pick = alphabet - 1;
        for (int a = 0; a < alphabet; ++a) {
          acc += row(a);
          if (u < acc) {
            pick = a;
            break;
          }
        }
        out[start + b][pos] = static_cast<std::uint8_t>(pick);
      }
    }
  }
  return out;
}

}  // namespace genksr
