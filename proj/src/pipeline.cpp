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


#include "genksr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "genksr/errors.hpp"

namespace genksr {

namespace fs = std::filesystem;

std::string pipeline_mode_name(PipelineMode m) { return m == PipelineMode::kKqd ? "kqd" : "skqd"; }

PipelineMode parse_pipeline_mode(std::string_view name) {
  if (name == "kqd") return PipelineMode::kKqd;
  if (name == "skqd") return PipelineMode::kSkqd;
  throw ValidationError("unknown mode '" + std::string(name) + "'; expected kqd or skqd");
}

// ---------------------------------------------------------------- config

namespace {

const std::set<std::string> kKqdSources = {"exact_sim", "classical_shadow", "model"};
const std::set<std::string> kSkqdSources = {"device_sim", "model"};

void reject_unknown(const nlohmann::json& doc, std::initializer_list<const char*> allowed, const std::string& where) {
  require(doc.is_object(), where + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

const nlohmann::json& section(const nlohmann::json& doc, const char* name) {
  static const nlohmann::json empty = nlohmann::json::object();
  return doc.contains(name) ? doc.at(name) : empty;
}

std::string estimator_name(Estimator e) { return e == Estimator::kMean ? "mean" : "median_of_means"; }

Estimator parse_estimator(const std::string& name) {
  if (name == "mean") return Estimator::kMean;
  if (name == "median_of_means") return Estimator::kMedianOfMeans;
  throw ValidationError("unknown estimator '" + name + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  require(family.n_qubits >= 2 && family.n_qubits <= 20, "family.n_qubits must be in [2, 20]");
  require(n_train + n_test >= 1, "need at least one instance");
  require(shots >= 1, "shots must be >= 1");
  require(d_train >= 1 && d_eval >= d_train, "need D_eval >= D_train >= 1");
  require(dt >= 0.0 && std::isfinite(dt), "dt must be >= 0 (0 selects pi / norm bound)");
  require(trotter_steps >= 1, "trotter_steps must be >= 1");
  require(trotter_order == 1 || trotter_order == 2, "trotter_order must be 1 or 2");
  model.validate();
  training.validate();
  require(eps_cut_exact >= 0.0 && eps_cut_exact < 1.0, "eps_cut_exact must be in [0, 1)");
  require(eps_cut_sampled >= 0.0 && eps_cut_sampled < 1.0, "eps_cut_sampled must be in [0, 1)");
  require(generate_t_max >= -1, "generate.t_max must be >= -1");
  require(estimator.n_batches >= 1, "eval.n_batches must be >= 1");
  require(threads >= 1, "threads must be >= 1");
  require(!out_dir.empty(), "out must be a nonempty path");
  const auto& allowed = mode == PipelineMode::kKqd ? kKqdSources : kSkqdSources;
  for (const auto& s : sources)
    require(allowed.count(s) == 1, "source '" + s + "' is not available in " + pipeline_mode_name(mode) + " mode");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["family"] = {{"name", family_name(family.family)}, {"n_qubits", family.n_qubits}, {"periodic", family.periodic}};
  j["split"] = {{"n_train", n_train}, {"n_test", n_test}};
  j["seed"] = seed;
  j["mode"] = pipeline_mode_name(mode);
  j["shots"] = shots;
  j["d_train"] = d_train;
  j["d_eval"] = d_eval;
  j["simulator"] = {{"dt", dt}, {"trotter_steps", trotter_steps}, {"trotter_order", trotter_order}};
  j["model"] = model.to_json();
  j["training"] = training.to_json();
  j["threshold"] = {{"eps_cut_exact", eps_cut_exact}, {"eps_cut_sampled", eps_cut_sampled}};
  j["skqd"] = {{"sz_filter", sz_filter}};
  j["generate"] = {{"n_samples", generate_samples}, {"t_max", generate_t_max}};
  j["eval"] = {{"sources", sources}, {"estimator", estimator_name(estimator.kind)}, {"n_batches", estimator.n_batches}};
  j["out"] = out_dir;
  j["threads"] = threads;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    reject_unknown(doc,
                   {"family", "split", "seed", "mode", "shots", "d_train", "d_eval", "simulator", "model", "training",
                    "threshold", "skqd", "generate", "eval", "out", "threads"},
                   "config");
    const auto& fam = section(doc, "family");
    reject_unknown(fam, {"name", "n_qubits", "periodic"}, "family");
    const Family f = parse_family(fam.value("name", family_name(c.family.family)));
    c.family = FamilySpec::with_defaults(f, fam.value("n_qubits", c.family.n_qubits));
    c.family.periodic = fam.value("periodic", c.family.periodic);
    const auto& split = section(doc, "split");
    reject_unknown(split, {"n_train", "n_test", "n_instances"}, "split");
    c.n_train = split.value("n_train", c.n_train);
    c.n_test = split.value("n_test", c.n_test);
    if (split.contains("n_instances"))
      require(split.at("n_instances").get<std::size_t>() == c.n_train + c.n_test,
              "split sizes must sum to n_instances");
    c.seed = doc.value("seed", c.seed);
    c.mode = parse_pipeline_mode(doc.value("mode", pipeline_mode_name(c.mode)));
    c.shots = doc.value("shots", c.shots);
    c.d_train = doc.value("d_train", c.d_train);
    c.d_eval = doc.value("d_eval", c.d_eval);
    const auto& sim = section(doc, "simulator");
    reject_unknown(sim, {"dt", "trotter_steps", "trotter_order"}, "simulator");
    if (sim.contains("dt") && !sim.at("dt").is_null()) c.dt = sim.at("dt").get<double>();
    c.trotter_steps = sim.value("trotter_steps", c.trotter_steps);
    c.trotter_order = sim.value("trotter_order", c.trotter_order);
    c.model = Architecture::from_json(section(doc, "model"));
    c.training = TrainConfig::from_json(section(doc, "training"));
    const auto& th = section(doc, "threshold");
    reject_unknown(th, {"eps_cut_exact", "eps_cut_sampled"}, "threshold");
    c.eps_cut_exact = th.value("eps_cut_exact", c.eps_cut_exact);
    c.eps_cut_sampled = th.value("eps_cut_sampled", c.eps_cut_sampled);
    const auto& sk = section(doc, "skqd");
    reject_unknown(sk, {"sz_filter"}, "skqd");
    c.sz_filter = sk.value("sz_filter", c.sz_filter);
    const auto& gen = section(doc, "generate");
    reject_unknown(gen, {"n_samples", "t_max"}, "generate");
    c.generate_samples = gen.value("n_samples", c.generate_samples);
    c.generate_t_max = gen.value("t_max", c.generate_t_max);
    const auto& ev = section(doc, "eval");
    reject_unknown(ev, {"sources", "estimator", "n_batches"}, "eval");
    c.sources = ev.value("sources", c.sources);
    c.estimator.kind = parse_estimator(ev.value("estimator", estimator_name(c.estimator.kind)));
    c.estimator.n_batches = ev.value("n_batches", c.estimator.n_batches);
    c.out_dir = doc.value("out", c.out_dir);
    c.threads = doc.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  c.model.seed = c.seed;
  c.training.master_seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> ExperimentConfig::eval_sources() const {
  if (!sources.empty()) return sources;
  std::vector<std::string> out = mode == PipelineMode::kKqd ? std::vector<std::string>{"exact_sim", "classical_shadow"}
                                                            : std::vector<std::string>{"device_sim"};
  if (fs::exists(fs::path(out_dir) / "generated.jsonl")) out.push_back("model");
  return out;
}

std::string ExperimentConfig::reference_source() const {
  return mode == PipelineMode::kKqd ? "exact_sim" : "device_sim";
}

// ---------------------------------------------------------------- threads

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int default_threads() {
  const char* env = std::getenv("GENKSR_THREADS");
  if (!env || !*env) return 1;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), value);
  if (ec != std::errc() || *ptr != '\0' || value < 1) throw ValidationError("GENKSR_THREADS must be a positive integer");
  return value;
}

// ---------------------------------------------------------------- data

std::vector<HamiltonianInstance> experiment_instances(const ExperimentConfig& cfg) {
  return sample_instances(cfg.family, cfg.n_instances(), cfg.seed);
}

EvolutionConfig evolution_for(const ExperimentConfig& cfg, const PauliSum& h) {
  EvolutionConfig e = EvolutionConfig::for_hamiltonian(h);
  if (cfg.dt > 0.0) e.dt = cfg.dt;
  e.trotter_steps = cfg.trotter_steps;
  e.trotter_order = cfg.trotter_order;
  return e;
}

ShotDataset simulate_shots(const ExperimentConfig& cfg, const std::vector<HamiltonianInstance>& instances,
                           std::size_t first, std::size_t last, int d) {
  require(first <= last && last <= instances.size(), "instance range out of bounds");
  require(d >= 1, "need at least one Krylov step");
  ShotDataset out;
  out.header.n_qubits = cfg.family.n_qubits;
  out.header.mode = cfg.record_mode();
  out.header.master_seed = cfg.seed;
  out.header.source = "device_sim";
  out.header.width = cfg.family.n_qubits + (cfg.mode == PipelineMode::kKqd ? 1 : 0);
  std::vector<std::vector<DatasetRecord>> per_instance(last - first);
  parallel_for(last - first, cfg.threads, [&](std::size_t slot) {
    const std::size_t id = first + slot;
    const PauliSum& h = instances[id].pauli_sum;
    require(h.n_qubits() == cfg.family.n_qubits, "instance size differs from the config");
    const EvolutionConfig ecfg = evolution_for(cfg, h);
    const StateVector psi0 = neel_state(h.n_qubits());
    StateVector psi = psi0;
    auto& recs = per_instance[slot];
    for (int k = 0; k < d; ++k) {
      if (k > 0) psi = trotter_evolve(psi, h, 1, ecfg);
      if (cfg.mode == PipelineMode::kKqd) {
        const RngStream rng = RngStream::keyed(cfg.seed, {static_cast<std::uint64_t>(StreamPurpose::kPauliShots), id,
                                                          static_cast<std::uint64_t>(k)});
        for (const auto& s : sample_pauli6(hadamard_test_state(psi0, psi), cfg.shots, rng))
          recs.push_back(make_record(id, k, s));
      } else {
        const RngStream rng = RngStream::keyed(
            cfg.seed, {static_cast<std::uint64_t>(StreamPurpose::kComputationalShots), id, static_cast<std::uint64_t>(k)});
        for (Bitstring b : sample_computational(psi, cfg.shots, rng)) recs.push_back(make_record(id, k, b, h.n_qubits()));
      }
    }
  });
  for (auto& recs : per_instance)
    out.records.insert(out.records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  return out;
}

Dataset training_set(const ShotDataset& shots, const std::vector<HamiltonianInstance>& instances) {
  Dataset data;
  data.scheme = shots.header.token_scheme();
  std::map<std::size_t, GraphFeatures> graphs;
  std::map<std::pair<std::size_t, int>, std::size_t> condition_of;
  for (const auto& r : shots.records) {
    require(r.ham_id < instances.size(), "record refers to unknown instance " + std::to_string(r.ham_id));
    const auto key = std::make_pair(r.ham_id, r.t_index);
    auto it = condition_of.find(key);
    if (it == condition_of.end()) {
      auto g = graphs.find(r.ham_id);
      if (g == graphs.end()) g = graphs.emplace(r.ham_id, GraphFeatures::from_graph(instances[r.ham_id].graph())).first;
      it = condition_of.emplace(key, data.conditions.size()).first;
      data.conditions.push_back({g->second, static_cast<double>(r.t_index)});
    }
    data.examples.push_back({record_tokens(r, shots.header.mode), it->second});
  }
  return data;
}

ShotDataset generate_shots(const ModelParams& params, const std::vector<HamiltonianInstance>& instances,
                           const std::vector<std::size_t>& ham_ids, int t_max, std::size_t n_samples,
                           std::uint64_t seed, std::uint64_t dataset_seed) {
  require(t_max >= 0, "t_max must be >= 0");
  require(!instances.empty(), "no instances");
  const TokenScheme scheme = params.scheme();
  ShotDataset out;
  out.header.n_qubits = instances.front().n_qubits();
  out.header.mode = scheme.is_pauli6() ? RecordMode::kPauli6 : RecordMode::kComputational;
  out.header.master_seed = dataset_seed;
  out.header.source = "model";
  out.header.width = static_cast<std::size_t>(scheme.sequence_length);
  require(out.header.width == out.header.n_qubits || out.header.width == out.header.n_qubits + 1,
          "model sequence length does not fit the instances");
  for (std::size_t id : ham_ids) {
    require(id < instances.size(), "unknown instance id " + std::to_string(id));
    require(instances[id].n_qubits() == out.header.n_qubits, "instances differ in size");
    const GraphFeatures graph = GraphFeatures::from_graph(instances[id].graph());
    for (int t = 0; t <= t_max; ++t) {
      const RngStream rng = RngStream::keyed(seed, {static_cast<std::uint64_t>(StreamPurpose::kGenerate), id,
                                                    static_cast<std::uint64_t>(t)});
      for (const auto& tokens : sample({graph, static_cast<double>(t)}, n_samples, params, rng))
        out.records.push_back(make_record(id, t, tokens, out.header.mode));
    }
  }
  return out;
}

// ---------------------------------------------------------------- curves

EnergyCurves exact_sim_curves(const ExperimentConfig& cfg, const std::vector<HamiltonianInstance>& instances,
                              const std::vector<std::size_t>& ham_ids) {
  require(cfg.mode == PipelineMode::kKqd, "exact_sim curves exist only in kqd mode");
  std::vector<EnergyCurves> parts(ham_ids.size());
  parallel_for(ham_ids.size(), cfg.threads, [&](std::size_t i) {
    const PauliSum& h = instances.at(ham_ids[i]).pauli_sum;
    const KrylovElements el = direct_krylov_elements(h, cfg.d_eval, evolution_for(cfg, h));
    for (const auto& p : kqd_energy_curve(el, cfg.d_eval, {cfg.eps_cut_exact, ThresholdMode::kExact}))
      parts[i].push_back({ham_ids[i], p.d, p.energy, static_cast<std::size_t>(p.kept_dim)});
  });
  EnergyCurves out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

EnergyCurves sampled_curves(const ExperimentConfig& cfg, const std::vector<HamiltonianInstance>& instances,
                            const ShotDataset& shots, const std::vector<std::size_t>& ham_ids) {
  std::vector<EnergyCurves> parts(ham_ids.size());
  if (cfg.mode == PipelineMode::kKqd) {
    const auto grouped = shots.pauli_records();
    parallel_for(ham_ids.size(), cfg.threads, [&](std::size_t i) {
      const auto it = grouped.find(ham_ids[i]);
      if (it == grouped.end()) throw ValidationError("no records for instance " + std::to_string(ham_ids[i]));
      const PauliSum& h = instances.at(ham_ids[i]).pauli_sum;
      const KrylovElements el = estimate_krylov_elements(it->second, h, cfg.d_eval, cfg.estimator);
      for (const auto& p : kqd_energy_curve(el, cfg.d_eval, {cfg.eps_cut_sampled, ThresholdMode::kSampled}))
        parts[i].push_back({ham_ids[i], p.d, p.energy, static_cast<std::size_t>(p.kept_dim)});
    });
  } else {
    const auto grouped = shots.bitstrings();
    parallel_for(ham_ids.size(), cfg.threads, [&](std::size_t i) {
      const auto it = grouped.find(ham_ids[i]);
      if (it == grouped.end()) throw ValidationError("no records for instance " + std::to_string(ham_ids[i]));
      const PauliSum& h = instances.at(ham_ids[i]).pauli_sum;
      for (int k = 0; k < cfg.d_eval; ++k)
        if (!it->second.count(k))
          throw ValidationError("instance " + std::to_string(ham_ids[i]) + " has no records for t_index " +
                                std::to_string(k));
      for (const auto& p : skqd_energy_curve(h, it->second, cfg.d_eval, cfg.sz_filter))
        parts[i].push_back({ham_ids[i], p.d, p.energy, p.basis_size});
    });
  }
  EnergyCurves out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// ---------------------------------------------------------------- metrics

double rmse(const EnergyCurves& curves, const EnergyCurves& reference) {
  require(!reference.empty(), "empty reference curves");
  std::map<std::pair<std::size_t, int>, double> lookup;
  for (const auto& p : curves) lookup[{p.ham_id, p.d}] = p.energy;
  double total = 0.0;
  for (const auto& r : reference) {
    const auto it = lookup.find({r.ham_id, r.d});
    if (it == lookup.end())
      throw ValidationError("missing curve point (ham_id " + std::to_string(r.ham_id) + ", d " + std::to_string(r.d) + ")");
    total += (it->second - r.energy) * (it->second - r.energy);
  }
  return std::sqrt(total / static_cast<double>(reference.size()));
}

Quantiles quantiles(std::vector<double> values) {
  require(!values.empty(), "quantiles of an empty sample");
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  Quantiles q;
  q.count = values.size();
  q.min = values.front();
  q.max = values.back();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  const double iqr = q.q3 - q.q1;
  q.whisker_low = *std::lower_bound(values.begin(), values.end(), q.q1 - 1.5 * iqr);
  q.whisker_high = *(std::upper_bound(values.begin(), values.end(), q.q3 + 1.5 * iqr) - 1);
  return q;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string curves_csv(const EnergyCurves& curves) {
  std::string out = "ham_id,d,energy,dim\n";
  for (const auto& p : curves)
    out += std::to_string(p.ham_id) + ',' + std::to_string(p.d) + ',' + format_number(p.energy) + ',' +
           std::to_string(p.dim) + '\n';
  return out;
}

EnergyCurves parse_curves_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ham_id,d,energy,dim") throw ValidationError("not an energy-curve CSV");
  EnergyCurves out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(row, s, ',')) throw ValidationError("short curve row '" + line + "'");
    try {
      out.push_back({std::stoull(f[0]), std::stoi(f[1]), std::stod(f[2]), std::stoull(f[3])});
    } catch (const std::exception&) {
      throw ValidationError("bad curve row '" + line + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- commands

namespace {

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) { return fs::path(cfg.out_dir) / name; }

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw ValidationError("failed to write '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
}

std::vector<HamiltonianInstance> load_instances(const ExperimentConfig& cfg) {
  const fs::path path = out_path(cfg, "instances.json");
  if (!fs::exists(path)) throw ValidationError("'" + path.string() + "' not found; run gen-data first");
  try {
    const auto doc = nlohmann::json::parse(read_text(path));
    std::vector<HamiltonianInstance> out;
    for (const auto& j : doc.at("instances")) out.push_back(instance_from_json(j));
    require(out.size() == cfg.n_instances(), "instances.json does not match the config split");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed instances.json: " + std::string(e.what()));
  }
}

std::vector<std::size_t> test_ids(const ExperimentConfig& cfg) {
  std::vector<std::size_t> ids;
  for (std::size_t i = cfg.n_train; i < cfg.n_instances(); ++i) ids.push_back(i);
  return ids;
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg);
  write_text(out_path(cfg, "config.json"), cfg.to_json().dump(2) + "\n");
  const auto instances = experiment_instances(cfg);
  nlohmann::ordered_json doc;
  doc["n_train"] = cfg.n_train;
  doc["n_test"] = cfg.n_test;
  doc["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : instances) doc["instances"].push_back(instance_to_json(inst));
  write_text(out_path(cfg, "instances.json"), doc.dump(2) + "\n");
  for (const auto& [name, first, last, d] :
       {std::tuple<const char*, std::size_t, std::size_t, int>{"train.jsonl", 0, cfg.n_train, cfg.d_train},
        {"test.jsonl", cfg.n_train, cfg.n_instances(), cfg.d_eval}}) {
    std::ostringstream text;
    write_dataset(text, simulate_shots(cfg, instances, first, last, d));
    write_text(out_path(cfg, name), text.str());
  }
}

TrainState cmd_train(const ExperimentConfig& cfg, bool resume) {
  cfg.validate();
  const auto instances = load_instances(cfg);
  const ShotDataset shots = read_dataset(out_path(cfg, "train.jsonl").string());
  require(!shots.records.empty(), "training dataset is empty");
  const Dataset data = training_set(shots, instances);
  const fs::path ckpt = out_path(cfg, "model.gksr");
  TrainState state;
  if (resume && fs::exists(ckpt)) {
    state = read_checkpoint(ckpt.string()).state;
    require(state.params.scheme() == data.scheme, "checkpoint token scheme does not match the dataset");
    // the stopping rule follows the current config, so raising max_epochs extends a finished run
    state.finished = state.bad_epochs >= cfg.training.early_stop_patience || state.epoch >= cfg.training.max_epochs;
  } else {
    Architecture arch = cfg.model;
    double t_max = 0.0;
    for (const auto& c : data.conditions) t_max = std::max(t_max, c.t_index);
    arch.t_max_train = t_max > 0.0 ? t_max : 1.0;
    state = TrainState::start(ModelParams::initialize(arch, data.scheme));
  }
  const nlohmann::json meta = {{"config", cfg.to_json()}};
  while (!state.finished) {
    train_epochs(state, data, cfg.training, 1);
    std::ostringstream buf;
    write_checkpoint(buf, state, meta);
    write_text(ckpt, buf.str());
  }
  std::string trace = "epoch,train_nll,heldout_nll\n";
  for (const auto& e : state.trace)
    trace += std::to_string(e.epoch) + ',' + format_number(e.train_nll) + ',' + format_number(e.heldout_nll) + '\n';
  write_text(out_path(cfg, "loss_trace.csv"), trace);
  return state;
}

void cmd_generate(const ExperimentConfig& cfg, const std::vector<std::size_t>& ham_ids,
                  std::optional<std::size_t> n_samples) {
  cfg.validate();
  const auto instances = load_instances(cfg);
  const Checkpoint ck = read_checkpoint(out_path(cfg, "model.gksr").string());
  const TokenScheme& scheme = ck.state.best.scheme();
  const bool want_pauli = cfg.record_mode() == RecordMode::kPauli6;
  if (scheme.is_pauli6() != want_pauli)
    throw ValidationError("checkpoint token scheme '" + scheme.name() + "' does not match mode " +
                          pipeline_mode_name(cfg.mode));
  const auto ids = ham_ids.empty() ? test_ids(cfg) : ham_ids;
  const ShotDataset gen =
      generate_shots(ck.state.best, instances, ids, cfg.t_max(),
                     n_samples.value_or(cfg.samples_per_condition()), cfg.seed, cfg.seed);
  std::ostringstream text;
  write_dataset(text, gen);
  write_text(out_path(cfg, "generated.jsonl"), text.str());
}

EvalResult cmd_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto instances = load_instances(cfg);
  const auto ids = test_ids(cfg);
  require(!ids.empty(), "no test instances to evaluate");
  EvalResult result;
  std::vector<GroundState> ground(ids.size());
  parallel_for(ids.size(), cfg.threads, [&](std::size_t i) { ground[i] = exact_ground_energy(instances[ids[i]].pauli_sum); });
  for (std::size_t i = 0; i < ids.size(); ++i) result.ground[ids[i]] = ground[i];

  std::vector<std::string> sources = cfg.eval_sources();
  const std::string ref = cfg.reference_source();
  if (std::find(sources.begin(), sources.end(), ref) == sources.end()) sources.insert(sources.begin(), ref);
  for (const auto& src : sources) {
    if (src == "exact_sim") {
      result.curves[src] = exact_sim_curves(cfg, instances, ids);
    } else {
      const std::string file = src == "model" ? "generated.jsonl" : "test.jsonl";
      const fs::path path = out_path(cfg, file);
      if (!fs::exists(path)) throw ValidationError("missing curves for source '" + src + "': " + path.string() + " not found");
      result.curves[src] = sampled_curves(cfg, instances, read_dataset(path.string()), ids);
    }
    write_text(out_path(cfg, "curves_" + src + ".csv"), curves_csv(result.curves[src]));
  }

  std::string ground_csv = "ham_id,e0,overlap_sq\n";
  for (const auto& [id, g] : result.ground)
    ground_csv += std::to_string(id) + ',' + format_number(g.energy) + ',' + format_number(g.overlap_sq) + '\n';
  write_text(out_path(cfg, "ground.csv"), ground_csv);

  std::string summary = "source,rmse,delta_e_mean,delta_e_median,n_instances,d_eval\n";
  std::string quant = "source,count,min,whisker_low,q1,median,q3,whisker_high,max\n";
  std::string by_d = "source,d,rmse\n";
  const EnergyCurves& reference = result.curves.at(ref);
  for (const auto& src : sources) {
    const EnergyCurves& curves = result.curves.at(src);
    SourceSummary s{src, rmse(curves, reference), {}};
    for (const auto& p : curves)
      if (p.d == cfg.d_eval) s.delta_e.push_back(std::abs(p.energy - result.ground.at(p.ham_id).energy));
    double mean = 0.0;
    for (double v : s.delta_e) mean += v;
    mean /= static_cast<double>(s.delta_e.size());
    const Quantiles q = quantiles(s.delta_e);
    summary += src + ',' + format_number(s.rmse) + ',' + format_number(mean) + ',' + format_number(q.median) + ',' +
               std::to_string(s.delta_e.size()) + ',' + std::to_string(cfg.d_eval) + '\n';
    quant += src + ',' + std::to_string(q.count) + ',' + format_number(q.min) + ',' + format_number(q.whisker_low) + ',' +
             format_number(q.q1) + ',' + format_number(q.median) + ',' + format_number(q.q3) + ',' +
             format_number(q.whisker_high) + ',' + format_number(q.max) + '\n';
    for (int d = 1; d <= cfg.d_eval; ++d) {
      EnergyCurves a, b;
      for (const auto& p : curves)
        if (p.d == d) a.push_back(p);
      for (const auto& p : reference)
        if (p.d == d) b.push_back(p);
      by_d += src + ',' + std::to_string(d) + ',' + format_number(rmse(a, b)) + '\n';
    }
    result.summaries.push_back(std::move(s));
  }
  write_text(out_path(cfg, "summary.csv"), summary);
  write_text(out_path(cfg, "quantiles.csv"), quant);
  write_text(out_path(cfg, "rmse_by_d.csv"), by_d);
  return result;
}

std::string cmd_report(const ExperimentConfig& cfg) {
  const std::string summary = read_text(out_path(cfg, "summary.csv"));
  const std::string quant = read_text(out_path(cfg, "quantiles.csv"));
  auto table = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::string row = "|";
      std::size_t cols = 0;
      std::istringstream cells(line);
      std::string cell;
      while (std::getline(cells, cell, ',')) {
        row += " " + cell + " |";
        ++cols;
      }
      out += row + "\n";
      if (first) {
        out += "|";
        for (std::size_t c = 0; c < cols; ++c) out += "---|";
        out += "\n";
        first = false;
      }
    }
    return out;
  };
  std::string text = "# Experiment report\n\n";
  text += "- family: " + family_name(cfg.family.family) + ", n = " + std::to_string(cfg.family.n_qubits) + "\n";
  text += "- mode: " + pipeline_mode_name(cfg.mode) + ", shots: " + std::to_string(cfg.shots) +
          ", D_train: " + std::to_string(cfg.d_train) + ", D_eval: " + std::to_string(cfg.d_eval) + "\n";
  text += "- instances: " + std::to_string(cfg.n_train) + " train / " + std::to_string(cfg.n_test) + " test, seed " +
          std::to_string(cfg.seed) + "\n";
  text += "- RMSE reference: " + cfg.reference_source() + "; delta E against exact diagonalization at D_eval\n\n";
  text += "## Summary\n\n" + table(summary) + "\n## Delta E quantiles\n\n" + table(quant);
  const fs::path trace = out_path(cfg, "loss_trace.csv");
  if (fs::exists(trace)) {
    const std::string t = read_text(trace);
    const auto lines = static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
    text += "\n## Training\n\n" + std::to_string(lines > 0 ? lines - 1 : 0) + " epochs logged in loss_trace.csv\n";
  }
  write_text(out_path(cfg, "report.md"), text);
  return text;
}

std::vector<ComplexityRow> complexity_table(Family family, const std::vector<double>& eps,
                                            const std::vector<std::size_t>& sizes, int k_max, double delta) {
  require(!eps.empty() && !sizes.empty(), "need at least one eps and one size");
  std::vector<ComplexityRow> rows;
  for (std::size_t n : sizes) {
    const auto inst = regenerate_instance(FamilySpec::with_defaults(family, n), 0);
    const std::size_t terms = inst.pauli_sum.terms().size();
    for (double e : eps) rows.push_back({e, n, terms, sample_complexity(e, terms, k_max, delta)});
  }
  return rows;
}

std::string complexity_csv(const std::vector<ComplexityRow>& rows) {
  std::string out = "eps,n_qubits,n_observables,shadow_size\n";
  for (const auto& r : rows)
    out += format_number(r.eps) + ',' + std::to_string(r.n_qubits) + ',' + std::to_string(r.n_observables) + ',' +
           std::to_string(r.shadow_size) + '\n';
  return out;
}

}  // namespace genksr
