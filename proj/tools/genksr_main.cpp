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


// genksr: dataset generation, training, sampling and evaluation of
// generative Krylov energy estimators.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genksr/errors.hpp"
#include "genksr/pipeline.hpp"

namespace {

using namespace genksr;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed override");
  cmd->add_option("--threads", f.threads, "worker threads (default: GENKSR_THREADS or 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", f.mode, "kqd or skqd")->check(CLI::IsMember({"kqd", "skqd"}));
}

/// Explicit --config, else <out>/config.json when present, else defaults.
ExperimentConfig resolve(const CommonFlags& f) {
  nlohmann::json doc = nlohmann::json::object();
  std::string path = f.config;
  if (path.empty() && !f.out.empty() && std::filesystem::exists(std::filesystem::path(f.out) / "config.json"))
    path = (std::filesystem::path(f.out) / "config.json").string();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
  }
  if (!f.out.empty()) doc["out"] = f.out;
  if (f.seed) doc["seed"] = *f.seed;
  if (!f.mode.empty()) doc["mode"] = f.mode;
  doc["threads"] = f.threads ? *f.threads : default_threads();
  return ExperimentConfig::from_json(doc);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(std::stod(item, &used));
      } else {
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"genksr: generative Krylov energy estimation on simulated spin systems"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, generate_flags, eval_flags, report_flags;
  auto* gen = app.add_subcommand("gen-data", "simulate shot datasets for the training and test instances");
  add_common(gen, gen_flags);

  auto* train = app.add_subcommand("train", "train the generative model on train.jsonl");
  add_common(train, train_flags);
  bool resume = false;
  train->add_flag("--resume", resume, "continue from <out>/model.gksr");

  auto* generate = app.add_subcommand("generate", "sample shots from the trained model");
  add_common(generate, generate_flags);
  std::string instance_ids;
  std::optional<int> t_max;
  std::optional<std::size_t> n_samples;
  generate->add_option("--instances", instance_ids, "comma-separated ham_ids (default: test instances)");
  generate->add_option("--t-max", t_max, "largest t_index to generate");
  generate->add_option("--n-samples", n_samples, "samples per (instance, t_index)");

  auto* eval = app.add_subcommand("eval", "energy curves, RMSE and delta-E summaries");
  add_common(eval, eval_flags);
  std::string sources;
  eval->add_option("--sources", sources, "comma-separated sources");

  auto* complexity = app.add_subcommand("complexity", "classical-shadow sample-complexity table");
  std::string eps_list = "0.1,0.2,0.5,1.0", size_list = "5,10,15,20", family = "heis1d", complexity_out;
  int locality = 2;
  double delta = 0.01;
  complexity->add_option("--eps", eps_list, "comma-separated target accuracies");
  complexity->add_option("--sizes", size_list, "comma-separated qubit counts");
  complexity->add_option("--family", family, "heis1d, j1j2_2d or xxz_chain");
  complexity->add_option("--locality", locality, "Pauli weight k");
  complexity->add_option("--delta", delta, "failure probability");
  complexity->add_option("--out", complexity_out, "CSV path (default: stdout)");

  auto* report = app.add_subcommand("report", "write report.md from the eval outputs");
  add_common(report, report_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    const auto cfg = resolve(gen_flags);
    cmd_gen_data(cfg);
    std::cerr << "wrote datasets to " << cfg.out_dir << "\n";
  } else if (train->parsed()) {
    const auto cfg = resolve(train_flags);
    const TrainState st = cmd_train(cfg, resume);
    for (const auto& e : st.trace)
      std::cerr << "epoch " << e.epoch << " train_nll " << e.train_nll << " heldout_nll " << e.heldout_nll << "\n";
  } else if (generate->parsed()) {
    ExperimentConfig cfg = resolve(generate_flags);
    if (t_max) cfg.generate_t_max = *t_max;
    cfg.validate();
    std::vector<std::size_t> ids;
    if (!instance_ids.empty()) ids = parse_list<std::size_t>(instance_ids, "instance");
    cmd_generate(cfg, ids, n_samples);
    std::cerr << "wrote " << (std::filesystem::path(cfg.out_dir) / "generated.jsonl").string() << "\n";
  } else if (eval->parsed()) {
    ExperimentConfig cfg = resolve(eval_flags);
    if (!sources.empty()) {
      cfg.sources.clear();
      std::stringstream ss(sources);
      std::string s;
      while (std::getline(ss, s, ',')) cfg.sources.push_back(s);
      cfg.validate();
    }
    const EvalResult r = cmd_eval(cfg);
    for (const auto& s : r.summaries) std::cout << s.source << " rmse " << format_number(s.rmse) << "\n";
  } else if (complexity->parsed()) {
    const auto rows = complexity_table(parse_family(family), parse_list<double>(eps_list, "eps"),
                                       parse_list<std::size_t>(size_list, "size"), locality, delta);
    const std::string csv = complexity_csv(rows);
    if (complexity_out.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(complexity_out, std::ios::binary);
      if (!out || !(out << csv)) throw ValidationError("cannot write '" + complexity_out + "'");
    }
  } else if (report->parsed()) {
    std::cout << cmd_report(resolve(report_flags));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const genksr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
