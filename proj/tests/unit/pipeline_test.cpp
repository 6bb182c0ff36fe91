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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "genksr/errors.hpp"

namespace genksr {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory per test.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("genksr_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny_config(const fs::path& out, PipelineMode mode) {
  nlohmann::json doc = {{"family", {{"name", "heis1d"}, {"n_qubits", 4}}},
                        {"split", {{"n_train", 2}, {"n_test", 2}}},
                        {"mode", pipeline_mode_name(mode)},
                        {"shots", 60},
                        {"d_train", 2},
                        {"d_eval", 4},
                        {"seed", 5},
                        {"model", {{"d_model", 8}, {"n_blocks", 1}, {"n_heads", 2}, {"mlp_hidden", 8}, {"gcn_hidden", 8}}},
                        {"training", {{"max_epochs", 2}, {"batch_size", 32}}},
                        {"out", out.string()}};
  return ExperimentConfig::from_json(doc);
}

TEST(ExperimentConfig, DefaultsRoundTrip) {
  const ExperimentConfig c = ExperimentConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(c.n_train, 30U);
  EXPECT_EQ(c.n_test, 20U);
  EXPECT_EQ(c.d_train, 5);
  EXPECT_EQ(c.d_eval, 15);
  EXPECT_EQ(c.shots, 1000U);
  EXPECT_EQ(c.trotter_steps, 6);
  const ExperimentConfig d = ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(d.to_json(), c.to_json());
}

TEST(ExperimentConfig, SeedDrivesModelAndTraining) {
  const ExperimentConfig c = ExperimentConfig::from_json({{"seed", 42}});
  EXPECT_EQ(c.model.seed, 42U);
  EXPECT_EQ(c.training.master_seed, 42U);
}

TEST(ExperimentConfig, RejectsInvalid) {
  EXPECT_THROW(ExperimentConfig::from_json({{"d_train", 6}, {"d_eval", 5}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"d_train", 0}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"bogus", 1}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"simulator", {{"trotter_order", 3}}}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"split", {{"n_train", 3}, {"n_test", 2}, {"n_instances", 6}}}}),
               ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"mode", "skqd"}, {"eval", {{"sources", {"classical_shadow"}}}}}),
               ValidationError);
  EXPECT_THROW(ExperimentConfig::from_json({{"shots", "many"}}), ValidationError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ValidationError);
}

TEST(Dataset, RoundTripAndGrouping) {
  ShotDataset d;
  d.header = {3, RecordMode::kPauli6, 9, "device_sim", 4};
  d.records.push_back({0, 0, "XYZZ", "1010"});
  d.records.push_back({1, 2, "ZZZX", "0001"});
  d.records.push_back({0, 0, "YYYY", "1111"});
  std::stringstream buf;
  write_dataset(buf, d);
  const ShotDataset back = read_dataset(buf);
  EXPECT_EQ(back.records, d.records);
  EXPECT_EQ(back.header.to_json(), d.header.to_json());
  const auto grouped = back.pauli_records();
  EXPECT_EQ(grouped.at(0).at(0).size(), 2U);
  EXPECT_EQ(grouped.at(1).at(2)[0].bases[3], Basis::X);
  EXPECT_EQ(record_tokens(d.records[0], RecordMode::kPauli6), (TokenSequence{1, 2, 5, 4}));
  EXPECT_THROW(back.bitstrings(), ValidationError);
}

TEST(Dataset, HeaderLine) {
  ShotDataset d;
  d.header = {2, RecordMode::kComputational, 1, "model", 2};
  d.records.push_back(make_record(4, 1, Bitstring{0b01}, 2));
  std::stringstream buf;
  write_dataset(buf, d);
  EXPECT_EQ(buf.str(),
            "{\"n_qubits\":2,\"token_scheme\":\"computational\",\"master_seed\":1,\"source\":\"model\",\"width\":2}\n"
            "{\"ham_id\":4,\"t_index\":1,\"mode\":\"computational\",\"bits\":\"10\"}\n");
}

TEST(Dataset, RejectsMalformedRecords) {
  auto parse = [](const std::string& text) {
    std::stringstream in(text);
    return read_dataset(in);
  };
  const std::string head = "{\"n_qubits\":2,\"token_scheme\":\"pauli6\",\"master_seed\":0,\"width\":2}\n";
  EXPECT_NO_THROW(parse(head));
  EXPECT_THROW(parse(""), ValidationError);
  EXPECT_THROW(parse("not json\n"), ValidationError);
  EXPECT_THROW(parse(head + "{\"ham_id\":0,\"t_index\":0,\"mode\":\"pauli6\",\"bases\":\"XZ\",\"bits\":\"101\"}\n"),
               ValidationError);
  EXPECT_THROW(parse(head + "{\"ham_id\":0,\"t_index\":0,\"mode\":\"pauli6\",\"bits\":\"10\"}\n"), ValidationError);
  EXPECT_THROW(parse(head + "{\"ham_id\":0,\"t_index\":0,\"mode\":\"pauli6\",\"bases\":\"XQ\",\"bits\":\"10\"}\n"),
               ValidationError);
  EXPECT_THROW(parse(head + "{\"ham_id\":0,\"t_index\":0,\"mode\":\"computational\",\"bits\":\"10\"}\n"),
               ValidationError);
  EXPECT_THROW(parse("{\"n_qubits\":2,\"token_scheme\":\"pauli6\",\"master_seed\":0,\"width\":5}\n"), ValidationError);
  try {
    parse(head + "{\"ham_id\":0,\"t_index\":0,\"mode\":\"pauli6\",\"bases\":\"XZ\",\"bits\":\"2a\"}\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(SimulateShots, SingleNeelShot) {
  ExperimentConfig c = ExperimentConfig::from_json({{"family", {{"name", "heis1d"}, {"n_qubits", 5}}},
                                                    {"split", {{"n_train", 1}, {"n_test", 0}}},
                                                    {"mode", "skqd"},
                                                    {"shots", 1},
                                                    {"d_train", 1},
                                                    {"d_eval", 1}});
  const auto inst = experiment_instances(c);
  const ShotDataset d = simulate_shots(c, inst, 0, 1, 1);
  ASSERT_EQ(d.records.size(), 1U);
  EXPECT_EQ(d.records[0].bits, "10101");
  EXPECT_TRUE(d.records[0].bases.empty());
}

TEST(SimulateShots, PaperScaleRecordCount) {
  ExperimentConfig c = ExperimentConfig::from_json({{"shots", 10000}});
  const auto inst = experiment_instances(c);
  const ShotDataset d = simulate_shots(c, inst, 0, c.n_train, c.d_train);
  EXPECT_EQ(d.records.size(), 1500000U);
  EXPECT_EQ(d.header.width, 6U);
}

TEST(SimulateShots, DeterministicAcrossThreadCounts) {
  ExperimentConfig c = tiny_config("unused", PipelineMode::kKqd);
  const auto inst = experiment_instances(c);
  const ShotDataset a = simulate_shots(c, inst, 0, 4, 3);
  c.threads = 3;
  const ShotDataset b = simulate_shots(c, inst, 0, 4, 3);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.records.size(), 4U * 3U * 60U);
  c.seed = 6;
  EXPECT_NE(simulate_shots(c, experiment_instances(c), 0, 4, 3).records, a.records);
}

TEST(TrainingSet, OneConditionPerInstanceAndStep) {
  const ExperimentConfig c = tiny_config("unused", PipelineMode::kSkqd);
  const auto inst = experiment_instances(c);
  const ShotDataset d = simulate_shots(c, inst, 0, 2, 3);
  const Dataset data = training_set(d, inst);
  EXPECT_EQ(data.conditions.size(), 6U);
  EXPECT_EQ(data.examples.size(), d.records.size());
  EXPECT_EQ(data.scheme, TokenScheme::computational(4));
  EXPECT_EQ(data.examples.front().tokens, (TokenSequence{1, 0, 1, 0}));
}

TEST(Metrics, Rmse) {
  const EnergyCurves a{{0, 1, -1.0, 1}, {0, 2, -2.0, 2}};
  EXPECT_EQ(rmse(a, a), 0.0);
  const EnergyCurves one{{3, 1, 0.5, 1}};
  EXPECT_EQ(rmse(EnergyCurves{{3, 1, 1.5, 1}}, one), 1.0);
  EXPECT_NEAR(rmse(EnergyCurves{{0, 1, 0.0, 1}, {0, 2, -2.0, 2}}, a), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(rmse(one, a), ValidationError);
}

TEST(Metrics, Quantiles) {
  const Quantiles q = quantiles({5, 1, 4, 2, 3, 100});
  EXPECT_EQ(q.count, 6U);
  EXPECT_EQ(q.min, 1);
  EXPECT_EQ(q.max, 100);
  EXPECT_DOUBLE_EQ(q.median, 3.5);
  EXPECT_DOUBLE_EQ(q.q1, 2.25);
  EXPECT_DOUBLE_EQ(q.q3, 4.75);
  EXPECT_EQ(q.whisker_low, 1);
  EXPECT_EQ(q.whisker_high, 5);
  EXPECT_THROW(quantiles({}), ValidationError);
}

TEST(Metrics, CurvesCsvRoundTrip) {
  const EnergyCurves c{{0, 1, -1.0 / 3.0, 1}, {7, 15, -6.25e-9, 4}};
  const EnergyCurves back = parse_curves_csv(curves_csv(c));
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0].energy, c[0].energy);
  EXPECT_EQ(back[1].energy, c[1].energy);
  EXPECT_EQ(back[1].ham_id, 7U);
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_THROW(parse_curves_csv("x,y\n"), ValidationError);
}

TEST(Complexity, Table) {
  const auto rows = complexity_table(Family::kHeis1d, {0.1, 1.0}, {5, 10, 20}, 2, 0.01);
  ASSERT_EQ(rows.size(), 6U);
  EXPECT_EQ(rows[0].n_observables, 12U);
  EXPECT_EQ(rows[0].shadow_size, 100 * rows[1].shadow_size);
  for (std::size_t i = 2; i < rows.size(); i += 2) EXPECT_GE(rows[i].shadow_size, rows[i - 2].shadow_size);
  const double growth = static_cast<double>(rows[4].shadow_size) / rows[0].shadow_size;
  EXPECT_LE(growth, 1.0 + std::log(57.0) / std::log(12.0));
  EXPECT_NE(complexity_csv(rows).find("0.1,5,12,"), std::string::npos);
}

TEST(ParallelFor, RunsEveryIndexAndRethrows) {
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw NumericError("boom");
               }),
               NumericError);
}

TEST(Commands, GenDataAndEvalAreDeterministic) {
  std::map<std::string, std::string> first;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = scratch("det" + std::to_string(run));
    const ExperimentConfig c = tiny_config(dir, PipelineMode::kKqd);
    cmd_gen_data(c);
    const EvalResult r = cmd_eval(c);
    EXPECT_EQ(r.summaries.front().source, "exact_sim");
    EXPECT_EQ(r.summaries.front().rmse, 0.0);
    for (const char* f : {"train.jsonl", "test.jsonl", "curves_exact_sim.csv", "curves_classical_shadow.csv",
                          "summary.csv", "quantiles.csv", "ground.csv"}) {
      const std::string text = slurp(dir / f);
      EXPECT_FALSE(text.empty()) << f;
      if (run == 0) first[f] = text;
      else EXPECT_EQ(text, first[f]) << f;
    }
  }
}

TEST(Commands, SkqdPipeline) {
  const fs::path dir = scratch("skqd");
  ExperimentConfig c = tiny_config(dir, PipelineMode::kSkqd);
  cmd_gen_data(c);
  cmd_train(c);
  cmd_generate(c);
  const EvalResult r = cmd_eval(c);
  ASSERT_EQ(r.summaries.size(), 2U);
  EXPECT_EQ(r.summaries[0].source, "device_sim");
  EXPECT_EQ(r.summaries[1].source, "model");
  for (const auto& p : r.curves.at("device_sim")) EXPECT_GE(p.energy, r.ground.at(p.ham_id).energy - 1e-9);
  EXPECT_NE(cmd_report(c).find("| device_sim |"), std::string::npos);
}

TEST(Commands, GenerateChecksSchemeAndSupportsExtrapolation) {
  const fs::path dir = scratch("gen");
  ExperimentConfig c = tiny_config(dir, PipelineMode::kKqd);
  cmd_gen_data(c);
  cmd_train(c);
  c.generate_t_max = 2 * c.d_train;
  cmd_generate(c, {}, 3);
  const ShotDataset g = read_dataset((dir / "generated.jsonl").string());
  EXPECT_EQ(g.header.source, "model");
  EXPECT_EQ(g.records.size(), 2U * static_cast<std::size_t>(2 * c.d_train + 1) * 3U);
  cmd_generate(c, {0}, 0);
  const ShotDataset empty = read_dataset((dir / "generated.jsonl").string());
  EXPECT_TRUE(empty.records.empty());
  EXPECT_EQ(empty.header.width, 5U);
  ExperimentConfig other = c;
  other.mode = PipelineMode::kSkqd;
  EXPECT_THROW(cmd_generate(other), ValidationError);
}

TEST(Commands, ResumeReproducesFinalLoss) {
  const fs::path a = scratch("resume_a"), b = scratch("resume_b");
  ExperimentConfig ca = tiny_config(a, PipelineMode::kKqd);
  ca.training.max_epochs = 3;
  cmd_gen_data(ca);
  const TrainState straight = cmd_train(ca);

  ExperimentConfig cb = ca;
  cb.out_dir = b.string();
  cmd_gen_data(cb);
  cb.training.max_epochs = 1;
  cmd_train(cb);
  cb.training.max_epochs = 3;
  // the stored state is finished after epoch 1; reopen it for two more epochs
  Checkpoint ck = read_checkpoint((b / "model.gksr").string());
  ck.state.finished = false;
  write_checkpoint((b / "model.gksr").string(), ck.state);
  const TrainState resumed = cmd_train(cb, true);
  ASSERT_EQ(resumed.trace.size(), straight.trace.size());
  EXPECT_EQ(resumed.trace.back().heldout_nll, straight.trace.back().heldout_nll);
  EXPECT_EQ(slurp(a / "loss_trace.csv"), slurp(b / "loss_trace.csv"));
}

TEST(Commands, MissingInputsAreValidationErrors) {
  const fs::path dir = scratch("missing");
  const ExperimentConfig c = tiny_config(dir, PipelineMode::kKqd);
  EXPECT_THROW(cmd_train(c), ValidationError);
  cmd_gen_data(c);
  ExperimentConfig with_model = c;
  with_model.sources = {"exact_sim", "model"};
  EXPECT_THROW(cmd_eval(with_model), ValidationError);
  EXPECT_THROW(cmd_generate(c), ValidationError);
}

}  // namespace
}  // namespace genksr
