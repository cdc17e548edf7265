/**
 * Copyright 2026 The tlbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tlbench/harness.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "tlbench/error.hpp"
#include "tlbench/synth.hpp"

namespace tlbench::harness {
namespace {

namespace fs = std::filesystem;

Resolver accept_all() {
  return {[](const std::string &) { return true; }, [](const std::string &) { return true; }};
}

config::ExperimentConfig small_config(std::vector<std::string> datasets) {
  auto c = config::tiny_profile();
  c.datasets = std::move(datasets);
  c.image_size = 16;
  c.head_epochs = 1;
  c.total_epochs = 2;
  c.qat_epochs = 1;
  c.batch_size = 16;
  c.calibration_images = 16;
  c.pretrain_images = 48;
  c.pretrain_epochs = 1;
  c.approaches = {"fine_tuning"};
  c.policies = {"norm_aug"};
  c.schemes = {"baseline_fp32", "ptq_int8"};
  return c;
}

class HarnessRunTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "tlbench_harness_test";
    fs::remove_all(root_);
    synth::write_pattern_dataset(root_ / "shapes", {4, 12, 16, 3});
    fs::create_directories(root_ / "broken");
    std::ofstream(root_ / "broken" / "manifest.jsonl") << "{\"path\": \"gone.ppm\", \"label\": \"a\"}\n"
                                                      << "{\"path\": \"gone2.ppm\", \"label\": \"b\"}\n";
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }
  static fs::path root_;
};

fs::path HarnessRunTest::root_;

TEST(ExpandGridTest, FullFactorialCount) {
  auto c = config::full_profile();
  c.datasets = {"a", "b", "c", "d"};
  c.architectures = {"m1", "m2", "m3", "m4", "m5"};
  const auto runs = expand_grid(c, accept_all());
  EXPECT_EQ(runs.size(), 80u);
  std::set<std::string> labels;
  for (size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].index, i);
    labels.insert(runs[i].label());
  }
  EXPECT_EQ(labels.size(), 80u);
  EXPECT_EQ(runs.front().dataset, "a");
  EXPECT_EQ(runs.front().approach, "fine_tuning");
  EXPECT_EQ(runs.back().policy, "extra_aug");
}

TEST(ExpandGridTest, SeedsAreStable) {
  auto c = config::full_profile();
  c.datasets = {"a", "b"};
  const auto first = expand_grid(c, accept_all());
  std::reverse(c.datasets.begin(), c.datasets.end());
  const auto reordered = expand_grid(c, accept_all());
  for (const auto &r : first)
    for (const auto &q : reordered)
      if (r.label() == q.label()) EXPECT_EQ(r.seed, q.seed);
  c.seed = 1;
  EXPECT_NE(expand_grid(c, accept_all())[0].seed, first[0].seed);
}

TEST(ExpandGridTest, DegenerateAndInvalid) {
  auto c = config::full_profile();
  c.datasets = {"a"};
  c.approaches = {"l2sp"};
  c.policies = {"norm_aug"};
  EXPECT_EQ(expand_grid(c, accept_all()).size(), 1u);
  c.approaches.clear();
  EXPECT_THROW(expand_grid(c, accept_all()), Error);
  c.approaches = {"l2sp"};
  c.architectures = {"resnet_giant"};
  EXPECT_THROW(expand_grid(c), Error);
  c.architectures = {"tiny_cnn"};
  c.datasets = {"/nonexistent/manifest.jsonl"};
  EXPECT_THROW(expand_grid(c), Error);
}

TEST(HarnessTest, NamesAndScenarios) {
  EXPECT_EQ(dataset_name("/x/Event8/manifest.jsonl"), "Event8");
  EXPECT_EQ(dataset_name("runs/scene15.jsonl"), "scene15");
  auto c = config::full_profile();
  EXPECT_EQ(scenarios_for(c), std::vector<std::string>{"test"});
  c.protocol = "idol";
  EXPECT_EQ(scenarios_for(c), (std::vector<std::string>{"SBSL", "SBDL", "DBSL", "DBDL"}));
}

TEST_F(HarnessRunTest, GridRunsResumesAndRecordsMetadata) {
  const auto cfg = small_config({(root_ / "shapes" / "manifest.jsonl").string()});
  const auto out = root_ / "run";
  std::vector<std::string> log;
  const auto first = run_grid(cfg, out, [&](const std::string &m) { log.push_back(m); });
  EXPECT_EQ(first.cells, 1u);
  EXPECT_EQ(first.trained, 1u);
  EXPECT_EQ(first.failed_rows, 0u);
  EXPECT_FALSE(log.empty());
  const auto table = results::ResultStore(out / "results.jsonl").load();
  ASSERT_EQ(table.size(), 2u);
  for (const auto &row : table.rows()) {
    ASSERT_TRUE(row.ok()) << row.metadata.dump();
    EXPECT_EQ(row.key.dataset, "shapes");
    EXPECT_GE(row.balanced_accuracy_percent, 0.0);
    EXPECT_LE(row.balanced_accuracy_percent, 100.0);
    for (const char *field : {"seed", "epochs", "plan", "pipeline", "head", "quant", "config", "started", "finished",
                              "snapshot", "evaluation"})
      EXPECT_TRUE(row.metadata.contains(field)) << field;
    const auto snap = load_snapshot(row.metadata.at("snapshot").get<std::string>());
    EXPECT_EQ(snap.scheme, row.key.scheme);
    const auto data = prepare_data(cfg.datasets[0], cfg);
    EXPECT_NEAR(evaluate_percent(snap, data.eval.at(0).data), row.balanced_accuracy_percent, 1e-9);
  }
  const auto again = run_grid(cfg, out);
  EXPECT_EQ(again.skipped, 1u);
  EXPECT_EQ(again.trained, 0u);
  EXPECT_EQ(results::ResultStore(out / "results.jsonl").load().size(), 2u);
}

TEST_F(HarnessRunTest, FailedCellsBecomeRows) {
  auto cfg = small_config({(root_ / "broken" / "manifest.jsonl").string()});
  const auto out = root_ / "broken_run";
  const auto summary = run_grid(cfg, out);
  EXPECT_EQ(summary.failed_rows, 2u);
  const auto table = results::ResultStore(out / "results.jsonl").load();
  ASSERT_EQ(table.size(), 2u);
  for (const auto &row : table.rows()) {
    EXPECT_EQ(row.status, "failed");
    EXPECT_TRUE(row.metadata.contains("error"));
  }
  // Failed cells are retried on the next run.
  EXPECT_EQ(run_grid(cfg, out).trained, 1u);
}

}  // namespace
}  // namespace tlbench::harness
