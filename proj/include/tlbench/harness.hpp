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
#ifndef TLBENCH_HARNESS_HPP_
#define TLBENCH_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tlbench/augment.hpp"
#include "tlbench/config.hpp"
#include "tlbench/data.hpp"
#include "tlbench/nn.hpp"
#include "tlbench/results.hpp"

namespace tlbench::harness {

using Logger = std::function<void(const std::string &)>;

struct Resolver {
  std::function<bool(const std::string &)> architecture;
  std::function<bool(const std::string &)> dataset;
};

// Architectures with a trainable adapter in this build, datasets as existing
// manifest files.
Resolver default_resolver();

struct RunDescriptor {
  size_t index = 0;
  std::string dataset;
  std::string architecture;
  std::string approach;
  std::string policy;
  uint64_t seed = 0;

  std::string label() const;
};

// Cartesian product in config order (dataset, architecture, approach,
// policy). Seeds depend only on the config seed and the factor names.
std::vector<RunDescriptor> expand_grid(const config::ExperimentConfig &cfg, const Resolver &resolver = default_resolver());

// Display name of a dataset reference (manifest stem, or its parent
// directory for files named manifest.*).
std::string dataset_name(const std::string &reference);

// Pre-trained backbone for an architecture, cached under `cache_dir`.
nn::TinyCnn pretrained_backbone(const std::string &architecture, const config::ExperimentConfig &cfg,
                                const std::filesystem::path &cache_dir, const Logger &log = {});

struct EvalSet {
  std::string scenario;
  nn::LabeledImages data;
};

struct PreparedData {
  std::vector<std::string> classes;
  nn::LabeledImages train;
  std::vector<EvalSet> eval;
  nlohmann::json description;
};

// Loads, splits and decodes a dataset for the configured protocol.
PreparedData prepare_data(const std::string &dataset, const config::ExperimentConfig &cfg);

nn::LabeledImages decode(const data::DatasetManifest &manifest);

// Model bundle written under <out>/snapshots.
struct Snapshot {
  nn::Classifier model;
  nn::Numerics numerics;
  augment::AugPipeline pipeline;
  std::vector<std::string> classes;
  std::string scheme;
  nlohmann::json metadata;
};

void save_snapshot(const Snapshot &snapshot, const std::filesystem::path &path);
Snapshot load_snapshot(const std::filesystem::path &path);

// Balanced accuracy (percent) of a snapshot on labelled images.
double evaluate_percent(const Snapshot &snapshot, const nn::LabeledImages &data, nlohmann::json *details = nullptr);

// Trains one cell and evaluates every configured scheme on every scenario.
// Failures are returned as failed rows, never thrown.
std::vector<results::ResultRow> run_cell(const RunDescriptor &descriptor, const config::ExperimentConfig &cfg,
                                         const std::filesystem::path &out_dir, const Logger &log = {});

struct GridSummary {
  size_t cells = 0;
  size_t skipped = 0;
  size_t trained = 0;
  size_t failed_rows = 0;
};

// Runs every cell whose rows are not all stored successfully; appends rows to
// <out>/results.jsonl.
GridSummary run_grid(const config::ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                     const Logger &log = {}, const Resolver &resolver = default_resolver());

std::vector<std::string> scenarios_for(const config::ExperimentConfig &cfg);

}  // namespace tlbench::harness

#endif  // TLBENCH_HARNESS_HPP_
