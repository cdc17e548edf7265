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
#ifndef TLBENCH_REPORT_HPP_
#define TLBENCH_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tlbench/metrics.hpp"
#include "tlbench/results.hpp"

namespace tlbench::report {

struct Comparison {
  std::string name;
  std::string factor;
  std::string level_a;
  std::string level_b;
  std::vector<std::string> holding;
  results::RowFilter filter;
};

// Augmentation policy and training approach, each over the standard test
// scenario and over the different-robot robustness scenarios.
std::vector<Comparison> headline_comparisons();

struct ReportOptions {
  metrics::ComparisonOptions stats;
  std::optional<results::ResultTable> fixtures;
};

struct ReportBundle {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> files;
  nlohmann::json stats = nlohmann::json::object();
  size_t rows = 0;
};

// Markdown matrix for one (scheme, scenario): dataset blocks x architecture
// rows x strategy columns, best value per row underlined.
std::string render_matrix(const results::ResultTable &table, const std::string &scheme, const std::string &scenario,
                          const results::ResultTable *fixtures = nullptr);

// Writes results.csv, report.md, report.json and slopegraph_<name>.csv files.
ReportBundle emit_report(const results::ResultTable &table, const std::filesystem::path &out_dir,
                         const ReportOptions &options = {});

nlohmann::json run_comparisons(const results::ResultTable &table, const metrics::ComparisonOptions &options);

}  // namespace tlbench::report

#endif  // TLBENCH_REPORT_HPP_
