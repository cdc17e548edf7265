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
#ifndef TLBENCH_RESULTS_HPP_
#define TLBENCH_RESULTS_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tlbench::results {

inline constexpr std::array<std::string_view, 6> kFactors = {"dataset", "architecture", "approach",
                                                               "policy",  "scheme",       "scenario"};

struct ResultKey {
  std::string dataset;
  std::string architecture;
  std::string approach;
  std::string policy;
  std::string scheme;
  std::string scenario;

  const std::string &get(std::string_view factor) const;
  std::string &get(std::string_view factor);
  std::string to_string() const;
  auto operator<=>(const ResultKey &) const = default;
};

bool is_factor(std::string_view name);

struct ResultRow {
  ResultKey key;
  // Percent in [0, 100]; NaN for failed cells.
  double balanced_accuracy_percent = 0.0;
  std::string status = "ok";
  nlohmann::json metadata = nlohmann::json::object();

  bool ok() const { return status == "ok"; }
};

// Factor -> admissible values. An empty map admits every row.
using RowFilter = std::map<std::string, std::set<std::string>>;

class ResultTable {
 public:
  // Throws on a duplicate key or an out-of-range accuracy.
  void add(ResultRow row);
  // Replaces the row with the same key, or adds it.
  void upsert(ResultRow row);
  const ResultRow *find(const ResultKey &key) const;
  const std::vector<ResultRow> &rows() const { return rows_; }
  size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  ResultTable filter(const RowFilter &filter) const;
  std::vector<std::string> levels(std::string_view factor) const;

 private:
  std::vector<ResultRow> rows_;
  std::map<ResultKey, size_t> index_;
};

bool matches(const ResultRow &row, const RowFilter &filter);

nlohmann::json to_json(const ResultRow &row);
ResultRow row_from_json(const nlohmann::json &j);

// Reads an accuracy fixture (columns dataset, model, approach, policy, scheme,
// scenario, balanced_accuracy_percent, provenance).
ResultTable load_fixture_csv(const std::filesystem::path &path);

struct TimingRow {
  std::string dataset;
  std::string model;
  std::string platform;
  int batch_size = 32;
  double elapsed_mean_s = 0.0;
  double throughput_ips = 0.0;
};

std::vector<TimingRow> load_timing_fixture(const std::filesystem::path &path);

// Minimal CSV reader: header row plus records, no embedded newlines.
std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path &path);

void write_results_csv(const ResultTable &table, const std::filesystem::path &path);

// Append-only line-delimited store. Appends take an exclusive file lock; the
// table view keeps the latest record per key.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path &path() const { return path_; }
  void append(const ResultRow &row) const;
  ResultTable load() const;
  // True when a successful row for the key is stored.
  bool has_ok(const ResultKey &key) const;

 private:
  std::filesystem::path path_;
};

}  // namespace tlbench::results

#endif  // TLBENCH_RESULTS_HPP_
