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
#ifndef TLBENCH_DATA_HPP_
#define TLBENCH_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tlbench::data {

inline constexpr std::string_view kRobotTag = "robot";
inline constexpr std::string_view kLightingTag = "lighting";

enum class Split { kUnassigned, kTrain, kTest };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct SampleRecord {
  std::string path;
  std::string label;
  std::map<std::string, std::string> tags;
  Split split = Split::kUnassigned;

  bool operator==(const SampleRecord &) const = default;
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> classes;
  std::vector<SampleRecord> records;
  // Directory that relative record paths resolve against.
  std::filesystem::path base_dir;

  // Throws a validation error when the class list is empty or duplicated,
  // a label is undeclared, or a path repeats.
  void validate() const;
  size_t class_index(std::string_view label) const;
  std::filesystem::path resolve(const SampleRecord &record) const;
  std::vector<size_t> class_counts() const;
};

struct SplitSpec {
  uint64_t seed = 0;
  double test_fraction = 0.2;
  bool stratified = true;

  void validate() const;
};

struct SplitResult {
  DatasetManifest train;
  DatasetManifest test;
};

// Parses the line-delimited manifest format. An optional first line
// {"classes": [...]} fixes the class order; otherwise classes are the sorted
// set of observed labels.
DatasetManifest parse_manifest(std::istream &in, std::string name = {});
DatasetManifest load_manifest(const std::filesystem::path &source);

void write_manifest(std::ostream &out, const DatasetManifest &manifest);
void save_manifest(const DatasetManifest &manifest, const std::filesystem::path &target);

// Number of held-out samples for a class of `count` records: round-half-up of
// fraction * count, clipped so at least one training sample remains.
size_t test_count_for(size_t count, double test_fraction);

SplitResult stratified_split(const DatasetManifest &manifest, const SplitSpec &spec);

// Conjunction of tag clauses.
struct TagPredicate {
  struct Clause {
    std::string key;
    std::string value;
    bool equal = true;

    bool operator==(const Clause &) const = default;
  };
  std::vector<Clause> clauses;

  bool matches(const SampleRecord &record) const;
  std::string describe() const;
  bool operator==(const TagPredicate &) const = default;
};

struct ScenarioMatrix {
  struct Entry {
    std::string name;
    TagPredicate predicate;
    // SBSL is evaluated on the held-out split of the training condition only.
    bool held_out_only = false;
  };
  TagPredicate train_filter;
  std::vector<Entry> scenarios;

  const Entry &at(std::string_view name) const;
};

// Domain of a tag over the manifest, sorted.
std::vector<std::string> tag_domain(const DatasetManifest &manifest, std::string_view key);

ScenarioMatrix build_idol_scenarios(const DatasetManifest &manifest, std::string_view train_robot,
                                    std::string_view train_lighting);

DatasetManifest filter_manifest(const DatasetManifest &manifest, const TagPredicate &predicate);

}  // namespace tlbench::data

#endif  // TLBENCH_DATA_HPP_
