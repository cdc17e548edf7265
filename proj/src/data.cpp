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
#include "tlbench/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tlbench/error.hpp"
#include "tlbench/rng.hpp"

namespace tlbench::data {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    case Split::kUnassigned:
      break;
  }
  return "unassigned";
}

Split split_from_string(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  if (text == "unassigned") return Split::kUnassigned;
  throw_validation("unknown split '" + std::string(text) + "'");
}

void DatasetManifest::validate() const {
  if (classes.empty()) throw_validation("manifest '" + name + "' has no classes");
  std::unordered_set<std::string> seen_classes;
  for (const auto &c : classes) {
    if (!seen_classes.insert(c).second) throw_validation("duplicate class '" + c + "'");
  }
  std::unordered_set<std::string> seen_paths;
  for (const auto &r : records) {
    if (!seen_classes.contains(r.label))
      throw_validation("record '" + r.path + "' has undeclared label '" + r.label + "'");
    if (!seen_paths.insert(r.path).second) throw_validation("duplicate path '" + r.path + "'");
  }
}

size_t DatasetManifest::class_index(std::string_view label) const {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw_validation("unknown label '" + std::string(label) + "'");
  return static_cast<size_t>(it - classes.begin());
}

std::filesystem::path DatasetManifest::resolve(const SampleRecord &record) const {
  std::filesystem::path p(record.path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<size_t> DatasetManifest::class_counts() const {
  std::vector<size_t> counts(classes.size(), 0);
  for (const auto &r : records) ++counts[class_index(r.label)];
  return counts;
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw_validation("test_fraction must lie in (0, 1)");
}

namespace {

SampleRecord record_from_json(const json &j, size_t line_no) {
  auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
  if (!j.is_object()) throw_parse(where() + "expected an object");
  if (!j.contains("path") || !j["path"].is_string()) throw_parse(where() + "missing string field 'path'");
  if (!j.contains("label") || !j["label"].is_string()) throw_parse(where() + "missing string field 'label'");
  SampleRecord r;
  r.path = j["path"].get<std::string>();
  r.label = j["label"].get<std::string>();
  if (j.contains("tags")) {
    if (!j["tags"].is_object()) throw_parse(where() + "'tags' must be a flat string map");
    for (const auto &[k, v] : j["tags"].items()) {
      if (!v.is_string()) throw_parse(where() + "tag '" + k + "' is not a string");
      r.tags[k] = v.get<std::string>();
    }
  }
  if (j.contains("split")) {
    if (!j["split"].is_string()) throw_parse(where() + "'split' must be a string");
    try {
      r.split = split_from_string(j["split"].get<std::string>());
    } catch (const Error &e) {
      throw_parse(where() + e.what());
    }
  }
  return r;
}

}  // namespace

DatasetManifest parse_manifest(std::istream &in, std::string name) {
  DatasetManifest m;
  m.name = std::move(name);
  bool declared = false;
  std::string line;
  size_t line_no = 0;
  size_t content_lines = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw_parse("line " + std::to_string(line_no) + ": " + e.what());
    }
    ++content_lines;
    if (content_lines == 1 && j.is_object() && j.contains("classes") && !j.contains("path")) {
      if (!j["classes"].is_array()) throw_parse("line " + std::to_string(line_no) + ": 'classes' must be a list");
      for (const auto &c : j["classes"]) {
        if (!c.is_string()) throw_parse("line " + std::to_string(line_no) + ": class names must be strings");
        m.classes.push_back(c.get<std::string>());
      }
      if (j.contains("name") && j["name"].is_string() && m.name.empty()) m.name = j["name"].get<std::string>();
      declared = true;
      continue;
    }
    m.records.push_back(record_from_json(j, line_no));
  }
  if (!declared) {
    std::set<std::string> labels;
    for (const auto &r : m.records) labels.insert(r.label);
    m.classes.assign(labels.begin(), labels.end());
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path &source) {
  std::ifstream in(source);
  if (!in) throw_io("cannot open manifest '" + source.string() + "'");
  auto m = parse_manifest(in, source.stem().string());
  m.base_dir = source.parent_path();
  return m;
}

void write_manifest(std::ostream &out, const DatasetManifest &manifest) {
  json header = {{"classes", manifest.classes}};
  if (!manifest.name.empty()) header["name"] = manifest.name;
  out << header.dump() << '\n';
  for (const auto &r : manifest.records) {
    json j = {{"path", r.path}, {"label", r.label}};
    if (!r.tags.empty()) j["tags"] = r.tags;
    if (r.split != Split::kUnassigned) j["split"] = std::string(to_string(r.split));
    out << j.dump() << '\n';
  }
}

void save_manifest(const DatasetManifest &manifest, const std::filesystem::path &target) {
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target);
  if (!out) throw_io("cannot write manifest '" + target.string() + "'");
  write_manifest(out, manifest);
}

size_t test_count_for(size_t count, double test_fraction) {
  if (count <= 1) return 0;
  const auto rounded = static_cast<size_t>(std::floor(test_fraction * static_cast<double>(count) + 0.5));
  return std::min(rounded, count - 1);
}

SplitResult stratified_split(const DatasetManifest &manifest, const SplitSpec &spec) {
  spec.validate();
  manifest.validate();
  std::vector<bool> is_test(manifest.records.size(), false);

  auto assign = [&](std::vector<size_t> members, uint64_t stream) {
    RngStream rng(spec.seed, stream);
    shuffle_indices(members, rng);
    const size_t n_test = test_count_for(members.size(), spec.test_fraction);
    for (size_t i = 0; i < n_test; ++i) is_test[members[i]] = true;
  };

  if (spec.stratified) {
    std::vector<std::vector<size_t>> by_class(manifest.classes.size());
    for (size_t i = 0; i < manifest.records.size(); ++i)
      by_class[manifest.class_index(manifest.records[i].label)].push_back(i);
    for (size_t c = 0; c < by_class.size(); ++c) assign(std::move(by_class[c]), c);
  } else {
    std::vector<size_t> all(manifest.records.size());
    std::iota(all.begin(), all.end(), size_t{0});
    assign(std::move(all), 0xA11);
  }

  SplitResult out;
  for (auto *part : {&out.train, &out.test}) {
    part->classes = manifest.classes;
    part->base_dir = manifest.base_dir;
  }
  out.train.name = manifest.name + "_train";
  out.test.name = manifest.name + "_test";
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    SampleRecord r = manifest.records[i];
    r.split = is_test[i] ? Split::kTest : Split::kTrain;
    (is_test[i] ? out.test : out.train).records.push_back(std::move(r));
  }
  return out;
}

bool TagPredicate::matches(const SampleRecord &record) const {
  for (const auto &c : clauses) {
    const auto it = record.tags.find(c.key);
    const bool eq = it != record.tags.end() && it->second == c.value;
    if (c.equal != eq) return false;
    if (!c.equal && it == record.tags.end()) return false;
  }
  return true;
}

std::string TagPredicate::describe() const {
  std::ostringstream os;
  for (size_t i = 0; i < clauses.size(); ++i) {
    if (i) os << " & ";
    os << clauses[i].key << (clauses[i].equal ? "==" : "!=") << clauses[i].value;
  }
  return clauses.empty() ? "*" : os.str();
}

const ScenarioMatrix::Entry &ScenarioMatrix::at(std::string_view name) const {
  for (const auto &e : scenarios)
    if (e.name == name) return e;
  throw_validation("no scenario named '" + std::string(name) + "'");
}

std::vector<std::string> tag_domain(const DatasetManifest &manifest, std::string_view key) {
  std::set<std::string> values;
  for (const auto &r : manifest.records) {
    const auto it = r.tags.find(std::string(key));
    if (it != r.tags.end()) values.insert(it->second);
  }
  return {values.begin(), values.end()};
}

ScenarioMatrix build_idol_scenarios(const DatasetManifest &manifest, std::string_view train_robot,
                                    std::string_view train_lighting) {
  const auto robots = tag_domain(manifest, kRobotTag);
  const auto lightings = tag_domain(manifest, kLightingTag);
  if (robots.size() != 2)
    throw_validation("robustness protocol needs exactly two robot values, found " + std::to_string(robots.size()));
  if (lightings.size() < 2)
    throw_validation("robustness protocol needs at least two lighting values, found " +
                     std::to_string(lightings.size()));
  if (std::find(robots.begin(), robots.end(), train_robot) == robots.end())
    throw_validation("training robot '" + std::string(train_robot) + "' not present in manifest tags");
  if (std::find(lightings.begin(), lightings.end(), train_lighting) == lightings.end())
    throw_validation("training lighting '" + std::string(train_lighting) + "' not present in manifest tags");
  const std::string other_robot = robots[0] == train_robot ? robots[1] : robots[0];
  const std::string robot(kRobotTag), light(kLightingTag), tr(train_robot), tl(train_lighting);

  ScenarioMatrix m;
  m.train_filter.clauses = {{robot, tr, true}, {light, tl, true}};
  m.scenarios = {
      {"SBSL", m.train_filter, true},
      {"SBDL", TagPredicate{{{robot, tr, true}, {light, tl, false}}}, false},
      {"DBSL", TagPredicate{{{robot, other_robot, true}, {light, tl, true}}}, false},
      {"DBDL", TagPredicate{{{robot, other_robot, true}, {light, tl, false}}}, false},
  };
  return m;
}

DatasetManifest filter_manifest(const DatasetManifest &manifest, const TagPredicate &predicate) {
  DatasetManifest out;
  out.name = manifest.name;
  out.classes = manifest.classes;
  out.base_dir = manifest.base_dir;
  for (const auto &r : manifest.records)
    if (predicate.matches(r)) out.records.push_back(r);
  return out;
}

}  // namespace tlbench::data
