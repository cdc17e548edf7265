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
#include "tlbench/results.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tlbench/error.hpp"

namespace tlbench::results {

using nlohmann::json;

const std::string &ResultKey::get(std::string_view factor) const {
  return const_cast<ResultKey *>(this)->get(factor);
}

std::string &ResultKey::get(std::string_view factor) {
  if (factor == "dataset") return dataset;
  if (factor == "architecture" || factor == "model") return architecture;
  if (factor == "approach") return approach;
  if (factor == "policy") return policy;
  if (factor == "scheme") return scheme;
  if (factor == "scenario") return scenario;
  throw_validation("unknown factor '" + std::string(factor) + "'");
}

std::string ResultKey::to_string() const {
  return dataset + "/" + architecture + "/" + approach + "/" + policy + "/" + scheme + "/" + scenario;
}

bool is_factor(std::string_view name) {
  return std::find(kFactors.begin(), kFactors.end(), name) != kFactors.end() || name == "model";
}

void ResultTable::add(ResultRow row) {
  if (row.ok() && !(row.balanced_accuracy_percent >= 0.0 && row.balanced_accuracy_percent <= 100.0))
    throw_validation("accuracy out of [0, 100] for " + row.key.to_string());
  if (index_.contains(row.key)) throw_validation("duplicate result key " + row.key.to_string());
  index_.emplace(row.key, rows_.size());
  rows_.push_back(std::move(row));
}

void ResultTable::upsert(ResultRow row) {
  const auto it = index_.find(row.key);
  if (it == index_.end()) {
    add(std::move(row));
    return;
  }
  if (row.ok() && !(row.balanced_accuracy_percent >= 0.0 && row.balanced_accuracy_percent <= 100.0))
    throw_validation("accuracy out of [0, 100] for " + row.key.to_string());
  rows_[it->second] = std::move(row);
}

const ResultRow *ResultTable::find(const ResultKey &key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

bool matches(const ResultRow &row, const RowFilter &filter) {
  for (const auto &[factor, values] : filter)
    if (!values.empty() && !values.contains(row.key.get(factor))) return false;
  return true;
}

ResultTable ResultTable::filter(const RowFilter &filter) const {
  ResultTable out;
  for (const auto &r : rows_)
    if (matches(r, filter)) out.add(r);
  return out;
}

std::vector<std::string> ResultTable::levels(std::string_view factor) const {
  std::vector<std::string> out;
  for (const auto &r : rows_) {
    const auto &v = r.key.get(factor);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

json to_json(const ResultRow &row) {
  json j;
  for (auto f : kFactors) j[std::string(f)] = row.key.get(f);
  j["balanced_accuracy_percent"] = row.ok() ? json(row.balanced_accuracy_percent) : json(nullptr);
  j["status"] = row.status;
  j["metadata"] = row.metadata;
  return j;
}

ResultRow row_from_json(const json &j) {
  ResultRow row;
  try {
    for (auto f : kFactors) row.key.get(f) = j.at(std::string(f)).get<std::string>();
    row.status = j.value("status", std::string("ok"));
    const auto &acc = j.at("balanced_accuracy_percent");
    row.balanced_accuracy_percent = acc.is_null() ? std::nan("") : acc.get<double>();
    row.metadata = j.value("metadata", json::object());
  } catch (const json::exception &e) {
    throw_parse(std::string("result row: ") + e.what());
  }
  return row;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

double parse_double(const std::string &text, const std::string &where) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception &) {
    throw_parse(where + ": '" + text + "' is not a number");
  }
}

std::string csv_escape(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw_parse(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::vector<std::map<std::string, std::string>> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw_parse(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(fields.size()));
    std::map<std::string, std::string> row;
    for (size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

ResultTable load_fixture_csv(const std::filesystem::path &path) {
  ResultTable table;
  size_t lineno = 1;
  for (const auto &r : read_csv(path)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    ResultRow row;
    try {
      row.key = {r.at("dataset"), r.at("model"), r.at("approach"), r.at("policy"), r.at("scheme"), r.at("scenario")};
      row.balanced_accuracy_percent = parse_double(r.at("balanced_accuracy_percent"), where);
    } catch (const std::out_of_range &) {
      throw_parse(where + ": missing fixture column");
    }
    const auto prov = r.find("provenance");
    row.metadata = {{"provenance", prov == r.end() ? "unknown" : prov->second}};
    table.add(std::move(row));
  }
  return table;
}

std::vector<TimingRow> load_timing_fixture(const std::filesystem::path &path) {
  std::vector<TimingRow> out;
  size_t lineno = 1;
  for (const auto &r : read_csv(path)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      TimingRow t;
      t.dataset = r.at("dataset");
      t.model = r.at("model");
      t.platform = r.at("platform");
      t.batch_size = static_cast<int>(parse_double(r.at("batch_size"), where));
      t.elapsed_mean_s = parse_double(r.at("elapsed_mean_s"), where);
      t.throughput_ips = parse_double(r.at("throughput_ips"), where);
      out.push_back(std::move(t));
    } catch (const std::out_of_range &) {
      throw_parse(where + ": missing timing column");
    }
  }
  return out;
}

void write_results_csv(const ResultTable &table, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write " + path.string());
  out << "dataset,architecture,approach,policy,scheme,scenario,balanced_accuracy_percent,status,seed\n";
  for (const auto &r : table.rows()) {
    for (auto f : kFactors) out << csv_escape(r.key.get(f)) << ',';
    if (r.ok()) {
      std::ostringstream v;
      v.setf(std::ios::fixed);
      v.precision(2);
      v << r.balanced_accuracy_percent;
      out << v.str();
    }
    out << ',' << r.status << ',';
    if (r.metadata.contains("seed")) out << r.metadata["seed"].dump();
    out << '\n';
  }
}

void ResultStore::append(const ResultRow &row) const {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  const std::string line = to_json(row).dump() + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw_io("cannot open result store " + path_.string());
  if (::flock(fd, LOCK_EX) != 0) {
    ::close(fd);
    throw_io("cannot lock result store " + path_.string());
  }
  size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n <= 0) break;
    written += static_cast<size_t>(n);
  }
  ::fsync(fd);
  ::flock(fd, LOCK_UN);
  ::close(fd);
  if (written != line.size()) throw_io("short write to result store " + path_.string());
}

ResultTable ResultStore::load() const {
  ResultTable table;
  if (!std::filesystem::exists(path_)) return table;
  std::ifstream in(path_);
  if (!in) throw_io("cannot read result store " + path_.string());
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw_parse(path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    table.upsert(row_from_json(j));
  }
  return table;
}

bool ResultStore::has_ok(const ResultKey &key) const {
  const auto table = load();
  const auto *row = table.find(key);
  return row != nullptr && row->ok();
}

}  // namespace tlbench::results
