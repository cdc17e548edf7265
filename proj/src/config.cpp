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
#include "tlbench/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tlbench/error.hpp"

namespace tlbench::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw_parse("config key '" + std::string(key) + "': '" + s + "' is not a valid number");
  return v;
}

void check_subset(const std::vector<std::string> &values, std::initializer_list<std::string_view> allowed,
                  const char *what) {
  if (values.empty()) throw_validation(std::string(what) + " list is empty");
  for (const auto &v : values)
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw_validation(std::string("unknown ") + what + " '" + v + "'");
  for (size_t i = 0; i < values.size(); ++i)
    if (std::find(values.begin() + static_cast<std::ptrdiff_t>(i) + 1, values.end(), values[i]) != values.end())
      throw_validation(std::string("duplicate ") + what + " '" + values[i] + "'");
}

std::string join(const std::vector<std::string> &v) {
  std::string out;
  for (const auto &s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw_validation("datasets list is empty");
  if (architectures.empty()) throw_validation("architectures list is empty");
  check_subset(approaches, {"l2sp", "fine_tuning"}, "approach");
  check_subset(policies, {"norm_aug", "extra_aug"}, "policy");
  check_subset(schemes, {"baseline_fp32", "ptq_int8", "qat_int8", "fp16"}, "scheme");
  if (protocol != "standard" && protocol != "idol") throw_validation("protocol must be 'standard' or 'idol'");
  if (image_size < 8) throw_validation("image_size must be >= 8");
  if (head_epochs < 0 || total_epochs < 1 || head_epochs > total_epochs)
    throw_validation("epochs must satisfy 0 <= head_epochs <= total_epochs, total_epochs >= 1");
  if (qat_epochs < 1) throw_validation("qat_epochs must be >= 1");
  if (unfreeze_blocks < 0) throw_validation("unfreeze_blocks must be >= 0");
  if (!(learning_rate > 0.0) || !(pretrain_learning_rate > 0.0)) throw_validation("learning rates must be positive");
  if (batch_size < 1) throw_validation("batch_size must be >= 1");
  if (l2sp_alpha < 0.0 || l2sp_beta < 0.0 || head_l2 < 0.0) throw_validation("regularization constants must be >= 0");
  if (calibration_images < 1) throw_validation("calibration_images must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw_validation("test_fraction must lie in (0, 1)");
  if (pretrain_images < 0 || pretrain_epochs < 0) throw_validation("pretraining sizes must be >= 0");
}

ExperimentConfig full_profile() { return {}; }

ExperimentConfig tiny_profile() {
  ExperimentConfig c;
  c.image_size = 32;
  c.head_epochs = 4;
  c.total_epochs = 14;
  c.qat_epochs = 4;
  c.learning_rate = 1e-3;
  return c;
}

void set_value(ExperimentConfig &cfg, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  using Setter = std::function<void(ExperimentConfig &, const std::string &)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"datasets", [](auto &c, const auto &v) { c.datasets = split_list(v); }},
      {"architectures", [](auto &c, const auto &v) { c.architectures = split_list(v); }},
      {"approaches", [](auto &c, const auto &v) { c.approaches = split_list(v); }},
      {"policies", [](auto &c, const auto &v) { c.policies = split_list(v); }},
      {"schemes", [](auto &c, const auto &v) { c.schemes = split_list(v); }},
      {"protocol", [](auto &c, const auto &v) { c.protocol = v; }},
      {"seed", [](auto &c, const auto &v) { c.seed = parse_number<uint64_t>("seed", v); }},
      {"image_size", [](auto &c, const auto &v) { c.image_size = parse_number<int>("image_size", v); }},
      {"head_epochs", [](auto &c, const auto &v) { c.head_epochs = parse_number<int>("head_epochs", v); }},
      {"total_epochs", [](auto &c, const auto &v) { c.total_epochs = parse_number<int>("total_epochs", v); }},
      {"qat_epochs", [](auto &c, const auto &v) { c.qat_epochs = parse_number<int>("qat_epochs", v); }},
      {"unfreeze_blocks", [](auto &c, const auto &v) { c.unfreeze_blocks = parse_number<int>("unfreeze_blocks", v); }},
      {"learning_rate", [](auto &c, const auto &v) { c.learning_rate = parse_number<double>("learning_rate", v); }},
      {"batch_size", [](auto &c, const auto &v) { c.batch_size = parse_number<int>("batch_size", v); }},
      {"l2sp_alpha", [](auto &c, const auto &v) { c.l2sp_alpha = parse_number<double>("l2sp_alpha", v); }},
      {"l2sp_beta", [](auto &c, const auto &v) { c.l2sp_beta = parse_number<double>("l2sp_beta", v); }},
      {"head_l2", [](auto &c, const auto &v) { c.head_l2 = parse_number<double>("head_l2", v); }},
      {"calibration_images",
       [](auto &c, const auto &v) { c.calibration_images = parse_number<int>("calibration_images", v); }},
      {"test_fraction", [](auto &c, const auto &v) { c.test_fraction = parse_number<double>("test_fraction", v); }},
      {"idol_train_robot", [](auto &c, const auto &v) { c.idol_train_robot = v; }},
      {"idol_train_lighting", [](auto &c, const auto &v) { c.idol_train_lighting = v; }},
      {"pretrain_images", [](auto &c, const auto &v) { c.pretrain_images = parse_number<int>("pretrain_images", v); }},
      {"pretrain_epochs", [](auto &c, const auto &v) { c.pretrain_epochs = parse_number<int>("pretrain_epochs", v); }},
      {"pretrain_learning_rate",
       [](auto &c, const auto &v) { c.pretrain_learning_rate = parse_number<double>("pretrain_learning_rate", v); }},
  };
  const auto it = setters.find(trim(key));
  if (it == setters.end()) throw_parse("unknown config key '" + trim(key) + "'");
  it->second(cfg, value);
}

ExperimentConfig parse_config(std::istream &in, ExperimentConfig base) {
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw_parse("config line " + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set_value(base, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    } catch (const Error &e) {
      throw Error(e.code(), "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path &path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open config '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

std::string to_text(const ExperimentConfig &c) {
  std::ostringstream out;
  out << "datasets = " << join(c.datasets) << '\n'
      << "architectures = " << join(c.architectures) << '\n'
      << "approaches = " << join(c.approaches) << '\n'
      << "policies = " << join(c.policies) << '\n'
      << "schemes = " << join(c.schemes) << '\n'
      << "protocol = " << c.protocol << '\n'
      << "seed = " << c.seed << '\n'
      << "image_size = " << c.image_size << '\n'
      << "head_epochs = " << c.head_epochs << '\n'
      << "total_epochs = " << c.total_epochs << '\n'
      << "qat_epochs = " << c.qat_epochs << '\n'
      << "unfreeze_blocks = " << c.unfreeze_blocks << '\n'
      << "learning_rate = " << c.learning_rate << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "l2sp_alpha = " << c.l2sp_alpha << '\n'
      << "l2sp_beta = " << c.l2sp_beta << '\n'
      << "head_l2 = " << c.head_l2 << '\n'
      << "calibration_images = " << c.calibration_images << '\n'
      << "test_fraction = " << c.test_fraction << '\n'
      << "idol_train_robot = " << c.idol_train_robot << '\n'
      << "idol_train_lighting = " << c.idol_train_lighting << '\n'
      << "pretrain_images = " << c.pretrain_images << '\n'
      << "pretrain_epochs = " << c.pretrain_epochs << '\n'
      << "pretrain_learning_rate = " << c.pretrain_learning_rate << '\n';
  return out.str();
}

nlohmann::json to_json(const ExperimentConfig &c) {
  return {{"datasets", c.datasets},
          {"architectures", c.architectures},
          {"approaches", c.approaches},
          {"policies", c.policies},
          {"schemes", c.schemes},
          {"protocol", c.protocol},
          {"seed", c.seed},
          {"image_size", c.image_size},
          {"head_epochs", c.head_epochs},
          {"total_epochs", c.total_epochs},
          {"qat_epochs", c.qat_epochs},
          {"unfreeze_blocks", c.unfreeze_blocks},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"l2sp_alpha", c.l2sp_alpha},
          {"l2sp_beta", c.l2sp_beta},
          {"head_l2", c.head_l2},
          {"calibration_images", c.calibration_images},
          {"test_fraction", c.test_fraction},
          {"idol_train_robot", c.idol_train_robot},
          {"idol_train_lighting", c.idol_train_lighting},
          {"pretrain_images", c.pretrain_images},
          {"pretrain_epochs", c.pretrain_epochs},
          {"pretrain_learning_rate", c.pretrain_learning_rate}};
}

}  // namespace tlbench::config
