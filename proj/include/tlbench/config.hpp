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
#ifndef TLBENCH_CONFIG_HPP_
#define TLBENCH_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tlbench::config {

struct ExperimentConfig {
  std::vector<std::string> datasets;  // manifest paths
  std::vector<std::string> architectures = {"tiny_cnn"};
  std::vector<std::string> approaches = {"fine_tuning", "l2sp"};
  std::vector<std::string> policies = {"norm_aug", "extra_aug"};
  std::vector<std::string> schemes = {"baseline_fp32", "ptq_int8", "qat_int8"};
  std::string protocol = "standard";  // standard | idol
  uint64_t seed = 0;

  int image_size = 224;
  int head_epochs = 10;
  int total_epochs = 100;
  int qat_epochs = 50;
  int unfreeze_blocks = 2;
  double learning_rate = 1e-5;
  int batch_size = 32;
  double l2sp_alpha = 0.1;
  double l2sp_beta = 0.01;
  double head_l2 = 0.01;
  int calibration_images = 128;
  double test_fraction = 0.2;
  std::string idol_train_robot = "dumbo";
  std::string idol_train_lighting = "cloudy";
  int pretrain_images = 1200;
  int pretrain_epochs = 4;
  double pretrain_learning_rate = 1e-3;

  // Checks list contents and numeric ranges (not artifact resolvability).
  void validate() const;
};

// Full-scale settings (224 px, 100 epochs).
ExperimentConfig full_profile();
// Few epochs at 32x32 with a larger learning rate so a full grid runs in minutes.
ExperimentConfig tiny_profile();

// Applies `key = value` lines onto `base`. Lists are comma separated; '#'
// starts a comment. Unknown keys are parse errors.
ExperimentConfig parse_config(std::istream &in, ExperimentConfig base = full_profile());
ExperimentConfig load_config(const std::filesystem::path &path, ExperimentConfig base = full_profile());
void set_value(ExperimentConfig &cfg, std::string_view key, std::string_view value);

std::string to_text(const ExperimentConfig &cfg);
nlohmann::json to_json(const ExperimentConfig &cfg);

}  // namespace tlbench::config

#endif  // TLBENCH_CONFIG_HPP_
