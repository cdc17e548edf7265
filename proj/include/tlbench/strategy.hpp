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
#ifndef TLBENCH_STRATEGY_HPP_
#define TLBENCH_STRATEGY_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tlbench::strategy {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);
  size_t size() const { return values.size(); }
  bool operator==(const Tensor &) const = default;
};

size_t shape_size(const std::vector<int> &shape);

using ParameterMap = std::map<std::string, Tensor>;

struct GroupInfo {
  std::string name;
  std::vector<int> shape;
  // Block index for backbone groups (0 = closest to the input); -1 for head groups.
  int block = -1;
};

// Parameter-owning feature extractor. Blocks are contiguous from 0 to
// block_count() - 1 and every group belongs to exactly one block.
class BackboneAdapter {
 public:
  virtual ~BackboneAdapter() = default;
  virtual std::string name() const = 0;
  virtual int block_count() const = 0;
  virtual int feature_dim() const = 0;
  virtual std::vector<GroupInfo> groups() const = 0;
  virtual ParameterMap parameters() const = 0;
  virtual void load(const ParameterMap &values) = 0;
};

// Checks block contiguity, unique names and that parameters() matches groups().
void validate_backbone(const BackboneAdapter &backbone);

inline constexpr std::string_view kHeadHiddenKernel = "head/hidden/kernel";
inline constexpr std::string_view kHeadHiddenBias = "head/hidden/bias";
inline constexpr std::string_view kHeadOutputKernel = "head/output/kernel";
inline constexpr std::string_view kHeadOutputBias = "head/output/bias";

struct HeadSpec {
  int feature_dim = 0;
  std::string pooling = "global_average";
  int hidden_units = 256;
  std::string hidden_activation = "relu";
  double hidden_l2 = 0.01;
  double dropout_rate = 0.5;
  int output_units = 2;
  std::string output_activation = "softmax";

  void validate() const;
  size_t param_count() const;
  std::vector<GroupInfo> groups() const;
};

HeadSpec build_head(int feature_dim, int num_classes, double lambda = 0.01);

struct L2SPConfig {
  double alpha = 0.1;
  double beta = 0.01;

  void validate() const;
};

// Immutable deep copy of pre-trained values.
class AnchorSnapshot {
 public:
  AnchorSnapshot() : values_(std::make_shared<const ParameterMap>()) {}
  explicit AnchorSnapshot(ParameterMap values) : values_(std::make_shared<const ParameterMap>(std::move(values))) {}

  const ParameterMap &values() const { return *values_; }
  bool contains(const std::string &name) const { return values_->contains(name); }

 private:
  std::shared_ptr<const ParameterMap> values_;
};

AnchorSnapshot snapshot_anchors(const BackboneAdapter &backbone);

// Omega = alpha/2 * sum_shared ||w - w0||^2 + beta/2 * sum_new ||w||^2. Groups
// with an anchor are shared; the rest are new.
double l2sp_penalty(const ParameterMap &current, const AnchorSnapshot &anchors, const L2SPConfig &config);

// d Omega / d w for every group in `current`.
ParameterMap l2sp_gradient(const ParameterMap &current, const AnchorSnapshot &anchors, const L2SPConfig &config);

enum class Regularizer { kNone, kL2SP };

std::string_view to_string(Regularizer r);

struct Phase {
  std::string name;
  int first_epoch = 1;  // inclusive, 1-based
  int last_epoch = 0;   // inclusive
  std::vector<std::string> trainable;
  Regularizer regularizer = Regularizer::kNone;
  bool fake_quant = false;

  int epochs() const { return last_epoch - first_epoch + 1; }
  bool trains(std::string_view group) const;
};

struct TrainingPlan {
  std::string approach;
  std::vector<Phase> phases;
  std::string optimizer = "adam";
  double learning_rate = 1e-5;
  int batch_size = 32;
  L2SPConfig l2sp;
  std::optional<AnchorSnapshot> anchors;

  int total_epochs() const { return phases.empty() ? 0 : phases.back().last_epoch; }
  // Contiguous disjoint spans from epoch 1; trainable names drawn from `known_groups`.
  void validate(const std::vector<std::string> &known_groups) const;
  const Phase &phase_for_epoch(int epoch) const;
};

std::vector<std::string> all_group_names(const BackboneAdapter &backbone);

TrainingPlan make_fine_tuning_plan(const BackboneAdapter &backbone, int head_epochs = 10, int total_epochs = 100,
                                   int unfreeze_blocks = 2);
TrainingPlan make_l2sp_plan(const BackboneAdapter &backbone, int total_epochs = 100, const L2SPConfig &config = {});
TrainingPlan extend_plan_for_qat(const TrainingPlan &plan, int extra_epochs = 50);
TrainingPlan plan_by_name(std::string_view approach, const BackboneAdapter &backbone, int head_epochs,
                          int total_epochs, int unfreeze_blocks, const L2SPConfig &config);

nlohmann::json to_json(const HeadSpec &head);
nlohmann::json to_json(const TrainingPlan &plan);

}  // namespace tlbench::strategy

#endif  // TLBENCH_STRATEGY_HPP_
