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
#include "tlbench/strategy.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "tlbench/error.hpp"

namespace tlbench::strategy {

using nlohmann::json;

size_t shape_size(const std::vector<int> &shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw_validation("tensor dimensions must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

void validate_backbone(const BackboneAdapter &backbone) {
  const auto groups = backbone.groups();
  const int blocks = backbone.block_count();
  if (blocks < 1) throw_validation("backbone '" + backbone.name() + "' has no blocks");
  std::set<std::string> names;
  std::vector<bool> seen(static_cast<size_t>(blocks), false);
  for (const auto &g : groups) {
    if (!names.insert(g.name).second) throw_validation("duplicate parameter group '" + g.name + "'");
    if (g.block < 0 || g.block >= blocks) throw_validation("group '" + g.name + "' has block index out of range");
    if (g.name.starts_with("head/")) throw_validation("backbone group '" + g.name + "' uses the head namespace");
    seen[static_cast<size_t>(g.block)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw_validation("backbone '" + backbone.name() + "' block indices are not contiguous");
  const auto params = backbone.parameters();
  if (params.size() != groups.size()) throw_validation("backbone parameters do not match its groups");
  for (const auto &g : groups) {
    const auto it = params.find(g.name);
    if (it == params.end() || it->second.shape != g.shape || it->second.size() != shape_size(g.shape))
      throw_validation("backbone parameter '" + g.name + "' missing or misshapen");
  }
}

void HeadSpec::validate() const {
  if (feature_dim < 1) throw_validation("head feature_dim must be >= 1");
  if (hidden_units < 1) throw_validation("head hidden_units must be >= 1");
  if (output_units < 2) throw_validation("head output_units must be >= 2");
  if (!(hidden_l2 >= 0.0)) throw_validation("head L2 coefficient must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw_validation("dropout rate must lie in [0, 1)");
}

size_t HeadSpec::param_count() const {
  const auto f = static_cast<size_t>(feature_dim);
  const auto h = static_cast<size_t>(hidden_units);
  const auto k = static_cast<size_t>(output_units);
  return f * h + h + h * k + k;
}

std::vector<GroupInfo> HeadSpec::groups() const {
  return {
      {std::string(kHeadHiddenKernel), {feature_dim, hidden_units}, -1},
      {std::string(kHeadHiddenBias), {hidden_units}, -1},
      {std::string(kHeadOutputKernel), {hidden_units, output_units}, -1},
      {std::string(kHeadOutputBias), {output_units}, -1},
  };
}

HeadSpec build_head(int feature_dim, int num_classes, double lambda) {
  HeadSpec h;
  h.feature_dim = feature_dim;
  h.output_units = num_classes;
  h.hidden_l2 = lambda;
  h.validate();
  return h;
}

void L2SPConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw_validation("L2-SP alpha and beta must be >= 0");
}

AnchorSnapshot snapshot_anchors(const BackboneAdapter &backbone) { return AnchorSnapshot(backbone.parameters()); }

namespace {

template <typename Fn>
void for_each_group(const ParameterMap &current, const AnchorSnapshot &anchors, Fn &&fn) {
  for (const auto &[name, w] : current) {
    const auto it = anchors.values().find(name);
    if (it == anchors.values().end()) {
      fn(name, w, nullptr);
      continue;
    }
    if (it->second.shape != w.shape || it->second.size() != w.size())
      throw_validation("L2-SP anchor shape mismatch for '" + name + "'");
    fn(name, w, &it->second);
  }
}

}  // namespace

double l2sp_penalty(const ParameterMap &current, const AnchorSnapshot &anchors, const L2SPConfig &config) {
  config.validate();
  double shared = 0.0;
  double fresh = 0.0;
  for_each_group(current, anchors, [&](const std::string &, const Tensor &w, const Tensor *w0) {
    for (size_t i = 0; i < w.size(); ++i) {
      if (w0 != nullptr) {
        const double d = w.values[i] - w0->values[i];
        shared += d * d;
      } else {
        fresh += w.values[i] * w.values[i];
      }
    }
  });
  return 0.5 * config.alpha * shared + 0.5 * config.beta * fresh;
}

ParameterMap l2sp_gradient(const ParameterMap &current, const AnchorSnapshot &anchors, const L2SPConfig &config) {
  config.validate();
  ParameterMap grad;
  for_each_group(current, anchors, [&](const std::string &name, const Tensor &w, const Tensor *w0) {
    Tensor g = w;
    for (size_t i = 0; i < w.size(); ++i) {
      g.values[i] = w0 != nullptr ? config.alpha * (w.values[i] - w0->values[i]) : config.beta * w.values[i];
    }
    grad.emplace(name, std::move(g));
  });
  return grad;
}

std::string_view to_string(Regularizer r) { return r == Regularizer::kL2SP ? "l2sp" : "none"; }

bool Phase::trains(std::string_view group) const {
  return std::find(trainable.begin(), trainable.end(), group) != trainable.end();
}

void TrainingPlan::validate(const std::vector<std::string> &known_groups) const {
  if (phases.empty()) throw_validation("training plan has no phases");
  if (learning_rate <= 0.0) throw_validation("learning rate must be positive");
  if (batch_size < 1) throw_validation("batch size must be >= 1");
  l2sp.validate();
  int next = 1;
  for (const auto &p : phases) {
    if (p.first_epoch != next || p.last_epoch < p.first_epoch)
      throw_validation("phase '" + p.name + "' epoch span is not contiguous");
    next = p.last_epoch + 1;
    for (const auto &g : p.trainable)
      if (std::find(known_groups.begin(), known_groups.end(), g) == known_groups.end())
        throw_validation("phase '" + p.name + "' trains unknown group '" + g + "'");
    if (p.regularizer == Regularizer::kL2SP && !anchors) throw_validation("L2-SP phase without anchors");
  }
}

const Phase &TrainingPlan::phase_for_epoch(int epoch) const {
  for (const auto &p : phases)
    if (epoch >= p.first_epoch && epoch <= p.last_epoch) return p;
  throw_validation("epoch " + std::to_string(epoch) + " outside the plan");
}

std::vector<std::string> all_group_names(const BackboneAdapter &backbone) {
  std::vector<std::string> names;
  for (const auto &g : backbone.groups()) names.push_back(g.name);
  for (auto h : {kHeadHiddenKernel, kHeadHiddenBias, kHeadOutputKernel, kHeadOutputBias}) names.emplace_back(h);
  return names;
}

namespace {

std::vector<std::string> head_names() {
  return {std::string(kHeadHiddenKernel), std::string(kHeadHiddenBias), std::string(kHeadOutputKernel),
          std::string(kHeadOutputBias)};
}

}  // namespace

TrainingPlan make_fine_tuning_plan(const BackboneAdapter &backbone, int head_epochs, int total_epochs,
                                   int unfreeze_blocks) {
  if (head_epochs < 0 || total_epochs < 1 || head_epochs > total_epochs)
    throw_validation("fine-tuning plan requires 0 <= head_epochs <= total_epochs, total_epochs >= 1");
  if (unfreeze_blocks < 0 || unfreeze_blocks > backbone.block_count())
    throw_validation("unfreeze_blocks must lie in [0, block count]");
  TrainingPlan plan;
  plan.approach = "fine_tuning";
  if (head_epochs > 0) plan.phases.push_back({"head", 1, head_epochs, head_names(), Regularizer::kNone, false});
  if (total_epochs > head_epochs) {
    Phase p{"fine_tune", head_epochs + 1, total_epochs, head_names(), Regularizer::kNone, false};
    const int first_unfrozen = backbone.block_count() - unfreeze_blocks;
    for (const auto &g : backbone.groups())
      if (g.block >= first_unfrozen) p.trainable.push_back(g.name);
    plan.phases.push_back(std::move(p));
  }
  plan.validate(all_group_names(backbone));
  return plan;
}

TrainingPlan make_l2sp_plan(const BackboneAdapter &backbone, int total_epochs, const L2SPConfig &config) {
  if (total_epochs < 1) throw_validation("L2-SP plan requires total_epochs >= 1");
  config.validate();
  TrainingPlan plan;
  plan.approach = "l2sp";
  plan.l2sp = config;
  plan.anchors = snapshot_anchors(backbone);
  Phase p{"l2sp", 1, total_epochs, {}, Regularizer::kL2SP, false};
  for (const auto &g : backbone.groups()) p.trainable.push_back(g.name);
  for (auto &h : head_names()) p.trainable.push_back(h);
  plan.phases.push_back(std::move(p));
  plan.validate(all_group_names(backbone));
  return plan;
}

TrainingPlan extend_plan_for_qat(const TrainingPlan &plan, int extra_epochs) {
  if (extra_epochs < 1) throw_validation("QAT extension requires extra_epochs >= 1");
  if (plan.phases.empty()) throw_validation("cannot extend an empty plan");
  TrainingPlan out = plan;
  const Phase &last = plan.phases.back();
  out.phases.push_back(
      {"qat", last.last_epoch + 1, last.last_epoch + extra_epochs, last.trainable, last.regularizer, true});
  return out;
}

TrainingPlan plan_by_name(std::string_view approach, const BackboneAdapter &backbone, int head_epochs,
                          int total_epochs, int unfreeze_blocks, const L2SPConfig &config) {
  if (approach == "fine_tuning") return make_fine_tuning_plan(backbone, head_epochs, total_epochs, unfreeze_blocks);
  if (approach == "l2sp") return make_l2sp_plan(backbone, total_epochs, config);
  throw_validation("unknown approach '" + std::string(approach) + "'");
}

json to_json(const HeadSpec &head) {
  return {{"feature_dim", head.feature_dim},
          {"pooling", head.pooling},
          {"hidden_units", head.hidden_units},
          {"hidden_activation", head.hidden_activation},
          {"hidden_l2", head.hidden_l2},
          {"dropout_rate", head.dropout_rate},
          {"output_units", head.output_units},
          {"output_activation", head.output_activation},
          {"param_count", head.param_count()}};
}

json to_json(const TrainingPlan &plan) {
  json phases = json::array();
  for (const auto &p : plan.phases) {
    phases.push_back({{"name", p.name},
                      {"epochs", {p.first_epoch, p.last_epoch}},
                      {"trainable", p.trainable},
                      {"regularizer", std::string(to_string(p.regularizer))},
                      {"fake_quant", p.fake_quant}});
  }
  json j = {{"approach", plan.approach},
            {"optimizer", plan.optimizer},
            {"learning_rate", plan.learning_rate},
            {"batch_size", plan.batch_size},
            {"phases", phases}};
  if (plan.anchors) j["l2sp"] = {{"alpha", plan.l2sp.alpha}, {"beta", plan.l2sp.beta}};
  return j;
}

}  // namespace tlbench::strategy
