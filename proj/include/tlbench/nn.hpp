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
#ifndef TLBENCH_NN_HPP_
#define TLBENCH_NN_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tlbench/augment.hpp"
#include "tlbench/quant.hpp"
#include "tlbench/rng.hpp"
#include "tlbench/strategy.hpp"

// Small NHWC convolutional classifier used by the desk-scale profile: a stack
// of 3x3 conv + ReLU blocks (the backbone) under the dense head of HeadSpec.
namespace tlbench::nn {

struct ConvSpec {
  int kernel = 3;
  int in_channels = 3;
  int out_channels = 16;
  int stride = 1;

  bool operator==(const ConvSpec &) const = default;
};

// Backbone adapter; block i holds "block<i>/kernel" [k, k, cin, cout] and
// "block<i>/bias" [cout].
class TinyCnn : public strategy::BackboneAdapter {
 public:
  TinyCnn(std::vector<ConvSpec> layers, uint64_t init_seed);
  // 3 -> 16 (stride 2) -> 32 (stride 2) -> 32 (stride 1).
  static TinyCnn standard(uint64_t init_seed);

  std::string name() const override { return "tiny_cnn"; }
  int block_count() const override { return static_cast<int>(layers_.size()); }
  int feature_dim() const override { return layers_.back().out_channels; }
  std::vector<strategy::GroupInfo> groups() const override;
  strategy::ParameterMap parameters() const override;
  void load(const strategy::ParameterMap &values) override;

  const std::vector<ConvSpec> &layers() const { return layers_; }

 private:
  std::vector<ConvSpec> layers_;
  strategy::ParameterMap values_;
};

// Float NHWC batch, pixels mapped to [-1, 1].
struct Batch {
  int n = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> x;
};

Batch make_batch(const std::vector<const augment::Image *> &images);
void append_image(Batch &batch, const augment::Image &image);

enum class NumericMode { kFloat, kCalibrate, kFakeQuant, kFp16 };

// Activation sites: input, each conv block output, pooled features, hidden
// layer, logits.
struct Numerics {
  NumericMode mode = NumericMode::kFloat;
  std::vector<quant::CalibrationStats> stats;
  std::vector<quant::QuantParams> activations;
  // In fake-quant mode, fold each batch into the running ranges before
  // quantizing (quantization-aware training).
  bool update_ranges = false;
};

struct StepStats {
  double loss = 0.0;
  double data_loss = 0.0;
  size_t correct = 0;
  size_t count = 0;
};

class Classifier {
 public:
  Classifier(const TinyCnn &backbone, const strategy::HeadSpec &head, uint64_t init_seed);

  const std::vector<ConvSpec> &layers() const { return layers_; }
  const strategy::HeadSpec &head() const { return head_; }
  size_t site_count() const { return layers_.size() + 4; }
  size_t param_count() const;

  strategy::ParameterMap parameters() const;
  strategy::ParameterMap backbone_parameters() const;
  void load(const strategy::ParameterMap &values);

  Numerics make_numerics(NumericMode mode) const;

  // Logits [n, classes].
  std::vector<float> forward(const Batch &batch, Numerics &numerics) const;
  std::vector<int> predict(const Batch &batch, Numerics &numerics) const;

  // One optimizer step over the batch. Only groups in `phase.trainable` move.
  StepStats train_step(const Batch &batch, const std::vector<int> &labels, const strategy::Phase &phase,
                       const strategy::TrainingPlan &plan, Numerics &numerics, RngStream &dropout_rng);

  void reset_optimizer();

 private:
  struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<float> w, g, m, v;
    int64_t t = 0;
  };
  struct Cache;

  Param &param(const std::string &name);
  const Param &param(const std::string &name) const;
  std::vector<float> effective(const Param &p, NumericMode mode) const;
  void run(const Batch &batch, Numerics &numerics, bool training, RngStream *dropout_rng, Cache *cache) const;

  std::vector<ConvSpec> layers_;
  strategy::HeadSpec head_;
  std::vector<Param> params_;
};

struct LabeledImages {
  std::vector<augment::Image> images;
  std::vector<int> labels;
};

struct EpochLog {
  int epoch = 0;
  std::string phase;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainOptions {
  uint64_t seed = 0;
  // First epoch to run (1-based); earlier epochs are skipped, e.g. to continue
  // a trained baseline into its QAT extension.
  int start_epoch = 1;
  std::function<void(const EpochLog &)> on_epoch;
};

// Runs the plan. Throws a runtime error on a non-finite loss.
std::vector<EpochLog> train(Classifier &model, const strategy::TrainingPlan &plan, const LabeledImages &data,
                            const augment::AugPipeline &pipeline, const TrainOptions &options, Numerics &numerics);

// Runs calibration over `count` images (resize only) and fixes activation params.
void calibrate(const Classifier &model, const LabeledImages &data, const augment::AugPipeline &pipeline, size_t count,
               Numerics &numerics, size_t batch_size = 32);

std::vector<int> predict_all(const Classifier &model, const std::vector<augment::Image> &images,
                             const augment::AugPipeline &pipeline, Numerics &numerics, size_t batch_size = 32);

nlohmann::json to_json(const Classifier &model);
Classifier classifier_from_json(const nlohmann::json &j);
nlohmann::json to_json(const Numerics &numerics);
Numerics numerics_from_json(const nlohmann::json &j);

}  // namespace tlbench::nn

#endif  // TLBENCH_NN_HPP_
