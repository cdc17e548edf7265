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
#include "tlbench/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "tlbench/augment.hpp"
#include "tlbench/error.hpp"
#include "tlbench/rng.hpp"
#include "tlbench/strategy.hpp"

namespace tlbench::nn {
namespace {

// Two trivially separable classes: red-dominant vs blue-dominant noise.
LabeledImages two_colour_set(int n, uint64_t seed) {
  LabeledImages out;
  RngStream r(seed, 0);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    augment::Image img(16, 16, 3);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        img.at(y, x, 0) = static_cast<uint8_t>(label == 0 ? r.uniform_int(150, 255) : r.uniform_int(0, 80));
        img.at(y, x, 1) = static_cast<uint8_t>(r.uniform_int(0, 255));
        img.at(y, x, 2) = static_cast<uint8_t>(label == 1 ? r.uniform_int(150, 255) : r.uniform_int(0, 80));
      }
    out.images.push_back(img);
    out.labels.push_back(label);
  }
  return out;
}

Batch batch_of(const LabeledImages &d, size_t n) {
  Batch b;
  for (size_t i = 0; i < n; ++i) append_image(b, d.images[i]);
  return b;
}

TEST(TinyCnnTest, Groups) {
  const auto bb = TinyCnn::standard(1);
  EXPECT_EQ(bb.block_count(), 3);
  EXPECT_EQ(bb.feature_dim(), 32);
  strategy::validate_backbone(bb);
  const auto groups = bb.groups();
  ASSERT_EQ(groups.size(), 6u);
  EXPECT_EQ(groups[0].name, "block0/kernel");
  EXPECT_EQ(groups[0].shape, (std::vector<int>{3, 3, 3, 16}));
  EXPECT_EQ(groups[5].block, 2);
  EXPECT_EQ(TinyCnn::standard(1).parameters(), bb.parameters());
  EXPECT_NE(TinyCnn::standard(2).parameters(), bb.parameters());
}

TEST(BatchTest, Encoding) {
  augment::Image img(2, 2, 3, 255);
  img.at(0, 0, 0) = 0;
  const auto b = make_batch({&img});
  EXPECT_EQ(b.n, 1);
  EXPECT_FLOAT_EQ(b.x[0], -1.0f);
  EXPECT_FLOAT_EQ(b.x[1], 1.0f);
  augment::Image other(3, 2, 3);
  Batch bb = b;
  EXPECT_THROW(append_image(bb, other), Error);
}

TEST(ClassifierTest, ForwardShapesAcrossModes) {
  const Classifier model(TinyCnn::standard(3), strategy::build_head(32, 5), 4);
  const auto data = two_colour_set(6, 1);
  const auto batch = batch_of(data, 6);
  auto fl = model.make_numerics(NumericMode::kFloat);
  const auto logits = model.forward(batch, fl);
  EXPECT_EQ(logits.size(), 30u);
  for (float v : logits) EXPECT_TRUE(std::isfinite(v));

  auto half = model.make_numerics(NumericMode::kFp16);
  const auto lh = model.forward(batch, half);
  ASSERT_EQ(lh.size(), logits.size());
  for (size_t i = 0; i < lh.size(); ++i) EXPECT_NEAR(lh[i], logits[i], 0.05);

  augment::AugPipeline resize;
  resize.resize_height = 16;
  resize.resize_width = 16;
  Numerics q;
  calibrate(model, data, resize, 6, q);
  EXPECT_EQ(q.mode, NumericMode::kFakeQuant);
  EXPECT_EQ(q.activations.size(), model.site_count());
  const auto before = model.parameters();
  const auto lq = model.forward(batch, q);
  ASSERT_EQ(lq.size(), logits.size());
  for (size_t i = 0; i < lq.size(); ++i) EXPECT_NEAR(lq[i], logits[i], 0.25);
  EXPECT_EQ(model.parameters(), before);
}

TEST(ClassifierTest, FrozenGroupsDoNotMove) {
  auto bb = TinyCnn::standard(5);
  Classifier model(bb, strategy::build_head(32, 2), 6);
  auto plan = strategy::make_fine_tuning_plan(bb, 2, 4, 1);
  plan.learning_rate = 1e-2;
  const auto data = two_colour_set(8, 2);
  const auto batch = batch_of(data, 8);
  auto nm = model.make_numerics(NumericMode::kFloat);
  RngStream drop(1, 1);
  const auto before = model.parameters();
  model.train_step(batch, data.labels, plan.phases[0], plan, nm, drop);
  const auto after = model.parameters();
  for (const auto &g : bb.groups()) EXPECT_EQ(after.at(g.name), before.at(g.name)) << g.name;
  EXPECT_NE(after.at(std::string(strategy::kHeadOutputKernel)), before.at(std::string(strategy::kHeadOutputKernel)));

  model.train_step(batch, data.labels, plan.phases[1], plan, nm, drop);
  const auto later = model.parameters();
  EXPECT_EQ(later.at("block0/kernel"), before.at("block0/kernel"));
  EXPECT_NE(later.at("block2/kernel"), before.at("block2/kernel"));
}

TEST(ClassifierTest, LearnsSeparableTask) {
  auto bb = TinyCnn::standard(7);
  Classifier model(bb, strategy::build_head(32, 2), 8);
  auto plan = strategy::make_l2sp_plan(bb, 6);
  plan.learning_rate = 3e-3;
  plan.batch_size = 16;
  const auto train_set = two_colour_set(64, 3);
  const auto test_set = two_colour_set(32, 4);
  augment::AugPipeline resize;
  resize.resize_height = 16;
  resize.resize_width = 16;
  auto nm = model.make_numerics(NumericMode::kFloat);
  std::vector<EpochLog> log;
  TrainOptions opts;
  opts.seed = 11;
  opts.on_epoch = [&](const EpochLog &e) { log.push_back(e); };
  train(model, plan, train_set, resize, opts, nm);
  ASSERT_EQ(log.size(), 6u);
  EXPECT_LT(log.back().loss, log.front().loss);
  auto eval = model.make_numerics(NumericMode::kFloat);
  const auto pred = predict_all(model, test_set.images, resize, eval);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test_set.labels[i] ? 1 : 0;
  EXPECT_GE(correct, 28);
}

TEST(ClassifierTest, TrainingIsDeterministic) {
  auto run = [] {
    auto bb = TinyCnn::standard(9);
    Classifier model(bb, strategy::build_head(32, 2), 10);
    auto plan = strategy::make_fine_tuning_plan(bb, 1, 2, 1);
    plan.learning_rate = 1e-3;
    const auto data = two_colour_set(20, 5);
    auto nm = model.make_numerics(NumericMode::kFloat);
    TrainOptions opts;
    opts.seed = 3;
    train(model, plan, data, augment::norm_aug_policy(16, 16, 2), opts, nm);
    return model.parameters();
  };
  EXPECT_EQ(run(), run());
}

TEST(ClassifierTest, JsonRoundTrip) {
  const Classifier model(TinyCnn::standard(12), strategy::build_head(32, 3), 13);
  const auto back = classifier_from_json(nlohmann::json::parse(to_json(model).dump()));
  EXPECT_EQ(back.parameters(), model.parameters());
  const auto batch = batch_of(two_colour_set(4, 6), 4);
  auto a = model.make_numerics(NumericMode::kFloat);
  auto b = back.make_numerics(NumericMode::kFloat);
  EXPECT_EQ(model.forward(batch, a), back.forward(batch, b));

  Numerics q;
  augment::AugPipeline resize;
  resize.resize_height = 16;
  resize.resize_width = 16;
  calibrate(model, two_colour_set(4, 7), resize, 4, q);
  const auto qb = numerics_from_json(nlohmann::json::parse(to_json(q).dump()));
  EXPECT_EQ(qb.mode, q.mode);
  ASSERT_EQ(qb.activations.size(), q.activations.size());
  for (size_t i = 0; i < q.activations.size(); ++i) EXPECT_EQ(qb.activations[i], q.activations[i]);
}

TEST(ClassifierTest, RejectsMismatchedHead) {
  EXPECT_THROW(Classifier(TinyCnn::standard(1), strategy::build_head(64, 3), 1), Error);
}

}  // namespace
}  // namespace tlbench::nn
