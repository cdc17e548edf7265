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
#ifndef TLBENCH_AUGMENT_HPP_
#define TLBENCH_AUGMENT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tlbench/image.hpp"
#include "tlbench/rng.hpp"

namespace tlbench::augment {

enum class OpKind {
  kRotate,
  kFlipH,
  kFlipV,
  kRandomCrop,
  kGaussianBlur,
  kMotionBlur,
  kMedianBlur,
  kGridDistortion,
  kOpticalDistortion,
  kSharpen,
  kCoarseDropout,
  kAffine,
};

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range &) const = default;
};

// Parameter ranges for every operator kind; each kind reads only its own
// fields. Ranges are sampled uniformly per application.
struct AugParams {
  Range angle_deg{-30.0, 30.0};         // rotate
  Range crop_area{0.8, 1.0};            // random_crop, fraction of the image area kept
  Range kernel{3.0, 7.0};               // gaussian/motion/median blur, odd sizes
  int grid_steps = 5;                   // grid_distortion
  double distort_limit = 0.3;           // grid/optical distortion
  Range sharpen_alpha{0.2, 0.5};        // sharpen
  Range sharpen_lightness{0.5, 1.0};    // sharpen
  int min_holes = 1;                    // coarse_dropout
  int max_holes = 8;                    // coarse_dropout
  double max_hole_fraction = 0.1;       // coarse_dropout, of each side
  int fill_value = 0;                   // coarse_dropout
  double translate_fraction = 0.1;      // affine
  double shear_deg = 10.0;              // affine

  bool operator==(const AugParams &) const = default;
};

struct AugOp {
  OpKind kind = OpKind::kFlipH;
  double p = 0.5;
  AugParams params;

  void validate() const;
  bool operator==(const AugOp &) const = default;
};

struct AugPipeline {
  int resize_height = 224;
  int resize_width = 224;
  std::vector<AugOp> ops;
  uint64_t seed = 0;

  void validate() const;
  // Independent stream for one sample draw; epochs get distinct streams.
  RngStream stream_for(uint64_t sample_index, uint64_t epoch = 0) const;
  std::vector<OpKind> kinds() const;
  bool operator==(const AugPipeline &) const = default;
};

// Applies one operator unconditionally. Dimensions are preserved (random_crop
// crops then resizes back).
Image apply_op(const Image &image, const AugOp &op, RngStream &stream);

// Resizes to the target, then gates every operator with its probability.
Image apply_pipeline(const Image &image, const AugPipeline &pipeline, RngStream &stream);

// Resize only, no stochastic operators.
Image resize_only(const Image &image, const AugPipeline &pipeline);

AugPipeline norm_aug_policy(int img_h, int img_w, uint64_t seed = 0);
AugPipeline extra_aug_policy(int img_h, int img_w, uint64_t seed = 0);
AugPipeline policy_by_name(std::string_view name, int img_h, int img_w, uint64_t seed = 0);

nlohmann::json to_json(const AugPipeline &pipeline);
AugPipeline pipeline_from_json(const nlohmann::json &j);

}  // namespace tlbench::augment

#endif  // TLBENCH_AUGMENT_HPP_
