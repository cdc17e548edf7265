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
#ifndef TLBENCH_SYNTH_HPP_
#define TLBENCH_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tlbench/data.hpp"
#include "tlbench/image.hpp"
#include "tlbench/nn.hpp"
#include "tlbench/rng.hpp"

// Procedural image datasets for desk-scale runs: textured classes that
// differ in pattern and colour, rendered with per-image jitter and noise.
namespace tlbench::synth {

inline constexpr int kPatternCount = 6;
inline constexpr int kColourCount = 4;

struct PatternStyle {
  int pattern = 0;      // 0..kPatternCount-1
  int colour = -1;      // 0..kColourCount-1, or -1 for a random hue
  double brightness = 1.0;
  double scale = 1.0;   // multiplies the pattern period
  double shift = 0.0;   // vertical offset as a fraction of the side
  double noise = 12.0;  // Gaussian noise sigma in grey levels
};

augment::Image render(const PatternStyle &style, int size, RngStream &rng);

// Class i uses pattern i % kPatternCount and colour i / kPatternCount.
std::vector<std::string> pattern_class_names(int classes);
PatternStyle pattern_class_style(int label);

struct PatternOptions {
  int classes = 8;
  int per_class = 40;
  int size = 40;
  uint64_t seed = 0;
};

// Writes <dir>/images/<class>/<n>.ppm and <dir>/manifest.jsonl.
data::DatasetManifest write_pattern_dataset(const std::filesystem::path &dir, const PatternOptions &options);

struct IdolOptions {
  int rooms = 5;
  int per_cell = 12;  // images per (room, robot, lighting)
  int size = 40;
  uint64_t seed = 0;
};

// Place-recognition style dataset tagged with robot (dumbo, minnie) and
// lighting (cloudy, night, sunny).
data::DatasetManifest write_idol_dataset(const std::filesystem::path &dir, const IdolOptions &options);

// In-memory source task for backbone pre-training: one class per pattern,
// random hues.
nn::LabeledImages source_task(int count, int size, uint64_t seed);

}  // namespace tlbench::synth

#endif  // TLBENCH_SYNTH_HPP_
