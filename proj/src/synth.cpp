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
#include "tlbench/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tlbench/error.hpp"

namespace tlbench::synth {

namespace {

constexpr std::array<const char *, kPatternCount> kPatternNames = {"hstripes", "vstripes", "checker",
                                                                    "rings",    "diagonal", "dots"};
constexpr std::array<const char *, kColourCount> kColourNames = {"red", "blue", "green", "yellow"};
constexpr std::array<std::array<double, 3>, kColourCount> kPalette = {{
    {200, 50, 50},
    {50, 70, 200},
    {50, 180, 60},
    {210, 200, 40},
}};

std::array<double, 3> hue_to_rgb(double hue) {
  // Fully saturated hue in [0, 1) mapped to RGB in [40, 220].
  std::array<double, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double k = std::fmod(hue * 6.0 + 4.0 - 2.0 * c + 6.0, 6.0);
    const double v = 1.0 - std::clamp(std::min(k, 4.0 - k), 0.0, 1.0);
    rgb[static_cast<size_t>(c)] = 40.0 + 180.0 * v;
  }
  return rgb;
}

bool pattern_on(int pattern, double x, double y, double period, double phase, int size) {
  const double c = size / 2.0;
  switch (pattern) {
    case 0:
      return std::fmod(y + phase, period) < period / 2;
    case 1:
      return std::fmod(x + phase, period) < period / 2;
    case 2:
      return (std::fmod(x + phase, period) < period / 2) != (std::fmod(y + phase, period) < period / 2);
    case 3:
      return std::fmod(std::hypot(x - c, y - c) + phase, period) < period / 2;
    case 4:
      return std::fmod(x + y + phase, period) < period / 2;
    default: {
      const double cx = std::fmod(x + phase, period) - period / 2;
      const double cy = std::fmod(y + phase, period) - period / 2;
      return cx * cx + cy * cy < period * period / 9;
    }
  }
}

}  // namespace

augment::Image render(const PatternStyle &style, int size, RngStream &rng) {
  if (size < 4) throw_validation("synthetic images must be at least 4 pixels wide");
  if (style.pattern < 0 || style.pattern >= kPatternCount) throw_validation("pattern index out of range");
  std::array<double, 3> fg = style.colour < 0 ? hue_to_rgb(rng.uniform())
                                              : kPalette.at(static_cast<size_t>(style.colour));
  for (auto &v : fg) v += rng.uniform(-25.0, 25.0);
  const double bg_level = rng.uniform(20.0, 90.0);
  const double period = rng.uniform(6.0, 10.0) * style.scale * size / 40.0;
  const double phase = rng.uniform(0.0, period) + 1000.0 * period;
  const double dy = style.shift * size;
  augment::Image img(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool on = pattern_on(style.pattern, x, y + dy, period, phase, size);
      for (int ch = 0; ch < 3; ++ch) {
        const double base = on ? fg[static_cast<size_t>(ch)] : bg_level;
        const double v = base * style.brightness + style.noise * rng.normal();
        img.at(y, x, ch) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

std::vector<std::string> pattern_class_names(int classes) {
  if (classes < 2 || classes > kPatternCount * kColourCount)
    throw_validation("pattern datasets support 2.." + std::to_string(kPatternCount * kColourCount) + " classes");
  std::vector<std::string> names;
  for (int i = 0; i < classes; ++i)
    names.push_back(std::string(kColourNames[static_cast<size_t>(i / kPatternCount)]) + "_" +
                    kPatternNames[static_cast<size_t>(i % kPatternCount)]);
  return names;
}

PatternStyle pattern_class_style(int label) {
  PatternStyle s;
  s.pattern = label % kPatternCount;
  s.colour = label / kPatternCount;
  return s;
}

data::DatasetManifest write_pattern_dataset(const std::filesystem::path &dir, const PatternOptions &options) {
  if (options.per_class < 1) throw_validation("per_class must be >= 1");
  data::DatasetManifest m;
  m.name = "synthetic_patterns";
  m.classes = pattern_class_names(options.classes);
  m.base_dir = dir;
  for (int label = 0; label < options.classes; ++label) {
    const auto &cls = m.classes[static_cast<size_t>(label)];
    for (int i = 0; i < options.per_class; ++i) {
      RngStream rng(derive_seed(options.seed, static_cast<uint64_t>(label)), static_cast<uint64_t>(i));
      const auto rel = std::filesystem::path("images") / cls / (std::to_string(i) + ".ppm");
      augment::write_pnm(dir / rel, render(pattern_class_style(label), options.size, rng));
      m.records.push_back({rel.generic_string(), cls, {}, data::Split::kUnassigned});
    }
  }
  data::save_manifest(m, dir / "manifest.jsonl");
  return m;
}

data::DatasetManifest write_idol_dataset(const std::filesystem::path &dir, const IdolOptions &options) {
  if (options.rooms < 2 || options.rooms > kPatternCount * kColourCount) throw_validation("rooms out of range");
  if (options.per_cell < 1) throw_validation("per_cell must be >= 1");
  struct Robot {
    const char *name;
    double scale;
    double shift;
  };
  struct Lighting {
    const char *name;
    double brightness;
    double noise;
  };
  const std::array<Robot, 2> robots = {{{"dumbo", 1.0, 0.0}, {"minnie", 1.3, 0.15}}};
  const std::array<Lighting, 3> lightings = {{{"cloudy", 1.0, 12.0}, {"night", 0.5, 18.0}, {"sunny", 1.25, 10.0}}};
  data::DatasetManifest m;
  m.name = "synthetic_idol";
  m.base_dir = dir;
  for (int room = 0; room < options.rooms; ++room) m.classes.push_back("room" + std::to_string(room));
  uint64_t cell = 0;
  for (int room = 0; room < options.rooms; ++room) {
    // Rooms interleave patterns and colours so neighbours differ in both.
    PatternStyle base;
    base.pattern = room % kPatternCount;
    base.colour = (room * 3 + room / kPatternCount) % kColourCount;
    for (const auto &robot : robots) {
      for (const auto &light : lightings) {
        ++cell;
        for (int i = 0; i < options.per_cell; ++i) {
          PatternStyle s = base;
          s.scale = robot.scale;
          s.shift = robot.shift;
          s.brightness = light.brightness;
          s.noise = light.noise;
          RngStream rng(derive_seed(options.seed, cell), static_cast<uint64_t>(i));
          const auto rel = std::filesystem::path("images") / robot.name / light.name /
                           (m.classes[static_cast<size_t>(room)] + "_" + std::to_string(i) + ".ppm");
          augment::write_pnm(dir / rel, render(s, options.size, rng));
          m.records.push_back({rel.generic_string(),
                               m.classes[static_cast<size_t>(room)],
                               {{std::string(data::kRobotTag), robot.name}, {std::string(data::kLightingTag), light.name}},
                               data::Split::kUnassigned});
        }
      }
    }
  }
  data::save_manifest(m, dir / "manifest.jsonl");
  return m;
}

nn::LabeledImages source_task(int count, int size, uint64_t seed) {
  nn::LabeledImages out;
  for (int i = 0; i < count; ++i) {
    RngStream rng(derive_seed(seed, 0x50C), static_cast<uint64_t>(i));
    PatternStyle s;
    s.pattern = i % kPatternCount;
    s.colour = -1;
    s.scale = rng.uniform(0.8, 1.3);
    s.brightness = rng.uniform(0.6, 1.2);
    out.images.push_back(render(s, size, rng));
    out.labels.push_back(s.pattern);
  }
  return out;
}

}  // namespace tlbench::synth
