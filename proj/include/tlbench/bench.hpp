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
#ifndef TLBENCH_BENCH_HPP_
#define TLBENCH_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tlbench/nn.hpp"
#include "tlbench/results.hpp"

namespace tlbench::bench {

struct ModelRunner {
  std::string name;
  std::string scheme;
  std::vector<int> input_shape;  // height, width, channels
  // Consumes one preprocessed batch. Must not perform lazy one-time work
  // after the warm-up rounds.
  std::function<void(const nn::Batch &)> run;
};

struct TimingOptions {
  int warmup_rounds = 10;
  int repeats = 10;
  // Time `batch.n` single-image calls instead of one batch call.
  bool per_image = false;
};

struct TimingResult {
  int batch_size = 0;
  int warmup_rounds = 0;
  int repeats = 0;
  bool per_image = false;
  std::vector<double> elapsed_per_run;
  double elapsed_mean = 0.0;
  double elapsed_std = 0.0;
  double elapsed_min = 0.0;
  double throughput = 0.0;
  double load_before = 0.0;
  double load_after = 0.0;
  bool noisy = false;
};

inline double throughput_for(int batch_size, double elapsed_mean_s) {
  return static_cast<double>(batch_size) / elapsed_mean_s;
}

// Untimed warm-up, then `repeats` timed calls on a monotonic clock. A runner
// exception aborts the benchmark.
struct ThroughputCheck {
  results::TimingRow row;
  double derived = 0.0;
  double error = 0.0;
  bool ok = false;
};

// Recomputes batch / elapsed for every row of one platform (all rows when
// platform is empty) and compares with the recorded throughput.
std::vector<ThroughputCheck> check_throughput(const std::vector<results::TimingRow> &rows, std::string_view platform,
                                              double tolerance = 0.05);

TimingResult run_benchmark(const ModelRunner &runner, const nn::Batch &images, const TimingOptions &options = {});

nlohmann::json to_json(const TimingResult &r);

inline constexpr std::string_view kTimingCsvHeader =
    "model,scheme,dataset,batch_size,warmup,repeats,elapsed_mean_s,elapsed_std_s,throughput_ips";

std::string timing_csv_row(const ModelRunner &runner, std::string_view dataset, const TimingResult &r);
// Appends a row, writing the header first when the file is new.
void append_timing_csv(const std::filesystem::path &path, const ModelRunner &runner, std::string_view dataset,
                       const TimingResult &r);

enum class LayerKind { kConv2d, kDepthwiseConv2d, kDense, kPooling, kActivation };

std::string_view to_string(LayerKind kind);

// Spatial layers with in_h = in_w = 0 take their input size from the previous
// layer. Dense layers use in_channels -> out_channels features.
struct LayerSpec {
  LayerKind kind = LayerKind::kActivation;
  int kernel_h = 1;
  int kernel_w = 1;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int in_h = 0;
  int in_w = 0;
  bool same_padding = true;

  static LayerSpec conv(int k, int cin, int cout, int stride = 1, int in_h = 0, int in_w = 0);
  static LayerSpec depthwise(int k, int channels, int stride = 1, int in_h = 0, int in_w = 0);
  static LayerSpec dense(int in, int out);
  static LayerSpec pool(int k, int stride, int channels);
  static LayerSpec activation();
};

uint64_t count_params(const std::vector<LayerSpec> &layers);
uint64_t estimate_flops(const std::vector<LayerSpec> &layers);

// Standard VGG16 with its original 1000-way classifier at 224x224.
std::vector<LayerSpec> vgg16_layers(int num_classes = 1000);
// Layer list of the desk-scale classifier for a given input size.
std::vector<LayerSpec> classifier_layers(const nn::Classifier &model, int in_h, int in_w);

// Wraps a classifier and its numerics as a runner.
ModelRunner classifier_runner(const nn::Classifier &model, nn::Numerics numerics, std::string name,
                              std::string scheme);

}  // namespace tlbench::bench

#endif  // TLBENCH_BENCH_HPP_
