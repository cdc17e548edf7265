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
#include "tlbench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include "tlbench/error.hpp"

namespace tlbench::bench {

namespace {

double load_average() {
  double loads[1] = {0.0};
  return ::getloadavg(loads, 1) == 1 ? loads[0] : 0.0;
}

nn::Batch slice(const nn::Batch &batch, int index) {
  nn::Batch one;
  one.n = 1;
  one.height = batch.height;
  one.width = batch.width;
  one.channels = batch.channels;
  const size_t stride = static_cast<size_t>(batch.height) * batch.width * batch.channels;
  one.x.assign(batch.x.begin() + static_cast<std::ptrdiff_t>(stride * index),
               batch.x.begin() + static_cast<std::ptrdiff_t>(stride * (index + 1)));
  return one;
}

}  // namespace

TimingResult run_benchmark(const ModelRunner &runner, const nn::Batch &images, const TimingOptions &options) {
  if (images.n < 1) throw_validation("benchmark batch is empty");
  if (options.warmup_rounds < 0 || options.repeats < 1) throw_validation("benchmark needs warmup >= 0 and repeats >= 1");
  if (!runner.run) throw_validation("benchmark runner has no callable");

  // Single-image slices are prepared before any timing.
  std::vector<nn::Batch> singles;
  if (options.per_image)
    for (int i = 0; i < images.n; ++i) singles.push_back(slice(images, i));
  auto invoke = [&] {
    if (options.per_image) {
      for (const auto &s : singles) runner.run(s);
    } else {
      runner.run(images);
    }
  };

  TimingResult r;
  r.batch_size = images.n;
  r.warmup_rounds = options.warmup_rounds;
  r.repeats = options.repeats;
  r.per_image = options.per_image;
  r.load_before = load_average();
  for (int i = 0; i < options.warmup_rounds; ++i) invoke();
  for (int i = 0; i < options.repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    invoke();
    const auto stop = std::chrono::steady_clock::now();
    r.elapsed_per_run.push_back(std::chrono::duration<double>(stop - start).count());
  }
  r.load_after = load_average();

  const double n = static_cast<double>(r.elapsed_per_run.size());
  r.elapsed_mean = std::accumulate(r.elapsed_per_run.begin(), r.elapsed_per_run.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : r.elapsed_per_run) ss += (e - r.elapsed_mean) * (e - r.elapsed_mean);
  r.elapsed_std = r.elapsed_per_run.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  r.elapsed_min = *std::min_element(r.elapsed_per_run.begin(), r.elapsed_per_run.end());
  r.throughput = throughput_for(r.batch_size, r.elapsed_mean);
  const double cores = std::max(1u, std::thread::hardware_concurrency());
  r.noisy = std::max(r.load_before, r.load_after) > cores;
  return r;
}

nlohmann::json to_json(const TimingResult &r) {
  return {{"batch_size", r.batch_size},     {"warmup_rounds", r.warmup_rounds}, {"repeats", r.repeats},
          {"per_image", r.per_image},       {"elapsed_per_run", r.elapsed_per_run},
          {"elapsed_mean_s", r.elapsed_mean}, {"elapsed_std_s", r.elapsed_std}, {"elapsed_min_s", r.elapsed_min},
          {"throughput_ips", r.throughput}, {"load_before", r.load_before},   {"load_after", r.load_after},
          {"noisy", r.noisy}};
}

std::string timing_csv_row(const ModelRunner &runner, std::string_view dataset, const TimingResult &r) {
  std::ostringstream out;
  out.precision(9);
  out << runner.name << ',' << runner.scheme << ',' << dataset << ',' << r.batch_size << ',' << r.warmup_rounds << ','
      << r.repeats << ',' << r.elapsed_mean << ',' << r.elapsed_std << ',' << r.throughput;
  return out.str();
}

void append_timing_csv(const std::filesystem::path &path, const ModelRunner &runner, std::string_view dataset,
                       const TimingResult &r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw_io("cannot write " + path.string());
  if (fresh) out << kTimingCsvHeader << '\n';
  out << timing_csv_row(runner, dataset, r) << '\n';
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d:
      return "conv2d";
    case LayerKind::kDepthwiseConv2d:
      return "depthwise_conv2d";
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kPooling:
      return "pooling";
    case LayerKind::kActivation:
      return "activation";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv(int k, int cin, int cout, int stride, int in_h, int in_w) {
  return {LayerKind::kConv2d, k, k, cin, cout, stride, in_h, in_w, true};
}

LayerSpec LayerSpec::depthwise(int k, int channels, int stride, int in_h, int in_w) {
  return {LayerKind::kDepthwiseConv2d, k, k, channels, channels, stride, in_h, in_w, true};
}

LayerSpec LayerSpec::dense(int in, int out) { return {LayerKind::kDense, 1, 1, in, out, 1, 0, 0, true}; }

LayerSpec LayerSpec::pool(int k, int stride, int channels) {
  return {LayerKind::kPooling, k, k, channels, channels, stride, 0, 0, false};
}

LayerSpec LayerSpec::activation() { return {}; }

namespace {

void check_dims(const LayerSpec &l) {
  if (l.kind == LayerKind::kActivation) return;
  if (l.kernel_h < 1 || l.kernel_w < 1 || l.in_channels < 1 || l.out_channels < 1 || l.stride < 1 || l.in_h < 0 ||
      l.in_w < 0)
    throw_validation(std::string(to_string(l.kind)) + " layer has non-positive dimensions");
}

int out_extent(int in, int k, int stride, bool same) { return same ? (in + stride - 1) / stride : (in - k) / stride + 1; }

}  // namespace

uint64_t count_params(const std::vector<LayerSpec> &layers) {
  uint64_t total = 0;
  for (const auto &l : layers) {
    check_dims(l);
    const auto kh = static_cast<uint64_t>(l.kernel_h);
    const auto kw = static_cast<uint64_t>(l.kernel_w);
    const auto cin = static_cast<uint64_t>(l.in_channels);
    const auto cout = static_cast<uint64_t>(l.out_channels);
    switch (l.kind) {
      case LayerKind::kConv2d:
        total += kh * kw * cin * cout + cout;
        break;
      case LayerKind::kDepthwiseConv2d:
        total += kh * kw * cin + cin;
        break;
      case LayerKind::kDense:
        total += cin * cout + cout;
        break;
      case LayerKind::kPooling:
      case LayerKind::kActivation:
        break;
    }
  }
  return total;
}

uint64_t estimate_flops(const std::vector<LayerSpec> &layers) {
  uint64_t total = 0;
  int h = 0;
  int w = 0;
  for (const auto &l : layers) {
    check_dims(l);
    if (l.kind == LayerKind::kDense) {
      total += 2ULL * static_cast<uint64_t>(l.in_channels) * static_cast<uint64_t>(l.out_channels);
      continue;
    }
    if (l.kind == LayerKind::kActivation) continue;
    if (l.in_h > 0 && l.in_w > 0) {
      h = l.in_h;
      w = l.in_w;
    }
    if (h < 1 || w < 1) throw_validation(std::string(to_string(l.kind)) + " layer has unresolvable spatial size");
    const int oh = out_extent(h, l.kernel_h, l.stride, l.same_padding);
    const int ow = out_extent(w, l.kernel_w, l.stride, l.same_padding);
    if (oh < 1 || ow < 1) throw_validation("layer output collapses to zero size");
    const auto hw = static_cast<uint64_t>(oh) * static_cast<uint64_t>(ow);
    const auto k = static_cast<uint64_t>(l.kernel_h) * static_cast<uint64_t>(l.kernel_w);
    if (l.kind == LayerKind::kConv2d)
      total += 2ULL * k * static_cast<uint64_t>(l.in_channels) * static_cast<uint64_t>(l.out_channels) * hw;
    else if (l.kind == LayerKind::kDepthwiseConv2d)
      total += 2ULL * k * static_cast<uint64_t>(l.in_channels) * hw;
    h = oh;
    w = ow;
  }
  return total;
}

std::vector<LayerSpec> vgg16_layers(int num_classes) {
  std::vector<LayerSpec> layers;
  const int stages[5][2] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
  int cin = 3;
  bool first = true;
  for (const auto &stage : stages) {
    for (int i = 0; i < stage[1]; ++i) {
      layers.push_back(first ? LayerSpec::conv(3, cin, stage[0], 1, 224, 224) : LayerSpec::conv(3, cin, stage[0]));
      layers.push_back(LayerSpec::activation());
      first = false;
      cin = stage[0];
    }
    auto pool = LayerSpec::pool(2, 2, cin);
    pool.same_padding = false;
    layers.push_back(pool);
  }
  layers.push_back(LayerSpec::dense(7 * 7 * 512, 4096));
  layers.push_back(LayerSpec::dense(4096, 4096));
  layers.push_back(LayerSpec::dense(4096, num_classes));
  return layers;
}

std::vector<LayerSpec> classifier_layers(const nn::Classifier &model, int in_h, int in_w) {
  std::vector<LayerSpec> layers;
  bool first = true;
  for (const auto &s : model.layers()) {
    layers.push_back(first ? LayerSpec::conv(s.kernel, s.in_channels, s.out_channels, s.stride, in_h, in_w)
                           : LayerSpec::conv(s.kernel, s.in_channels, s.out_channels, s.stride));
    layers.push_back(LayerSpec::activation());
    first = false;
  }
  const auto &head = model.head();
  layers.push_back(LayerSpec::dense(head.feature_dim, head.hidden_units));
  layers.push_back(LayerSpec::activation());
  layers.push_back(LayerSpec::dense(head.hidden_units, head.output_units));
  return layers;
}

ModelRunner classifier_runner(const nn::Classifier &model, nn::Numerics numerics, std::string name,
                              std::string scheme) {
  auto state = std::make_shared<nn::Numerics>(std::move(numerics));
  ModelRunner r;
  r.name = std::move(name);
  r.scheme = std::move(scheme);
  r.run = [&model, state](const nn::Batch &batch) { model.predict(batch, *state); };
  return r;
}

std::vector<ThroughputCheck> check_throughput(const std::vector<results::TimingRow> &rows, std::string_view platform,
                                              double tolerance) {
  std::vector<ThroughputCheck> out;
  for (const auto &row : rows) {
    if (!platform.empty() && row.platform != platform) continue;
    if (row.elapsed_mean_s <= 0.0) throw_validation("non-positive elapsed time for " + row.model);
    ThroughputCheck c{row, throughput_for(row.batch_size, row.elapsed_mean_s)};
    c.error = std::abs(c.derived - row.throughput_ips);
    c.ok = c.error <= tolerance;
    out.push_back(c);
  }
  return out;
}

}  // namespace tlbench::bench
