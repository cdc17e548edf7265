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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tlbench/error.hpp"

namespace tlbench::nn {

using nlohmann::json;
using strategy::ParameterMap;
using strategy::Tensor;

namespace {

std::string kernel_name(size_t block) { return "block" + std::to_string(block) + "/kernel"; }
std::string bias_name(size_t block) { return "block" + std::to_string(block) + "/bias"; }

int out_dim(int in, const ConvSpec &s) {
  const int pad = s.kernel / 2;
  return (in + 2 * pad - s.kernel) / s.stride + 1;
}

void conv_forward(const float *in, int n, int h, int w, const ConvSpec &s, const float *kernel, const float *bias,
                  float *out, int oh, int ow) {
  const int k = s.kernel;
  const int pad = k / 2;
  const int cin = s.in_channels;
  const int cout = s.out_channels;
  for (int img = 0; img < n; ++img) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float *o = out + ((static_cast<size_t>(img) * oh + oy) * ow + ox) * cout;
        std::copy(bias, bias + cout, o);
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s.stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * s.stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            const float *ip = in + ((static_cast<size_t>(img) * h + iy) * w + ix) * cin;
            const float *wp = kernel + static_cast<size_t>((ky * k + kx) * cin) * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const float v = ip[ci];
              if (v == 0.0f) continue;
              const float *wr = wp + static_cast<size_t>(ci) * cout;
              for (int co = 0; co < cout; ++co) o[co] += v * wr[co];
            }
          }
        }
      }
    }
  }
}

// Accumulates into d_kernel / d_bias; writes d_in when non-null (must be zeroed).
void conv_backward(const float *in, int n, int h, int w, const ConvSpec &s, const float *kernel, const float *d_out,
                   float *d_in, float *d_kernel, float *d_bias, int oh, int ow) {
  const int k = s.kernel;
  const int pad = k / 2;
  const int cin = s.in_channels;
  const int cout = s.out_channels;
  for (int img = 0; img < n; ++img) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const float *d = d_out + ((static_cast<size_t>(img) * oh + oy) * ow + ox) * cout;
        bool any = false;
        for (int co = 0; co < cout; ++co) {
          d_bias[co] += d[co];
          any = any || d[co] != 0.0f;
        }
        if (!any) continue;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s.stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * s.stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            const size_t in_off = ((static_cast<size_t>(img) * h + iy) * w + ix) * cin;
            const float *ip = in + in_off;
            const size_t w_off = static_cast<size_t>((ky * k + kx) * cin) * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const float v = ip[ci];
              float *dwr = d_kernel + w_off + static_cast<size_t>(ci) * cout;
              const float *wr = kernel + w_off + static_cast<size_t>(ci) * cout;
              float acc = 0.0f;
              for (int co = 0; co < cout; ++co) {
                dwr[co] += v * d[co];
                acc += wr[co] * d[co];
              }
              if (d_in != nullptr) d_in[in_off + ci] += acc;
            }
          }
        }
      }
    }
  }
}

void dense_forward(const float *in, int n, int fin, int fout, const float *kernel, const float *bias, float *out) {
  for (int i = 0; i < n; ++i) {
    float *o = out + static_cast<size_t>(i) * fout;
    std::copy(bias, bias + fout, o);
    const float *x = in + static_cast<size_t>(i) * fin;
    for (int j = 0; j < fin; ++j) {
      const float v = x[j];
      if (v == 0.0f) continue;
      const float *wr = kernel + static_cast<size_t>(j) * fout;
      for (int c = 0; c < fout; ++c) o[c] += v * wr[c];
    }
  }
}

void dense_backward(const float *in, int n, int fin, int fout, const float *kernel, const float *d_out, float *d_in,
                    float *d_kernel, float *d_bias) {
  for (int i = 0; i < n; ++i) {
    const float *d = d_out + static_cast<size_t>(i) * fout;
    const float *x = in + static_cast<size_t>(i) * fin;
    for (int c = 0; c < fout; ++c) d_bias[c] += d[c];
    for (int j = 0; j < fin; ++j) {
      float *dwr = d_kernel + static_cast<size_t>(j) * fout;
      const float *wr = kernel + static_cast<size_t>(j) * fout;
      float acc = 0.0f;
      for (int c = 0; c < fout; ++c) {
        dwr[c] += x[j] * d[c];
        acc += wr[c] * d[c];
      }
      if (d_in != nullptr) d_in[static_cast<size_t>(i) * fin + j] = acc;
    }
  }
}

std::vector<float> to_float(const std::vector<double> &v) { return {v.begin(), v.end()}; }
std::vector<double> to_double(const std::vector<float> &v) { return {v.begin(), v.end()}; }

}  // namespace

TinyCnn::TinyCnn(std::vector<ConvSpec> layers, uint64_t init_seed) : layers_(std::move(layers)) {
  if (layers_.empty()) throw_validation("backbone needs at least one block");
  for (size_t i = 0; i < layers_.size(); ++i) {
    const auto &s = layers_[i];
    if (s.kernel < 1 || s.kernel % 2 == 0 || s.in_channels < 1 || s.out_channels < 1 || s.stride < 1)
      throw_validation("invalid conv block " + std::to_string(i));
    if (i > 0 && s.in_channels != layers_[i - 1].out_channels)
      throw_validation("conv block " + std::to_string(i) + " input channels do not chain");
    Tensor kernel({s.kernel, s.kernel, s.in_channels, s.out_channels});
    RngStream rng(init_seed, i);
    const double sd = std::sqrt(2.0 / (s.kernel * s.kernel * s.in_channels));
    for (auto &v : kernel.values) v = rng.normal() * sd;
    values_.emplace(kernel_name(i), std::move(kernel));
    values_.emplace(bias_name(i), Tensor({s.out_channels}));
  }
}

TinyCnn TinyCnn::standard(uint64_t init_seed) {
  return TinyCnn({{3, 3, 16, 2}, {3, 16, 32, 2}, {3, 32, 32, 1}}, init_seed);
}

std::vector<strategy::GroupInfo> TinyCnn::groups() const {
  std::vector<strategy::GroupInfo> out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const auto &s = layers_[i];
    out.push_back({kernel_name(i), {s.kernel, s.kernel, s.in_channels, s.out_channels}, static_cast<int>(i)});
    out.push_back({bias_name(i), {s.out_channels}, static_cast<int>(i)});
  }
  return out;
}

ParameterMap TinyCnn::parameters() const { return values_; }

void TinyCnn::load(const ParameterMap &values) {
  for (auto &[name, t] : values_) {
    const auto it = values.find(name);
    if (it == values.end()) throw_validation("missing backbone parameter '" + name + "'");
    if (it->second.shape != t.shape) throw_validation("shape mismatch for backbone parameter '" + name + "'");
    t = it->second;
  }
}

void append_image(Batch &batch, const augment::Image &image) {
  if (batch.n == 0) {
    batch.height = image.height;
    batch.width = image.width;
    batch.channels = image.channels;
  } else if (image.height != batch.height || image.width != batch.width || image.channels != batch.channels) {
    throw_validation("batch images must share one shape");
  }
  batch.x.reserve(batch.x.size() + image.pixels.size());
  for (uint8_t p : image.pixels) batch.x.push_back(static_cast<float>(p) / 127.5f - 1.0f);
  ++batch.n;
}

Batch make_batch(const std::vector<const augment::Image *> &images) {
  Batch b;
  for (const auto *img : images) append_image(b, *img);
  return b;
}

struct Classifier::Cache {
  std::vector<std::vector<float>> acts;  // acts[0] = input, acts[i + 1] = block i output
  std::vector<std::vector<uint8_t>> masks;
  std::vector<int> heights, widths;
  std::vector<float> features;
  std::vector<uint8_t> feature_mask;
  std::vector<float> hidden;
  std::vector<uint8_t> hidden_mask;
  std::vector<float> dropout;
  std::vector<float> logits;
  std::vector<uint8_t> logit_mask;
  std::vector<std::vector<float>> effective;
};

Classifier::Classifier(const TinyCnn &backbone, const strategy::HeadSpec &head, uint64_t init_seed)
    : layers_(backbone.layers()), head_(head) {
  head_.validate();
  if (head_.feature_dim != backbone.feature_dim()) throw_validation("head feature_dim does not match the backbone");
  const auto values = backbone.parameters();
  for (const auto &g : backbone.groups()) {
    Param p;
    p.name = g.name;
    p.shape = g.shape;
    p.w = to_float(values.at(g.name).values);
    params_.push_back(std::move(p));
  }
  size_t idx = 0;
  for (const auto &g : head_.groups()) {
    Param p;
    p.name = g.name;
    p.shape = g.shape;
    p.w.assign(strategy::shape_size(g.shape), 0.0f);
    if (g.shape.size() == 2) {
      RngStream rng(derive_seed(init_seed, 0x4EAD), idx);
      const double limit = std::sqrt(6.0 / (g.shape[0] + g.shape[1]));
      for (auto &v : p.w) v = static_cast<float>(rng.uniform(-limit, limit));
    }
    ++idx;
    params_.push_back(std::move(p));
  }
  reset_optimizer();
}

size_t Classifier::param_count() const {
  size_t n = 0;
  for (const auto &p : params_) n += p.w.size();
  return n;
}

void Classifier::reset_optimizer() {
  for (auto &p : params_) {
    p.g.assign(p.w.size(), 0.0f);
    p.m.assign(p.w.size(), 0.0f);
    p.v.assign(p.w.size(), 0.0f);
    p.t = 0;
  }
}

Classifier::Param &Classifier::param(const std::string &name) {
  for (auto &p : params_)
    if (p.name == name) return p;
  throw_validation("unknown parameter '" + name + "'");
}

const Classifier::Param &Classifier::param(const std::string &name) const {
  for (const auto &p : params_)
    if (p.name == name) return p;
  throw_validation("unknown parameter '" + name + "'");
}

ParameterMap Classifier::parameters() const {
  ParameterMap out;
  for (const auto &p : params_) {
    Tensor t;
    t.shape = p.shape;
    t.values = to_double(p.w);
    out.emplace(p.name, std::move(t));
  }
  return out;
}

ParameterMap Classifier::backbone_parameters() const {
  ParameterMap out = parameters();
  std::erase_if(out, [](const auto &kv) { return kv.first.starts_with("head/"); });
  return out;
}

void Classifier::load(const ParameterMap &values) {
  for (auto &p : params_) {
    const auto it = values.find(p.name);
    if (it == values.end()) throw_validation("missing parameter '" + p.name + "'");
    if (it->second.shape != p.shape) throw_validation("shape mismatch for parameter '" + p.name + "'");
    p.w = to_float(it->second.values);
  }
}

Numerics Classifier::make_numerics(NumericMode mode) const {
  Numerics nm;
  nm.mode = mode;
  nm.stats.resize(site_count());
  return nm;
}

std::vector<float> Classifier::effective(const Param &p, NumericMode mode) const {
  if (mode == NumericMode::kFp16) {
    std::vector<float> out(p.w.size());
    std::transform(p.w.begin(), p.w.end(), out.begin(), [](float v) { return static_cast<float>(quant::cast_fp16(v)); });
    return out;
  }
  if (mode == NumericMode::kFakeQuant) {
    const auto [lo, hi] = std::minmax_element(p.w.begin(), p.w.end());
    const auto qp = quant::params_from_range(*lo, *hi);
    std::vector<float> out(p.w.size());
    std::transform(p.w.begin(), p.w.end(), out.begin(),
                   [&](float v) { return static_cast<float>(quant::fake_quant_value(v, qp)); });
    return out;
  }
  return p.w;
}

namespace {

// Applies the numeric mode at one activation site. `mask` (when given) is
// cleared where the straight-through gradient is blocked.
void apply_site(std::vector<float> &x, size_t site, Numerics &nm, std::vector<uint8_t> *mask) {
  switch (nm.mode) {
    case NumericMode::kFloat:
      return;
    case NumericMode::kCalibrate:
      nm.stats.at(site).observe(std::span<const float>(x));
      return;
    case NumericMode::kFp16:
      for (auto &v : x) v = static_cast<float>(quant::cast_fp16(v));
      return;
    case NumericMode::kFakeQuant: {
      if (nm.update_ranges) {
        nm.stats.at(site).observe(std::span<const float>(x));
        if (nm.activations.size() < nm.stats.size()) nm.activations.resize(nm.stats.size());
        nm.activations[site] = nm.stats[site].params();
      }
      if (site >= nm.activations.size()) throw_validation("fake-quant numerics are not calibrated");
      const auto &qp = nm.activations[site];
      for (size_t i = 0; i < x.size(); ++i) {
        if (mask != nullptr && !quant::fake_quant_passes(x[i], qp)) (*mask)[i] = 0;
        x[i] = static_cast<float>(quant::fake_quant_value(x[i], qp));
      }
      return;
    }
  }
}

}  // namespace

void Classifier::run(const Batch &batch, Numerics &nm, bool training, RngStream *dropout_rng, Cache *cache) const {
  if (batch.n < 1) throw_validation("empty batch");
  if (batch.channels != layers_.front().in_channels) throw_validation("batch channel count does not match the model");
  if (nm.stats.size() != site_count()) nm.stats.resize(site_count());
  const int n = batch.n;
  Cache local;
  Cache &c = cache != nullptr ? *cache : local;
  c.effective.clear();
  for (const auto &p : params_) c.effective.push_back(effective(p, nm.mode));

  c.acts.assign(1, batch.x);
  c.masks.clear();
  c.heights.assign(1, batch.height);
  c.widths.assign(1, batch.width);
  apply_site(c.acts[0], 0, nm, nullptr);

  for (size_t i = 0; i < layers_.size(); ++i) {
    const auto &s = layers_[i];
    const int h = c.heights[i];
    const int w = c.widths[i];
    const int oh = out_dim(h, s);
    const int ow = out_dim(w, s);
    std::vector<float> out(static_cast<size_t>(n) * oh * ow * s.out_channels);
    conv_forward(c.acts[i].data(), n, h, w, s, c.effective[2 * i].data(), c.effective[2 * i + 1].data(), out.data(),
                 oh, ow);
    std::vector<uint8_t> mask(out.size());
    for (size_t j = 0; j < out.size(); ++j) {
      mask[j] = out[j] > 0.0f ? 1 : 0;
      if (!mask[j]) out[j] = 0.0f;
    }
    apply_site(out, i + 1, nm, training ? &mask : nullptr);
    c.acts.push_back(std::move(out));
    c.masks.push_back(std::move(mask));
    c.heights.push_back(oh);
    c.widths.push_back(ow);
  }

  const size_t L = layers_.size();
  const int f = head_.feature_dim;
  const int area = c.heights.back() * c.widths.back();
  c.features.assign(static_cast<size_t>(n) * f, 0.0f);
  for (int img = 0; img < n; ++img) {
    const float *a = c.acts.back().data() + static_cast<size_t>(img) * area * f;
    float *o = c.features.data() + static_cast<size_t>(img) * f;
    for (int p = 0; p < area; ++p)
      for (int ch = 0; ch < f; ++ch) o[ch] += a[static_cast<size_t>(p) * f + ch];
    for (int ch = 0; ch < f; ++ch) o[ch] /= static_cast<float>(area);
  }
  c.feature_mask.assign(c.features.size(), 1);
  apply_site(c.features, L + 1, nm, training ? &c.feature_mask : nullptr);

  const int hu = head_.hidden_units;
  const size_t base = 2 * L;
  c.hidden.assign(static_cast<size_t>(n) * hu, 0.0f);
  dense_forward(c.features.data(), n, f, hu, c.effective[base].data(), c.effective[base + 1].data(), c.hidden.data());
  c.hidden_mask.assign(c.hidden.size(), 1);
  for (size_t j = 0; j < c.hidden.size(); ++j) {
    if (c.hidden[j] <= 0.0f) {
      c.hidden[j] = 0.0f;
      c.hidden_mask[j] = 0;
    }
  }
  apply_site(c.hidden, L + 2, nm, training ? &c.hidden_mask : nullptr);
  c.dropout.assign(c.hidden.size(), 1.0f);
  if (training && head_.dropout_rate > 0.0) {
    const auto keep = static_cast<float>(1.0 / (1.0 - head_.dropout_rate));
    for (size_t j = 0; j < c.hidden.size(); ++j) {
      c.dropout[j] = dropout_rng->uniform() < head_.dropout_rate ? 0.0f : keep;
      c.hidden[j] *= c.dropout[j];
    }
  }

  const int k = head_.output_units;
  c.logits.assign(static_cast<size_t>(n) * k, 0.0f);
  dense_forward(c.hidden.data(), n, hu, k, c.effective[base + 2].data(), c.effective[base + 3].data(),
                c.logits.data());
  c.logit_mask.assign(c.logits.size(), 1);
  apply_site(c.logits, L + 3, nm, training ? &c.logit_mask : nullptr);
}

std::vector<float> Classifier::forward(const Batch &batch, Numerics &numerics) const {
  Cache c;
  run(batch, numerics, false, nullptr, &c);
  return c.logits;
}

std::vector<int> Classifier::predict(const Batch &batch, Numerics &numerics) const {
  const auto logits = forward(batch, numerics);
  const int k = head_.output_units;
  std::vector<int> out(static_cast<size_t>(batch.n));
  for (int i = 0; i < batch.n; ++i) {
    const auto *row = logits.data() + static_cast<size_t>(i) * k;
    out[static_cast<size_t>(i)] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

StepStats Classifier::train_step(const Batch &batch, const std::vector<int> &labels, const strategy::Phase &phase,
                                 const strategy::TrainingPlan &plan, Numerics &numerics, RngStream &dropout_rng) {
  if (labels.size() != static_cast<size_t>(batch.n)) throw_validation("label count does not match the batch");
  Cache c;
  run(batch, numerics, true, &dropout_rng, &c);
  const int n = batch.n;
  const int k = head_.output_units;
  const size_t L = layers_.size();

  for (auto &p : params_) std::fill(p.g.begin(), p.g.end(), 0.0f);

  StepStats st;
  st.count = static_cast<size_t>(n);
  std::vector<float> d_logits(c.logits.size());
  for (int i = 0; i < n; ++i) {
    const float *z = c.logits.data() + static_cast<size_t>(i) * k;
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= k) throw_validation("label out of range");
    const float zmax = *std::max_element(z, z + k);
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += std::exp(static_cast<double>(z[j] - zmax));
    const double log_total = std::log(total) + zmax;
    st.data_loss += log_total - z[y];
    if (std::max_element(z, z + k) - z == y) ++st.correct;
    for (int j = 0; j < k; ++j) {
      const double prob = std::exp(z[j] - log_total);
      const size_t idx = static_cast<size_t>(i) * k + j;
      d_logits[idx] = c.logit_mask[idx] ? static_cast<float>((prob - (j == y ? 1.0 : 0.0)) / n) : 0.0f;
    }
  }
  st.data_loss /= n;
  st.loss = st.data_loss;

  std::vector<bool> trains(params_.size());
  int lowest_block = static_cast<int>(L);
  for (size_t i = 0; i < params_.size(); ++i) {
    trains[i] = phase.trains(params_[i].name);
    if (trains[i] && i < 2 * L) lowest_block = std::min(lowest_block, static_cast<int>(i / 2));
  }

  const size_t base = 2 * L;
  const int f = head_.feature_dim;
  const int hu = head_.hidden_units;
  std::vector<float> d_hidden(c.hidden.size());
  dense_backward(c.hidden.data(), n, hu, k, c.effective[base + 2].data(), d_logits.data(), d_hidden.data(),
                 params_[base + 2].g.data(), params_[base + 3].g.data());
  for (size_t j = 0; j < d_hidden.size(); ++j) d_hidden[j] *= c.dropout[j] * static_cast<float>(c.hidden_mask[j]);
  const bool need_features = lowest_block < static_cast<int>(L);
  std::vector<float> d_features(need_features ? c.features.size() : 0);
  dense_backward(c.features.data(), n, f, hu, c.effective[base].data(), d_hidden.data(),
                 need_features ? d_features.data() : nullptr, params_[base].g.data(), params_[base + 1].g.data());

  if (need_features) {
    const int area = c.heights.back() * c.widths.back();
    std::vector<float> d_act(c.acts.back().size());
    for (int img = 0; img < n; ++img)
      for (int p = 0; p < area; ++p)
        for (int ch = 0; ch < f; ++ch) {
          const size_t fi = static_cast<size_t>(img) * f + ch;
          d_act[(static_cast<size_t>(img) * area + p) * f + ch] =
              c.feature_mask[fi] ? d_features[fi] / static_cast<float>(area) : 0.0f;
        }
    for (int i = static_cast<int>(L) - 1; i >= lowest_block; --i) {
      const auto ui = static_cast<size_t>(i);
      const auto &mask = c.masks[ui];
      for (size_t j = 0; j < d_act.size(); ++j)
        if (!mask[j]) d_act[j] = 0.0f;
      std::vector<float> d_in(i > lowest_block ? c.acts[ui].size() : 0, 0.0f);
      conv_backward(c.acts[ui].data(), n, c.heights[ui], c.widths[ui], layers_[ui], c.effective[2 * ui].data(),
                    d_act.data(), i > lowest_block ? d_in.data() : nullptr, params_[2 * ui].g.data(),
                    params_[2 * ui + 1].g.data(), c.heights[ui + 1], c.widths[ui + 1]);
      d_act = std::move(d_in);
    }
  }

  // Head hidden-layer L2: lambda * sum(w^2).
  if (head_.hidden_l2 > 0.0) {
    auto &hk = params_[base];
    double sq = 0.0;
    for (size_t j = 0; j < hk.w.size(); ++j) {
      sq += static_cast<double>(hk.w[j]) * hk.w[j];
      hk.g[j] += static_cast<float>(2.0 * head_.hidden_l2 * hk.w[j]);
    }
    st.loss += head_.hidden_l2 * sq;
  }
  if (phase.regularizer == strategy::Regularizer::kL2SP) {
    if (!plan.anchors) throw_validation("L2-SP phase without anchors");
    const auto current = parameters();
    st.loss += strategy::l2sp_penalty(current, *plan.anchors, plan.l2sp);
    const auto grad = strategy::l2sp_gradient(current, *plan.anchors, plan.l2sp);
    for (auto &p : params_) {
      const auto &g = grad.at(p.name).values;
      for (size_t j = 0; j < p.g.size(); ++j) p.g[j] += static_cast<float>(g[j]);
    }
  }
  if (!std::isfinite(st.loss)) throw Error(ErrorCode::kRuntime, "training diverged: non-finite loss");

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-7;
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!trains[i]) continue;
    auto &p = params_[i];
    ++p.t;
    const double lr_t = plan.learning_rate * std::sqrt(1.0 - std::pow(kBeta2, static_cast<double>(p.t))) /
                        (1.0 - std::pow(kBeta1, static_cast<double>(p.t)));
    for (size_t j = 0; j < p.w.size(); ++j) {
      const float g = p.g[j];
      p.m[j] = static_cast<float>(kBeta1 * p.m[j] + (1.0 - kBeta1) * g);
      p.v[j] = static_cast<float>(kBeta2 * p.v[j] + (1.0 - kBeta2) * g * g);
      p.w[j] -= static_cast<float>(lr_t * p.m[j] / (std::sqrt(static_cast<double>(p.v[j])) + kEps));
    }
  }
  return st;
}

std::vector<EpochLog> train(Classifier &model, const strategy::TrainingPlan &plan, const LabeledImages &data,
                            const augment::AugPipeline &pipeline, const TrainOptions &options, Numerics &numerics) {
  std::vector<std::string> names;
  for (const auto &[name, t] : model.parameters()) names.push_back(name);
  plan.validate(names);
  pipeline.validate();
  if (data.images.empty() || data.images.size() != data.labels.size())
    throw_validation("training data must be non-empty with one label per image");
  const size_t count = data.images.size();
  const auto bs = static_cast<size_t>(plan.batch_size);
  std::vector<EpochLog> history;
  for (int epoch = std::max(1, options.start_epoch); epoch <= plan.total_epochs(); ++epoch) {
    const auto &phase = plan.phase_for_epoch(epoch);
    if (phase.fake_quant) {
      numerics.mode = NumericMode::kFakeQuant;
      numerics.update_ranges = true;
    } else {
      numerics.mode = NumericMode::kFloat;
    }
    const auto ue = static_cast<uint64_t>(epoch);
    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), size_t{0});
    RngStream shuffle_rng(derive_seed(options.seed, 0x5348, ue));
    shuffle_indices(order, shuffle_rng);
    EpochLog log{epoch, phase.name, 0.0, 0.0};
    size_t correct = 0;
    size_t batches = 0;
    for (size_t start = 0; start < count; start += bs) {
      const size_t end = std::min(count, start + bs);
      Batch batch;
      std::vector<int> labels;
      for (size_t j = start; j < end; ++j) {
        const size_t idx = order[j];
        auto stream = pipeline.stream_for(idx, ue);
        append_image(batch, augment::apply_pipeline(data.images[idx], pipeline, stream));
        labels.push_back(data.labels[idx]);
      }
      RngStream dropout_rng(derive_seed(options.seed, 0xD209, ue), batches);
      const auto st = model.train_step(batch, labels, phase, plan, numerics, dropout_rng);
      log.loss += st.loss;
      correct += st.correct;
      ++batches;
    }
    log.loss /= static_cast<double>(batches);
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(count);
    if (options.on_epoch) options.on_epoch(log);
    history.push_back(log);
  }
  return history;
}

void calibrate(const Classifier &model, const LabeledImages &data, const augment::AugPipeline &pipeline, size_t count,
               Numerics &numerics, size_t batch_size) {
  if (data.images.empty()) throw_validation("calibration needs at least one image");
  numerics = model.make_numerics(NumericMode::kCalibrate);
  const size_t total = std::min(count, data.images.size());
  for (size_t start = 0; start < total; start += batch_size) {
    Batch batch;
    for (size_t j = start; j < std::min(total, start + batch_size); ++j)
      append_image(batch, augment::resize_only(data.images[j], pipeline));
    model.forward(batch, numerics);
  }
  numerics.activations.clear();
  for (const auto &s : numerics.stats) numerics.activations.push_back(s.params());
  numerics.mode = NumericMode::kFakeQuant;
  numerics.update_ranges = false;
}

std::vector<int> predict_all(const Classifier &model, const std::vector<augment::Image> &images,
                             const augment::AugPipeline &pipeline, Numerics &numerics, size_t batch_size) {
  std::vector<int> out;
  out.reserve(images.size());
  for (size_t start = 0; start < images.size(); start += batch_size) {
    Batch batch;
    for (size_t j = start; j < std::min(images.size(), start + batch_size); ++j)
      append_image(batch, augment::resize_only(images[j], pipeline));
    const auto pred = model.predict(batch, numerics);
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

json to_json(const Classifier &model) {
  json layers = json::array();
  for (const auto &s : model.layers())
    layers.push_back({{"kernel", s.kernel}, {"in", s.in_channels}, {"out", s.out_channels}, {"stride", s.stride}});
  json params = json::object();
  for (const auto &[name, t] : model.parameters()) params[name] = {{"shape", t.shape}, {"values", t.values}};
  return {{"backbone", "tiny_cnn"}, {"layers", layers}, {"head", strategy::to_json(model.head())}, {"params", params}};
}

Classifier classifier_from_json(const json &j) {
  try {
    std::vector<ConvSpec> layers;
    for (const auto &l : j.at("layers"))
      layers.push_back({l.at("kernel").get<int>(), l.at("in").get<int>(), l.at("out").get<int>(),
                        l.at("stride").get<int>()});
    const auto &h = j.at("head");
    strategy::HeadSpec head = strategy::build_head(h.at("feature_dim").get<int>(), h.at("output_units").get<int>(),
                                                   h.at("hidden_l2").get<double>());
    head.hidden_units = h.at("hidden_units").get<int>();
    head.dropout_rate = h.at("dropout_rate").get<double>();
    Classifier model(TinyCnn(layers, 0), head, 0);
    ParameterMap values;
    for (const auto &[name, t] : j.at("params").items()) {
      Tensor tensor;
      tensor.shape = t.at("shape").get<std::vector<int>>();
      tensor.values = t.at("values").get<std::vector<double>>();
      if (tensor.values.size() != strategy::shape_size(tensor.shape))
        throw_parse("parameter '" + name + "' value count does not match its shape");
      values.emplace(name, std::move(tensor));
    }
    model.load(values);
    return model;
  } catch (const json::exception &e) {
    throw_parse(std::string("model snapshot: ") + e.what());
  }
}

json to_json(const Numerics &numerics) {
  std::string mode = "float";
  if (numerics.mode == NumericMode::kFakeQuant) mode = "fake_quant";
  if (numerics.mode == NumericMode::kFp16) mode = "fp16";
  if (numerics.mode == NumericMode::kCalibrate) mode = "calibrate";
  json acts = json::array();
  for (const auto &qp : numerics.activations) acts.push_back(quant::to_json(qp));
  return {{"mode", mode}, {"activations", acts}};
}

Numerics numerics_from_json(const json &j) {
  Numerics nm;
  try {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "float") nm.mode = NumericMode::kFloat;
    else if (mode == "fake_quant") nm.mode = NumericMode::kFakeQuant;
    else if (mode == "fp16") nm.mode = NumericMode::kFp16;
    else if (mode == "calibrate") nm.mode = NumericMode::kCalibrate;
    else throw_parse("unknown numeric mode '" + mode + "'");
    for (const auto &a : j.value("activations", json::array())) nm.activations.push_back(quant::quant_params_from_json(a));
  } catch (const json::exception &e) {
    throw_parse(std::string("numerics: ") + e.what());
  }
  nm.stats.resize(nm.activations.size());
  return nm;
}

}  // namespace tlbench::nn
