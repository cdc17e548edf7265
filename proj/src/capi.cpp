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
#include "tlbench/tlbench.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tlbench/bench.hpp"
#include "tlbench/config.hpp"
#include "tlbench/data.hpp"
#include "tlbench/error.hpp"
#include "tlbench/harness.hpp"
#include "tlbench/metrics.hpp"
#include "tlbench/quant.hpp"
#include "tlbench/report.hpp"
#include "tlbench/results.hpp"
#include "tlbench/rng.hpp"
#include "tlbench/synth.hpp"

#ifndef TLB_VERSION
#define TLB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tlbench;

struct tlb_config {
  config::ExperimentConfig cfg;
};
struct tlb_manifest {
  data::DatasetManifest manifest;
};
struct tlb_results {
  results::ResultTable table;
};

namespace {

thread_local std::string g_last_error;

tlb_status fail(tlb_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
tlb_status guarded(F &&f) {
  try {
    f();
    g_last_error.clear();
    return TLB_OK;
  } catch (const Error &e) {
    return fail(static_cast<tlb_status>(e.code()), e.what());
  } catch (const json::exception &e) {
    return fail(TLB_ERR_PARSE, e.what());
  } catch (const fs::filesystem_error &e) {
    return fail(TLB_ERR_IO, e.what());
  } catch (const std::bad_alloc &) {
    return fail(TLB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(TLB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TLB_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char *what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

char *dup_string(const std::string &s) {
  auto *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char **out, const json &j) {
  if (out != nullptr) *out = dup_string(j.dump(2));
}

std::vector<std::string> split_list(const std::string &text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

results::RowFilter parse_filter(const char *text) {
  results::RowFilter filter;
  if (text == nullptr) return filter;
  for (const auto &clause : split_list(text, ';')) {
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw_parse("filter clause '" + clause + "' lacks '='");
    const auto factor = clause.substr(0, eq);
    if (!results::is_factor(factor) && factor != "model") throw_validation("unknown factor '" + factor + "'");
    for (const auto &v : split_list(clause.substr(eq + 1), '|'))
      filter[factor == "model" ? "architecture" : factor].insert(v);
  }
  return filter;
}

metrics::ComparisonOptions comparison_options(const tlb_stats_options *o) {
  const tlb_stats_options d = o != nullptr ? *o : tlb_stats_options_default();
  metrics::ComparisonOptions opts;
  if (d.zero_method != nullptr) opts.wilcoxon.zero = metrics::zero_method_from_string(d.zero_method);
  if (d.tie_method != nullptr) opts.wilcoxon.ties = metrics::tie_method_from_string(d.tie_method);
  opts.d_convention = d.d_differences != 0 ? metrics::DConvention::kDifferences
                                           : metrics::DConvention::kAverageVariance;
  opts.n_resamples = d.n_resamples;
  opts.seed = d.seed;
  return opts;
}

quant::QuantParams make_qp(double scale, int32_t zero_point, int bits, int is_signed) {
  quant::QuantParams qp{scale, zero_point, bits, is_signed != 0};
  qp.validate();
  return qp;
}

// Labels indexed against the snapshot's class list rather than the manifest's.
nn::LabeledImages decode_for(const harness::Snapshot &snap, const data::DatasetManifest &m, size_t limit) {
  nn::LabeledImages out;
  for (const auto &r : m.records) {
    if (out.images.size() >= limit) break;
    const auto it = std::find(snap.classes.begin(), snap.classes.end(), r.label);
    if (it == snap.classes.end()) throw_validation("label '" + r.label + "' is not a class of the snapshot");
    out.images.push_back(augment::read_pnm(m.resolve(r)));
    out.labels.push_back(static_cast<int>(it - snap.classes.begin()));
  }
  return out;
}

void absolutize(data::DatasetManifest &m) {
  for (auto &r : m.records) r.path = fs::absolute(m.resolve(r)).lexically_normal().string();
}

}  // namespace

extern "C" {

const char *tlb_version(void) { return TLB_VERSION; }

const char *tlb_last_error(void) { return g_last_error.c_str(); }

const char *tlb_status_name(tlb_status status) {
  switch (status) {
    case TLB_OK:
      return "ok";
    case TLB_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case TLB_ERR_PARSE:
      return "parse_error";
    case TLB_ERR_VALIDATION:
      return "validation_error";
    case TLB_ERR_IO:
      return "io_error";
    case TLB_ERR_UNDEFINED_TEST:
      return "undefined_test";
    case TLB_ERR_RUNTIME:
      return "runtime_error";
    case TLB_ERR_INTERNAL:
      return "internal_error";
  }
  return "unknown";
}

void tlb_string_free(char *s) { std::free(s); }

tlb_status tlb_config_new(int tiny, tlb_config **out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new tlb_config{tiny != 0 ? config::tiny_profile() : config::full_profile()};
  });
}

tlb_status tlb_config_load(const char *path, int tiny, tlb_config **out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out are required");
    auto cfg = config::load_config(path, tiny != 0 ? config::tiny_profile() : config::full_profile());
    *out = new tlb_config{std::move(cfg)};
  });
}

tlb_status tlb_config_set(tlb_config *cfg, const char *key, const char *value) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr && value != nullptr, "config, key and value are required");
    auto next = cfg->cfg;
    config::set_value(next, key, value);
    cfg->cfg = std::move(next);
  });
}

tlb_status tlb_config_to_text(const tlb_config *cfg, char **out) {
  return guarded([&] {
    require(cfg != nullptr && out != nullptr, "config and out are required");
    *out = dup_string(config::to_text(cfg->cfg));
  });
}

void tlb_config_free(tlb_config *cfg) { delete cfg; }

tlb_status tlb_manifest_load(const char *path, tlb_manifest **out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out are required");
    *out = new tlb_manifest{data::load_manifest(path)};
  });
}

tlb_status tlb_manifest_counts(const tlb_manifest *m, size_t *records, size_t *classes) {
  return guarded([&] {
    require(m != nullptr, "manifest is null");
    if (records != nullptr) *records = m->manifest.records.size();
    if (classes != nullptr) *classes = m->manifest.classes.size();
  });
}

tlb_status tlb_manifest_split(const tlb_manifest *m, uint64_t seed, double test_fraction, const char *train_path,
                              const char *test_path, char **summary_json) {
  return guarded([&] {
    require(m != nullptr && train_path != nullptr && test_path != nullptr, "manifest and output paths are required");
    data::SplitSpec spec;
    spec.seed = seed;
    spec.test_fraction = test_fraction;
    auto split = data::stratified_split(m->manifest, spec);
    absolutize(split.train);
    absolutize(split.test);
    data::save_manifest(split.train, train_path);
    data::save_manifest(split.test, test_path);
    put(summary_json, {{"seed", seed},
                       {"test_fraction", test_fraction},
                       {"train", {{"path", train_path}, {"counts", split.train.class_counts()}}},
                       {"test", {{"path", test_path}, {"counts", split.test.class_counts()}}},
                       {"classes", m->manifest.classes}});
  });
}

void tlb_manifest_free(tlb_manifest *m) { delete m; }

tlb_status tlb_results_new(tlb_results **out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new tlb_results{};
  });
}

tlb_status tlb_results_load(tlb_results *table, const char *path) {
  return guarded([&] {
    require(table != nullptr && path != nullptr, "table and path are required");
    fs::path p(path);
    if (fs::is_directory(p)) p /= "results.jsonl";
    if (!fs::exists(p)) throw_io("no result table at " + p.string());
    const auto loaded = p.extension() == ".csv" ? results::load_fixture_csv(p) : results::ResultStore(p).load();
    auto merged = table->table;
    for (const auto &row : loaded.rows()) merged.add(row);
    table->table = std::move(merged);
  });
}

tlb_status tlb_results_size(const tlb_results *table, size_t *rows) {
  return guarded([&] {
    require(table != nullptr && rows != nullptr, "table and rows are required");
    *rows = table->table.size();
  });
}

tlb_status tlb_results_to_json(const tlb_results *table, char **out) {
  return guarded([&] {
    require(table != nullptr && out != nullptr, "table and out are required");
    json rows = json::array();
    for (const auto &r : table->table.rows()) rows.push_back(results::to_json(r));
    put(out, rows);
  });
}

void tlb_results_free(tlb_results *table) { delete table; }

tlb_stats_options tlb_stats_options_default(void) {
  return tlb_stats_options{"drop", "average", 0, 5000, 0};
}

tlb_status tlb_paired_comparison(const tlb_results *table, const char *factor, const char *level_a,
                                 const char *level_b, const char *holding, const char *filter,
                                 const tlb_stats_options *options, char **json_out) {
  return guarded([&] {
    require(table != nullptr && factor != nullptr && level_a != nullptr && level_b != nullptr && holding != nullptr,
            "table, factor, levels and holding are required");
    std::vector<std::string> hold;
    for (auto h : split_list(holding, ',')) hold.push_back(h == "model" ? "architecture" : h);
    const std::string f = std::string(factor) == "model" ? "architecture" : factor;
    const auto r = metrics::paired_comparison(table->table, f, level_a, level_b, hold, parse_filter(filter),
                                              comparison_options(options));
    put(json_out, metrics::to_json(r));
  });
}

tlb_status tlb_headline_stats(const tlb_results *table, const tlb_stats_options *options, char **json_out) {
  return guarded([&] {
    require(table != nullptr, "table is null");
    put(json_out, report::run_comparisons(table->table, comparison_options(options)));
  });
}

tlb_status tlb_throughput_check(const char *timing_csv, const char *platform, double tolerance, int *all_ok,
                                char **json_out) {
  return guarded([&] {
    require(timing_csv != nullptr, "timing_csv is null");
    const auto checks = bench::check_throughput(results::load_timing_fixture(timing_csv),
                                                platform != nullptr ? platform : "", tolerance);
    bool ok = !checks.empty();
    json rows = json::array();
    for (const auto &c : checks) {
      ok = ok && c.ok;
      rows.push_back({{"dataset", c.row.dataset},
                      {"model", c.row.model},
                      {"platform", c.row.platform},
                      {"batch_size", c.row.batch_size},
                      {"elapsed_mean_s", c.row.elapsed_mean_s},
                      {"published_ips", c.row.throughput_ips},
                      {"derived_ips", c.derived},
                      {"abs_error", c.error},
                      {"ok", c.ok}});
    }
    if (all_ok != nullptr) *all_ok = ok ? 1 : 0;
    put(json_out, {{"tolerance", tolerance}, {"rows", rows}, {"all_ok", ok}});
  });
}

tlb_status tlb_train_grid(const tlb_config *cfg, const char *out_dir, tlb_log_fn log, void *user,
                          char **summary_json) {
  return guarded([&] {
    require(cfg != nullptr && out_dir != nullptr, "config and out_dir are required");
    harness::Logger logger;
    if (log != nullptr) logger = [log, user](const std::string &m) { log(m.c_str(), user); };
    const auto s = harness::run_grid(cfg->cfg, out_dir, logger);
    put(summary_json, {{"cells", s.cells},
                       {"skipped", s.skipped},
                       {"trained", s.trained},
                       {"failed_rows", s.failed_rows},
                       {"results", (fs::path(out_dir) / "results.jsonl").string()}});
  });
}

tlb_status tlb_evaluate_snapshot(const char *snapshot, const char *manifest, char **json_out) {
  return guarded([&] {
    require(snapshot != nullptr && manifest != nullptr, "snapshot and manifest are required");
    const auto snap = harness::load_snapshot(snapshot);
    const auto m = data::load_manifest(manifest);
    json details;
    const double ba = harness::evaluate_percent(snap, decode_for(snap, m, m.records.size()), &details);
    details["balanced_accuracy_percent"] = ba;
    details["scheme"] = snap.scheme;
    details["snapshot"] = snapshot;
    details["manifest"] = manifest;
    put(json_out, details);
  });
}

tlb_status tlb_quantize_snapshot(const char *snapshot, const char *scheme, const char *calibration_manifest,
                                 int calibration_images, const char *out_path, char **json_out) {
  return guarded([&] {
    require(snapshot != nullptr && scheme != nullptr && out_path != nullptr, "snapshot, scheme and out are required");
    auto snap = harness::load_snapshot(snapshot);
    const auto target = quant::scheme_from_string(scheme);
    json info = {{"source", snapshot}, {"scheme", scheme}};
    switch (target) {
      case quant::PrecisionScheme::kBaselineFp32:
        snap.numerics = snap.model.make_numerics(nn::NumericMode::kFloat);
        break;
      case quant::PrecisionScheme::kFp16:
        snap.numerics = snap.model.make_numerics(nn::NumericMode::kFp16);
        break;
      case quant::PrecisionScheme::kPtqInt8: {
        require(calibration_manifest != nullptr, "ptq_int8 needs a calibration manifest");
        require(calibration_images > 0, "calibration_images must be positive");
        const auto m = data::load_manifest(calibration_manifest);
        const auto cal = decode_for(snap, m, static_cast<size_t>(calibration_images));
        snap.numerics = snap.model.make_numerics(nn::NumericMode::kFloat);
        nn::calibrate(snap.model, cal, snap.pipeline, cal.images.size(), snap.numerics);
        info["calibration_images"] = cal.images.size();
        info["activations"] = json::array();
        for (const auto &qp : snap.numerics.activations) info["activations"].push_back(quant::to_json(qp));
        break;
      }
      case quant::PrecisionScheme::kQatInt8:
        throw_validation("qat_int8 requires training; run the train subcommand with scheme qat_int8");
    }
    snap.scheme = scheme;
    snap.metadata["quantized_from"] = snapshot;
    harness::save_snapshot(snap, out_path);
    info["out"] = out_path;
    put(json_out, info);
  });
}

tlb_status tlb_bench_snapshot(const char *snapshot, int batch_size, int warmup, int repeats, int per_image,
                              const char *dataset, const char *csv_path, char **json_out) {
  return guarded([&] {
    require(snapshot != nullptr, "snapshot is null");
    require(batch_size > 0 && warmup >= 0 && repeats > 0, "batch_size and repeats must be positive");
    const auto snap = harness::load_snapshot(snapshot);
    const auto name = fs::path(snapshot).stem().string();
    const auto runner = bench::classifier_runner(snap.model, snap.numerics, name, snap.scheme);
    const int h = snap.pipeline.resize_height;
    const int w = snap.pipeline.resize_width;
    RngStream rng(derive_seed(0, 0xBE7C, static_cast<uint64_t>(batch_size)), 0);
    nn::Batch images;
    for (int i = 0; i < batch_size; ++i) {
      augment::Image img(h, w, 3);
      for (auto &p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(0, 255));
      nn::append_image(images, img);
    }
    bench::TimingOptions opts{warmup, repeats, per_image != 0};
    const auto r = bench::run_benchmark(runner, images, opts);
    const std::string ds = dataset != nullptr ? dataset : "synthetic";
    if (csv_path != nullptr) bench::append_timing_csv(csv_path, runner, ds, r);
    auto j = bench::to_json(r);
    j["model"] = name;
    j["scheme"] = snap.scheme;
    j["dataset"] = ds;
    put(json_out, j);
  });
}

tlb_status tlb_emit_report(const tlb_results *table, const char *fixtures_dir, const char *out_dir,
                           const tlb_stats_options *options, char **json_out) {
  return guarded([&] {
    require(table != nullptr && out_dir != nullptr, "table and out_dir are required");
    report::ReportOptions ro;
    ro.stats = comparison_options(options);
    if (fixtures_dir != nullptr) {
      results::ResultTable fx;
      for (const auto *name : {"generalization_baseline.csv", "generalization_quant.csv", "robustness_baseline.csv"}) {
        const auto p = fs::path(fixtures_dir) / name;
        if (!fs::exists(p)) continue;
        const auto loaded = results::load_fixture_csv(p);
        for (const auto &row : loaded.rows()) fx.upsert(row);
      }
      ro.fixtures = std::move(fx);
    }
    const auto bundle = report::emit_report(table->table, out_dir, ro);
    json files = json::array();
    for (const auto &f : bundle.files) files.push_back(f.string());
    put(json_out, {{"dir", bundle.dir.string()}, {"rows", bundle.rows}, {"files", files}, {"stats", bundle.stats}});
  });
}

tlb_status tlb_synth_patterns(const char *dir, int classes, int per_class, int size, uint64_t seed) {
  return guarded([&] {
    require(dir != nullptr, "dir is null");
    synth::write_pattern_dataset(dir, {classes, per_class, size, seed});
  });
}

tlb_status tlb_synth_idol(const char *dir, int rooms, int per_cell, int size, uint64_t seed) {
  return guarded([&] {
    require(dir != nullptr, "dir is null");
    synth::write_idol_dataset(dir, {rooms, per_cell, size, seed});
  });
}

tlb_status tlb_quant_params(const double *values, size_t n, int bits, int is_signed, double *scale,
                            int32_t *zero_point) {
  return guarded([&] {
    require(values != nullptr && n > 0 && scale != nullptr && zero_point != nullptr, "values and outputs required");
    quant::CalibrationStats stats;
    stats.observe(std::span<const double>(values, n));
    const auto qp = stats.params(bits, is_signed != 0);
    *scale = qp.scale;
    *zero_point = qp.zero_point;
  });
}

tlb_status tlb_quantize(const double *x, size_t n, double scale, int32_t zero_point, int bits, int is_signed,
                        int32_t *q) {
  return guarded([&] {
    require(n == 0 || (x != nullptr && q != nullptr), "buffers are null");
    const auto qp = make_qp(scale, zero_point, bits, is_signed);
    for (size_t i = 0; i < n; ++i) q[i] = quant::quantize_value(x[i], qp);
  });
}

tlb_status tlb_dequantize(const int32_t *q, size_t n, double scale, int32_t zero_point, int bits, int is_signed,
                          double *x) {
  return guarded([&] {
    require(n == 0 || (x != nullptr && q != nullptr), "buffers are null");
    const auto qp = make_qp(scale, zero_point, bits, is_signed);
    for (size_t i = 0; i < n; ++i) x[i] = quant::dequantize_value(q[i], qp);
  });
}

tlb_status tlb_fake_quant(const double *x, size_t n, double scale, int32_t zero_point, int bits, int is_signed,
                          double *y) {
  return guarded([&] {
    require(n == 0 || (x != nullptr && y != nullptr), "buffers are null");
    const auto qp = make_qp(scale, zero_point, bits, is_signed);
    for (size_t i = 0; i < n; ++i) y[i] = quant::fake_quant_value(x[i], qp);
  });
}

tlb_status tlb_cast_fp16(const double *x, size_t n, double *y) {
  return guarded([&] {
    require(n == 0 || (x != nullptr && y != nullptr), "buffers are null");
    for (size_t i = 0; i < n; ++i) y[i] = quant::cast_fp16(x[i]);
  });
}

tlb_status tlb_wilcoxon(const double *a, const double *b, size_t n, const char *zero_method, const char *tie_method,
                        double *statistic, double *p_value) {
  return guarded([&] {
    require(a != nullptr && b != nullptr, "samples are null");
    metrics::PairedSamples pairs{{a, a + n}, {b, b + n}, {}};
    metrics::WilcoxonOptions opts;
    if (zero_method != nullptr) opts.zero = metrics::zero_method_from_string(zero_method);
    if (tie_method != nullptr) opts.ties = metrics::tie_method_from_string(tie_method);
    const auto r = metrics::wilcoxon_signed_rank(pairs, opts);
    if (statistic != nullptr) *statistic = r.statistic;
    if (p_value != nullptr) *p_value = r.p_value;
  });
}

tlb_status tlb_cohens_d(const double *a, const double *b, size_t n, int d_differences, double *d) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && d != nullptr, "samples and output are required");
    metrics::PairedSamples pairs{{a, a + n}, {b, b + n}, {}};
    *d = metrics::cohens_d_paired(pairs, d_differences != 0 ? metrics::DConvention::kDifferences
                                                             : metrics::DConvention::kAverageVariance);
  });
}

tlb_status tlb_balanced_accuracy(const int *truth, const int *predicted, size_t n, size_t n_classes, double *value) {
  return guarded([&] {
    require(truth != nullptr && predicted != nullptr && value != nullptr, "labels and output are required");
    std::vector<std::string> classes;
    for (size_t i = 0; i < n_classes; ++i) classes.push_back(std::to_string(i));
    const auto cm = metrics::confusion(std::vector<int>(truth, truth + n), std::vector<int>(predicted, predicted + n),
                                       classes);
    *value = metrics::balanced_accuracy(cm).value;
  });
}

}  // extern "C"
