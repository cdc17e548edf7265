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
// Command-line front end. Talks to the library only through tlbench.h.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tlbench/tlbench.h"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  bool tiny = false;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string fixtures;
};

struct CliError {
  int code;
};

void check(tlb_status status) {
  if (status == TLB_OK) return;
  std::cerr << "tlbench: " << tlb_status_name(status) << ": " << tlb_last_error() << '\n';
  throw CliError{static_cast<int>(status)};
}

void usage_error(const std::string &message) {
  std::cerr << "tlbench: " << message << '\n';
  throw CliError{TLB_ERR_INVALID_ARGUMENT};
}

void print_owned(char *text) {
  if (text == nullptr) return;
  std::cout << text << '\n';
  tlb_string_free(text);
}

template <typename T, void (*Free)(T *)>
struct Deleter {
  void operator()(T *p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<tlb_config, Deleter<tlb_config, tlb_config_free>>;
using ManifestPtr = std::unique_ptr<tlb_manifest, Deleter<tlb_manifest, tlb_manifest_free>>;
using ResultsPtr = std::unique_ptr<tlb_results, Deleter<tlb_results, tlb_results_free>>;

ConfigPtr make_config(const Globals &g) {
  tlb_config *raw = nullptr;
  if (g.config.empty())
    check(tlb_config_new(g.tiny ? 1 : 0, &raw));
  else
    check(tlb_config_load(g.config.c_str(), g.tiny ? 1 : 0, &raw));
  ConfigPtr cfg(raw);
  if (g.seed_set) check(tlb_config_set(cfg.get(), "seed", std::to_string(g.seed).c_str()));
  return cfg;
}

std::string config_value(const tlb_config *cfg, const std::string &key) {
  char *text = nullptr;
  check(tlb_config_to_text(cfg, &text));
  std::string all(text);
  tlb_string_free(text);
  std::istringstream in(all);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos && line.substr(0, eq) == key) return line.substr(eq + 3);
  }
  return {};
}

ResultsPtr load_results(const std::vector<std::string> &paths) {
  tlb_results *raw = nullptr;
  check(tlb_results_new(&raw));
  ResultsPtr table(raw);
  for (const auto &p : paths) check(tlb_results_load(table.get(), p.c_str()));
  return table;
}

std::vector<std::string> fixture_tables(const std::string &dir) {
  std::vector<std::string> out;
  for (const char *name : {"generalization_baseline.csv", "robustness_baseline.csv"}) {
    const auto p = fs::path(dir) / name;
    if (fs::exists(p)) out.push_back(p.string());
  }
  if (out.empty()) usage_error("no fixture tables found in " + dir);
  return out;
}

void log_to_stderr(const char *message, void *) { std::cerr << message << '\n'; }

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Transfer-learning benchmark harness"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(tlb_version()));

  Globals g;
  app.add_option("--config", g.config, "Experiment config file (key = value lines)");
  app.add_flag("--tiny", g.tiny, "Start from the desk-scale profile");
  auto *seed_opt = app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--fixtures", g.fixtures, "Directory holding the published-result CSV tables");

  auto *split = app.add_subcommand("split", "Stratified train/test split of a manifest");
  std::string split_manifest;
  double split_fraction = -1.0;
  split->add_option("--manifest", split_manifest, "Input manifest")->required();
  split->add_option("--test-fraction", split_fraction, "Held-out fraction (config default when omitted)");

  auto *train = app.add_subcommand("train", "Train one cell or the full grid");
  std::vector<std::string> train_datasets, train_sets;
  std::string train_arch, train_approach, train_policy, train_scheme;
  train->add_option("--dataset", train_datasets, "Dataset manifest (repeatable)");
  train->add_option("--architecture", train_arch, "Restrict to one architecture");
  train->add_option("--approach", train_approach, "Restrict to one approach");
  train->add_option("--policy", train_policy, "Restrict to one augmentation policy");
  train->add_option("--scheme", train_scheme, "Restrict to one precision scheme");
  train->add_option("--set", train_sets, "Config override key=value (repeatable)");

  auto *evaluate = app.add_subcommand("evaluate", "Balanced accuracy of a snapshot on a manifest");
  std::string eval_snapshot, eval_manifest;
  evaluate->add_option("--snapshot", eval_snapshot, "Snapshot file")->required();
  evaluate->add_option("--manifest", eval_manifest, "Evaluation manifest")->required();

  auto *quantize = app.add_subcommand("quantize", "Apply a precision scheme to a snapshot");
  std::string q_snapshot, q_scheme, q_calibration;
  int q_images = 0;
  quantize->add_option("--snapshot", q_snapshot, "Snapshot file")->required();
  quantize->add_option("--scheme", q_scheme, "baseline_fp32 | ptq_int8 | fp16")->required();
  quantize->add_option("--calibration", q_calibration, "Calibration manifest (ptq_int8)");
  quantize->add_option("--calibration-images", q_images, "Calibration image count (config default when omitted)");

  auto *bench = app.add_subcommand("bench", "Timing protocol, or the throughput identity over --fixtures");
  std::string b_snapshot, b_dataset = "synthetic", b_platform = "raspberry_pi_cpu";
  int b_batch = 32, b_warmup = 10, b_repeats = 10;
  bool b_per_image = false;
  double b_tolerance = 0.05;
  bench->add_option("--snapshot", b_snapshot, "Snapshot file to time");
  bench->add_option("--batch", b_batch, "Batch size");
  bench->add_option("--warmup", b_warmup, "Warm-up rounds");
  bench->add_option("--repeats", b_repeats, "Timed repeats");
  bench->add_flag("--per-image", b_per_image, "Time images one by one");
  bench->add_option("--dataset", b_dataset, "Dataset label for the timing CSV");
  bench->add_option("--platform", b_platform, "Fixture platform column to check");
  bench->add_option("--tolerance", b_tolerance, "Throughput tolerance in images per second");

  auto *stats = app.add_subcommand("stats", "Paired comparisons over result tables or the fixtures");
  std::vector<std::string> s_results;
  std::string s_factor, s_a, s_b, s_holding, s_filter;
  tlb_stats_options s_opts = tlb_stats_options_default();
  std::string s_zero = s_opts.zero_method, s_ties = s_opts.tie_method;
  bool s_dz = false;
  stats->add_option("--results", s_results, "Result store, directory or CSV (repeatable)");
  stats->add_option("--factor", s_factor, "Factor to compare (headline comparisons when omitted)");
  stats->add_option("--a", s_a, "Baseline level");
  stats->add_option("--b", s_b, "Treatment level");
  stats->add_option("--holding", s_holding, "Comma-separated factors defining a pair");
  stats->add_option("--filter", s_filter, "Row filter, e.g. scheme=baseline_fp32;scenario=DBSL|DBDL");
  stats->add_option("--zero-method", s_zero, "drop | pratt | zsplit | conservative");
  stats->add_option("--ties", s_ties, "average | max | min | ordinal");
  stats->add_flag("--d-differences", s_dz, "Cohen's d over the sd of differences");
  stats->add_option("--resamples", s_opts.n_resamples, "Bootstrap resamples");

  auto *report = app.add_subcommand("report", "Write the report bundle");
  std::vector<std::string> r_results;
  report->add_option("--results", r_results, "Result store, directory or CSV (repeatable)")->required();

  auto *synth = app.add_subcommand("synth", "Write a synthetic dataset");
  std::string y_kind = "patterns";
  int y_classes = 8, y_per_class = 40, y_size = 40, y_rooms = 5, y_per_cell = 12;
  synth->add_option("--kind", y_kind, "patterns | idol")->check(CLI::IsMember({"patterns", "idol"}));
  synth->add_option("--classes", y_classes, "Class count (patterns)");
  synth->add_option("--per-class", y_per_class, "Images per class (patterns)");
  synth->add_option("--rooms", y_rooms, "Room count (idol)");
  synth->add_option("--per-cell", y_per_cell, "Images per room, robot and lighting (idol)");
  synth->add_option("--size", y_size, "Image side in pixels");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*split) {
      auto cfg = make_config(g);
      const double fraction = split_fraction > 0 ? split_fraction : std::stod(config_value(cfg.get(), "test_fraction"));
      const uint64_t seed = std::stoull(config_value(cfg.get(), "seed"));
      const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
      fs::create_directories(dir);
      tlb_manifest *raw = nullptr;
      check(tlb_manifest_load(split_manifest.c_str(), &raw));
      ManifestPtr m(raw);
      char *summary = nullptr;
      check(tlb_manifest_split(m.get(), seed, fraction, (dir / "train.jsonl").c_str(), (dir / "test.jsonl").c_str(),
                               &summary));
      print_owned(summary);
    } else if (*train) {
      auto cfg = make_config(g);
      auto join = [](const std::vector<std::string> &v) {
        std::string s;
        for (const auto &x : v) s += (s.empty() ? "" : ",") + x;
        return s;
      };
      if (!train_datasets.empty()) check(tlb_config_set(cfg.get(), "datasets", join(train_datasets).c_str()));
      if (!train_arch.empty()) check(tlb_config_set(cfg.get(), "architectures", train_arch.c_str()));
      if (!train_approach.empty()) check(tlb_config_set(cfg.get(), "approaches", train_approach.c_str()));
      if (!train_policy.empty()) check(tlb_config_set(cfg.get(), "policies", train_policy.c_str()));
      if (!train_scheme.empty()) check(tlb_config_set(cfg.get(), "schemes", train_scheme.c_str()));
      for (const auto &kv : train_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) usage_error("--set expects key=value, got '" + kv + "'");
        check(tlb_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
      }
      const std::string out = g.out.empty() ? "runs" : g.out;
      char *summary = nullptr;
      check(tlb_train_grid(cfg.get(), out.c_str(), log_to_stderr, nullptr, &summary));
      print_owned(summary);
    } else if (*evaluate) {
      char *result = nullptr;
      check(tlb_evaluate_snapshot(eval_snapshot.c_str(), eval_manifest.c_str(), &result));
      print_owned(result);
    } else if (*quantize) {
      auto cfg = make_config(g);
      const int images = q_images > 0 ? q_images : std::stoi(config_value(cfg.get(), "calibration_images"));
      const fs::path dir = g.out.empty() ? fs::path(q_snapshot).parent_path() : fs::path(g.out);
      const auto target = dir / (fs::path(q_snapshot).stem().string() + "." + q_scheme + ".json");
      char *result = nullptr;
      check(tlb_quantize_snapshot(q_snapshot.c_str(), q_scheme.c_str(),
                                  q_calibration.empty() ? nullptr : q_calibration.c_str(), images, target.c_str(),
                                  &result));
      print_owned(result);
    } else if (*bench) {
      char *result = nullptr;
      if (!b_snapshot.empty()) {
        std::string csv;
        if (!g.out.empty()) {
          fs::create_directories(g.out);
          csv = (fs::path(g.out) / "timing.csv").string();
        }
        check(tlb_bench_snapshot(b_snapshot.c_str(), b_batch, b_warmup, b_repeats, b_per_image ? 1 : 0,
                                 b_dataset.c_str(), csv.empty() ? nullptr : csv.c_str(), &result));
        print_owned(result);
      } else if (!g.fixtures.empty()) {
        int ok = 0;
        const auto csv = (fs::path(g.fixtures) / "inference_timing.csv").string();
        check(tlb_throughput_check(csv.c_str(), b_platform.c_str(), b_tolerance, &ok, &result));
        print_owned(result);
        if (ok == 0) return 1;
      } else {
        usage_error("bench needs --snapshot or --fixtures");
      }
    } else if (*stats) {
      auto paths = s_results;
      if (paths.empty() && !g.fixtures.empty()) paths = fixture_tables(g.fixtures);
      if (paths.empty()) usage_error("stats needs --results or --fixtures");
      auto table = load_results(paths);
      s_opts.zero_method = s_zero.c_str();
      s_opts.tie_method = s_ties.c_str();
      s_opts.d_differences = s_dz ? 1 : 0;
      s_opts.seed = g.seed;
      char *result = nullptr;
      if (s_factor.empty()) {
        check(tlb_headline_stats(table.get(), &s_opts, &result));
      } else {
        if (s_a.empty() || s_b.empty() || s_holding.empty()) usage_error("--factor needs --a, --b and --holding");
        check(tlb_paired_comparison(table.get(), s_factor.c_str(), s_a.c_str(), s_b.c_str(), s_holding.c_str(),
                                    s_filter.c_str(), &s_opts, &result));
      }
      print_owned(result);
    } else if (*report) {
      auto table = load_results(r_results);
      tlb_stats_options opts = tlb_stats_options_default();
      opts.seed = g.seed;
      const std::string out = g.out.empty() ? "report" : g.out;
      char *result = nullptr;
      check(tlb_emit_report(table.get(), g.fixtures.empty() ? nullptr : g.fixtures.c_str(), out.c_str(), &opts,
                            &result));
      print_owned(result);
    } else if (*synth) {
      if (g.out.empty()) usage_error("synth needs --out");
      if (y_kind == "patterns")
        check(tlb_synth_patterns(g.out.c_str(), y_classes, y_per_class, y_size, g.seed));
      else
        check(tlb_synth_idol(g.out.c_str(), y_rooms, y_per_cell, y_size, g.seed));
      std::cout << (fs::path(g.out) / "manifest.jsonl").string() << '\n';
    }
  } catch (const CliError &e) {
    return e.code;
  } catch (const std::exception &e) {
    std::cerr << "tlbench: " << e.what() << '\n';
    return TLB_ERR_INVALID_ARGUMENT;
  }
  return 0;
}
