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
// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// below; the exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tlbench/augment.hpp"
#include "tlbench/bench.hpp"
#include "tlbench/config.hpp"
#include "tlbench/data.hpp"
#include "tlbench/harness.hpp"
#include "tlbench/image.hpp"
#include "tlbench/metrics.hpp"
#include "tlbench/quant.hpp"
#include "tlbench/report.hpp"
#include "tlbench/results.hpp"
#include "tlbench/rng.hpp"
#include "tlbench/strategy.hpp"
#include "tlbench/synth.hpp"

namespace fs = std::filesystem;
using namespace tlbench;

namespace {

// Tolerances and budgets.
constexpr double kEffectTolerance = 0.01;
constexpr double kPValueBound = 0.01;
constexpr double kThroughputTolerance = 0.05;
constexpr double kGradientRelTolerance = 1e-4;
constexpr double kDecompositionRelTolerance = 1e-12;
constexpr double kFiniteDifferenceStep = 1e-4;
constexpr double kGateSigmas = 3.0;
constexpr int kSplitDeviation = 1;
constexpr double kFlopsRelTolerance = 0.005;
constexpr double kStatsBudgetS = 10;
constexpr double kThroughputBudgetS = 1;
constexpr double kQuantBudgetS = 30;
constexpr double kL2spBudgetS = 30;
constexpr double kAugmentBudgetS = 120;
constexpr double kSplitBudgetS = 30;
constexpr double kGridBudgetS = 15 * 60;

// Collects failure notes for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string &what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string &what) { notes.push_back(what); }
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

int run_criterion(int id, const std::string &title, double budget_s, const std::function<void(Check &)> &body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception &e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(elapsed < budget_s, "runtime " + fmt(elapsed, 1) + " s exceeds " + fmt(budget_s, 0) + " s");
  for (const auto &n : c.notes) std::printf("      %s\n", n.c_str());
  for (const auto &f : c.failures) std::printf("      failure: %s\n", f.c_str());
  std::printf("%s %d %s (%.2f s)\n", c.failures.empty() ? "PASS" : "FAIL", id, title.c_str(), elapsed);
  std::fflush(stdout);
  return c.failures.empty() ? 0 : 1;
}

// 1. Statistics over the accuracy fixtures.

struct StatTarget {
  std::string label;
  const results::ResultTable *table;
  report::Comparison comparison;
  double statistic;
  double d;
  bool p_bound;
};

void statistics(Check &c, const fs::path &fixtures) {
  const auto base = results::load_fixture_csv(fixtures / "generalization_baseline.csv");
  const auto robust = results::load_fixture_csv(fixtures / "robustness_baseline.csv");
  const auto headline = report::headline_comparisons();
  const std::vector<StatTarget> targets = {
      {"generalization ExtraAug vs NormAug", &base, headline[0], 30.0, 0.15, true},
      {"generalization FT vs L2SP", &base, headline[1], 74.0, 0.18, false},
      {"different-bot ExtraAug vs NormAug", &robust, headline[2], 215.0, 0.27, false},
      {"different-bot FT vs L2SP", &robust, headline[3], 173.0, 0.56, false},
  };
  std::vector<metrics::PairedSamples> pairs;
  for (const auto &t : targets) {
    const auto &cmp = t.comparison;
    pairs.push_back(metrics::build_pairs(*t.table, cmp.factor, cmp.level_a, cmp.level_b, cmp.holding, cmp.filter));
    c.expect(pairs.back().size() == 40, t.label + ": " + std::to_string(pairs.back().size()) + " pairs, expected 40");
  }

  // Search the zero/tie conventions for the one matching every statistic.
  struct Candidate {
    metrics::WilcoxonOptions options;
    int exact = 0;
    double discrepancy = 0;
    std::vector<double> stats;
  };
  std::vector<Candidate> candidates;
  for (auto zero : {metrics::ZeroMethod::kDrop, metrics::ZeroMethod::kPratt, metrics::ZeroMethod::kZsplit,
                    metrics::ZeroMethod::kConservative})
    for (auto ties : {metrics::TieMethod::kAverage, metrics::TieMethod::kMax, metrics::TieMethod::kMin}) {
      Candidate cand;
      cand.options.zero = zero;
      cand.options.ties = ties;
      for (size_t i = 0; i < targets.size(); ++i) {
        const double s = metrics::wilcoxon_signed_rank(pairs[i], cand.options).statistic;
        cand.stats.push_back(s);
        cand.exact += s == targets[i].statistic ? 1 : 0;
        cand.discrepancy += std::abs(s - targets[i].statistic);
      }
      candidates.push_back(cand);
    }
  const auto describe = [](const Candidate &cand) {
    std::string s = std::string(metrics::to_string(cand.options.zero)) + "/" +
                    std::string(metrics::to_string(cand.options.ties)) + ": T =";
    for (double v : cand.stats) s += " " + fmt(v, 1);
    return s + " (" + std::to_string(cand.exact) + "/4 exact, total |dT| = " + fmt(cand.discrepancy, 1) + ")";
  };
  c.note("default convention " + describe(candidates.front()));
  const auto best = *std::min_element(candidates.begin(), candidates.end(), [](const auto &x, const auto &y) {
    return x.exact != y.exact ? x.exact > y.exact : x.discrepancy < y.discrepancy;
  });
  c.note("closest convention " + describe(best));
  c.expect(best.exact == 4, "no convention reproduces all four statistics");

  metrics::ComparisonOptions opts;
  opts.wilcoxon = best.options;
  for (size_t i = 0; i < targets.size(); ++i) {
    const auto &t = targets[i];
    const auto &cmp = t.comparison;
    const auto r =
        metrics::paired_comparison(*t.table, cmp.factor, cmp.level_a, cmp.level_b, cmp.holding, cmp.filter, opts);
    c.note(t.label + ": T = " + fmt(r.statistic, 1) + ", p = " + fmt(r.p_value, 5) + ", d = " +
           fmt(r.effect_size_d) + " [" + fmt(r.ci_low) + ", " + fmt(r.ci_high) + "]");
    c.expect(r.statistic == t.statistic, t.label + ": statistic " + fmt(r.statistic, 1) + " != " + fmt(t.statistic, 1));
    c.expect(std::abs(r.effect_size_d - t.d) <= kEffectTolerance,
             t.label + ": d " + fmt(r.effect_size_d) + " not within " + fmt(kEffectTolerance, 2) + " of " + fmt(t.d, 2));
    if (t.p_bound) c.expect(r.p_value < kPValueBound, t.label + ": p " + fmt(r.p_value, 5) + " >= 0.01");
    c.expect(r.ci_low <= r.effect_size_d && r.effect_size_d <= r.ci_high, t.label + ": interval misses d");
  }
}

// 2. Throughput identity.

void throughput(Check &c, const fs::path &fixtures) {
  const auto rows = results::load_timing_fixture(fixtures / "inference_timing.csv");
  const auto checks = bench::check_throughput(rows, "raspberry_pi_cpu", kThroughputTolerance);
  c.expect(checks.size() == 25, std::to_string(checks.size()) + " raspberry_pi_cpu rows, expected 25");
  double worst = 0;
  for (const auto &k : checks) {
    worst = std::max(worst, k.error);
    c.expect(k.ok, k.row.dataset + "/" + k.row.model + ": " + fmt(k.derived) + " vs " + fmt(k.row.throughput_ips));
  }
  c.note("largest |batch/elapsed - throughput| = " + fmt(worst, 4) + " ips");
}

// 3. Quantization.

void quantization(Check &c) {
  RngStream rng(31337, 3);
  size_t values = 0, bad_round_trip = 0, bad_monotone = 0, bad_idempotent = 0;
  for (int cal = 0; cal < 100; ++cal) {
    const double a = rng.uniform(-50.0, 50.0);
    const double b = a + std::exp(rng.uniform(-6.0, 5.0));
    const auto qp = quant::calibrate_minmax({{a, b}});
    std::vector<double> xs(10000);
    for (auto &x : xs) x = rng.uniform(a, b);
    for (double x : xs) {
      const double back = quant::dequantize_value(quant::quantize_value(x, qp), qp);
      bad_round_trip += std::abs(back - x) <= qp.scale / 2 * (1 + 1e-9) ? 0 : 1;
      const double f = quant::fake_quant_value(x, qp);
      bad_idempotent += quant::fake_quant_value(f, qp) == f ? 0 : 1;
    }
    values += xs.size();
    std::sort(xs.begin(), xs.end());
    for (size_t i = 1; i < xs.size(); ++i)
      bad_monotone += quant::quantize_value(xs[i - 1], qp) <= quant::quantize_value(xs[i], qp) ? 0 : 1;
  }
  c.note(std::to_string(values) + " values over 100 calibrations");
  c.expect(values == 1000000, "value count");
  c.expect(bad_round_trip == 0, std::to_string(bad_round_trip) + " round-trip errors above scale/2");
  c.expect(bad_monotone == 0, std::to_string(bad_monotone) + " monotonicity violations");
  c.expect(bad_idempotent == 0, std::to_string(bad_idempotent) + " idempotence violations");
  c.expect(quant::cast_fp16(1.0) == 1.0, "fp16(1.0)");
  c.expect(quant::cast_fp16(2049.0) == 2048.0, "fp16(2049)");
  c.expect(quant::cast_fp16(65520.0) == std::numeric_limits<double>::infinity(), "fp16(65520)");
}

// 4. L2-SP gradient and decomposition.

strategy::ParameterMap random_map(RngStream &rng, const std::vector<std::vector<int>> &shapes,
                                  const std::string &prefix) {
  strategy::ParameterMap m;
  for (size_t i = 0; i < shapes.size(); ++i) {
    strategy::Tensor t(shapes[i]);
    for (auto &v : t.values) v = rng.uniform(-1.0, 1.0);
    m[prefix + std::to_string(i)] = std::move(t);
  }
  return m;
}

void l2sp(Check &c) {
  RngStream rng(4242, 4);
  const double h = kFiniteDifferenceStep;
  double worst = 0;
  size_t coords = 0, bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto cur = random_map(rng, {{2, 3}, {4}}, "shared");
    const strategy::AnchorSnapshot anchors(random_map(rng, {{2, 3}, {4}}, "shared"));
    for (auto &[k, v] : random_map(rng, {{3}, {2, 2}}, "new")) cur[k] = v;
    const strategy::L2SPConfig cfg{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const auto grad = strategy::l2sp_gradient(cur, anchors, cfg);
    for (auto &[name, t] : cur) {
      for (size_t i = 0; i < t.size(); ++i) {
        const double w = t.values[i];
        t.values[i] = w + h;
        const double up = strategy::l2sp_penalty(cur, anchors, cfg);
        t.values[i] = w - h;
        const double down = strategy::l2sp_penalty(cur, anchors, cfg);
        t.values[i] = w;
        const double analytic = grad.at(name).values[i];
        const double rel = std::abs((up - down) / (2 * h) - analytic) / std::max(std::abs(analytic), 1e-6);
        worst = std::max(worst, rel);
        bad += rel <= kGradientRelTolerance ? 0 : 1;
        ++coords;
      }
    }
  }
  c.note("1000 pairs, " + std::to_string(coords) + " coordinates, worst relative gradient error " + fmt(worst * 1e6, 3) +
         "e-6");
  c.expect(bad == 0, std::to_string(bad) + " coordinates beyond relative " + fmt(kGradientRelTolerance, 4));

  double worst_split = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto cur = random_map(rng, {{5}, {2, 2}}, "shared");
    for (auto &[k, v] : random_map(rng, {{7}}, "new")) cur[k] = v;
    const strategy::AnchorSnapshot anchors(random_map(rng, {{5}, {2, 2}}, "shared"));
    const double a = rng.uniform(0.0, 2.0), b = rng.uniform(0.0, 2.0);
    const double whole = strategy::l2sp_penalty(cur, anchors, {a, b});
    const double parts = a * strategy::l2sp_penalty(cur, anchors, {1, 0}) + b * strategy::l2sp_penalty(cur, anchors, {0, 1});
    worst_split = std::max(worst_split, std::abs(whole - parts) / std::abs(whole));
  }
  std::ostringstream split_note;
  split_note << "worst relative decomposition error " << std::scientific << std::setprecision(2) << worst_split;
  c.note(split_note.str());
  c.expect(worst_split <= kDecompositionRelTolerance, "decomposition beyond relative 1e-12");
}

// 5. Augmentation.

augment::Image random_image(int h, int w, uint64_t seed, int lo = 0) {
  augment::Image img(h, w, 3);
  RngStream r(seed, 77);
  for (auto &p : img.pixels) p = static_cast<uint8_t>(r.uniform_int(lo, 255));
  return img;
}

augment::AugOp make_op(augment::OpKind kind, double p = 1.0) {
  augment::AugOp o;
  o.kind = kind;
  o.p = p;
  return o;
}

void augmentation(Check &c) {
  using augment::OpKind;
  const auto pipe = augment::extra_aug_policy(32, 32, 99);
  int nondeterministic = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    const auto img = random_image(36 + static_cast<int>(s % 7), 40, s);
    auto a = pipe.stream_for(s);
    auto b = pipe.stream_for(s);
    nondeterministic += augment::apply_pipeline(img, pipe, a).pixels == augment::apply_pipeline(img, pipe, b).pixels ? 0 : 1;
  }
  c.expect(nondeterministic == 0, std::to_string(nondeterministic) + " of 100 images differ under one seed");

  int flips = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    const auto img = random_image(9 + static_cast<int>(s % 13), 11, s);
    RngStream r(s, 0);
    for (auto kind : {OpKind::kFlipH, OpKind::kFlipV})
      flips += augment::apply_op(augment::apply_op(img, make_op(kind), r), make_op(kind), r) == img ? 0 : 1;
  }
  c.expect(flips == 0, std::to_string(flips) + " flip involution failures");

  auto off = augment::extra_aug_policy(32, 24, 11);
  for (auto &o : off.ops) o.p = 0.0;
  int p_zero = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    const auto img = random_image(40, 37, s);
    auto stream = off.stream_for(s);
    p_zero += augment::apply_pipeline(img, off, stream) == augment::resize_only(img, off) ? 0 : 1;
  }
  c.expect(p_zero == 0, std::to_string(p_zero) + " p=0 outputs differ from resize-only");

  auto dropout = make_op(OpKind::kCoarseDropout);
  dropout.params.min_holes = 1;
  dropout.params.max_holes = 8;
  dropout.params.max_hole_fraction = 0.1;
  size_t max_filled = 0;
  int over = 0;
  for (uint64_t s = 0; s < 200; ++s) {
    const auto img = random_image(64, 50, s, 1);
    RngStream r(s, 1);
    const auto out = augment::apply_op(img, dropout, r);
    size_t filled = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 50; ++x) filled += out.at(y, x, 0) == 0 ? 1 : 0;
    max_filled = std::max(max_filled, filled);
    over += filled <= 8u * 6u * 5u ? 0 : 1;
  }
  c.note("coarse dropout: at most " + std::to_string(max_filled) + " zeroed pixels (bound 240)");
  c.expect(over == 0, std::to_string(over) + " dropout outputs above the pixel bound");

  augment::Image ramp(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) ramp.at(y, x, 0) = static_cast<uint8_t>(x * 60);
  std::string freqs;
  for (double p : {0.1, 0.3, 0.5, 0.9}) {
    augment::AugPipeline gate;
    gate.resize_height = gate.resize_width = 4;
    gate.seed = 123;
    gate.ops = {make_op(OpKind::kFlipH, p)};
    const int n = 10000;
    int applied = 0;
    for (int i = 0; i < n; ++i) {
      auto stream = gate.stream_for(static_cast<uint64_t>(i));
      applied += augment::apply_pipeline(ramp, gate, stream) != ramp ? 1 : 0;
    }
    const double freq = static_cast<double>(applied) / n;
    freqs += " " + fmt(p, 1) + "->" + fmt(freq, 4);
    c.expect(std::abs(freq - p) <= kGateSigmas * std::sqrt(p * (1 - p) / n), "gate frequency for p = " + fmt(p, 1));
  }
  c.note("gate frequencies over 10000 trials:" + freqs);
}

// 6. Splits and robustness scenarios.

data::DatasetManifest make_manifest(const std::vector<size_t> &counts) {
  data::DatasetManifest m;
  m.name = "gen";
  for (size_t k = 0; k < counts.size(); ++k) {
    m.classes.push_back("c" + std::to_string(k));
    for (size_t i = 0; i < counts[k]; ++i)
      m.records.push_back({m.classes.back() + "/" + std::to_string(i), m.classes.back(), {}, data::Split::kUnassigned});
  }
  return m;
}

std::string dump(const data::DatasetManifest &m) {
  std::ostringstream out;
  data::write_manifest(out, m);
  return out.str();
}

void splits(Check &c) {
  RngStream rng(2024, 6);
  int strat = 0, partition = 0, determinism = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<size_t> counts(static_cast<size_t>(rng.uniform_int(1, 8)));
    for (auto &n : counts) n = static_cast<size_t>(rng.uniform_int(1, 60));
    const auto m = make_manifest(counts);
    const data::SplitSpec spec{rng.next_u64(), rng.uniform(0.05, 0.95), true};
    const auto a = data::stratified_split(m, spec);
    const auto b = data::stratified_split(m, spec);
    determinism += dump(a.train) == dump(b.train) && dump(a.test) == dump(b.test) ? 0 : 1;
    std::multiset<std::string> seen, all;
    for (const auto &r : a.train.records) seen.insert(r.path);
    for (const auto &r : a.test.records) seen.insert(r.path);
    for (const auto &r : m.records) all.insert(r.path);
    partition += seen == all ? 0 : 1;
    const auto tc = a.test.class_counts();
    for (size_t k = 0; k < counts.size(); ++k) {
      const double target = spec.test_fraction * static_cast<double>(counts[k]);
      strat += std::abs(static_cast<double>(tc[k]) - target) <= kSplitDeviation && tc[k] < counts[k] ? 0 : 1;
    }
  }
  c.expect(strat == 0, std::to_string(strat) + " class counts off by more than one");
  c.expect(partition == 0, std::to_string(partition) + " splits are not partitions");
  c.expect(determinism == 0, std::to_string(determinism) + " splits are not deterministic");

  data::DatasetManifest tagged;
  tagged.classes = {"room"};
  std::map<std::string, std::pair<std::string, std::string>> cells;
  int i = 0;
  for (const auto *robot : {"dumbo", "minnie"})
    for (const auto *light : {"cloudy", "night"}) {
      const std::string path = "p" + std::to_string(i++);
      cells[path] = {robot, light};
      tagged.records.push_back({path, "room", {{"robot", robot}, {"lighting", light}}, data::Split::kUnassigned});
    }
  for (const auto *train_robot : {"dumbo", "minnie"}) {
    const auto s = data::build_idol_scenarios(tagged, train_robot, "cloudy");
    for (const auto &e : s.scenarios) {
      const auto f = data::filter_manifest(tagged, e.predicate);
      if (f.records.size() != 1) {
        c.expect(false, e.name + " selects " + std::to_string(f.records.size()) + " cells");
        continue;
      }
      const auto &[robot, light] = cells.at(f.records[0].path);
      const bool same_bot = robot == train_robot, same_light = light == "cloudy";
      const std::string expect = std::string(same_bot ? "SB" : "DB") + (same_light ? "SL" : "DL");
      c.expect(e.name == expect, e.name + " selects the " + expect + " cell for train robot " + train_robot);
    }
    c.expect(s.at("SBSL").held_out_only, "SBSL must evaluate the held-out split only");
  }
  c.note("200 random manifests; 4-cell matrix checked for both training robots");
}

// 7. End-to-end tiny grid.

void tiny_grid(Check &c, const fs::path &work) {
  const fs::path root = work / "tiny_grid";
  fs::remove_all(root);
  synth::write_pattern_dataset(root / "shapes", {8, 40, 40, 11});
  auto cfg = config::tiny_profile();
  cfg.datasets = {(root / "shapes" / "manifest.jsonl").string()};
  cfg.schemes = {"baseline_fp32", "ptq_int8", "qat_int8"};
  cfg.seed = 7;
  const auto summary = harness::run_grid(cfg, root / "run");
  c.note(std::to_string(summary.trained) + " cells trained, " + std::to_string(summary.failed_rows) + " failed rows");
  const auto table = results::ResultStore(root / "run" / "results.jsonl").load();
  const auto bundle = report::emit_report(table, root / "report");
  std::ifstream in(root / "report" / "report.json");
  const auto rows = nlohmann::json::parse(in).at("rows");
  c.expect(rows.size() == 12, "report holds " + std::to_string(rows.size()) + " rows, expected 12");

  const std::vector<std::string> fields = {"seed", "grid_seed", "epochs", "plan", "pipeline", "head", "quant",
                                           "calibration_images", "history", "data", "evaluation", "snapshot",
                                           "config", "started", "finished"};
  const double chance = 1.0 / 8.0;
  for (const auto &j : rows) {
    const auto row = results::row_from_json(j);
    const std::string label = row.key.approach + "/" + row.key.policy + "/" + row.key.scheme;
    c.expect(row.ok(), label + " failed: " + row.metadata.value("error", std::string()));
    if (!row.ok()) continue;
    for (const auto &f : fields) c.expect(row.metadata.contains(f), label + " lacks metadata " + f);
    const double n = row.metadata.at("evaluation").at("n_eval").get<double>();
    const double threshold = 100.0 * (chance + 3.0 * std::sqrt(chance * (1 - chance) / n));
    std::string line = label + ": " + fmt(row.balanced_accuracy_percent, 2) + "%";
    if (row.key.approach == "fine_tuning" && row.key.policy == "extra_aug") {
      line += " (threshold " + fmt(threshold, 2) + "%)";
      c.expect(row.balanced_accuracy_percent > threshold, label + " at or below the chance threshold");
    }
    c.note(line);
  }
  c.expect(bundle.files.size() >= 3, "report bundle incomplete");
}

// 8. Counting formulas.

void counting(Check &c) {
  using bench::LayerSpec;
  const auto expect_eq = [&](uint64_t got, uint64_t want, const std::string &what) {
    c.expect(got == want, what + ": " + std::to_string(got) + " != " + std::to_string(want));
  };
  expect_eq(bench::count_params({LayerSpec::dense(100, 10)}), 1010, "dense 100->10 params");
  expect_eq(bench::count_params({LayerSpec::conv(3, 3, 64)}), 1792, "conv 3x3 3->64 params");
  expect_eq(bench::count_params({LayerSpec::depthwise(3, 32)}), 320, "depthwise 3x3x32 params");
  expect_eq(bench::count_params({LayerSpec::pool(2, 2, 64)}), 0, "pooling params");
  expect_eq(bench::estimate_flops({LayerSpec::dense(1280, 8)}), 20480, "dense 1280->8 flops");
  expect_eq(bench::estimate_flops({LayerSpec::conv(1, 64, 64, 1, 7, 7)}), 401408, "conv 1x1 64->64 on 7x7 flops");
  expect_eq(bench::estimate_flops({LayerSpec::depthwise(3, 32, 1, 10, 10)}), 2ull * 9 * 32 * 100,
            "depthwise 3x3x32 on 10x10 flops");
  expect_eq(strategy::build_head(1280, 8).param_count(), 329992, "head (1280, 8) params");
  expect_eq(bench::count_params({LayerSpec::dense(1280, 256), LayerSpec::dense(256, 8)}), 329992,
            "head layer list params");

  const auto vgg = bench::vgg16_layers();
  const uint64_t params = bench::count_params(vgg);
  const double flops = static_cast<double>(bench::estimate_flops(vgg));
  const double reference_flops = 30960211824.0;
  const double rel = std::abs(flops - reference_flops) / reference_flops;
  expect_eq(params, 138357544, "VGG16 params");
  c.expect(rel <= kFlopsRelTolerance, "VGG16 flops off by " + fmt(100 * rel, 3) + "%");
  c.note("VGG16: " + std::to_string(params) + " params, " + fmt(flops, 0) + " flops (" + fmt(100 * rel, 3) +
         "% from reference, 1 MAC = 2 FLOPS)");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"tlbench acceptance suite"};
  std::string fixtures = "fixtures";
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--fixtures", fixtures, "Fixture directory")->check(CLI::ExistingDirectory);
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const auto selected = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  int failed = 0;
  if (selected(1))
    failed += run_criterion(1, "statistics reproduction from fixtures", kStatsBudgetS,
                            [&](Check &c) { statistics(c, fixtures); });
  if (selected(2))
    failed += run_criterion(2, "throughput identity", kThroughputBudgetS, [&](Check &c) { throughput(c, fixtures); });
  if (selected(3)) failed += run_criterion(3, "quantization properties", kQuantBudgetS, quantization);
  if (selected(4)) failed += run_criterion(4, "L2-SP gradient and decomposition", kL2spBudgetS, l2sp);
  if (selected(5)) failed += run_criterion(5, "augmentation properties", kAugmentBudgetS, augmentation);
  if (selected(6)) failed += run_criterion(6, "split and scenario properties", kSplitBudgetS, splits);
  if (selected(7))
    failed += run_criterion(7, "tiny grid end to end", kGridBudgetS, [&](Check &c) { tiny_grid(c, work); });
  if (selected(8)) failed += run_criterion(8, "counting formulas", 10, counting);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
