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
#include "tlbench/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "tlbench/error.hpp"
#include "tlbench/metrics.hpp"
#include "tlbench/quant.hpp"
#include "tlbench/strategy.hpp"
#include "tlbench/synth.hpp"

namespace tlbench::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void emit(const Logger &log, const std::string &message) {
  if (log) log(message);
}

std::string safe_name(std::string s) {
  for (auto &c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

}  // namespace

Resolver default_resolver() {
  return {[](const std::string &arch) { return arch == "tiny_cnn"; },
          [](const std::string &dataset) { return fs::is_regular_file(dataset); }};
}

std::string RunDescriptor::label() const { return dataset + " " + architecture + " " + approach + " " + policy; }

std::vector<RunDescriptor> expand_grid(const config::ExperimentConfig &cfg, const Resolver &resolver) {
  cfg.validate();
  for (const auto &a : cfg.architectures)
    if (resolver.architecture && !resolver.architecture(a)) throw_validation("unresolvable architecture '" + a + "'");
  for (const auto &d : cfg.datasets)
    if (resolver.dataset && !resolver.dataset(d)) throw_validation("unresolvable dataset '" + d + "'");
  std::vector<RunDescriptor> out;
  for (const auto &d : cfg.datasets)
    for (const auto &a : cfg.architectures)
      for (const auto &ap : cfg.approaches)
        for (const auto &p : cfg.policies) {
          RunDescriptor r;
          r.index = out.size();
          r.dataset = d;
          r.architecture = a;
          r.approach = ap;
          r.policy = p;
          r.seed = derive_seed(cfg.seed, fnv1a(dataset_name(d) + "|" + a), fnv1a(ap + "|" + p));
          out.push_back(std::move(r));
        }
  return out;
}

std::string dataset_name(const std::string &reference) {
  const fs::path p(reference);
  if (p.stem() == "manifest" && p.has_parent_path()) return p.parent_path().filename().string();
  return p.stem().string();
}

std::vector<std::string> scenarios_for(const config::ExperimentConfig &cfg) {
  if (cfg.protocol == "idol") return {"SBSL", "SBDL", "DBSL", "DBDL"};
  return {"test"};
}

nn::TinyCnn pretrained_backbone(const std::string &architecture, const config::ExperimentConfig &cfg,
                                const fs::path &cache_dir, const Logger &log) {
  if (architecture != "tiny_cnn") throw_validation("no adapter for architecture '" + architecture + "'");
  static std::mutex mu;
  static std::map<std::string, nn::TinyCnn> memo;
  std::ostringstream key;
  key << architecture << "_s" << cfg.seed << "_px" << cfg.image_size << "_n" << cfg.pretrain_images << "_e"
      << cfg.pretrain_epochs << "_lr" << cfg.pretrain_learning_rate;
  const std::lock_guard lock(mu);
  if (const auto it = memo.find(key.str()); it != memo.end()) return it->second;

  nn::TinyCnn backbone = nn::TinyCnn::standard(derive_seed(cfg.seed, 0xBAC));
  const fs::path cache = cache_dir / ("pretrained_" + safe_name(key.str()) + ".json");
  if (fs::exists(cache)) {
    std::ifstream in(cache);
    const auto j = json::parse(in);
    strategy::ParameterMap values;
    for (const auto &[name, t] : j.at("params").items()) {
      strategy::Tensor tensor;
      tensor.shape = t.at("shape").get<std::vector<int>>();
      tensor.values = t.at("values").get<std::vector<double>>();
      values.emplace(name, std::move(tensor));
    }
    backbone.load(values);
    emit(log, "loaded pre-trained backbone " + cache.string());
  } else if (cfg.pretrain_images > 0 && cfg.pretrain_epochs > 0) {
    emit(log, "pre-training " + architecture + " on the synthetic source task");
    const auto source = synth::source_task(cfg.pretrain_images, cfg.image_size, derive_seed(cfg.seed, 0x50C));
    nn::Classifier model(backbone, strategy::build_head(backbone.feature_dim(), synth::kPatternCount, 0.0),
                         derive_seed(cfg.seed, 0x50D));
    strategy::TrainingPlan plan;
    plan.approach = "pretrain";
    plan.learning_rate = cfg.pretrain_learning_rate;
    plan.batch_size = cfg.batch_size;
    std::vector<std::string> names;
    for (const auto &[name, t] : model.parameters()) names.push_back(name);
    plan.phases.push_back({"pretrain", 1, cfg.pretrain_epochs, names, strategy::Regularizer::kNone, false});
    augment::AugPipeline resize;
    resize.resize_height = resize.resize_width = cfg.image_size;
    nn::TrainOptions opts;
    opts.seed = derive_seed(cfg.seed, 0x50E);
    opts.on_epoch = [&](const nn::EpochLog &e) {
      std::ostringstream m;
      m << "  pretrain epoch " << e.epoch << " loss " << e.loss << " acc " << e.train_accuracy;
      emit(log, m.str());
    };
    auto nm = model.make_numerics(nn::NumericMode::kFloat);
    nn::train(model, plan, source, resize, opts, nm);
    backbone.load(model.backbone_parameters());
    fs::create_directories(cache_dir);
    json params = json::object();
    for (const auto &[name, t] : backbone.parameters()) params[name] = {{"shape", t.shape}, {"values", t.values}};
    std::ofstream out(cache);
    out << json{{"architecture", architecture}, {"key", key.str()}, {"params", params}}.dump();
  }
  memo.emplace(key.str(), backbone);
  return backbone;
}

nn::LabeledImages decode(const data::DatasetManifest &manifest) {
  nn::LabeledImages out;
  for (const auto &r : manifest.records) {
    out.images.push_back(augment::read_pnm(manifest.resolve(r)));
    out.labels.push_back(static_cast<int>(manifest.class_index(r.label)));
  }
  return out;
}

PreparedData prepare_data(const std::string &dataset, const config::ExperimentConfig &cfg) {
  const auto manifest = data::load_manifest(dataset);
  PreparedData out;
  out.classes = manifest.classes;
  data::SplitSpec spec;
  spec.seed = cfg.seed;
  spec.test_fraction = cfg.test_fraction;
  auto split_of = [&](const data::DatasetManifest &m) {
    const bool presplit = std::any_of(m.records.begin(), m.records.end(),
                                      [](const auto &r) { return r.split != data::Split::kUnassigned; });
    if (!presplit) return data::stratified_split(m, spec);
    data::SplitResult s{m, m};
    std::erase_if(s.train.records, [](const auto &r) { return r.split != data::Split::kTrain; });
    std::erase_if(s.test.records, [](const auto &r) { return r.split != data::Split::kTest; });
    return s;
  };
  if (cfg.protocol == "idol") {
    const auto matrix = data::build_idol_scenarios(manifest, cfg.idol_train_robot, cfg.idol_train_lighting);
    const auto split = split_of(data::filter_manifest(manifest, matrix.train_filter));
    out.train = decode(split.train);
    out.description = {{"train_filter", matrix.train_filter.describe()}, {"n_train", split.train.records.size()}};
    for (const auto &entry : matrix.scenarios) {
      const auto eval = entry.held_out_only ? split.test : data::filter_manifest(manifest, entry.predicate);
      out.eval.push_back({entry.name, decode(eval)});
      out.description["scenarios"][entry.name] = {{"predicate", entry.predicate.describe()},
                                                   {"held_out_only", entry.held_out_only},
                                                   {"n_eval", eval.records.size()}};
    }
  } else {
    const auto split = split_of(manifest);
    out.train = decode(split.train);
    out.eval.push_back({"test", decode(split.test)});
    out.description = {{"n_train", split.train.records.size()}, {"n_eval", split.test.records.size()}};
  }
  if (out.train.images.empty()) throw_validation("dataset '" + dataset + "' has no training images");
  return out;
}

void save_snapshot(const Snapshot &s, const fs::path &path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw_io("cannot write snapshot " + path.string());
  out << json{{"model", nn::to_json(s.model)},
              {"numerics", nn::to_json(s.numerics)},
              {"pipeline", augment::to_json(s.pipeline)},
              {"classes", s.classes},
              {"scheme", s.scheme},
              {"metadata", s.metadata}}
             .dump();
}

Snapshot load_snapshot(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open snapshot " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw_parse("snapshot " + path.string() + ": " + e.what());
  }
  try {
    return Snapshot{nn::classifier_from_json(j.at("model")),
                    nn::numerics_from_json(j.at("numerics")),
                    augment::pipeline_from_json(j.at("pipeline")),
                    j.at("classes").get<std::vector<std::string>>(),
                    j.at("scheme").get<std::string>(),
                    j.value("metadata", json::object())};
  } catch (const json::exception &e) {
    throw_parse("snapshot " + path.string() + ": " + e.what());
  }
}

double evaluate_percent(const Snapshot &snapshot, const nn::LabeledImages &data, json *details) {
  if (data.images.empty()) throw_validation("evaluation set is empty");
  auto numerics = snapshot.numerics;
  const auto pred = nn::predict_all(snapshot.model, data.images, snapshot.pipeline, numerics);
  const auto cm = metrics::confusion(data.labels, pred, snapshot.classes);
  const auto ba = metrics::balanced_accuracy(cm);
  if (details != nullptr) {
    *details = {{"n_eval", data.images.size()}, {"confusion", cm.counts}, {"unsupported_classes", ba.unsupported}};
  }
  return 100.0 * ba.value;
}

std::vector<results::ResultRow> run_cell(const RunDescriptor &d, const config::ExperimentConfig &cfg,
                                         const fs::path &out_dir, const Logger &log) {
  const auto scenarios = scenarios_for(cfg);
  const std::string ds = dataset_name(d.dataset);
  const std::string started = utc_now();
  std::vector<results::ResultRow> rows;
  auto failed_rows = [&](const std::string &scheme, const std::string &why) {
    for (const auto &sc : scenarios) {
      results::ResultRow r;
      r.key = {ds, d.architecture, d.approach, d.policy, scheme, sc};
      r.status = "failed";
      r.balanced_accuracy_percent = std::nan("");
      r.metadata = {{"seed", d.seed}, {"error", why}, {"started", started}, {"finished", utc_now()}};
      rows.push_back(std::move(r));
    }
  };

  std::optional<PreparedData> data;
  std::optional<nn::Classifier> model;
  std::optional<strategy::TrainingPlan> plan;
  augment::AugPipeline pipeline;
  json history_json = json::array();
  try {
    emit(log, "cell " + d.label());
    data = prepare_data(d.dataset, cfg);
    const auto backbone = pretrained_backbone(d.architecture, cfg, out_dir / "cache", log);
    const auto head = strategy::build_head(backbone.feature_dim(), static_cast<int>(data->classes.size()), cfg.head_l2);
    model.emplace(backbone, head, derive_seed(d.seed, 1));
    plan = strategy::plan_by_name(d.approach, backbone, cfg.head_epochs, cfg.total_epochs,
                                  std::min(cfg.unfreeze_blocks, backbone.block_count()),
                                  {cfg.l2sp_alpha, cfg.l2sp_beta});
    plan->learning_rate = cfg.learning_rate;
    plan->batch_size = cfg.batch_size;
    pipeline = augment::policy_by_name(d.policy, cfg.image_size, cfg.image_size, derive_seed(d.seed, 2));
    nn::TrainOptions opts;
    opts.seed = d.seed;
    opts.on_epoch = [&](const nn::EpochLog &e) {
      history_json.push_back({{"epoch", e.epoch}, {"phase", e.phase}, {"loss", e.loss}, {"accuracy", e.train_accuracy}});
      std::ostringstream m;
      m << "  epoch " << e.epoch << " [" << e.phase << "] loss " << e.loss << " acc " << e.train_accuracy;
      emit(log, m.str());
    };
    auto nm = model->make_numerics(nn::NumericMode::kFloat);
    nn::train(*model, *plan, data->train, pipeline, opts, nm);
  } catch (const std::exception &e) {
    emit(log, std::string("  cell failed: ") + e.what());
    for (const auto &scheme : cfg.schemes) failed_rows(scheme, e.what());
    return rows;
  }

  for (const auto &scheme_name : cfg.schemes) {
    try {
      const auto scheme = quant::scheme_from_string(scheme_name);
      Snapshot snap{*model, model->make_numerics(nn::NumericMode::kFloat), pipeline, data->classes, scheme_name, {}};
      strategy::TrainingPlan used = *plan;
      json qat_history = json::array();
      switch (scheme) {
        case quant::PrecisionScheme::kBaselineFp32:
          break;
        case quant::PrecisionScheme::kFp16:
          snap.numerics = model->make_numerics(nn::NumericMode::kFp16);
          break;
        case quant::PrecisionScheme::kPtqInt8:
          nn::calibrate(snap.model, data->train, pipeline, static_cast<size_t>(cfg.calibration_images), snap.numerics);
          break;
        case quant::PrecisionScheme::kQatInt8: {
          used = strategy::extend_plan_for_qat(*plan, cfg.qat_epochs);
          nn::TrainOptions opts;
          opts.seed = d.seed;
          opts.start_epoch = plan->total_epochs() + 1;
          opts.on_epoch = [&](const nn::EpochLog &e) {
            qat_history.push_back(
                {{"epoch", e.epoch}, {"phase", e.phase}, {"loss", e.loss}, {"accuracy", e.train_accuracy}});
            std::ostringstream m;
            m << "  epoch " << e.epoch << " [" << e.phase << "] loss " << e.loss << " acc " << e.train_accuracy;
            emit(log, m.str());
          };
          auto qnm = snap.model.make_numerics(nn::NumericMode::kFloat);
          nn::train(snap.model, used, data->train, pipeline, opts, qnm);
          nn::calibrate(snap.model, data->train, pipeline, static_cast<size_t>(cfg.calibration_images), snap.numerics);
          break;
        }
      }
      const std::string snap_name = safe_name(ds + "__" + d.architecture + "__" + d.approach + "__" + d.policy + "__" +
                                              scheme_name) + ".json";
      const fs::path snap_path = out_dir / "snapshots" / snap_name;
      snap.metadata = {{"seed", d.seed}, {"plan", strategy::to_json(used)}, {"dataset", d.dataset}};
      save_snapshot(snap, snap_path);
      for (const auto &es : data->eval) {
        json details;
        results::ResultRow r;
        r.key = {ds, d.architecture, d.approach, d.policy, scheme_name, es.scenario};
        r.balanced_accuracy_percent = evaluate_percent(snap, es.data, &details);
        r.metadata = {{"seed", d.seed},
                      {"grid_seed", cfg.seed},
                      {"epochs", {{"head", cfg.head_epochs}, {"total", used.total_epochs()}, {"qat", cfg.qat_epochs}}},
                      {"plan", strategy::to_json(used)},
                      {"pipeline", augment::to_json(pipeline)},
                      {"head", strategy::to_json(model->head())},
                      {"quant", nn::to_json(snap.numerics)},
                      {"calibration_images", cfg.calibration_images},
                      {"history", history_json},
                      {"qat_history", qat_history},
                      {"data", data->description},
                      {"evaluation", details},
                      {"snapshot", snap_path.string()},
                      {"config", config::to_json(cfg)},
                      {"started", started},
                      {"finished", utc_now()}};
        rows.push_back(std::move(r));
      }
    } catch (const std::exception &e) {
      emit(log, "  scheme " + scheme_name + " failed: " + e.what());
      failed_rows(scheme_name, e.what());
    }
  }
  return rows;
}

GridSummary run_grid(const config::ExperimentConfig &cfg, const fs::path &out_dir, const Logger &log,
                     const Resolver &resolver) {
  const auto descriptors = expand_grid(cfg, resolver);
  fs::create_directories(out_dir);
  {
    std::ofstream echo(out_dir / "config.txt");
    echo << config::to_text(cfg);
  }
  const results::ResultStore store(out_dir / "results.jsonl");
  const auto scenarios = scenarios_for(cfg);
  GridSummary summary;
  summary.cells = descriptors.size();
  for (const auto &d : descriptors) {
    const auto table = store.load();
    bool complete = true;
    for (const auto &scheme : cfg.schemes)
      for (const auto &sc : scenarios) {
        const auto *row = table.find({dataset_name(d.dataset), d.architecture, d.approach, d.policy, scheme, sc});
        complete = complete && row != nullptr && row->ok();
      }
    if (complete) {
      ++summary.skipped;
      emit(log, "skip " + d.label() + " (stored)");
      continue;
    }
    for (const auto &row : run_cell(d, cfg, out_dir, log)) {
      if (!row.ok()) ++summary.failed_rows;
      store.append(row);
    }
    ++summary.trained;
  }
  return summary;
}

}  // namespace tlbench::harness
