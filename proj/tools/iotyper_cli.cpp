// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iotyper/dataset_json.hpp"
#include "iotyper/errors.hpp"
#include "iotyper/experiments.hpp"
#include "iotyper/iornn.hpp"
#include "iotyper/parallel.hpp"
#include "iotyper/training.hpp"
#include "iotyper/transforms.hpp"

using namespace iotyper;

namespace {

enum Exit { kOk = 0, kInputError = 1, kDiverged = 2, kVocab = 3 };

struct Flags {
  std::string dataset, ast, model, out, split_file;
  std::string variant = "childsum";
  std::size_t d_input = 10, d_hidden = 15, max_children = 20, epochs = 100;
  double lr = 0.01, l2 = 1e-5;
  std::uint64_t seed = 0;
  bool no_restructuring = false;
  std::size_t top_k = 3;
  std::size_t folds = 4;
  bool timestamps = false;
};

struct Given {
  CLI::Option* variant = nullptr;
  CLI::Option* d_input = nullptr;
  CLI::Option* d_hidden = nullptr;
};

void add_train_flags(CLI::App* cmd, Flags& f, Given& g) {
  g.variant = cmd->add_option("--variant", f.variant, "childsum or nary")->check(CLI::IsMember({"childsum", "nary"}));
  g.d_input = cmd->add_option("--d-input", f.d_input, "embedding width D_i")->check(CLI::PositiveNumber);
  g.d_hidden = cmd->add_option("--d-hidden", f.d_hidden, "hidden width D_m")->check(CLI::PositiveNumber);
  cmd->add_option("--max-children", f.max_children, "K, maximum children per node")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--l2", f.l2, "L2 regularization")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_flag("--no-restructuring", f.no_restructuring, "disable block restructuring");
}

TrainConfig train_config(const Flags& f, const Given& g) {
  const Variant v = variant_from_string(f.variant);
  TrainConfig c = TrainConfig::defaults_for(v);
  c.variant = v;
  if (g.d_input->count() > 0) c.d_input = f.d_input;
  if (g.d_hidden->count() > 0) c.d_hidden = f.d_hidden;
  c.max_children = f.max_children;
  c.epochs = f.epochs;
  c.learning_rate = f.lr;
  c.l2 = f.l2;
  c.seed = f.seed;
  c.restructuring = !f.no_restructuring;
  c.validate();
  return c;
}

Json parse_json_file(const std::string& path) {
  const std::string raw = read_file(path);
  try {
    return Json::parse(raw);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), e.byte);
  }
}

Dataset load_dataset(const std::string& path) {
  const std::string raw = read_file(path);
  return parse_dataset(raw);
}

// An AST file holds either a bare NODE or an object with a "root" NODE.
TreeNode load_ast(const std::string& path) {
  const Json j = parse_json_file(path);
  if (!j.is_object()) throw ValidationError(path + ": expected a JSON object");
  if (j.contains("vocab_version") && j.at("vocab_version").get<std::string>() != Vocabulary::builtin().version()) {
    throw VocabMismatch(path + ": vocabulary '" + j.at("vocab_version").get<std::string>() + "' is not '" +
                        Vocabulary::builtin().version() + "'");
  }
  TreeNode root = node_from_json(j.contains("root") ? j.at("root") : j);
  const auto violations = validate_tree(root);
  if (!violations.empty()) throw ValidationError(path + ": " + violations.front().message);
  return root;
}

Model load_model(const std::string& path) {
  Model m = Model::parse(read_file(path));
  if (m.config().vocab_version != Vocabulary::builtin().version()) {
    throw VocabMismatch("model vocabulary '" + m.config().vocab_version + "' is not '" +
                        Vocabulary::builtin().version() + "'");
  }
  return m;
}

std::string metrics_path(const std::string& model_path) {
  const std::string ext = ".json";
  if (model_path.size() > ext.size() && model_path.ends_with(ext)) {
    return model_path.substr(0, model_path.size() - ext.size()) + ".metrics.json";
  }
  return model_path + ".metrics.json";
}

void stamp(Json& j, bool enabled) {
  if (!enabled) return;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["generated_at"] = buf;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, const Flags& f) {
  Fold fold = f.split_file.empty() ? train_test_split(d.trees.size(), 1.0 / 3.0, f.seed)
                                   : split_from_json(d, parse_json_file(f.split_file));
  return {subset(d, fold.train), subset(d, fold.validation)};
}

int cmd_train(const Flags& f, const Given& g) {
  const TrainConfig config = train_config(f, g);
  Dataset data = load_dataset(f.dataset);
  Dataset eval_set = data;
  if (!f.split_file.empty()) std::tie(data, eval_set) = split_dataset(data, f);

  TrainResult result = train(data, config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  write_file(f.out, result.model.serialize());

  Metrics m = evaluate_topk(result.model, eval_set);
  Json report = metrics_report(config, {RunResult{config, std::move(m), result.loss_curve}});
  report["evaluated_on"] = f.split_file.empty() ? "train" : "test";
  stamp(report, f.timestamps);
  write_file(metrics_path(f.out), report.dump(2) + "\n");
  return kOk;
}

int cmd_predict(const Flags& f) {
  const Model model = load_model(f.model);
  const TreeNode root = load_ast(f.ast);
  const ModelConfig& mc = model.config();
  PrepareOptions opts;
  opts.max_children = mc.max_children;
  opts.restructure = mc.restructuring;
  opts.truncate = mc.variant == Variant::Nary && !mc.restructuring;
  const PreparedTree prepared = prepare_tree(root, {}, opts, Vocabulary::builtin());
  const auto logits = model.predict(prepared.tree);
  const ClassSet& classes = mc.classes;
  const std::size_t k = std::min(f.top_k, classes.size());

  for (std::size_t s = 0; s < logits.size(); ++s) {
    const auto& z = logits[s];
    const double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) total += p[i] = std::exp(z[i] - mx);
    for (auto& x : p) x /= total;
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

    Json line;
    const SinkNode& sink = prepared.tree.sinks()[s];
    line["scope"] = sink.owner.scope;
    line["name"] = sink.owner.name;
    Json preds = Json::array();
    for (std::size_t r = 0; r < k; ++r) preds.push_back({{"type", classes.name(order[r])}, {"prob", p[order[r]]}});
    line["predictions"] = std::move(preds);
    std::cout << line.dump() << "\n";
  }
  return kOk;
}

int cmd_evaluate(const Flags& f, const Given& g) {
  const Dataset data = load_dataset(f.dataset);
  Json report;
  std::string text;

  if (!f.model.empty()) {
    const Model model = load_model(f.model);
    const Dataset eval_set = f.split_file.empty() ? data : split_dataset(data, f).second;
    const Metrics m = evaluate_topk(model, eval_set);
    report["model"] = f.model;
    report["labels"] = m.total;
    report["topk"] = m.topk_json(model.config().classes.size());
    text = "Top-k accuracy\n";
    for (std::size_t k = 1; k <= std::min<std::size_t>(5, m.num_classes); ++k) {
      char row[64];
      std::snprintf(row, sizeof row, "  top-%zu  %6.2f%%\n", k, 100.0 * m.topk(k));
      text += row;
    }
  } else {
    ExperimentOptions opts;
    opts.base = train_config(f, g);
    opts.folds = f.folds;
    if (g.variant->count() > 0) opts.variants = {opts.base.variant};
    if (g.d_input->count() > 0 || g.d_hidden->count() > 0) opts.dims = {{opts.base.d_input, opts.base.d_hidden}};
    const auto [train_set, test_set] = split_dataset(data, f);
    const ExperimentReport r = run_experiment_grid(train_set, test_set, opts);
    report = r.to_json();
    text = r.to_text();
  }
  stamp(report, f.timestamps);
  if (f.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_file(f.out, report.dump(2) + "\n");
    std::cout << text;
  }
  return kOk;
}

int cmd_transform(const Flags& f) {
  const TreeNode root = load_ast(f.ast);
  PrepareOptions opts;
  opts.max_children = f.max_children;
  opts.restructure = !f.no_restructuring;
  const PreparedTree prepared = prepare_tree(root, {}, opts, Vocabulary::builtin());

  Json out;
  out["max_children"] = f.max_children;
  out["restructured"] = opts.restructure;
  out["root"] = node_to_json(prepared.tree.root());
  Json sinks = Json::array();
  for (const auto& s : prepared.tree.sinks()) {
    sinks.push_back({{"id", s.sink_id}, {"scope", s.owner.scope}, {"name", s.owner.name}, {"occurrences", s.occurrences}});
  }
  out["sinks"] = std::move(sinks);
  const std::string body = out.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << body;
  } else {
    write_file(f.out, body);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Flags f;
  Given g_train, g_eval;
  CLI::App app{"iotyper: type-class prediction for identifiers in Python ASTs"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("--dataset", f.dataset, "dataset JSON")->required();
  train->add_option("--out", f.out, "model file to write")->required();
  train->add_option("--split-file", f.split_file, "train on the \"train\" list, report on \"test\"");
  add_train_flags(train, f, g_train);
  train->add_flag("--timestamps", f.timestamps, "embed a generation time in reports");

  auto* predict = app.add_subcommand("predict", "rank type classes for every identifier of an AST");
  predict->add_option("--model", f.model, "model file")->required();
  predict->add_option("--ast", f.ast, "AST JSON")->required();
  predict->add_option("--top-k", f.top_k, "classes per identifier")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "top-k report for a model, or the full experiment grid");
  evaluate->add_option("--dataset", f.dataset, "dataset JSON")->required();
  evaluate->add_option("--model", f.model, "model file; omit to train and run the grid");
  evaluate->add_option("--out", f.out, "write the JSON report here and print tables");
  evaluate->add_option("--folds", f.folds, "cross-validation folds")->check(CLI::Range(2, 1000));
  evaluate->add_option("--split-file", f.split_file, "{\"train\":[..],\"test\":[..]} by tree path");
  add_train_flags(evaluate, f, g_eval);
  evaluate->add_flag("--timestamps", f.timestamps, "embed a generation time in reports");

  auto* transform = app.add_subcommand("transform", "dump the restructured, sink-augmented tree");
  transform->add_option("--ast", f.ast, "AST JSON")->required();
  transform->add_option("--max-children", f.max_children, "K")->check(CLI::Range(2, 1 << 20));
  transform->add_flag("--no-restructuring", f.no_restructuring, "attach sinks only");
  transform->add_option("--out", f.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  configure_threads_from_env();
  try {
    if (*train) return cmd_train(f, g_train);
    if (*predict) return cmd_predict(f);
    if (*evaluate) return cmd_evaluate(f, g_eval);
    if (*transform) return cmd_transform(f);
  } catch (const VocabMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVocab;
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged at epoch " << e.epoch() << " on " << e.tree() << ": " << e.what() << "\n";
    return kDiverged;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (byte " << e.offset() << ")\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
