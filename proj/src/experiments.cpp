// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include "iotyper/experiments.hpp"

#include <cstdio>
#include <exception>
#include <sstream>

namespace iotyper {

namespace {

template <typename F>
void parallel_tasks(std::size_t n, F&& task) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      task(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

TrainConfig with_variant(const TrainConfig& base, Variant v, std::size_t d_input, std::size_t d_hidden) {
  TrainConfig c = base;
  c.variant = v;
  c.d_input = d_input;
  c.d_hidden = d_hidden;
  return c;
}

TrainConfig variant_defaults(const TrainConfig& base, Variant v) {
  const TrainConfig d = TrainConfig::defaults_for(v);
  return with_variant(base, v, d.d_input, d.d_hidden);
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f%%", 100.0 * x);
  return buf;
}

Json run_json(const RunResult& r) {
  Json j;
  j["topk"] = r.metrics.topk_json();
  j["labels"] = r.metrics.total;
  j["loss_curve"] = r.loss_curve;
  return j;
}

}  // namespace

double CvCell::mean_top1() const {
  if (folds.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : folds) s += f.metrics.topk(1);
  return s / static_cast<double>(folds.size());
}

Json metrics_report(const TrainConfig& config, const std::vector<RunResult>& folds) {
  Json j;
  j["config"] = config.to_json();
  Json fj = Json::array();
  Metrics total(folds.empty() ? 0 : folds.front().metrics.num_classes);
  for (const auto& f : folds) {
    fj.push_back(run_json(f));
    total.merge(f.metrics);
  }
  j["folds"] = std::move(fj);
  Json agg;
  agg["topk"] = total.topk_json();
  agg["labels"] = total.total;
  Json mean = Json::object();
  for (std::size_t k = 1; k <= 5; ++k) {
    double s = 0.0;
    for (const auto& f : folds) s += f.metrics.topk(k);
    mean[std::to_string(k)] = folds.empty() ? 0.0 : s / static_cast<double>(folds.size());
  }
  agg["mean_fold_topk"] = std::move(mean);
  j["aggregate"] = std::move(agg);
  return j;
}

RunResult train_and_evaluate(const Dataset& train_set, const Dataset& eval_set, const TrainConfig& config) {
  TrainResult trained = train(train_set, config);
  Metrics m = evaluate_topk(trained.model, prepare_examples(eval_set, config.prepare_options()));
  m.loss_curve = trained.loss_curve;
  return {config, std::move(m), std::move(trained.loss_curve)};
}

std::vector<CvCell> run_cv_grid(const Dataset& train_set, const ExperimentOptions& options) {
  std::vector<CvCell> cells;
  for (Variant v : options.variants) {
    for (auto [di, dm] : options.dims) cells.push_back({v, di, dm, {}});
  }
  if (cells.empty()) return cells;
  const auto folds = kfold_split(train_set.trees.size(), options.folds, options.base.seed);
  for (auto& c : cells) c.folds.resize(folds.size());

  parallel_tasks(cells.size() * folds.size(), [&](std::size_t task) {
    CvCell& cell = cells[task / folds.size()];
    const Fold& fold = folds[task % folds.size()];
    const TrainConfig cfg = with_variant(options.base, cell.variant, cell.d_input, cell.d_hidden);
    cell.folds[task % folds.size()] =
        train_and_evaluate(subset(train_set, fold.train), subset(train_set, fold.validation), cfg);
  });
  return cells;
}

std::vector<AblationCell> run_restructuring_ablation(const Dataset& train_set, const Dataset& test_set,
                                                     const ExperimentOptions& options) {
  std::vector<AblationCell> cells;
  for (Variant v : options.variants) {
    for (std::size_t k : options.k_sweep) cells.push_back({v, k, {}, {}});
  }
  // Both arms share variant, dimensions, K and seed, hence identical
  // initial parameters; only the tree transform differs.
  parallel_tasks(cells.size() * 2, [&](std::size_t task) {
    AblationCell& cell = cells[task / 2];
    TrainConfig cfg = variant_defaults(options.base, cell.variant);
    cfg.max_children = cell.max_children;
    cfg.restructuring = task % 2 == 0;
    RunResult r = train_and_evaluate(train_set, test_set, cfg);
    (cfg.restructuring ? cell.with_restructuring : cell.without_restructuring) = std::move(r);
  });
  return cells;
}

ExperimentReport run_experiment_grid(const Dataset& train_set, const Dataset& test_set,
                                     const ExperimentOptions& options) {
  ExperimentReport report;
  const std::size_t classes = train_set.classes.size();
  report.majority = Metrics(classes);
  report.random = Metrics(classes);

  if (options.run_cv) report.cv = run_cv_grid(train_set, options);

  const auto train_labels = label_classes(train_set);
  const auto test_labels = label_classes(test_set);
  if (!train_labels.empty()) report.majority = baseline_majority(train_labels, test_labels, classes);
  report.random = baseline_random(test_labels, classes, options.base.seed);

  if (options.run_ablation) report.ablation = run_restructuring_ablation(train_set, test_set, options);

  if (options.run_topk) {
    report.topk.resize(options.variants.size());
    parallel_tasks(options.variants.size(), [&](std::size_t i) {
      report.topk[i] = train_and_evaluate(train_set, test_set, variant_defaults(options.base, options.variants[i]));
    });
  }
  return report;
}

Json ExperimentReport::to_json() const {
  Json j;
  Json cvj = Json::array();
  for (const auto& c : cv) {
    Json cj;
    cj["variant"] = to_string(c.variant);
    cj["d_input"] = c.d_input;
    cj["d_hidden"] = c.d_hidden;
    cj["mean_top1"] = c.mean_top1();
    if (!c.folds.empty()) {
      cj["report"] = metrics_report(c.folds.front().config, c.folds);
    }
    cvj.push_back(std::move(cj));
  }
  j["cross_validation"] = std::move(cvj);
  j["baselines"] = {{"majority", majority.topk_json()}, {"random", random.topk_json()}};

  Json ab = Json::array();
  for (const auto& a : ablation) {
    Json aj;
    aj["variant"] = to_string(a.variant);
    aj["max_children"] = a.max_children;
    aj["with_restructuring"] = run_json(a.with_restructuring);
    aj["without_restructuring"] = run_json(a.without_restructuring);
    ab.push_back(std::move(aj));
  }
  j["restructuring"] = std::move(ab);

  Json tk = Json::array();
  for (const auto& r : topk) {
    Json rj = metrics_report(r.config, {r});
    rj["variant"] = to_string(r.config.variant);
    tk.push_back(std::move(rj));
  }
  j["topk"] = std::move(tk);
  return j;
}

std::string ExperimentReport::to_text() const {
  std::ostringstream out;
  if (!cv.empty()) {
    out << "Cross-validation top-1 (mean over folds)\n";
    out << "  D_i, D_m   variant    top-1\n";
    for (const auto& c : cv) {
      char row[96];
      std::snprintf(row, sizeof row, "  %3zu, %3zu   %-9s  %s\n", c.d_input, c.d_hidden,
                    std::string(to_string(c.variant)).c_str(), pct(c.mean_top1()).c_str());
      out << row;
    }
    out << "\n";
  }
  out << "Baselines (test top-1)\n";
  out << "  majority  " << pct(majority.topk(1)) << "\n";
  out << "  random    " << pct(random.topk(1)) << "\n\n";

  if (!ablation.empty()) {
    out << "Restructuring sweep (test top-1)\n";
    out << "     K   variant    with       without\n";
    for (const auto& a : ablation) {
      char row[128];
      std::snprintf(row, sizeof row, "  %4zu   %-9s  %s   %s\n", a.max_children,
                    std::string(to_string(a.variant)).c_str(), pct(a.with_restructuring.metrics.topk(1)).c_str(),
                    pct(a.without_restructuring.metrics.topk(1)).c_str());
      out << row;
    }
    out << "\n";
  }
  if (!topk.empty()) {
    out << "Top-k accuracy (test)\n";
    out << "  variant    top-1    top-2    top-3    top-4    top-5\n";
    for (const auto& r : topk) {
      out << "  " << std::string(to_string(r.config.variant));
      out << std::string(9 - std::min<std::size_t>(9, to_string(r.config.variant).size()), ' ');
      for (std::size_t k = 1; k <= 5; ++k) out << "  " << pct(r.metrics.topk(k));
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace iotyper
