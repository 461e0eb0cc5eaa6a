// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment harness: cross-validated dimension grid, baselines,
// paired with/without-restructuring sweep over K, and top-k table.

#ifndef IOTYPER_EXPERIMENTS_HPP
#define IOTYPER_EXPERIMENTS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "iotyper/training.hpp"

namespace iotyper {

struct ExperimentOptions {
  std::vector<Variant> variants{Variant::ChildSum, Variant::Nary};
  /// (D_i, D_m) pairs for the cross-validation grid.
  std::vector<std::pair<std::size_t, std::size_t>> dims{{5, 10}, {10, 10}, {10, 15}, {10, 20}};
  std::vector<std::size_t> k_sweep{5, 10, 15, 20, 25, 30, 35};
  std::size_t folds = 4;
  /// Base settings: epochs, lr, l2, seed, K and restructuring for the
  /// grid and top-k runs. Dimensions come from `dims` or the per-variant
  /// defaults.
  TrainConfig base;
  bool run_cv = true;
  bool run_ablation = true;
  bool run_topk = true;
};

/// One training run and its held-out evaluation.
struct RunResult {
  TrainConfig config;
  Metrics metrics;
  std::vector<double> loss_curve;
};

struct CvCell {
  Variant variant;
  std::size_t d_input;
  std::size_t d_hidden;
  std::vector<RunResult> folds;
  double mean_top1() const;
};

struct AblationCell {
  Variant variant;
  std::size_t max_children;
  RunResult with_restructuring;
  RunResult without_restructuring;
};

struct ExperimentReport {
  std::vector<CvCell> cv;
  Metrics majority;
  Metrics random;
  std::vector<AblationCell> ablation;
  std::vector<RunResult> topk;

  Json to_json() const;
  /// Plain-text tables: CV grid, baselines, restructuring sweep, top-k.
  std::string to_text() const;
};

/// Metrics report for one run: {"config":..., "folds":[{"topk":..,
/// "loss_curve":[..]}], "aggregate":{...}}.
Json metrics_report(const TrainConfig& config, const std::vector<RunResult>& folds);

RunResult train_and_evaluate(const Dataset& train, const Dataset& eval, const TrainConfig& config);

std::vector<CvCell> run_cv_grid(const Dataset& train, const ExperimentOptions& options);
std::vector<AblationCell> run_restructuring_ablation(const Dataset& train, const Dataset& test,
                                                     const ExperimentOptions& options);

/// Runs every enabled part. Independent training runs execute in parallel.
ExperimentReport run_experiment_grid(const Dataset& train, const Dataset& test, const ExperimentOptions& options);

}  // namespace iotyper

#endif  // IOTYPER_EXPERIMENTS_HPP
