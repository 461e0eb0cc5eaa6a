// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef IOTYPER_TRAINING_HPP
#define IOTYPER_TRAINING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iotyper/ast.hpp"
#include "iotyper/autodiff.hpp"
#include "iotyper/dataset_json.hpp"
#include "iotyper/errors.hpp"
#include "iotyper/iornn.hpp"
#include "iotyper/transforms.hpp"

namespace iotyper {

struct TrainConfig {
  Variant variant = Variant::ChildSum;
  std::size_t d_input = 10;
  std::size_t d_hidden = 15;
  std::size_t max_children = 20;
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  double l2 = 1e-5;
  std::uint64_t seed = 0;
  bool restructuring = true;
  HeadKind head = HeadKind::Linear;
  SiblingSource siblings = SiblingSource::Inside;

  /// Best dimensions per variant: D_m = 15 for Child-Sum, 10 for N-ary.
  static TrainConfig defaults_for(Variant v);
  /// Throws ValidationError on a non-positive dimension, K < 2 or lr <= 0.
  void validate() const;
  ModelConfig model_config(const ClassSet& classes, const Vocabulary& vocab) const;
  /// Restructure, or for the N-ary model without restructuring, truncate.
  PrepareOptions prepare_options() const;
  Json to_json() const;
};

/// Loss became NaN/Inf during training.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::string tree)
      : NumericError(what), epoch_(epoch), tree_(std::move(tree)) {}
  std::size_t epoch() const noexcept { return epoch_; }
  const std::string& tree() const noexcept { return tree_; }

 private:
  std::size_t epoch_;
  std::string tree_;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment buffers, shaped like the parameters.
class AdamState {
 public:
  explicit AdamState(const ad::ParameterStore& params);
  std::vector<ad::Matrix> m, v;
};

/// One bias-corrected Adam update from the gradients stored in `params`,
/// with L2 folded into the gradient (g + l2 * theta). Requires step >= 1.
void adam_step(ad::ParameterStore& params, AdamState& state, std::size_t step, double lr, double l2,
               const AdamOptions& opt = {});

// ---------------------------------------------------------------------------
// Training

struct PreparedExample {
  std::string path;
  PreparedTree prepared;
  std::size_t labeled_sinks = 0;
};

std::vector<PreparedExample> prepare_examples(const Dataset& dataset, const PrepareOptions& options,
                                              const Vocabulary& vocab = Vocabulary::builtin());

struct TrainResult {
  Model model;
  /// Mean loss per labeled sink, one entry per epoch.
  std::vector<double> loss_curve;
  std::vector<std::string> warnings;
};

/// Restructures/truncates, attaches sinks and labels, initializes from
/// `config.seed` and runs `config.epochs` passes of per-tree Adam updates.
/// Throws ValidationError for an empty dataset or vocabulary mismatch and
/// DivergenceError if the loss stops being finite.
TrainResult train(const Dataset& dataset, const TrainConfig& config);
TrainResult train_prepared(const std::vector<PreparedExample>& examples, const ClassSet& classes,
                           const TrainConfig& config);

// ---------------------------------------------------------------------------
// Evaluation

struct Metrics {
  std::size_t num_classes = 0;
  std::size_t total = 0;
  /// hits[k-1] = labeled sinks whose true class ranks within the top k.
  std::vector<std::size_t> hits;
  /// confusion[true][top-1 prediction]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<double> loss_curve;

  Metrics() = default;
  explicit Metrics(std::size_t classes);
  double topk(std::size_t k) const;
  void record(std::size_t truth, std::span<const double> scores);
  void merge(const Metrics& other);
  /// {"1":f,...,"5":f}
  Json topk_json(std::size_t max_k = 5) const;
};

/// Position of `truth` when classes are sorted by descending score, ties
/// broken by ascending class index. 0 is the top prediction.
std::size_t rank_of(std::size_t truth, std::span<const double> scores);

/// Top-k accuracy over every labeled sink. Labels whose identifier was
/// removed by truncation are scored as all-zero logits. Trees are
/// evaluated in parallel (OpenMP); the result is identical to the serial
/// version.
Metrics evaluate_topk(const Model& model, const std::vector<PreparedExample>& examples);
Metrics evaluate_topk_serial(const Model& model, const std::vector<PreparedExample>& examples);
Metrics evaluate_topk(const Model& model, const Dataset& dataset);

/// Forward pass over many trees in parallel; logits per tree, per sink.
std::vector<std::vector<std::vector<double>>> predict_batch(const Model& model,
                                                            const std::vector<PreparedExample>& examples);
std::vector<std::vector<std::vector<double>>> predict_batch_serial(const Model& model,
                                                                   const std::vector<PreparedExample>& examples);

/// Uniformly random ranking per label (top-1 is a uniform class draw).
Metrics baseline_random(std::span<const std::size_t> truths, std::size_t num_classes, std::uint64_t seed);
/// Ranks classes by training frequency (ties to the lower index).
/// Throws std::invalid_argument when `train` is empty.
Metrics baseline_majority(std::span<const std::size_t> train, std::span<const std::size_t> test,
                          std::size_t num_classes);
std::vector<std::size_t> label_classes(const Dataset& dataset);

// ---------------------------------------------------------------------------
// Splits

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded shuffle of tree indices into k near-equal folds. Requires k >= 2
/// and at least k trees.
std::vector<Fold> kfold_split(std::size_t num_trees, std::size_t k, std::uint64_t seed);

/// Seeded split with `test_fraction` of the trees held out.
Fold train_test_split(std::size_t num_trees, double test_fraction, std::uint64_t seed);
/// `{"train":[path...], "test":[path...]}` resolved against tree paths.
Fold split_from_json(const Dataset& dataset, const Json& j);

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace iotyper

#endif  // IOTYPER_TRAINING_HPP
