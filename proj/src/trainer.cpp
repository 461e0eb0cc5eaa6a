// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "iotyper/errors.hpp"
#include "iotyper/training.hpp"

namespace iotyper {

TrainConfig TrainConfig::defaults_for(Variant v) {
  TrainConfig c;
  c.variant = v;
  c.d_hidden = v == Variant::ChildSum ? 15 : 10;
  return c;
}

void TrainConfig::validate() const {
  if (d_input == 0 || d_hidden == 0) throw ValidationError("d_input and d_hidden must be positive");
  if (max_children < 2) throw ValidationError("max_children must be at least 2");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(l2 >= 0.0)) throw ValidationError("l2 must be non-negative");
}

ModelConfig TrainConfig::model_config(const ClassSet& classes, const Vocabulary& vocab) const {
  ModelConfig m;
  m.variant = variant;
  m.d_input = d_input;
  m.d_hidden = d_hidden;
  m.max_children = max_children;
  m.restructuring = restructuring;
  m.head = head;
  m.siblings = siblings;
  m.classes = classes;
  m.vocab_version = vocab.version();
  m.vocab_rows = vocab.embedding_rows();
  return m;
}

PrepareOptions TrainConfig::prepare_options() const {
  return {max_children, restructuring, !restructuring && variant == Variant::Nary};
}

Json TrainConfig::to_json() const {
  Json j;
  j["variant"] = to_string(variant);
  j["d_input"] = d_input;
  j["d_hidden"] = d_hidden;
  j["max_children"] = max_children;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["l2"] = l2;
  j["seed"] = seed;
  j["restructuring"] = restructuring;
  j["head"] = to_string(head);
  j["siblings_source"] = to_string(siblings);
  return j;
}

std::vector<PreparedExample> prepare_examples(const Dataset& dataset, const PrepareOptions& options,
                                              const Vocabulary& vocab) {
  std::vector<PreparedExample> out;
  out.reserve(dataset.trees.size());
  for (const auto& t : dataset.trees) {
    PreparedExample ex{t.path, prepare_tree(t.root, t.labels, options, vocab), 0};
    for (const auto& s : ex.prepared.tree.sinks()) ex.labeled_sinks += s.label.has_value();
    out.push_back(std::move(ex));
  }
  return out;
}

TrainResult train_prepared(const std::vector<PreparedExample>& examples, const ClassSet& classes,
                           const TrainConfig& config) {
  config.validate();
  const Vocabulary& vocab = Vocabulary::builtin();
  TrainResult result{Model::initialize(config.model_config(classes, vocab), config.seed), {}, {}};
  if (config.epochs == 0) {
    result.warnings.push_back("epochs = 0: returning the untrained initial model");
    return result;
  }
  std::size_t usable = 0;
  for (const auto& ex : examples) {
    if (ex.labeled_sinks == 0) {
      result.warnings.push_back(ex.path + ": no labeled sinks, skipped");
    } else {
      ++usable;
    }
  }
  if (usable == 0) throw ValidationError("no tree has a labeled identifier to train on");

  Model& model = result.model;
  ad::ParameterStore& params = model.params();
  AdamState adam(params);
  std::size_t step = 0;
  result.loss_curve.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t sink_count = 0;
    for (const auto& ex : examples) {
      if (ex.labeled_sinks == 0) continue;
      const AugmentedTree& tree = ex.prepared.tree;
      ad::Tape tape(params);
      double value = 0.0;
      try {
        const ForwardResult fwd = model.forward(tree, tape);
        const ad::Var loss = model.loss(tree, fwd, tape);
        value = tape.value(loss)[0];
        if (!std::isfinite(value)) throw NumericError("non-finite loss");
        params.zero_grad();
        tape.backward(loss, params);
      } catch (const NumericError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " on " + ex.path + ": " +
                                  e.what(),
                              epoch, ex.path);
      }
      adam_step(params, adam, ++step, config.learning_rate, config.l2);
      loss_sum += value * static_cast<double>(ex.labeled_sinks);
      sink_count += ex.labeled_sinks;
    }
    result.loss_curve.push_back(loss_sum / static_cast<double>(sink_count));
  }
  return result;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.trees.empty()) throw ValidationError("cannot train on an empty dataset");
  const Vocabulary& vocab = Vocabulary::builtin();
  if (dataset.vocab_version != vocab.version()) {
    throw VocabMismatch("dataset vocabulary '" + dataset.vocab_version + "' does not match '" + vocab.version() +
                          "'");
  }
  return train_prepared(prepare_examples(dataset, config.prepare_options(), vocab), dataset.classes, config);
}

}  // namespace iotyper
