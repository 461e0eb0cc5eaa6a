// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "iotyper/errors.hpp"
#include "iotyper/rng.hpp"
#include "iotyper/training.hpp"

namespace iotyper {

Metrics::Metrics(std::size_t classes)
    : num_classes(classes), hits(classes, 0), confusion(classes, std::vector<std::size_t>(classes, 0)) {}

double Metrics::topk(std::size_t k) const {
  if (total == 0 || k == 0) return 0.0;
  k = std::min(k, num_classes);
  return static_cast<double>(hits[k - 1]) / static_cast<double>(total);
}

std::size_t rank_of(std::size_t truth, std::span<const double> scores) {
  const double target = scores[truth];
  std::size_t rank = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > target || (scores[j] == target && j < truth)) ++rank;
  }
  return rank;
}

void Metrics::record(std::size_t truth, std::span<const double> scores) {
  const std::size_t r = rank_of(truth, scores);
  for (std::size_t k = r; k < num_classes; ++k) ++hits[k];
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  ++confusion[truth][best];
  ++total;
}

void Metrics::merge(const Metrics& other) {
  if (other.num_classes != num_classes) throw std::invalid_argument("Metrics::merge: class counts differ");
  total += other.total;
  for (std::size_t k = 0; k < num_classes; ++k) hits[k] += other.hits[k];
  for (std::size_t a = 0; a < num_classes; ++a) {
    for (std::size_t b = 0; b < num_classes; ++b) confusion[a][b] += other.confusion[a][b];
  }
}

Json Metrics::topk_json(std::size_t max_k) const {
  Json j = Json::object();
  for (std::size_t k = 1; k <= max_k; ++k) j[std::to_string(k)] = topk(k);
  return j;
}

namespace {

Metrics score_example(const Model& model, const PreparedExample& ex) {
  const std::size_t classes = model.config().classes.size();
  Metrics m(classes);
  const AugmentedTree& tree = ex.prepared.tree;
  if (ex.labeled_sinks > 0) {
    const auto logits = model.predict(tree);
    for (std::size_t s = 0; s < tree.sinks().size(); ++s) {
      if (auto label = tree.sinks()[s].label) m.record(*label, logits[s]);
    }
  }
  const std::vector<double> unseen(classes, 0.0);
  for (const auto& l : ex.prepared.dropped_labels) m.record(l.type, unseen);
  return m;
}

}  // namespace

Metrics evaluate_topk_serial(const Model& model, const std::vector<PreparedExample>& examples) {
  Metrics total(model.config().classes.size());
  for (const auto& ex : examples) total.merge(score_example(model, ex));
  return total;
}

Metrics evaluate_topk(const Model& model, const std::vector<PreparedExample>& examples) {
  std::vector<Metrics> per_tree(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) per_tree[i] = score_example(model, examples[i]);
  // Merge in index order.
  Metrics total(model.config().classes.size());
  for (const auto& m : per_tree) total.merge(m);
  return total;
}

Metrics evaluate_topk(const Model& model, const Dataset& dataset) {
  const ModelConfig& c = model.config();
  if (dataset.vocab_version != c.vocab_version) {
    throw VocabMismatch("dataset vocabulary '" + dataset.vocab_version + "' does not match the model's '" +
                        c.vocab_version + "'");
  }
  if (!(dataset.classes == c.classes)) throw ValidationError("dataset class set differs from the model's");
  TrainConfig tc;
  tc.variant = c.variant;
  tc.max_children = c.max_children;
  tc.restructuring = c.restructuring;
  return evaluate_topk(model, prepare_examples(dataset, tc.prepare_options()));
}

std::vector<std::vector<std::vector<double>>> predict_batch_serial(const Model& model,
                                                                   const std::vector<PreparedExample>& examples) {
  std::vector<std::vector<std::vector<double>>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(model.predict(ex.prepared.tree));
  return out;
}

std::vector<std::vector<std::vector<double>>> predict_batch(const Model& model,
                                                            const std::vector<PreparedExample>& examples) {
  std::vector<std::vector<std::vector<double>>> out(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = model.predict(examples[i].prepared.tree);
  return out;
}

Metrics baseline_random(std::span<const std::size_t> truths, std::size_t num_classes, std::uint64_t seed) {
  Metrics m(num_classes);
  Rng rng(seed);
  std::vector<std::size_t> order(num_classes);
  std::vector<double> scores(num_classes);
  for (std::size_t truth : truths) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    // order[0] is the top prediction.
    for (std::size_t pos = 0; pos < num_classes; ++pos) scores[order[pos]] = static_cast<double>(num_classes - pos);
    m.record(truth, scores);
  }
  return m;
}

Metrics baseline_majority(std::span<const std::size_t> train, std::span<const std::size_t> test,
                          std::size_t num_classes) {
  if (train.empty()) throw std::invalid_argument("majority baseline needs at least one training label");
  std::vector<double> freq(num_classes, 0.0);
  for (std::size_t c : train) freq.at(c) += 1.0;
  Metrics m(num_classes);
  for (std::size_t truth : test) m.record(truth, freq);
  return m;
}

std::vector<std::size_t> label_classes(const Dataset& dataset) {
  std::vector<std::size_t> out;
  for (const auto& t : dataset.trees) {
    for (const auto& l : t.labels) out.push_back(l.type);
  }
  return out;
}

std::vector<Fold> kfold_split(std::size_t num_trees, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be at least 2");
  if (num_trees < k) {
    throw std::invalid_argument("kfold_split: " + std::to_string(num_trees) + " trees cannot fill " +
                                std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(num_trees);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Fold> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = num_trees / k + (f < num_trees % k ? 1 : 0);
    folds[f].validation.assign(order.begin() + pos, order.begin() + pos + size);
    std::sort(folds[f].validation.begin(), folds[f].validation.end());
    pos += size;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].validation.begin(), folds[g].validation.end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

Fold train_test_split(std::size_t num_trees, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must be in (0, 1)");
  std::vector<std::size_t> order(num_trees);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  auto n_test = static_cast<std::size_t>(static_cast<double>(num_trees) * test_fraction + 0.5);
  if (num_trees >= 2) n_test = std::clamp<std::size_t>(n_test, 1, num_trees - 1);
  Fold f;
  f.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  f.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(f.train.begin(), f.train.end());
  std::sort(f.validation.begin(), f.validation.end());
  return f;
}

Fold split_from_json(const Dataset& dataset, const Json& j) {
  std::map<std::string, std::size_t> by_path;
  for (std::size_t i = 0; i < dataset.trees.size(); ++i) by_path.emplace(dataset.trees[i].path, i);
  auto resolve = [&](const char* key) {
    std::vector<std::size_t> out;
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw ValidationError(std::string("split file: missing array \"") + key + "\"");
    }
    for (const auto& p : j.at(key)) {
      auto it = by_path.find(p.get<std::string>());
      if (it == by_path.end()) throw ValidationError("split file names unknown tree '" + p.get<std::string>() + "'");
      out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return {resolve("train"), resolve("test")};
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
  Dataset out;
  out.classes = dataset.classes;
  out.vocab_version = dataset.vocab_version;
  out.trees.reserve(indices.size());
  for (std::size_t i : indices) out.trees.push_back(dataset.trees.at(i));
  return out;
}

}  // namespace iotyper
