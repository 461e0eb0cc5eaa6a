// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Inside-outside recursive models over an AugmentedTree.
//
// Inside states are computed bottom-up (sinks first, as VAR leaves), then
// outside states top-down: the root's outside state is its inside state,
// every other node combines its parent's outside state with its siblings'
// inside states. A sink has one parent per occurrence; each occurrence
// contributes as a parent and the contributions are summed by the cell's
// own multi-source sum. Logits for a sink are read from its outside state.

#ifndef IOTYPER_IORNN_HPP
#define IOTYPER_IORNN_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "iotyper/ast.hpp"
#include "iotyper/autodiff.hpp"
#include "iotyper/dataset_json.hpp"
#include "iotyper/transforms.hpp"

namespace iotyper {

enum class Variant { ChildSum, Nary };
/// Which state of a sibling feeds the N-ary outside cell.
enum class SiblingSource { Inside, Outside };
enum class HeadKind { Linear, TwoLayer };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);
std::string_view to_string(SiblingSource s);
SiblingSource sibling_source_from_string(std::string_view s);
std::string_view to_string(HeadKind h);
HeadKind head_from_string(std::string_view s);

struct ModelConfig {
  Variant variant = Variant::ChildSum;
  std::size_t d_input = 10;
  std::size_t d_hidden = 15;
  std::size_t max_children = 20;
  bool restructuring = true;
  HeadKind head = HeadKind::Linear;
  SiblingSource siblings = SiblingSource::Inside;
  ClassSet classes = ClassSet::standard();
  std::string vocab_version = Vocabulary::builtin().version();
  std::size_t vocab_rows = Vocabulary::builtin().embedding_rows();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameter indices of the Child-Sum Tree-LSTM cell. Gate order is
/// input, forget, output, update.
struct ChildSumParams {
  enum Gate { kInput = 0, kForget = 1, kOutput = 2, kUpdate = 3 };
  std::size_t embedding;
  std::array<std::size_t, 4> in_w, in_u, in_b;
  std::array<std::size_t, 4> out_u, out_b;

  static ChildSumParams bind(const ad::ParameterStore& store);
};

/// Parameter indices of the N-ary RNN cell, one U per child position.
struct NaryParams {
  std::size_t embedding;
  std::size_t in_w;
  std::vector<std::size_t> in_uh, in_uc;
  std::size_t out_w;
  std::vector<std::size_t> out_uh, out_uc;

  static NaryParams bind(const ad::ParameterStore& store, std::size_t max_children);
};

struct HeadParams {
  std::size_t w, b;
  std::size_t hidden_w = SIZE_MAX, hidden_b = SIZE_MAX;

  static HeadParams bind(const ad::ParameterStore& store, HeadKind kind);
};

/// Tape handles for every graph node, indexed like AugmentedTree::nodes().
struct NodeStates {
  std::vector<ad::Var> inside_h, inside_c, outside_h, outside_c;

  explicit NodeStates(std::size_t n) : inside_h(n), inside_c(n), outside_h(n), outside_c(n) {}
};

void inside_pass_childsum(const AugmentedTree& tree, const ChildSumParams& p, std::size_t d_hidden, ad::Tape& tape,
                          NodeStates& states);
void outside_pass_childsum(const AugmentedTree& tree, const ChildSumParams& p, std::size_t d_hidden, ad::Tape& tape,
                           NodeStates& states);
void inside_pass_nary(const AugmentedTree& tree, const NaryParams& p, std::size_t d_hidden, ad::Tape& tape,
                      NodeStates& states);
void outside_pass_nary(const AugmentedTree& tree, const NaryParams& p, std::size_t d_hidden, SiblingSource siblings,
                       ad::Tape& tape, NodeStates& states);

/// logits = relu(W_c h + b_c), or with a hidden ReLU layer for TwoLayer.
ad::Var classify(const HeadParams& head, ad::Var outside_h, ad::Tape& tape);

struct ForwardResult {
  NodeStates states;
  /// One entry per sink, in AugmentedTree::sinks() order.
  std::vector<ad::Var> logits;
};

class Model {
 public:
  Model(ModelConfig config, ad::ParameterStore params);

  /// Fresh parameters: uniform(-r, r), r = sqrt(6 / (fan_in + fan_out)),
  /// for weight matrices and the embedding; zero biases; zero classifier
  /// head so every class starts equally likely.
  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const ad::ParameterStore& params() const noexcept { return params_; }
  ad::ParameterStore& params() noexcept { return params_; }

  /// Inside pass, outside pass, then the head on every sink.
  ForwardResult forward(const AugmentedTree& tree, ad::Tape& tape) const;
  /// Mean cross-entropy over labeled sinks; invalid Var if none is labeled.
  ad::Var loss(const AugmentedTree& tree, const ForwardResult& fwd, ad::Tape& tape) const;

  /// Logit values for every sink, forward only.
  std::vector<std::vector<double>> predict(const AugmentedTree& tree) const;

  Json to_json() const;
  std::string serialize() const;
  static Model from_json(const Json& j);
  static Model parse(std::string_view text);

 private:
  ModelConfig config_;
  ad::ParameterStore params_;
  ChildSumParams childsum_{};
  NaryParams nary_{};
  HeadParams head_{};
};

}  // namespace iotyper

#endif  // IOTYPER_IORNN_HPP
