// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation over small dense matrices.
//
// A Tape records one forward computation as a topologically ordered list of
// entries. Parameters live in a ParameterStore that the tape only reads
// during the forward pass; backward() accumulates into the store's gradient
// buffers. Entries that are consumed more than once (shared sink nodes,
// reused weights) accumulate gradient with +=.

#ifndef IOTYPER_AUTODIFF_HPP
#define IOTYPER_AUTODIFF_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iotyper/tensor.hpp"

namespace iotyper::ad {

class ParameterStore {
 public:
  /// Registers a parameter. Throws std::invalid_argument on a duplicate name.
  std::size_t add(std::string name, Matrix init);

  std::size_t size() const noexcept { return values_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;
  const std::string& name(std::size_t i) const { return names_[i]; }

  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  Matrix& value(std::string_view n) { return values_[index(n)]; }
  const Matrix& value(std::string_view n) const { return values_[index(n)]; }

  Matrix& grad(std::size_t i) { return grads_[i]; }
  const Matrix& grad(std::size_t i) const { return grads_[i]; }
  const Matrix& grad(std::string_view n) const { return grads_[index(n)]; }

  void zero_grad();
  std::size_t scalar_count() const;

  /// `{"format_version":1,"params":{name:{"shape":[r,c],"data":[...]}}}`
  nlohmann::ordered_json to_json() const;
  static ParameterStore from_json(const nlohmann::ordered_json& j);

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<Matrix> grads_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

/// Handle to a tape entry.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const noexcept { return id != UINT32_MAX; }
};

enum class OpKind : std::uint8_t {
  Constant,
  Param,
  MatVec,
  Add,
  Hadamard,
  Sigmoid,
  Tanh,
  Relu,
  SumList,
  EmbedLookup,
  SoftmaxCrossEntropy,
  Sum,
  Scale,
};

std::string_view op_name(OpKind op) noexcept;

class Tape {
 public:
  explicit Tape(const ParameterStore& params) : params_(&params) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Matrix value);
  /// Leaf for a stored parameter. Repeated calls return the same entry.
  Var param(std::size_t index);
  Var param(std::string_view name) { return param(params_->index(name)); }

  Var matvec(Var w, Var x);
  Var add(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var sigmoid(Var x);
  Var tanh(Var x);
  /// max(x, 0). The derivative at exactly 0 is taken as 1.
  Var relu(Var x);
  /// Elementwise sum of equally shaped vectors. An empty list yields zeros(rows).
  Var sum_list(std::span<const Var> xs, std::size_t rows);
  /// Row `row` of L as a column vector.
  Var embed_lookup(Var table, std::size_t row);
  /// -log softmax(logits)[target], as a 1x1 tensor.
  Var softmax_cross_entropy(Var logits, std::size_t target);
  /// Sum of all entries, as a 1x1 tensor.
  Var sum(Var x);
  Var scale(Var x, double factor);

  const Matrix& value(Var v) const;
  /// Valid after backward(); zero-shaped for entries that received no gradient.
  const Matrix& grad(Var v) const { return entries_.at(v.id).grad; }

  /// Propagates d(loss)/d(entry) to every entry and adds parameter
  /// gradients into `store`. `loss` must be 1x1.
  void backward(Var loss, ParameterStore& store);

  std::size_t size() const noexcept { return entries_.size(); }
  OpKind op(Var v) const { return entries_.at(v.id).op; }
  /// Input ids of an entry, for topological-order checks.
  std::vector<std::uint32_t> inputs(Var v) const;

 private:
  struct Entry {
    OpKind op = OpKind::Constant;
    std::uint32_t a = UINT32_MAX;
    std::uint32_t b = UINT32_MAX;
    std::size_t aux = 0;  // param index, embedding row or target class
    double factor = 0.0;
    std::vector<std::uint32_t> list{};
    Matrix value{};  // unused for Param entries
    Matrix saved{};  // softmax probabilities for the loss op
    Matrix grad{};
  };

  Var push(Entry e);
  const Matrix& val(std::uint32_t id) const;
  Matrix& grad_buf(std::uint32_t id);

  const ParameterStore* params_;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> param_leaf_;  // param index -> entry id
};

/// Builds a scalar loss on the given tape from the current parameter values.
using LossFn = std::function<Var(Tape&)>;

/// Compares tape gradients to central differences on every parameter entry.
/// Returns the worst relative error |a-b| / max(|a|, |b|, 1e-6).
/// Parameter values are restored before returning.
double grad_check(const LossFn& loss_fn, ParameterStore& params, double eps);

}  // namespace iotyper::ad

#endif  // IOTYPER_AUTODIFF_HPP
