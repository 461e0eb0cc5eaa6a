// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef IOTYPER_ERRORS_HPP
#define IOTYPER_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iotyper {

/// Malformed JSON input. `offset` is the byte position reported by the parser.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input that violates a schema or data-model rule.
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model, dataset or AST built against a different vocabulary.
class VocabMismatch : public ValidationError {
  using ValidationError::ValidationError;
};

/// Shape mismatch between operands of a differentiable op.
class ShapeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN or Inf produced by an op, or a diverged training run.
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A tree cannot be transformed under the requested settings.
class TransformError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Source construct the scope model does not handle (`global`, `nonlocal`).
class UnsupportedConstruct : public TransformError {
  using TransformError::TransformError;
};

/// Evaluation order was violated inside a model pass.
class OrderingError : public std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace iotyper

#endif  // IOTYPER_ERRORS_HPP
