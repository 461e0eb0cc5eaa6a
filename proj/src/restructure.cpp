// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <stdexcept>

#include "iotyper/errors.hpp"
#include "iotyper/transforms.hpp"

namespace iotyper {

namespace {

constexpr std::array<std::string_view, 32> kStatementKinds = {
    "FunctionDef", "AsyncFunctionDef", "ClassDef", "Return",   "Delete",    "Assign", "AugAssign",
    "AnnAssign",   "For",              "AsyncFor", "While",    "If",        "With",   "AsyncWith",
    "Raise",       "Try",              "Assert",   "Import",   "ImportFrom", "Global", "Nonlocal",
    "Expr",        "Pass",             "Break",    "Continue", "Print",     "Exec",   "TryExcept",
    "TryFinally",  "IfTrue",           "Match",    "TypeAlias"};

constexpr std::array<std::string_view, 18> kBlockKinds = {
    "Module", "Interactive", "FunctionDef", "AsyncFunctionDef", "ClassDef", "For",
    "AsyncFor", "While", "If", "IfTrue", "With", "AsyncWith",
    "Try", "TryExcept", "TryFinally", "ExceptHandler", "Else", "Finally"};

class Restructurer {
 public:
  Restructurer(std::size_t k, int next_id) : k_(k), next_id_(next_id) {}

  TreeNode run(const TreeNode& n) {
    TreeNode out{n.id, n.kind, n.name, {}};
    std::vector<TreeNode> items(n.children.begin(), n.children.end());
    if (items.size() > k_) {
      if (!is_block_kind(n.kind)) {
        throw TransformError(n.kind + " node " + std::to_string(n.id) + " has " + std::to_string(items.size()) +
                             " children (max " + std::to_string(k_) + ") and is not a statement block");
      }
      while (items.size() > k_) {
        if (!compress_round(items)) {
          throw TransformError(n.kind + " node " + std::to_string(n.id) + ": non-statement children leave no room for " +
                               "statements within " + std::to_string(k_) + " children");
        }
      }
    }
    out.children.reserve(items.size());
    for (const auto& c : items) out.children.push_back(run(c));
    return out;
  }

 private:
  // One greedy pass: every run of >= 2 consecutive statements is cut into
  // chunks of K left to right and each chunk of >= 2 becomes an IfTrue.
  bool compress_round(std::vector<TreeNode>& items) {
    std::vector<TreeNode> out;
    bool progressed = false;
    std::size_t i = 0;
    while (i < items.size()) {
      if (!is_statement_kind(items[i].kind)) {
        out.push_back(std::move(items[i++]));
        continue;
      }
      std::size_t j = i;
      while (j < items.size() && is_statement_kind(items[j].kind)) ++j;
      if (j - i >= 2) progressed = true;
      for (std::size_t start = i; start < j; start += k_) {
        const std::size_t stop = std::min(start + k_, j);
        if (stop - start == 1) {
          out.push_back(std::move(items[start]));
          continue;
        }
        TreeNode block{next_id_++, std::string(kIfTrueKind), std::nullopt, {}};
        for (std::size_t s = start; s < stop; ++s) block.children.push_back(std::move(items[s]));
        out.push_back(std::move(block));
      }
      i = j;
    }
    items = std::move(out);
    return progressed;
  }

  std::size_t k_;
  int next_id_;
};

TreeNode truncate_impl(const TreeNode& n, std::size_t k) {
  TreeNode out{n.id, n.kind, n.name, {}};
  const std::size_t keep = std::min(k, n.children.size());
  out.children.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.children.push_back(truncate_impl(n.children[i], k));
  return out;
}

}  // namespace

bool is_statement_kind(std::string_view kind) {
  return std::find(kStatementKinds.begin(), kStatementKinds.end(), kind) != kStatementKinds.end();
}

bool is_block_kind(std::string_view kind) {
  return std::find(kBlockKinds.begin(), kBlockKinds.end(), kind) != kBlockKinds.end();
}

TreeNode restructure(const TreeNode& root, std::size_t max_children) {
  if (max_children < 2) throw std::invalid_argument("restructure: max_children must be at least 2");
  return Restructurer(max_children, max_node_id(root) + 1).run(root);
}

TreeNode truncate_children(const TreeNode& root, std::size_t max_children) {
  if (max_children < 1) throw std::invalid_argument("truncate_children: max_children must be positive");
  return truncate_impl(root, max_children);
}

}  // namespace iotyper
