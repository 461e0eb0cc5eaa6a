// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include "properties.hpp"

#include <algorithm>
#include <functional>

namespace iotyper::testing {

TreeNode unwrap_synthetic_blocks(const TreeNode& root) {
  TreeNode out = root;
  out.children.clear();
  for (const auto& c : root.children) {
    TreeNode u = unwrap_synthetic_blocks(c);
    if (c.kind == kIfTrueKind) {
      for (auto& g : u.children) out.children.push_back(std::move(g));
    } else {
      out.children.push_back(std::move(u));
    }
  }
  return out;
}

std::map<ScopeKey, std::vector<int>> resolution(const TreeNode& root) {
  std::map<ScopeKey, std::vector<int>> out;
  const ScopeTable table = resolve_scopes(root);
  for (const auto& e : table.entries()) {
    auto occ = e.occurrences;
    std::sort(occ.begin(), occ.end());
    out[e.key] = occ;
  }
  return out;
}

std::string restructure_violation(const TreeNode& root, std::size_t k) {
  const std::string where = " at K=" + std::to_string(k);
  const TreeNode r = restructure(root, k);
  if (max_fanout(r) > k) return "fan-out " + std::to_string(max_fanout(r)) + where;
  if (!validate_tree(r).empty()) return "invalid tree" + where;

  // Removing the synthetic blocks must give back the input exactly, which
  // pins both the statement sequence and every subtree.
  if (!(unwrap_synthetic_blocks(r) == root)) return "statement order or content changed" + where;
  std::vector<int> before, after;
  walk_preorder(root, [&](const TreeNode& n, int) {
    if (is_statement_kind(n.kind)) before.push_back(n.id);
  });
  walk_preorder(r, [&](const TreeNode& n, int) {
    if (is_statement_kind(n.kind) && n.kind != kIfTrueKind) after.push_back(n.id);
  });
  if (before != after) return "statement sequence changed" + where;

  if (resolution(r) != resolution(root)) return "name resolution changed" + where;
  if (!(restructure(r, k) == r)) return "not idempotent" + where;
  return "";
}

}  // namespace iotyper::testing
