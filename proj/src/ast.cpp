// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include "iotyper/ast.hpp"

#include <algorithm>
#include <set>

namespace iotyper {

namespace {

void walk_impl(const TreeNode& node, int depth, const std::function<void(const TreeNode&, int)>& visit) {
  visit(node, depth);
  for (const auto& child : node.children) walk_impl(child, depth + 1, visit);
}

}  // namespace

void walk_preorder(const TreeNode& root, const std::function<void(const TreeNode&, int)>& visit) {
  walk_impl(root, 0, visit);
}

std::size_t count_nodes(const TreeNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += count_nodes(c);
  return n;
}

int max_node_id(const TreeNode& root) {
  int m = root.id;
  for (const auto& c : root.children) m = std::max(m, max_node_id(c));
  return m;
}

std::size_t max_fanout(const TreeNode& root) {
  std::size_t m = root.children.size();
  for (const auto& c : root.children) m = std::max(m, max_fanout(c));
  return m;
}

std::vector<TreeViolation> validate_tree(const TreeNode& root) {
  std::vector<TreeViolation> out;
  std::set<int> seen;
  std::set<int> reported;
  walk_preorder(root, [&](const TreeNode& n, int) {
    if (!seen.insert(n.id).second && reported.insert(n.id).second) {
      out.push_back({n.id, "duplicate-id", "node id " + std::to_string(n.id) + " is used more than once"});
    }
    if (n.kind.empty()) {
      out.push_back({n.id, "empty-kind", "node " + std::to_string(n.id) + " has an empty kind"});
    }
    if (n.is_identifier() && !n.name) {
      out.push_back({n.id, "name-without-identifier",
                     "Name node " + std::to_string(n.id) + " has no identifier"});
    }
    if (!n.is_identifier() && n.name) {
      out.push_back({n.id, "identifier-on-non-name",
                     n.kind + " node " + std::to_string(n.id) + " carries identifier '" + *n.name + "'"});
    }
  });
  return out;
}

std::size_t Dataset::label_count() const {
  std::size_t n = 0;
  for (const auto& t : trees) n += t.labels.size();
  return n;
}

}  // namespace iotyper
