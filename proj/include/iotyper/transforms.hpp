// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Static passes applied to a tree before the model sees it:
//
//  * scope resolution: which (scope, identifier) each Name node refers to;
//  * restructuring: statement blocks wider than K are split into nested
//    synthetic `if True:` blocks (kind "IfTrue") so no node exceeds K
//    children;
//  * sink insertion: one shared VAR node per (scope, identifier), attached
//    as the last child of every occurrence. Sinks are the prediction
//    targets.

#ifndef IOTYPER_TRANSFORMS_HPP
#define IOTYPER_TRANSFORMS_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotyper/ast.hpp"

namespace iotyper {

inline constexpr std::string_view kModuleScope = "<module>";
inline constexpr std::string_view kIfTrueKind = "IfTrue";

struct ScopeKey {
  std::string scope;
  std::string name;

  auto operator<=>(const ScopeKey&) const = default;
  bool operator==(const ScopeKey&) const = default;
};

class ScopeTable {
 public:
  struct Entry {
    ScopeKey key;
    std::vector<int> occurrences;  // Name node ids, pre-order
  };

  /// Entries in order of first occurrence (pre-order).
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const Entry* find(const ScopeKey& key) const;
  /// Key of the Name node `node_id`, if it is one.
  const ScopeKey* key_of(int node_id) const;

  void add_occurrence(ScopeKey key, int node_id);

 private:
  std::vector<Entry> entries_;
  std::map<ScopeKey, std::size_t> by_key_;
  std::map<int, std::size_t> by_node_;
};

/// Assigns every Name occurrence to a (scope, name) key.
///
/// FunctionDef/AsyncFunctionDef open a scope named after their first child
/// (a Name node, bound in the enclosing scope); scope paths are
/// "<module>", "<module>::f", "<module>::f::g". A name bound anywhere in a
/// function body (assignment target, loop target, parameter, import alias,
/// nested def) is local to that function. Other names resolve to the
/// nearest enclosing function that binds them, else to "<module>".
/// `global`/`nonlocal` statements throw UnsupportedConstruct.
ScopeTable resolve_scopes(const TreeNode& root);

bool is_statement_kind(std::string_view kind);
bool is_block_kind(std::string_view kind);

/// Bounds every node to at most `max_children` children by wrapping runs
/// of consecutive statements in IfTrue nodes, greedily in chunks of K,
/// repeating until the bound holds. A trailing single statement stays
/// unwrapped. New nodes take ids above the current maximum.
/// Throws TransformError if a non-block node has more than K children or a
/// block's non-statement children leave no room. Requires K >= 2.
TreeNode restructure(const TreeNode& root, std::size_t max_children);

/// Keeps only the first `max_children` children of every node.
TreeNode truncate_children(const TreeNode& root, std::size_t max_children);

struct SinkNode {
  int sink_id = 0;
  ScopeKey owner;
  std::vector<int> occurrences;
  /// Class index when the owner is labeled.
  std::optional<std::size_t> label;
};

/// One node of the flattened DAG used by the models. Tree nodes come first
/// in pre-order (index 0 is the root), followed by the sinks.
struct GraphNode {
  int node_id = 0;
  std::size_t token = 0;
  bool is_sink = false;
  std::vector<std::uint32_t> children;
  /// One entry for tree nodes (none for the root), one per occurrence for sinks.
  std::vector<std::uint32_t> parents;
};

class AugmentedTree {
 public:
  AugmentedTree(TreeNode root, std::vector<SinkNode> sinks, const Vocabulary& vocab);

  const TreeNode& root() const noexcept { return root_; }
  const std::vector<SinkNode>& sinks() const noexcept { return sinks_; }
  std::vector<SinkNode>& sinks() noexcept { return sinks_; }
  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  std::size_t tree_node_count() const noexcept { return tree_nodes_; }
  std::uint32_t sink_node(std::size_t sink) const { return static_cast<std::uint32_t>(tree_nodes_ + sink); }
  /// Tree nodes in post-order (children before parents, left to right).
  const std::vector<std::uint32_t>& postorder() const noexcept { return postorder_; }
  std::optional<std::uint32_t> index_of(int node_id) const;

  /// Rebuilds the tree from the graph with every sink edge removed.
  TreeNode detach_sinks() const;

 private:
  TreeNode root_;
  std::vector<SinkNode> sinks_;
  std::vector<GraphNode> nodes_;
  std::size_t tree_nodes_ = 0;
  std::vector<std::uint32_t> postorder_;
  std::map<int, std::uint32_t> by_id_;
};

/// One sink per scope-table entry, ordered by first occurrence, ids
/// starting above the tree's largest node id.
AugmentedTree add_sink_nodes(const TreeNode& root, const ScopeTable& scopes, const Vocabulary& vocab);

/// Sets SinkNode::label from (scope, name, class) labels. Labels with no
/// matching sink are returned.
std::vector<Label> attach_labels(AugmentedTree& tree, const std::vector<Label>& labels);

struct PrepareOptions {
  std::size_t max_children = 20;
  bool restructure = true;
  /// Only consulted when restructure is off: truncate wide nodes to K
  /// children (the N-ary model cannot take more).
  bool truncate = false;
};

struct PreparedTree {
  AugmentedTree tree;
  /// Labels whose identifier no longer occurs (dropped by truncation).
  std::vector<Label> dropped_labels;
};

/// restructure-or-truncate, resolve scopes, attach sinks and labels.
PreparedTree prepare_tree(const TreeNode& root, const std::vector<Label>& labels, const PrepareOptions& options,
                           const Vocabulary& vocab);

}  // namespace iotyper

#endif  // IOTYPER_TRANSFORMS_HPP
