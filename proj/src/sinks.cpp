// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <functional>

#include "iotyper/errors.hpp"
#include "iotyper/transforms.hpp"

namespace iotyper {

AugmentedTree::AugmentedTree(TreeNode root, std::vector<SinkNode> sinks, const Vocabulary& vocab)
    : root_(std::move(root)), sinks_(std::move(sinks)) {
  // Flatten in pre-order with an explicit stack; children are pushed in
  // reverse so they pop left to right.
  struct Frame {
    const TreeNode* node;
    std::uint32_t parent;
  };
  std::vector<Frame> stack{{&root_, UINT32_MAX}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    GraphNode g;
    g.node_id = f.node->id;
    g.token = token_index(vocab, *f.node);
    if (f.parent != UINT32_MAX) {
      g.parents.push_back(f.parent);
      nodes_[f.parent].children.push_back(idx);
    }
    nodes_.push_back(std::move(g));
    if (!by_id_.emplace(f.node->id, idx).second) {
      throw ValidationError("duplicate node id " + std::to_string(f.node->id));
    }
    for (auto it = f.node->children.rbegin(); it != f.node->children.rend(); ++it) stack.push_back({&*it, idx});
  }
  tree_nodes_ = nodes_.size();

  for (std::size_t s = 0; s < sinks_.size(); ++s) {
    const auto sidx = static_cast<std::uint32_t>(nodes_.size());
    GraphNode g;
    g.node_id = sinks_[s].sink_id;
    g.token = vocab.var_index();
    g.is_sink = true;
    if (!by_id_.emplace(g.node_id, sidx).second) {
      throw ValidationError("sink id " + std::to_string(g.node_id) + " collides with a node id");
    }
    for (int occ : sinks_[s].occurrences) {
      auto it = by_id_.find(occ);
      if (it == by_id_.end() || it->second >= tree_nodes_) {
        throw ValidationError("sink occurrence " + std::to_string(occ) + " is not a tree node");
      }
      g.parents.push_back(it->second);
    }
    nodes_.push_back(std::move(g));
    for (std::uint32_t p : nodes_[sidx].parents) nodes_[p].children.push_back(sidx);
  }

  postorder_.reserve(tree_nodes_);
  std::vector<std::pair<std::uint32_t, std::size_t>> walk{{0u, 0u}};
  while (!walk.empty()) {
    auto& [node, next] = walk.back();
    const auto& ch = nodes_[node].children;
    while (next < ch.size() && nodes_[ch[next]].is_sink) ++next;
    if (next < ch.size()) {
      const std::uint32_t c = ch[next++];
      walk.emplace_back(c, 0u);
    } else {
      postorder_.push_back(node);
      walk.pop_back();
    }
  }
}

std::optional<std::uint32_t> AugmentedTree::index_of(int node_id) const {
  auto it = by_id_.find(node_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

TreeNode AugmentedTree::detach_sinks() const {
  std::function<TreeNode(const TreeNode&, std::uint32_t)> rebuild = [&](const TreeNode& src, std::uint32_t i) {
    TreeNode n{src.id, src.kind, src.name, {}};
    std::size_t k = 0;
    for (std::uint32_t c : nodes_[i].children) {
      if (nodes_[c].is_sink) continue;
      n.children.push_back(rebuild(src.children.at(k++), c));
    }
    return n;
  };
  return rebuild(root_, 0);
}

AugmentedTree add_sink_nodes(const TreeNode& root, const ScopeTable& scopes, const Vocabulary& vocab) {
  std::vector<SinkNode> sinks;
  sinks.reserve(scopes.size());
  int next_id = max_node_id(root) + 1;
  for (const auto& entry : scopes.entries()) {
    sinks.push_back({next_id++, entry.key, entry.occurrences, std::nullopt});
  }
  return AugmentedTree(root, std::move(sinks), vocab);
}

std::vector<Label> attach_labels(AugmentedTree& tree, const std::vector<Label>& labels) {
  std::map<ScopeKey, std::size_t> by_owner;
  for (std::size_t s = 0; s < tree.sinks().size(); ++s) by_owner.emplace(tree.sinks()[s].owner, s);
  std::vector<Label> unmatched;
  for (const auto& l : labels) {
    auto it = by_owner.find(ScopeKey{l.scope, l.name});
    if (it == by_owner.end()) {
      unmatched.push_back(l);
    } else {
      tree.sinks()[it->second].label = l.type;
    }
  }
  return unmatched;
}

PreparedTree prepare_tree(const TreeNode& root, const std::vector<Label>& labels, const PrepareOptions& options,
                          const Vocabulary& vocab) {
  TreeNode shaped = options.restructure ? restructure(root, options.max_children)
                    : options.truncate  ? truncate_children(root, options.max_children)
                                        : root;
  const ScopeTable scopes = resolve_scopes(shaped);
  AugmentedTree tree = add_sink_nodes(shaped, scopes, vocab);
  auto dropped = attach_labels(tree, labels);
  return {std::move(tree), std::move(dropped)};
}

}  // namespace iotyper
