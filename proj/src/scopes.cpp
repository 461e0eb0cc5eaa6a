// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "iotyper/errors.hpp"
#include "iotyper/transforms.hpp"

namespace iotyper {

const ScopeTable::Entry* ScopeTable::find(const ScopeKey& key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &entries_[it->second];
}

const ScopeKey* ScopeTable::key_of(int node_id) const {
  auto it = by_node_.find(node_id);
  return it == by_node_.end() ? nullptr : &entries_[it->second].key;
}

void ScopeTable::add_occurrence(ScopeKey key, int node_id) {
  auto [it, inserted] = by_key_.try_emplace(key, entries_.size());
  if (inserted) entries_.push_back({std::move(key), {}});
  entries_[it->second].occurrences.push_back(node_id);
  by_node_[node_id] = it->second;
}

namespace {

bool is_function(std::string_view kind) { return kind == "FunctionDef" || kind == "AsyncFunctionDef"; }

class Resolver {
 public:
  ScopeTable run(const TreeNode& root) {
    scopes_.push_back({std::string(kModuleScope), -1, {}});
    visit(root, 0);

    ScopeTable table;
    for (const auto& occ : occurrences_) {
      int s = occ.home;
      while (s > 0 && !scopes_[s].bound.contains(occ.name)) s = scopes_[s].parent;
      table.add_occurrence({scopes_[s].path, occ.name}, occ.node_id);
    }
    return table;
  }

 private:
  struct Scope {
    std::string path;
    int parent;
    std::set<std::string> bound;
  };
  struct Occurrence {
    int node_id;
    std::string name;
    int home;
  };

  void bind_target(const TreeNode& target, int scope) {
    if (target.is_identifier()) {
      scopes_[scope].bound.insert(*target.name);
    } else if (target.kind == "Tuple" || target.kind == "List" || target.kind == "Starred") {
      for (const auto& c : target.children) bind_target(c, scope);
    }
  }

  void bind_children(const TreeNode& n, int scope) {
    const auto& ch = n.children;
    if (ch.empty()) return;
    const std::string& k = n.kind;
    if (k == "Assign") {
      for (std::size_t i = 0; i + 1 < ch.size(); ++i) bind_target(ch[i], scope);
    } else if (k == "AugAssign" || k == "AnnAssign" || k == "For" || k == "AsyncFor" || k == "comprehension" ||
               k == "ClassDef") {
      bind_target(ch[0], scope);
    } else if (k == "withitem") {
      if (ch.size() > 1) bind_target(ch[1], scope);
    } else if (k == "arguments" || k == "alias") {
      for (const auto& c : ch) {
        if (c.is_identifier()) bind_target(c, scope);
      }
    } else if (k == "Delete") {
      for (const auto& c : ch) bind_target(c, scope);
    }
  }

  void visit(const TreeNode& n, int scope) {
    if (n.kind == "Global" || n.kind == "Nonlocal") {
      throw UnsupportedConstruct("node " + std::to_string(n.id) + ": '" + n.kind +
                                 "' statements are not supported by the scope model");
    }
    if (n.is_identifier()) {
      occurrences_.push_back({n.id, *n.name, scope});
      for (const auto& c : n.children) visit(c, scope);
      return;
    }
    if (is_function(n.kind)) {
      if (n.children.empty() || !n.children[0].is_identifier()) {
        throw TransformError(n.kind + " node " + std::to_string(n.id) + " must start with a Name child");
      }
      const std::string& fname = *n.children[0].name;
      scopes_[scope].bound.insert(fname);
      occurrences_.push_back({n.children[0].id, fname, scope});
      const int inner = static_cast<int>(scopes_.size());
      scopes_.push_back({scopes_[scope].path + "::" + fname, scope, {}});
      for (std::size_t i = 1; i < n.children.size(); ++i) visit(n.children[i], inner);
      return;
    }
    bind_children(n, scope);
    for (const auto& c : n.children) visit(c, scope);
  }

  std::vector<Scope> scopes_;
  std::vector<Occurrence> occurrences_;
};

}  // namespace

ScopeTable resolve_scopes(const TreeNode& root) { return Resolver{}.run(root); }

}  // namespace iotyper
