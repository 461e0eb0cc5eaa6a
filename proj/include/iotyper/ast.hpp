// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Tree, vocabulary and label model shared by every stage of the pipeline.

#ifndef IOTYPER_AST_HPP
#define IOTYPER_AST_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iotyper {

/// Kind string carried by identifier nodes.
inline constexpr std::string_view kNameKind = "Name";

struct TreeNode {
  int id = 0;
  std::string kind;
  /// Present iff kind == "Name".
  std::optional<std::string> name;
  std::vector<TreeNode> children;

  bool is_identifier() const noexcept { return kind == kNameKind; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Pre-order walk. The visitor receives the node and its depth.
void walk_preorder(const TreeNode& root, const std::function<void(const TreeNode&, int)>& visit);
std::size_t count_nodes(const TreeNode& root);
int max_node_id(const TreeNode& root);
std::size_t max_fanout(const TreeNode& root);

struct TreeViolation {
  int node_id;
  std::string rule;  // "duplicate-id", "name-without-identifier", "identifier-on-non-name", "empty-kind"
  std::string message;

  friend bool operator==(const TreeViolation&, const TreeViolation&) = default;
};

/// Checks TreeNode invariants. Empty result means the tree is well formed.
std::vector<TreeViolation> validate_tree(const TreeNode& root);

class Vocabulary {
 public:
  Vocabulary(std::string version, std::vector<std::string> tokens);

  /// Parses the text format: `# version: <v>` header, `#` comments, one
  /// token per line.
  static Vocabulary parse(std::string_view text);
  /// The vocabulary compiled from data/vocab.txt.
  static const Vocabulary& builtin();

  const std::string& version() const noexcept { return version_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  /// |V|, the number of listed tokens.
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t unk_index() const noexcept { return tokens_.size(); }
  std::size_t var_index() const noexcept { return tokens_.size() + 1; }
  /// Rows of the embedding matrix, |V| + 2.
  std::size_t embedding_rows() const noexcept { return tokens_.size() + 2; }
  std::optional<std::size_t> find(std::string_view token) const;

 private:
  std::string version_;
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Embedding row for a node: its vocabulary position, |V|+1 for
/// identifiers, |V| for kinds outside the vocabulary.
std::size_t token_index(const Vocabulary& vocab, const TreeNode& node);
std::size_t token_index(const Vocabulary& vocab, std::string_view kind, bool identifier);

/// Ordered set of type-class names; index i is class i.
class ClassSet {
 public:
  explicit ClassSet(std::vector<std::string> names);
  /// int, str, float, NoneType, module, tuple, dict, list, set, function,
  /// bool, bytes, complex, type, object, frozenset, bytearray, range,
  /// slice, generator, method.
  static const ClassSet& standard();

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> find(std::string_view name) const;

  friend bool operator==(const ClassSet& a, const ClassSet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Label {
  std::string scope;
  std::string name;
  std::size_t type = 0;  // index into the dataset's ClassSet

  friend bool operator==(const Label&, const Label&) = default;
};

struct LabeledTree {
  std::string path;
  TreeNode root;
  std::vector<Label> labels;

  friend bool operator==(const LabeledTree&, const LabeledTree&) = default;
};

struct Dataset {
  ClassSet classes = ClassSet::standard();
  std::string vocab_version = Vocabulary::builtin().version();
  std::vector<LabeledTree> trees;

  std::size_t label_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace iotyper

#endif  // IOTYPER_AST_HPP
