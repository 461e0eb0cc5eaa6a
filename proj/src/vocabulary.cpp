// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "iotyper/ast.hpp"
#include "iotyper/errors.hpp"

namespace iotyper {

namespace {

constexpr std::string_view kDefaultVocabText =
#include "default_vocab.inc"
    ;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Vocabulary::Vocabulary(std::string version, std::vector<std::string> tokens)
    : version_(std::move(version)), tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw ValidationError("vocabulary is empty");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ValidationError("vocabulary lists token '" + tokens_[i] + "' twice");
    }
  }
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::string version;
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view tag = "version:";
      const auto body = trim(line.substr(1));
      if (version.empty() && body.starts_with(tag)) version = std::string(trim(body.substr(tag.size())));
      continue;
    }
    tokens.emplace_back(line);
  }
  if (version.empty()) throw ValidationError("vocabulary file has no '# version:' header");
  return Vocabulary(std::move(version), std::move(tokens));
}

const Vocabulary& Vocabulary::builtin() {
  static const Vocabulary vocab = parse(kDefaultVocabText);
  return vocab;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t token_index(const Vocabulary& vocab, std::string_view kind, bool identifier) {
  if (identifier) return vocab.var_index();
  return vocab.find(kind).value_or(vocab.unk_index());
}

std::size_t token_index(const Vocabulary& vocab, const TreeNode& node) {
  return token_index(vocab, node.kind, node.is_identifier());
}

ClassSet::ClassSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ValidationError("class set is empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw ValidationError("class '" + names_[i] + "' listed twice");
    }
  }
}

const ClassSet& ClassSet::standard() {
  static const ClassSet classes({"int", "str", "float", "NoneType", "module", "tuple", "dict",
                                 "list", "set", "function", "bool", "bytes", "complex", "type",
                                 "object", "frozenset", "bytearray", "range", "slice",
                                 "generator", "method"});
  return classes;
}

std::optional<std::size_t> ClassSet::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace iotyper
