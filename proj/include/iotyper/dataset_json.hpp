// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// JSON wire format for trees and labeled datasets:
//
//   {"classes":[...], "vocab_version":"...",
//    "trees":[{"path":"...", "root":NODE,
//              "labels":[{"scope":"...","name":"...","type":"..."}]}]}
//   NODE = {"id":int, "kind":"...", "name":"..."?, "children":[NODE...]}

#ifndef IOTYPER_DATASET_JSON_HPP
#define IOTYPER_DATASET_JSON_HPP

#include <string>
#include <string_view>

#include <json.hpp>

#include "iotyper/ast.hpp"

namespace iotyper {

using Json = nlohmann::ordered_json;

Json node_to_json(const TreeNode& node);
/// Nodes without an "id" get fresh ids (pre-order, above the largest id
/// present). Throws ValidationError on schema violations.
TreeNode node_from_json(const Json& j);

/// Parses and validates a dataset: tree invariants hold, every label names
/// a known class and resolves to at least one identifier occurrence.
/// Throws ParseError (with byte offset) or ValidationError.
Dataset parse_dataset(std::string_view raw);
Dataset dataset_from_json(const Json& j);

Json dataset_to_json(const Dataset& d);
std::string serialize_dataset(const Dataset& d);

/// Reads a whole file; throws std::runtime_error if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace iotyper

#endif  // IOTYPER_DATASET_JSON_HPP
