// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include "iotyper/dataset_json.hpp"

#include <climits>
#include <fstream>
#include <sstream>

#include "iotyper/errors.hpp"
#include "iotyper/transforms.hpp"

namespace iotyper {

namespace {

constexpr int kMissingId = INT_MIN;

TreeNode parse_node(const Json& j) {
  if (!j.is_object()) throw ValidationError("tree node must be a JSON object, got " + std::string(j.type_name()));
  TreeNode n;
  n.id = kMissingId;
  if (auto it = j.find("id"); it != j.end()) {
    if (!it->is_number_integer()) throw ValidationError("node \"id\" must be an integer");
    n.id = it->get<int>();
  }
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) throw ValidationError("node is missing a string \"kind\"");
  n.kind = kind->get<std::string>();
  if (auto it = j.find("name"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("node \"name\" must be a string");
    n.name = it->get<std::string>();
  }
  if (auto it = j.find("children"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("node \"children\" must be an array");
    n.children.reserve(it->size());
    for (const auto& c : *it) n.children.push_back(parse_node(c));
  }
  return n;
}

void assign_missing_ids(TreeNode& n, int& next) {
  if (n.id == kMissingId) n.id = next++;
  for (auto& c : n.children) assign_missing_ids(c, next);
}

std::string describe(const std::vector<TreeViolation>& v) {
  std::string s = v.front().message;
  if (v.size() > 1) s += " (and " + std::to_string(v.size() - 1) + " more)";
  return s;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing \"" + key + "\"");
  return *it;
}

std::string string_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_string()) throw ValidationError(where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

Json node_to_json(const TreeNode& node) {
  Json j;
  j["id"] = node.id;
  j["kind"] = node.kind;
  if (node.name) j["name"] = *node.name;
  Json children = Json::array();
  for (const auto& c : node.children) children.push_back(node_to_json(c));
  j["children"] = std::move(children);
  return j;
}

TreeNode node_from_json(const Json& j) {
  TreeNode root = parse_node(j);
  int max_id = -1;
  walk_preorder(root, [&](const TreeNode& n, int) {
    if (n.id != kMissingId) max_id = std::max(max_id, n.id);
  });
  int next = max_id + 1;
  assign_missing_ids(root, next);
  return root;
}

Dataset dataset_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("dataset must be a JSON object");
  Dataset d;
  if (auto it = j.find("classes"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("\"classes\" must be an array of strings");
    std::vector<std::string> names;
    for (const auto& c : *it) {
      if (!c.is_string()) throw ValidationError("\"classes\" must be an array of strings");
      names.push_back(c.get<std::string>());
    }
    d.classes = ClassSet(std::move(names));
  }
  if (auto it = j.find("vocab_version"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("\"vocab_version\" must be a string");
    d.vocab_version = it->get<std::string>();
  }
  const Json& trees = require(j, "trees", "dataset");
  if (!trees.is_array()) throw ValidationError("\"trees\" must be an array");

  for (std::size_t t = 0; t < trees.size(); ++t) {
    const Json& tj = trees[t];
    const std::string where = "trees[" + std::to_string(t) + "]";
    if (!tj.is_object()) throw ValidationError(where + " must be an object");
    LabeledTree lt;
    lt.path = tj.contains("path") ? string_field(tj, "path", where) : where;
    lt.root = node_from_json(require(tj, "root", where));
    if (auto violations = validate_tree(lt.root); !violations.empty()) {
      throw ValidationError(lt.path + ": " + describe(violations));
    }

    if (auto it = tj.find("labels"); it != tj.end()) {
      if (!it->is_array()) throw ValidationError(lt.path + ": \"labels\" must be an array");
      const ScopeTable scopes = resolve_scopes(lt.root);
      for (const auto& lj : *it) {
        const std::string lwhere = lt.path + " label";
        Label l;
        l.scope = string_field(lj, "scope", lwhere);
        l.name = string_field(lj, "name", lwhere);
        const std::string type = string_field(lj, "type", lwhere);
        auto cls = d.classes.find(type);
        if (!cls) {
          throw ValidationError(lt.path + ": label " + l.scope + " " + l.name + " has unknown type class '" + type +
                                "'");
        }
        l.type = *cls;
        if (!scopes.find(ScopeKey{l.scope, l.name})) {
          throw ValidationError(lt.path + ": label " + l.scope + " " + l.name +
                                " does not resolve to any identifier occurrence");
        }
        lt.labels.push_back(std::move(l));
      }
    }
    d.trees.push_back(std::move(lt));
  }
  return d;
}

Dataset parse_dataset(std::string_view raw) {
  Json j;
  try {
    j = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return dataset_from_json(j);
}

Json dataset_to_json(const Dataset& d) {
  Json j;
  j["classes"] = d.classes.names();
  j["vocab_version"] = d.vocab_version;
  Json trees = Json::array();
  for (const auto& t : d.trees) {
    Json tj;
    tj["path"] = t.path;
    tj["root"] = node_to_json(t.root);
    Json labels = Json::array();
    for (const auto& l : t.labels) {
      labels.push_back(Json{{"scope", l.scope}, {"name", l.name}, {"type", d.classes.name(l.type)}});
    }
    tj["labels"] = std::move(labels);
    trees.push_back(std::move(tj));
  }
  j["trees"] = std::move(trees);
  return j;
}

std::string serialize_dataset(const Dataset& d) { return dataset_to_json(d).dump(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace iotyper
