// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "iotyper/errors.hpp"
#include "iotyper/iornn.hpp"
#include "iotyper/rng.hpp"

namespace iotyper {

using ad::Matrix;
using ad::ParameterStore;
using ad::Tape;
using ad::Var;

std::string_view to_string(Variant v) { return v == Variant::ChildSum ? "childsum" : "nary"; }

Variant variant_from_string(std::string_view s) {
  if (s == "childsum") return Variant::ChildSum;
  if (s == "nary") return Variant::Nary;
  throw ValidationError("unknown variant '" + std::string(s) + "' (expected childsum or nary)");
}

std::string_view to_string(SiblingSource s) { return s == SiblingSource::Inside ? "inside" : "outside"; }

SiblingSource sibling_source_from_string(std::string_view s) {
  if (s == "inside") return SiblingSource::Inside;
  if (s == "outside") return SiblingSource::Outside;
  throw ValidationError("unknown siblings_source '" + std::string(s) + "'");
}

std::string_view to_string(HeadKind h) { return h == HeadKind::Linear ? "linear" : "two_layer"; }

HeadKind head_from_string(std::string_view s) {
  if (s == "linear") return HeadKind::Linear;
  if (s == "two_layer") return HeadKind::TwoLayer;
  throw ValidationError("unknown head '" + std::string(s) + "'");
}

HeadParams HeadParams::bind(const ParameterStore& store, HeadKind kind) {
  HeadParams h{store.index("head.W"), store.index("head.b")};
  if (kind == HeadKind::TwoLayer) {
    h.hidden_w = store.index("head.hidden.W");
    h.hidden_b = store.index("head.hidden.b");
  }
  return h;
}

Var classify(const HeadParams& head, Var outside_h, Tape& t) {
  Var features = outside_h;
  if (head.hidden_w != SIZE_MAX) {
    features = t.relu(t.add(t.matvec(t.param(head.hidden_w), features), t.param(head.hidden_b)));
  }
  return t.relu(t.add(t.matvec(t.param(head.w), features), t.param(head.b)));
}

namespace {

Matrix glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-r, r);
  return m;
}

void check_config(const ModelConfig& c) {
  if (c.d_input == 0 || c.d_hidden == 0 || c.max_children == 0) {
    throw ValidationError("model dimensions and max_children must be positive");
  }
  if (c.classes.size() < 2) throw ValidationError("model needs at least two classes");
}

}  // namespace

Model::Model(ModelConfig config, ParameterStore params) : config_(std::move(config)), params_(std::move(params)) {
  check_config(config_);
  try {
    if (config_.variant == Variant::ChildSum) {
      childsum_ = ChildSumParams::bind(params_);
    } else {
      nary_ = NaryParams::bind(params_, config_.max_children);
    }
    head_ = HeadParams::bind(params_, config_.head);
  } catch (const std::out_of_range& e) {
    throw ValidationError(std::string("model parameters incomplete: ") + e.what());
  }
  const std::size_t emb = config_.variant == Variant::ChildSum ? childsum_.embedding : nary_.embedding;
  const Matrix& L = params_.value(emb);
  if (L.rows() != config_.vocab_rows || L.cols() != config_.d_input) {
    throw ValidationError("embedding shape " + L.shape_string() + " does not match the model header");
  }
  if (params_.value(head_.w).rows() != config_.classes.size()) {
    throw ValidationError("classifier rows do not match the class count");
  }
}

Model Model::initialize(const ModelConfig& c, std::uint64_t seed) {
  check_config(c);
  Rng rng(seed);
  const std::size_t di = c.d_input;
  const std::size_t dm = c.d_hidden;
  ParameterStore ps;
  ps.add("embedding", glorot(rng, c.vocab_rows, di));
  if (c.variant == Variant::ChildSum) {
    for (const char* g : {"i", "f", "o", "u"}) {
      ps.add(std::string("inside.W_") + g, glorot(rng, dm, di));
      ps.add(std::string("inside.U_") + g, glorot(rng, dm, dm));
      ps.add(std::string("inside.b_") + g, Matrix::zeros(dm));
    }
    for (const char* g : {"i", "f", "o", "u"}) {
      ps.add(std::string("outside.U_") + g, glorot(rng, dm, dm));
      ps.add(std::string("outside.b_") + g, Matrix::zeros(dm));
    }
  } else {
    ps.add("inside.W", glorot(rng, dm, di));
    for (std::size_t k = 0; k < c.max_children; ++k) {
      ps.add("inside.U_h." + std::to_string(k), glorot(rng, dm, dm));
      ps.add("inside.U_c." + std::to_string(k), glorot(rng, dm, dm));
    }
    ps.add("outside.W", glorot(rng, dm, dm));
    for (std::size_t k = 0; k < c.max_children; ++k) {
      ps.add("outside.U_h." + std::to_string(k), glorot(rng, dm, dm));
      ps.add("outside.U_c." + std::to_string(k), glorot(rng, dm, dm));
    }
  }
  if (c.head == HeadKind::TwoLayer) {
    ps.add("head.hidden.W", glorot(rng, dm, dm));
    ps.add("head.hidden.b", Matrix::zeros(dm));
  }
  ps.add("head.W", Matrix::zeros(c.classes.size(), dm));
  ps.add("head.b", Matrix::zeros(c.classes.size()));
  return Model(c, std::move(ps));
}

ForwardResult Model::forward(const AugmentedTree& tree, Tape& tape) const {
  ForwardResult out{NodeStates(tree.nodes().size()), {}};
  const std::size_t dm = config_.d_hidden;
  if (config_.variant == Variant::ChildSum) {
    inside_pass_childsum(tree, childsum_, dm, tape, out.states);
    outside_pass_childsum(tree, childsum_, dm, tape, out.states);
  } else {
    inside_pass_nary(tree, nary_, dm, tape, out.states);
    outside_pass_nary(tree, nary_, dm, config_.siblings, tape, out.states);
  }
  out.logits.reserve(tree.sinks().size());
  for (std::size_t s = 0; s < tree.sinks().size(); ++s) {
    out.logits.push_back(classify(head_, out.states.outside_h[tree.sink_node(s)], tape));
  }
  return out;
}

Var Model::loss(const AugmentedTree& tree, const ForwardResult& fwd, Tape& tape) const {
  std::vector<Var> terms;
  for (std::size_t s = 0; s < tree.sinks().size(); ++s) {
    if (auto label = tree.sinks()[s].label) terms.push_back(tape.softmax_cross_entropy(fwd.logits[s], *label));
  }
  if (terms.empty()) return Var{};
  const Var total = terms.size() == 1 ? terms[0] : tape.sum_list(terms, 1);
  return tape.scale(total, 1.0 / static_cast<double>(terms.size()));
}

std::vector<std::vector<double>> Model::predict(const AugmentedTree& tree) const {
  Tape tape(params_);
  const ForwardResult fwd = forward(tree, tape);
  std::vector<std::vector<double>> out;
  out.reserve(fwd.logits.size());
  for (Var v : fwd.logits) {
    auto d = tape.value(v).data();
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

Json Model::to_json() const {
  Json j;
  j["variant"] = to_string(config_.variant);
  j["d_input"] = config_.d_input;
  j["d_hidden"] = config_.d_hidden;
  j["max_children"] = config_.max_children;
  j["classes"] = config_.classes.names();
  j["vocab_version"] = config_.vocab_version;
  j["vocab_rows"] = config_.vocab_rows;
  j["restructuring"] = config_.restructuring;
  j["head"] = to_string(config_.head);
  j["siblings_source"] = to_string(config_.siblings);
  j["nary_outside_source"] = "parent_outside";
  const Json store = params_.to_json();
  j["format_version"] = store["format_version"];
  j["params"] = store["params"];
  return j;
}

std::string Model::serialize() const { return to_json().dump() + "\n"; }

Model Model::from_json(const Json& j) {
  try {
    ModelConfig c;
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.d_input = j.at("d_input").get<std::size_t>();
    c.d_hidden = j.at("d_hidden").get<std::size_t>();
    c.max_children = j.at("max_children").get<std::size_t>();
    c.classes = ClassSet(j.at("classes").get<std::vector<std::string>>());
    c.vocab_version = j.at("vocab_version").get<std::string>();
    c.vocab_rows = j.at("vocab_rows").get<std::size_t>();
    c.restructuring = j.value("restructuring", true);
    c.head = head_from_string(j.value("head", std::string("linear")));
    c.siblings = sibling_source_from_string(j.value("siblings_source", std::string("inside")));
    if (j.value("nary_outside_source", std::string("parent_outside")) != "parent_outside") {
      throw ValidationError("unsupported nary_outside_source");
    }
    return Model(std::move(c), ParameterStore::from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

Model Model::parse(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return from_json(j);
}

}  // namespace iotyper
