// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "iotyper/errors.hpp"
#include "iotyper/iornn.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

using namespace iotyper;
using namespace iotyper::testing;
using ad::Tape;

namespace {

Model make_model(Variant v, std::size_t k, std::uint64_t seed, SiblingSource sib = SiblingSource::Inside,
                 HeadKind head = HeadKind::Linear) {
  ModelConfig c;
  c.variant = v;
  c.d_input = 4;
  c.d_hidden = 5;
  c.max_children = k;
  c.siblings = sib;
  c.head = head;
  Model m = Model::initialize(c, seed);
  Rng rng(seed + 1000);
  randomize(m.params(), rng);
  return m;
}

AugmentedTree augment(const TreeNode& root, const std::vector<Label>& labels = {}) {
  PrepareOptions opt;
  opt.restructure = false;
  return prepare_tree(root, labels, opt, Vocabulary::builtin()).tree;
}

double max_diff(const ad::Matrix& a, const Vec& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Worst deviation between tape states and the oracle over every node.
double oracle_gap(const Model& m, const AugmentedTree& t) {
  Tape tape(m.params());
  const ForwardResult f = m.forward(t, tape);
  const OracleStates o = m.config().variant == Variant::ChildSum
                             ? oracle_childsum(t, m.params())
                             : oracle_nary(t, m.params(), m.config().siblings);
  double gap = 0.0;
  for (std::size_t n = 0; n < t.nodes().size(); ++n) {
    gap = std::max(gap, max_diff(tape.value(f.states.inside_h[n]), o.inside_h[n]));
    gap = std::max(gap, max_diff(tape.value(f.states.inside_c[n]), o.inside_c[n]));
    gap = std::max(gap, max_diff(tape.value(f.states.outside_h[n]), o.outside_h[n]));
    gap = std::max(gap, max_diff(tape.value(f.states.outside_c[n]), o.outside_c[n]));
  }
  for (std::size_t s = 0; s < t.sinks().size(); ++s) {
    const Vec z = oracle_logits(o.outside_h[t.sink_node(s)], m.params(), m.config().head);
    gap = std::max(gap, max_diff(tape.value(f.logits[s]), z));
  }
  return gap;
}

TreeNode three_node() { return tree_from_shape({2, 0, 0}, {"a", "b"}); }

void zero_params(Model& m) {
  for (std::size_t i = 0; i < m.params().size(); ++i) m.params().value(i).fill(0.0);
}

double loss_of(const Model& m, const AugmentedTree& t) {
  Tape tape(m.params());
  const auto f = m.forward(t, tape);
  return tape.value(m.loss(t, f, tape))[0];
}

}  // namespace

TEST_CASE("parameter shapes") {
  const Model cs = make_model(Variant::ChildSum, 4, 1);
  const auto& p = cs.params();
  CHECK(p.value("embedding").rows() == Vocabulary::builtin().size() + 2);
  CHECK(p.value("embedding").cols() == 4);
  for (const char* g : {"i", "f", "o", "u"}) {
    CHECK(p.value(std::string("inside.W_") + g).shape_string() == "(5x4)");
    CHECK(p.value(std::string("inside.U_") + g).shape_string() == "(5x5)");
    CHECK(p.value(std::string("inside.b_") + g).shape_string() == "(5x1)");
    CHECK(p.value(std::string("outside.U_") + g).shape_string() == "(5x5)");
    CHECK(p.value(std::string("outside.b_") + g).shape_string() == "(5x1)");
  }
  CHECK(p.value("head.W").shape_string() == "(21x5)");
  CHECK(p.value("head.b").shape_string() == "(21x1)");

  // N-ary parameter count grows linearly in K.
  auto count = [](std::size_t k) { return make_model(Variant::Nary, k, 1).params().scalar_count(); };
  CHECK(count(3) - count(2) == 4 * 25);
  CHECK(count(10) - count(2) == 8 * 4 * 25);
}

TEST_CASE("initialization") {
  ModelConfig c;
  const Model m = Model::initialize(c, 7);
  const auto& w = m.params().value("inside.W_i");
  const double r = std::sqrt(6.0 / (15 + 10));
  for (double v : w.data()) CHECK(std::abs(v) <= r);
  for (double v : m.params().value("inside.b_f").data()) CHECK(v == 0.0);
  for (double v : m.params().value("head.W").data()) CHECK(v == 0.0);
  CHECK(Model::initialize(c, 7).serialize() == m.serialize());
  CHECK(Model::initialize(c, 8).serialize() != m.serialize());
}

TEST_CASE("leaf with zero parameters") {
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    Model m = make_model(v, 3, 2);
    zero_params(m);
    for (const TreeNode& root : {tree_from_shape({0}, {"a"}), tree_from_shape({1, 0}, {"a"})}) {
      const AugmentedTree t = augment(root);
      Tape tape(m.params());
      const ForwardResult f = m.forward(t, tape);
      for (std::size_t n = 0; n < t.nodes().size(); ++n) {
        for (double x : tape.value(f.states.inside_h[n]).data()) CHECK(x == 0.0);
        for (double x : tape.value(f.states.inside_c[n]).data()) CHECK(x == 0.0);
        for (double x : tape.value(f.states.outside_h[n]).data()) CHECK(x == 0.0);
      }
    }
  }
}

TEST_CASE("three-node tree matches the scalar oracle") {
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    const Model m = make_model(v, 3, 0);
    CHECK(oracle_gap(m, augment(three_node())) < 1e-12);
  }
}

TEST_CASE("every tree of up to 5 nodes matches the scalar oracle") {
  std::size_t shapes = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& shape : tree_shapes(n)) {
      ++shapes;
      for (const auto& names : {std::vector<const char*>{"a"}, std::vector<const char*>{"a", "b"}}) {
        const AugmentedTree t = augment(tree_from_shape(shape, names));
        CHECK(oracle_gap(make_model(Variant::ChildSum, 5, n), t) < 1e-12);
        CHECK(oracle_gap(make_model(Variant::Nary, 5, n), t) < 1e-12);
        CHECK(oracle_gap(make_model(Variant::Nary, 5, n, SiblingSource::Outside), t) < 1e-12);
      }
    }
  }
  CHECK(shapes == 23);
}

TEST_CASE("two-layer head matches the oracle") {
  const Model m = make_model(Variant::ChildSum, 3, 4, SiblingSource::Inside, HeadKind::TwoLayer);
  CHECK(oracle_gap(m, augment(abc_example_tree().root)) < 1e-12);
}

TEST_CASE("sink with two occurrences matches the oracle") {
  const AugmentedTree t = augment(abc_example_tree().root);
  REQUIRE(t.sinks()[0].occurrences.size() == 2);
  CHECK(oracle_gap(make_model(Variant::ChildSum, 3, 5), t) < 1e-12);
  CHECK(oracle_gap(make_model(Variant::Nary, 3, 5), t) < 1e-12);
}

TEST_CASE("root outside state equals its inside state") {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const LabeledTree lt = random_small_tree(rng, 10);
    for (Variant v : {Variant::ChildSum, Variant::Nary}) {
      const Model m = make_model(v, 10, i);
      const AugmentedTree t = augment(lt.root);
      Tape tape(m.params());
      const ForwardResult f = m.forward(t, tape);
      CHECK(tape.value(f.states.outside_h[0]) == tape.value(f.states.inside_h[0]));
      CHECK(tape.value(f.states.outside_c[0]) == tape.value(f.states.inside_c[0]));
    }
  }
}

TEST_CASE("zero parameters give zero outside states") {
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    Model m = make_model(v, 3, 3);
    zero_params(m);
    const AugmentedTree t = augment(abc_example_tree().root);
    Tape tape(m.params());
    const ForwardResult f = m.forward(t, tape);
    for (std::size_t n = 0; n < t.nodes().size(); ++n) {
      for (double x : tape.value(f.states.outside_h[n]).data()) CHECK(x == 0.0);
    }
  }
}

TEST_CASE("child-sum inside states ignore child order") {
  Rng rng(12);
  const Model m = make_model(Variant::ChildSum, 10, 12);
  for (int i = 0; i < 20; ++i) {
    const TreeNode root = random_small_tree(rng, 10).root;
    TreeNode perm = root;
    std::function<void(TreeNode&)> shuffle = [&](TreeNode& n) {
      rng.shuffle(n.children);
      for (auto& c : n.children) shuffle(c);
    };
    shuffle(perm);
    const AugmentedTree a = augment(root);
    const AugmentedTree b = augment(perm);
    Tape ta(m.params()), tb(m.params());
    const auto fa = m.forward(a, ta);
    const auto fb = m.forward(b, tb);
    for (std::size_t n = 0; n < a.tree_node_count(); ++n) {
      const auto j = *b.index_of(a.nodes()[n].node_id);
      const auto& ha = ta.value(fa.states.inside_h[n]);
      CHECK(max_diff(ha, Vec(tb.value(fb.states.inside_h[j]).data().begin(),
                            tb.value(fb.states.inside_h[j]).data().end())) <= 1e-12);
    }
  }
}

TEST_CASE("n-ary inside states depend on child order") {
  const Model m = make_model(Variant::Nary, 3, 13);
  const TreeNode root = abc_example_tree().root;
  TreeNode swapped = root;
  std::swap(swapped.children[0], swapped.children[2]);
  const AugmentedTree a = augment(root), b = augment(swapped);
  Tape ta(m.params()), tb(m.params());
  const auto fa = m.forward(a, ta);
  const auto fb = m.forward(b, tb);
  CHECK(max_diff(ta.value(fa.states.inside_h[0]), Vec(tb.value(fb.states.inside_h[0]).data().begin(),
                                                       tb.value(fb.states.inside_h[0]).data().end())) > 1e-6);
}

TEST_CASE("end-to-end gradients match finite differences") {
  Rng rng(14);
  for (int i = 0; i < 6; ++i) {
    const LabeledTree lt = random_small_tree(rng, 10);
    const AugmentedTree t = augment(lt.root, lt.labels);
    for (Variant v : {Variant::ChildSum, Variant::Nary}) {
      Model m = make_model(v, 10, 100 + i);
      const double err = ad::grad_check(
          [&](Tape& tape) {
            const auto f = m.forward(t, tape);
            return m.loss(t, f, tape);
          },
          m.params(), 1e-5);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("gradients accumulate through a sink with three occurrences") {
  const TreeNode root = tree_from_shape({3, 1, 0, 1, 0, 0}, {"a"});
  const AugmentedTree t = augment(root, {{std::string(kModuleScope), "a", 4}});
  REQUIRE(t.sinks().size() == 1);
  REQUIRE(t.sinks()[0].occurrences.size() == 3);
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    Model m = make_model(v, 3, 15);
    const double err = ad::grad_check(
        [&](Tape& tape) {
          const auto f = m.forward(t, tape);
          return m.loss(t, f, tape);
        },
        m.params(), 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("forward") {
  const AugmentedTree t = augment(abc_example_tree().root);
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    const Model m = make_model(v, 3, 16);
    const auto a = m.predict(t);
    CHECK(a.size() == 3);
    CHECK(a == m.predict(t));
    for (const auto& z : a) {
      CHECK(z.size() == 21);
      for (double x : z) CHECK(x >= 0.0);
    }
    const TreeNode no_names{0, "Module", std::nullopt, {TreeNode{1, "Pass", std::nullopt, {}}}};
    CHECK(m.predict(augment(no_names)).empty());
  }
}

TEST_CASE("zero head gives uniform predictions and ln 21 loss") {
  ModelConfig c;
  const Model m = Model::initialize(c, 3);
  const LabeledTree lt = abc_example_tree();
  const AugmentedTree t = augment(lt.root, lt.labels);
  for (const auto& z : m.predict(t)) {
    for (double x : z) CHECK(x == 0.0);
  }
  CHECK(std::abs(loss_of(m, t) - std::log(21.0)) < 1e-12);
}

TEST_CASE("loss matches the oracle loss") {
  Rng rng(17);
  const LabeledTree lt = random_small_tree(rng, 10);
  const AugmentedTree t = augment(lt.root, lt.labels);
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    const Model m = make_model(v, 10, 17);
    CHECK(std::abs(loss_of(m, t) - oracle_loss(t, m.config(), m.params())) < 1e-12);
  }
}

TEST_CASE("n-ary rejects nodes wider than K") {
  const Model m = make_model(Variant::Nary, 2, 18);
  const AugmentedTree t = augment(abc_example_tree().root);
  CHECK_THROWS_AS(m.predict(t), TransformError);
}

TEST_CASE("outside pass before inside pass is an ordering error") {
  const Model m = make_model(Variant::ChildSum, 3, 19);
  const AugmentedTree t = augment(abc_example_tree().root);
  Tape tape(m.params());
  NodeStates st(t.nodes().size());
  CHECK_THROWS_AS(outside_pass_childsum(t, ChildSumParams::bind(m.params()), 5, tape, st), OrderingError);
}

TEST_CASE("model file round trip") {
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    const Model m = make_model(v, 4, 20, SiblingSource::Outside, HeadKind::TwoLayer);
    const std::string text = m.serialize();
    const Model back = Model::parse(text);
    CHECK(back.serialize() == text);
    CHECK(back.config() == m.config());
    CHECK(back.params() == m.params());
    const Json j = Json::parse(text);
    for (const char* key : {"variant", "d_input", "d_hidden", "max_children", "classes", "vocab_version",
                            "format_version", "params"}) {
      CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(j.at("variant") == std::string(to_string(v)));
  }
  CHECK_THROWS(Model::parse("{\"variant\": \"childsum\"}"));
  CHECK_THROWS_AS(Model::parse("{not json"), ParseError);
}
