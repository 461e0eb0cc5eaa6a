// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per check and
// exits non-zero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "iotyper/experiments.hpp"
#include "iotyper/parallel.hpp"
#include "iotyper/training.hpp"
#include "oracle.hpp"
#include "properties.hpp"
#include "synthetic.hpp"

using namespace iotyper;
using namespace iotyper::testing;
using ad::Tape;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Every Metrics produced by a check, for the top-k structure check.
std::vector<std::pair<std::string, Metrics>> g_evaluations;

void remember(std::string what, const Metrics& m) { g_evaluations.emplace_back(std::move(what), m); }

Model random_model(Variant v, std::size_t k, std::uint64_t seed, SiblingSource sib = SiblingSource::Inside) {
  ModelConfig c;
  c.variant = v;
  c.d_input = 4;
  c.d_hidden = 5;
  c.max_children = k;
  c.siblings = sib;
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
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Vec as_vec(const ad::Matrix& m) { return Vec(m.data().begin(), m.data().end()); }

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

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2026);
  double worst = 0.0;
  int trees = 0;
  while (trees < 20) {
    const LabeledTree lt = random_small_tree(rng, 10);
    const AugmentedTree t = augment(lt.root, lt.labels);
    const bool shared = std::any_of(t.sinks().begin(), t.sinks().end(),
                                    [](const auto& s) { return s.occurrences.size() >= 2; });
    if (!shared) continue;
    for (Variant v : {Variant::ChildSum, Variant::Nary}) {
      Model m = random_model(v, 10, 300 + trees);
      const double err = ad::grad_check(
          [&](Tape& tape) {
            const auto f = m.forward(t, tape);
            return m.loss(t, f, tape);
          },
          m.params(), 1e-5);
      worst = std::max(worst, err);
    }
    ++trees;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          "40 checks, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  std::size_t shapes = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& shape : tree_shapes(n)) {
      ++shapes;
      for (const auto& names : {std::vector<const char*>{"a"}, std::vector<const char*>{"a", "b"}}) {
        const AugmentedTree t = augment(tree_from_shape(shape, names));
        worst = std::max(worst, oracle_gap(random_model(Variant::ChildSum, 5, shapes), t));
        worst = std::max(worst, oracle_gap(random_model(Variant::Nary, 5, shapes), t));
        worst = std::max(worst, oracle_gap(random_model(Variant::Nary, 5, shapes, SiblingSource::Outside), t));
      }
    }
  }
  return {shapes == 23 && worst <= 1e-12, std::to_string(shapes) + " shapes, max gap " + fmt("%.2e", worst)};
}

Outcome root_boundary() {
  std::vector<TreeNode> trees;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& shape : tree_shapes(n)) trees.push_back(tree_from_shape(shape, {"a", "b"}));
  }
  Rng rng(7);
  for (int i = 0; i < 50; ++i) trees.push_back(random_small_tree(rng, 10).root);
  trees.push_back(abc_example_tree().root);
  std::size_t bad = 0, checks = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const AugmentedTree t = augment(trees[i]);
    for (Variant v : {Variant::ChildSum, Variant::Nary}) {
      const Model m = random_model(v, 10, i);
      Tape tape(m.params());
      const ForwardResult f = m.forward(t, tape);
      ++checks;
      if (!(tape.value(f.states.outside_h[0]) == tape.value(f.states.inside_h[0])) ||
          !(tape.value(f.states.outside_c[0]) == tape.value(f.states.inside_c[0]))) {
        ++bad;
      }
    }
  }
  return {bad == 0, std::to_string(checks) + " forward passes, " + std::to_string(bad) + " mismatches"};
}

Outcome permutation() {
  Rng rng(12);
  const Model cs = random_model(Variant::ChildSum, 10, 12);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const TreeNode root = random_small_tree(rng, 10).root;
    TreeNode perm = root;
    std::function<void(TreeNode&)> shuffle = [&](TreeNode& n) {
      rng.shuffle(n.children);
      for (auto& c : n.children) shuffle(c);
    };
    shuffle(perm);
    const AugmentedTree a = augment(root), b = augment(perm);
    Tape ta(cs.params()), tb(cs.params());
    const auto fa = cs.forward(a, ta);
    const auto fb = cs.forward(b, tb);
    for (std::size_t n = 0; n < a.tree_node_count(); ++n) {
      const auto j = *b.index_of(a.nodes()[n].node_id);
      worst = std::max(worst, max_diff(ta.value(fa.states.inside_h[n]), as_vec(tb.value(fb.states.inside_h[j]))));
      worst = std::max(worst, max_diff(ta.value(fa.states.inside_c[n]), as_vec(tb.value(fb.states.inside_c[j]))));
    }
  }

  const Model nary = random_model(Variant::Nary, 3, 13);
  const TreeNode root = abc_example_tree().root;
  TreeNode swapped = root;
  std::swap(swapped.children[0], swapped.children[2]);
  const AugmentedTree a = augment(root), b = augment(swapped);
  Tape ta(nary.params()), tb(nary.params());
  const auto fa = nary.forward(a, ta);
  const auto fb = nary.forward(b, tb);
  const double witness = max_diff(ta.value(fa.states.inside_h[0]), as_vec(tb.value(fb.states.inside_h[0])));
  return {worst <= 1e-12 && witness > 1e-6,
          "child-sum max gap " + fmt("%.2e", worst) + ", n-ary reorder moves root by " + fmt("%.3g", witness)};
}

Outcome transform_soundness() {
  Rng rng(1);
  std::size_t violations = 0;
  std::string first;
  for (int i = 0; i < 1000; ++i) {
    const TreeNode t = random_program(rng);
    for (std::size_t k : {2u, 5u, 10u, 20u}) {
      const std::string v = restructure_violation(t, k);
      if (!v.empty()) {
        if (violations++ == 0) first = "tree " + std::to_string(i) + " K=" + std::to_string(k) + ": " + v;
      }
    }
  }

  std::ifstream in(std::string(IOTYPER_GOLDEN_DIR) + "/abc_k2_transform.json");
  std::stringstream ss;
  ss << in.rdbuf();
  bool golden_ok = false;
  if (in) {
    const Json golden = Json::parse(ss.str());
    const PreparedTree p =
        prepare_tree(abc_example_tree().root, {}, PrepareOptions{2, true, false}, Vocabulary::builtin());
    golden_ok = node_to_json(p.tree.root()) == golden.at("root") && golden.at("sinks").size() == p.tree.sinks().size();
    for (std::size_t s = 0; golden_ok && s < p.tree.sinks().size(); ++s) {
      const Json& g = golden.at("sinks")[s];
      golden_ok = g.at("id") == p.tree.sinks()[s].sink_id && g.at("name") == p.tree.sinks()[s].owner.name &&
                  g.at("occurrences") == Json(p.tree.sinks()[s].occurrences);
    }
  }
  std::string detail = "4000 restructurings, " + std::to_string(violations) + " violations";
  if (!first.empty()) detail += " (" + first + ")";
  detail += golden_ok ? ", golden K=2 tree matches" : ", golden K=2 tree differs";
  return {violations == 0 && golden_ok, detail};
}

Outcome baselines() {
  std::vector<std::size_t> truths(100000);
  Rng rng(3);
  for (auto& t : truths) t = rng.below(21);
  const Metrics random = baseline_random(truths, 21, 4);
  remember("random baseline", random);
  const double r1 = random.topk(1);

  const Dataset train = synthetic_corpus(30, 11);
  const Dataset test = synthetic_corpus(15, 12);
  const auto tr = label_classes(train);
  const auto te = label_classes(test);
  std::vector<std::size_t> counts(21, 0);
  for (std::size_t c : tr) ++counts[c];
  const auto majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const double analytic =
      static_cast<double>(std::count(te.begin(), te.end(), majority)) / static_cast<double>(te.size());
  const Metrics maj = baseline_majority(tr, te, 21);
  remember("majority baseline", maj);
  return {std::abs(r1 - 1.0 / 21.0) <= 0.005 && maj.topk(1) == analytic,
          "random top-1 " + fmt("%.4f", r1) + ", majority " + fmt("%.6f", maj.topk(1)) + " vs analytic " +
              fmt("%.6f", analytic)};
}

Outcome initial_loss() {
  const Dataset d = synthetic_corpus(10, 5);
  double worst = 0.0;
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    const TrainConfig c = TrainConfig::defaults_for(v);
    const Model m = Model::initialize(c.model_config(d.classes, Vocabulary::builtin()), c.seed);
    double sum = 0.0;
    std::size_t sinks = 0;
    for (const auto& ex : prepare_examples(d, c.prepare_options())) {
      if (ex.labeled_sinks == 0) continue;
      Tape tape(m.params());
      const auto f = m.forward(ex.prepared.tree, tape);
      sum += tape.value(m.loss(ex.prepared.tree, f, tape))[0] * static_cast<double>(ex.labeled_sinks);
      sinks += ex.labeled_sinks;
    }
    worst = std::max(worst, std::abs(sum / static_cast<double>(sinks) - std::log(21.0)));
  }
  return {worst <= 1e-9, "max |loss - ln 21| = " + fmt("%.2e", worst)};
}

// Literal and arithmetic assignments over five types.
CorpusOptions inferable_corpus() {
  CorpusOptions o;
  o.type_weights = {30, 12, 14, 8, 10, 0, 0, 0, 0, 0};
  return o;
}

Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset train_set = synthetic_corpus(30, 11, inferable_corpus());
  const Dataset test_set = synthetic_corpus(15, 12, inferable_corpus());
  const double maj = baseline_majority(label_classes(train_set), label_classes(test_set), 21).topk(1);
  bool ok = true;
  std::string detail;
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    TrainConfig c = TrainConfig::defaults_for(v);
    c.epochs = 300;
    c.seed = 1;
    const TrainResult r = train(train_set, c);
    const Metrics on_train = evaluate_topk(r.model, train_set);
    const Metrics on_test = evaluate_topk(r.model, test_set);
    remember(std::string(to_string(v)) + " overfit train", on_train);
    remember(std::string(to_string(v)) + " overfit held-out", on_test);
    ok = ok && on_train.topk(1) >= 0.95 && on_test.topk(1) >= maj + 0.10;
    detail += std::string(to_string(v)) + " train " + fmt("%.3f", on_train.topk(1)) + " held-out " +
              fmt("%.3f", on_test.topk(1)) + ", ";
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 300.0, detail + "majority " + fmt("%.3f", maj) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome ablation() {
  CorpusOptions wide = inferable_corpus();
  wide.min_statements = 12;
  wide.max_statements = 40;
  const Dataset train_set = synthetic_corpus(24, 21, wide);
  const Dataset test_set = synthetic_corpus(12, 22, wide);
  ExperimentOptions opt;
  opt.variants = {Variant::ChildSum, Variant::Nary};
  opt.k_sweep = {5, 10, 15, 20};
  opt.base = TrainConfig::defaults_for(Variant::Nary);
  opt.base.epochs = 40;
  opt.base.seed = 3;
  const auto cells = run_restructuring_ablation(train_set, test_set, opt);
  std::size_t cs_wins = 0, nary_wins = 0;
  std::string rows;
  for (const auto& cell : cells) {
    const double with = cell.with_restructuring.metrics.topk(1);
    const double without = cell.without_restructuring.metrics.topk(1);
    const std::string tag = std::string(to_string(cell.variant)) + " K=" + std::to_string(cell.max_children);
    remember("ablation with " + tag, cell.with_restructuring.metrics);
    remember("ablation without " + tag, cell.without_restructuring.metrics);
    (cell.variant == Variant::ChildSum ? cs_wins : nary_wins) += with >= without;
    rows += " " + tag + ":" + fmt("%.3f", with) + "/" + fmt("%.3f", without);
  }
  return {cells.size() == 8 && cs_wins >= 3 && nary_wins >= 3,
          "K values favouring restructuring: child-sum " + std::to_string(cs_wins) + "/4, n-ary " +
              std::to_string(nary_wins) + "/4; with/without" + rows};
}

Outcome topk_structure() {
  std::size_t bad = 0;
  std::string first;
  for (const auto& [what, m] : g_evaluations) {
    bool ok = m.topk(21) == 1.0;
    for (std::size_t k = 2; k <= 21; ++k) ok = ok && m.topk(k) >= m.topk(k - 1);
    if (!ok && bad++ == 0) first = what;
  }
  std::string detail = std::to_string(g_evaluations.size()) + " evaluations";
  if (bad) detail += ", " + std::to_string(bad) + " broken, first: " + first;
  return {bad == 0 && !g_evaluations.empty(), detail};
}

Outcome determinism() {
  const Dataset d = synthetic_corpus(8, 31);
  bool same = true;
  for (Variant v : {Variant::ChildSum, Variant::Nary}) {
    TrainConfig c = TrainConfig::defaults_for(v);
    c.epochs = 5;
    c.seed = 42;
    const std::string a = train(d, c).model.serialize();
    const std::string b = train(d, c).model.serialize();
    same = same && a == b && !a.empty();
  }
  return {same, same ? "model files byte-identical for both variants" : "model files differ"};
}

}  // namespace

int main() {
  configure_threads_from_env();
  const std::vector<std::pair<const char*, Outcome (*)()>> checks = {
      {"gradient fidelity", gradient_fidelity},
      {"scalar oracle equivalence", oracle_equivalence},
      {"root boundary", root_boundary},
      {"child-sum permutation invariance / n-ary order sensitivity", permutation},
      {"transform soundness", transform_soundness},
      {"baselines", baselines},
      {"initial loss", initial_loss},
      {"overfit", overfit},
      {"restructuring ablation", ablation},
      {"top-k monotonicity", topk_structure},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
