// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Inside-outside N-ary RNN. Child (or sibling) position k selects U_k.
//
//   inside:  h = tanh(W_in x + sum_k U^h_k h_k)
//            c = tanh(W_in x + sum_k U^c_k c_k)
//   outside: h = tanh(W_out h_parent + sum_k U^h_k h_sibling_k)
//            c = tanh(W_out c_parent + sum_k U^c_k c_sibling_k)
//
// The outside cell reads the parent's outside state. A sink sums the
// parent term (and its siblings' terms) over all of its occurrences.

#include "iotyper/errors.hpp"
#include "iotyper/iornn.hpp"

namespace iotyper {

using ad::Tape;
using ad::Var;

NaryParams NaryParams::bind(const ad::ParameterStore& store, std::size_t max_children) {
  NaryParams p{};
  p.embedding = store.index("embedding");
  p.in_w = store.index("inside.W");
  p.out_w = store.index("outside.W");
  for (std::size_t k = 0; k < max_children; ++k) {
    const std::string s = std::to_string(k);
    p.in_uh.push_back(store.index("inside.U_h." + s));
    p.in_uc.push_back(store.index("inside.U_c." + s));
    p.out_uh.push_back(store.index("outside.U_h." + s));
    p.out_uc.push_back(store.index("outside.U_c." + s));
  }
  return p;
}

namespace {

void check_fanout(const GraphNode& g, std::size_t max_children) {
  if (g.children.size() > max_children) {
    throw TransformError("N-ary model: node " + std::to_string(g.node_id) + " has " +
                         std::to_string(g.children.size()) + " children, more than max_children=" +
                         std::to_string(max_children));
  }
}

}  // namespace

void inside_pass_nary(const AugmentedTree& tree, const NaryParams& p, std::size_t d_hidden, Tape& t,
                      NodeStates& states) {
  const auto& nodes = tree.nodes();
  const Var table = t.param(p.embedding);
  const std::size_t k_max = p.in_uh.size();

  auto compute = [&](std::uint32_t n) {
    const GraphNode& g = nodes[n];
    check_fanout(g, k_max);
    const Var wx = t.matvec(t.param(p.in_w), t.embed_lookup(table, g.token));
    if (g.children.empty()) {
      states.inside_h[n] = t.tanh(wx);
      states.inside_c[n] = t.tanh(wx);
      return;
    }
    std::vector<Var> h_terms{wx};
    std::vector<Var> c_terms{wx};
    for (std::size_t k = 0; k < g.children.size(); ++k) {
      const std::uint32_t c = g.children[k];
      if (!states.inside_h[c].valid()) {
        throw OrderingError("inside pass: child " + std::to_string(nodes[c].node_id) + " of node " +
                            std::to_string(g.node_id) + " has no state yet");
      }
      h_terms.push_back(t.matvec(t.param(p.in_uh[k]), states.inside_h[c]));
      c_terms.push_back(t.matvec(t.param(p.in_uc[k]), states.inside_c[c]));
    }
    states.inside_h[n] = t.tanh(t.sum_list(h_terms, d_hidden));
    states.inside_c[n] = t.tanh(t.sum_list(c_terms, d_hidden));
  };

  for (std::size_t s = 0; s < tree.sinks().size(); ++s) compute(tree.sink_node(s));
  for (std::uint32_t n : tree.postorder()) compute(n);
}

void outside_pass_nary(const AugmentedTree& tree, const NaryParams& p, std::size_t d_hidden, SiblingSource siblings,
                       Tape& t, NodeStates& states) {
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return;
  if (!states.inside_h[0].valid()) throw OrderingError("outside pass: inside pass has not run");
  states.outside_h[0] = states.inside_h[0];
  states.outside_c[0] = states.inside_c[0];
  const Var w = t.param(p.out_w);
  const std::size_t k_max = p.out_uh.size();

  for (std::uint32_t n = 1; n < nodes.size(); ++n) {
    std::vector<Var> h_terms;
    std::vector<Var> c_terms;
    for (std::uint32_t q : nodes[n].parents) {
      if (!states.outside_h[q].valid()) {
        throw OrderingError("outside pass: parent " + std::to_string(nodes[q].node_id) + " of node " +
                            std::to_string(nodes[n].node_id) + " has no outside state");
      }
      check_fanout(nodes[q], k_max);
      h_terms.push_back(t.matvec(w, states.outside_h[q]));
      c_terms.push_back(t.matvec(w, states.outside_c[q]));
      const auto& ch = nodes[q].children;
      for (std::size_t k = 0; k < ch.size(); ++k) {
        const std::uint32_t s = ch[k];
        if (s == n) continue;
        // Siblings to the right have no outside state yet in pre-order;
        // they contribute their inside state under either setting.
        const bool use_outside = siblings == SiblingSource::Outside && states.outside_h[s].valid();
        const Var sh = use_outside ? states.outside_h[s] : states.inside_h[s];
        const Var sc = use_outside ? states.outside_c[s] : states.inside_c[s];
        h_terms.push_back(t.matvec(t.param(p.out_uh[k]), sh));
        c_terms.push_back(t.matvec(t.param(p.out_uc[k]), sc));
      }
    }
    states.outside_h[n] = t.tanh(h_terms.size() == 1 ? h_terms[0] : t.sum_list(h_terms, d_hidden));
    states.outside_c[n] = t.tanh(c_terms.size() == 1 ? c_terms[0] : t.sum_list(c_terms, d_hidden));
  }
}

}  // namespace iotyper
