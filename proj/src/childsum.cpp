// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

// Inside-outside Child-Sum Tree-LSTM.
//
// Inside, for node p with children C(p) and token embedding x:
//   h~ = sum_k h_k
//   i = sig(W_i x + U_i h~ + b_i)      f_k = sig(W_f x + U_f h_k + b_f)
//   o = sig(W_o x + U_o h~ + b_o)      u   = tanh(W_u x + U_u h~ + b_u)
//   c = i*u + sum_k f_k*c_k            h   = o*tanh(c)
// Outside uses the same cell with no input term and separate U/b, over
// S(p) = parent outside state followed by sibling inside states.

#include "iotyper/errors.hpp"
#include "iotyper/iornn.hpp"

namespace iotyper {

using ad::Tape;
using ad::Var;

namespace {

constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "u"};

struct Source {
  Var h;
  Var c;
};

// Shared cell body. `input_terms[g]` is W_g x for the inside cell and an
// invalid Var for the outside cell.
void lstm_cell(Tape& t, const std::array<Var, 4>& input_terms, const std::array<std::size_t, 4>& u,
               const std::array<std::size_t, 4>& b, const std::vector<Source>& sources, std::size_t d_hidden,
               Var& h_out, Var& c_out) {
  using G = ChildSumParams;
  auto pre = [&](int g, Var recurrent) {
    Var acc = t.param(b[g]);
    if (input_terms[g].valid()) acc = t.add(input_terms[g], acc);
    if (recurrent.valid()) acc = t.add(t.matvec(t.param(u[g]), recurrent), acc);
    return acc;
  };

  Var h_sum;
  if (!sources.empty()) {
    std::vector<Var> hs;
    hs.reserve(sources.size());
    for (const auto& s : sources) hs.push_back(s.h);
    h_sum = t.sum_list(hs, d_hidden);
  }
  const Var i = t.sigmoid(pre(G::kInput, h_sum));
  const Var o = t.sigmoid(pre(G::kOutput, h_sum));
  const Var u_gate = t.tanh(pre(G::kUpdate, h_sum));

  std::vector<Var> cell_terms;
  cell_terms.reserve(sources.size() + 1);
  cell_terms.push_back(t.hadamard(i, u_gate));
  for (const auto& s : sources) {
    const Var f = t.sigmoid(pre(G::kForget, s.h));
    cell_terms.push_back(t.hadamard(f, s.c));
  }
  c_out = cell_terms.size() == 1 ? cell_terms[0] : t.sum_list(cell_terms, d_hidden);
  h_out = t.hadamard(o, t.tanh(c_out));
}

}  // namespace

ChildSumParams ChildSumParams::bind(const ad::ParameterStore& store) {
  ChildSumParams p{};
  p.embedding = store.index("embedding");
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string s = kGateNames[g];
    p.in_w[g] = store.index("inside.W_" + s);
    p.in_u[g] = store.index("inside.U_" + s);
    p.in_b[g] = store.index("inside.b_" + s);
    p.out_u[g] = store.index("outside.U_" + s);
    p.out_b[g] = store.index("outside.b_" + s);
  }
  return p;
}

void inside_pass_childsum(const AugmentedTree& tree, const ChildSumParams& p, std::size_t d_hidden, Tape& t,
                          NodeStates& states) {
  const auto& nodes = tree.nodes();
  const Var table = t.param(p.embedding);

  auto compute = [&](std::uint32_t n) {
    const GraphNode& g = nodes[n];
    const Var x = t.embed_lookup(table, g.token);
    std::array<Var, 4> wx;
    for (std::size_t k = 0; k < 4; ++k) wx[k] = t.matvec(t.param(p.in_w[k]), x);
    std::vector<Source> children;
    children.reserve(g.children.size());
    for (std::uint32_t c : g.children) {
      if (!states.inside_h[c].valid()) {
        throw OrderingError("inside pass: child " + std::to_string(nodes[c].node_id) + " of node " +
                            std::to_string(g.node_id) + " has no state yet");
      }
      children.push_back({states.inside_h[c], states.inside_c[c]});
    }
    lstm_cell(t, wx, p.in_u, p.in_b, children, d_hidden, states.inside_h[n], states.inside_c[n]);
  };

  for (std::size_t s = 0; s < tree.sinks().size(); ++s) compute(tree.sink_node(s));
  for (std::uint32_t n : tree.postorder()) compute(n);
}

void outside_pass_childsum(const AugmentedTree& tree, const ChildSumParams& p, std::size_t d_hidden, Tape& t,
                           NodeStates& states) {
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return;
  if (!states.inside_h[0].valid()) throw OrderingError("outside pass: inside pass has not run");
  states.outside_h[0] = states.inside_h[0];
  states.outside_c[0] = states.inside_c[0];

  const std::array<Var, 4> no_input{};
  auto compute = [&](std::uint32_t n) {
    std::vector<Source> sources;
    for (std::uint32_t q : nodes[n].parents) {
      if (!states.outside_h[q].valid()) {
        throw OrderingError("outside pass: parent " + std::to_string(nodes[q].node_id) + " of node " +
                            std::to_string(nodes[n].node_id) + " has no outside state");
      }
      sources.push_back({states.outside_h[q], states.outside_c[q]});
      for (std::uint32_t s : nodes[q].children) {
        if (s != n) sources.push_back({states.inside_h[s], states.inside_c[s]});
      }
    }
    lstm_cell(t, no_input, p.out_u, p.out_b, sources, d_hidden, states.outside_h[n], states.outside_c[n]);
  };

  // Tree nodes are stored in pre-order; sinks follow and need every
  // occurrence done first.
  for (std::uint32_t n = 1; n < nodes.size(); ++n) compute(n);
}

}  // namespace iotyper
