// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "iotyper/training.hpp"

namespace iotyper {

AdamState::AdamState(const ad::ParameterStore& params) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params.value(i);
    m.emplace_back(p.rows(), p.cols());
    v.emplace_back(p.rows(), p.cols());
  }
}

void adam_step(ad::ParameterStore& params, AdamState& state, std::size_t step, double lr, double l2,
               const AdamOptions& opt) {
  if (step < 1) throw std::invalid_argument("adam_step: step counts from 1");
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameters");
  const double t = static_cast<double>(step);
  const double bias1 = 1.0 - std::pow(opt.beta1, t);
  const double bias2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    ad::Matrix& theta = params.value(p);
    const ad::Matrix& grad = params.grad(p);
    ad::Matrix& m = state.m[p];
    ad::Matrix& v = state.v[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] + l2 * theta[i];
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
}

}  // namespace iotyper
