// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include "iotyper/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "iotyper/errors.hpp"

namespace iotyper::ad {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

// ---------------------------------------------------------------------------
// ParameterStore

std::size_t ParameterStore::add(std::string name, Matrix init) {
  if (lookup_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  const std::size_t idx = values_.size();
  lookup_.emplace(name, idx);
  names_.push_back(std::move(name));
  grads_.emplace_back(init.rows(), init.cols());
  values_.push_back(std::move(init));
  return idx;
}

bool ParameterStore::contains(std::string_view name) const { return lookup_.find(name) != lookup_.end(); }

std::size_t ParameterStore::index(std::string_view name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& g : grads_) g.fill(0.0);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

nlohmann::ordered_json ParameterStore::to_json() const {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const Matrix& m = values_[i];
    nlohmann::ordered_json entry;
    entry["shape"] = {m.rows(), m.cols()};
    entry["data"] = std::vector<double>(m.data().begin(), m.data().end());
    params[names_[i]] = std::move(entry);
  }
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["params"] = std::move(params);
  return j;
}

ParameterStore ParameterStore::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("format_version") || !j.contains("params")) {
    throw ValidationError("parameter store: expected object with format_version and params");
  }
  if (j.at("format_version") != 1) {
    throw ValidationError("parameter store: unsupported format_version " + j.at("format_version").dump());
  }
  ParameterStore store;
  for (const auto& [name, entry] : j.at("params").items()) {
    const auto& shape = entry.at("shape");
    if (!shape.is_array() || shape.size() != 2) throw ValidationError("parameter " + name + ": bad shape");
    auto data = entry.at("data").get<std::vector<double>>();
    const auto rows = shape[0].get<std::size_t>();
    const auto cols = shape[1].get<std::size_t>();
    if (data.size() != rows * cols) {
      throw ValidationError("parameter " + name + ": data length does not match shape");
    }
    store.add(name, Matrix(rows, cols, std::move(data)));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Tape

std::string_view op_name(OpKind op) noexcept {
  switch (op) {
    case OpKind::Constant: return "constant";
    case OpKind::Param: return "param";
    case OpKind::MatVec: return "matvec";
    case OpKind::Add: return "add";
    case OpKind::Hadamard: return "hadamard";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::SumList: return "sum_list";
    case OpKind::EmbedLookup: return "embed_lookup";
    case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::Sum: return "sum";
    case OpKind::Scale: return "scale";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_mismatch(OpKind op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

void require_vector(OpKind op, const Matrix& x) {
  if (!x.is_vector()) throw ShapeError(std::string(op_name(op)) + ": expected a column vector, got " + x.shape_string());
}

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

const Matrix& Tape::val(std::uint32_t id) const {
  const Entry& e = entries_[id];
  return e.op == OpKind::Param ? params_->value(e.aux) : e.value;
}

const Matrix& Tape::value(Var v) const {
  if (v.id >= entries_.size()) throw std::out_of_range("tape: invalid variable");
  return val(v.id);
}

Var Tape::push(Entry e) {
  if (e.op != OpKind::Param && e.op != OpKind::Constant && !e.value.all_finite()) {
    throw NumericError(std::string(op_name(e.op)) + ": non-finite output");
  }
  entries_.push_back(std::move(e));
  return Var{static_cast<std::uint32_t>(entries_.size() - 1)};
}

std::vector<std::uint32_t> Tape::inputs(Var v) const {
  const Entry& e = entries_.at(v.id);
  std::vector<std::uint32_t> out;
  if (e.a != UINT32_MAX) out.push_back(e.a);
  if (e.b != UINT32_MAX) out.push_back(e.b);
  out.insert(out.end(), e.list.begin(), e.list.end());
  return out;
}

Var Tape::constant(Matrix value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  Entry e{.op = OpKind::Constant};
  e.value = std::move(value);
  return push(std::move(e));
}

Var Tape::param(std::size_t index) {
  if (index >= params_->size()) throw std::out_of_range("tape: parameter index out of range");
  if (param_leaf_.size() < params_->size()) param_leaf_.resize(params_->size(), UINT32_MAX);
  if (param_leaf_[index] != UINT32_MAX) return Var{param_leaf_[index]};
  Entry e{.op = OpKind::Param};
  e.aux = index;
  Var v = push(std::move(e));
  param_leaf_[index] = v.id;
  return v;
}

Var Tape::matvec(Var w, Var x) {
  const Matrix& W = value(w);
  const Matrix& X = value(x);
  require_vector(OpKind::MatVec, X);
  if (W.cols() != X.rows()) shape_mismatch(OpKind::MatVec, W, X);
  Matrix y(W.rows(), 1);
  const double* xd = X.data().data();
  for (std::size_t r = 0; r < W.rows(); ++r) {
    const double* wr = W.data().data() + r * W.cols();
    double acc = 0.0;
    for (std::size_t c = 0; c < W.cols(); ++c) acc += wr[c] * xd[c];
    y[r] = acc;
  }
  Entry e{.op = OpKind::MatVec, .a = w.id, .b = x.id};
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::add(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (!A.same_shape(B)) shape_mismatch(OpKind::Add, A, B);
  Matrix y = A;
  add_into(y, B);
  Entry e{.op = OpKind::Add, .a = a.id, .b = b.id};
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::hadamard(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (!A.same_shape(B)) shape_mismatch(OpKind::Hadamard, A, B);
  Matrix y = A;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= B[i];
  Entry e{.op = OpKind::Hadamard, .a = a.id, .b = b.id};
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::sigmoid(Var x) {
  Matrix y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
  Entry e{.op = OpKind::Sigmoid, .a = x.id};
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::tanh(Var x) {
  Matrix y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  Entry e{.op = OpKind::Tanh, .a = x.id};
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::relu(Var x) {
  Matrix y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
  Entry e{.op = OpKind::Relu, .a = x.id};
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::sum_list(std::span<const Var> xs, std::size_t rows) {
  Matrix y(rows, 1);
  Entry e{.op = OpKind::SumList};
  e.list.reserve(xs.size());
  for (Var v : xs) {
    const Matrix& X = value(v);
    if (!X.same_shape(y)) shape_mismatch(OpKind::SumList, y, X);
    add_into(y, X);
    e.list.push_back(v.id);
  }
  e.value = std::move(y);
  return push(std::move(e));
}

Var Tape::embed_lookup(Var table, std::size_t row) {
  const Matrix& L = value(table);
  if (row >= L.rows()) {
    throw std::out_of_range("embed_lookup: row " + std::to_string(row) + " outside table " + L.shape_string());
  }
  auto r = L.row(row);
  Entry e{.op = OpKind::EmbedLookup, .a = table.id};
  e.aux = row;
  e.value = Matrix::vector(std::vector<double>(r.begin(), r.end()));
  return push(std::move(e));
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t target) {
  const Matrix& z = value(logits);
  require_vector(OpKind::SoftmaxCrossEntropy, z);
  if (target >= z.rows()) throw std::out_of_range("softmax_cross_entropy: target class out of range");
  const double zmax = *std::max_element(z.data().begin(), z.data().end());
  double denom = 0.0;
  Matrix p(z.rows(), 1);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    denom += p[i];
  }
  for (std::size_t i = 0; i < z.rows(); ++i) p[i] /= denom;
  Entry e{.op = OpKind::SoftmaxCrossEntropy, .a = logits.id};
  e.aux = target;
  e.value = Matrix::vector({std::log(denom) + zmax - z[target]});
  e.saved = std::move(p);
  return push(std::move(e));
}

Var Tape::sum(Var x) {
  const Matrix& X = value(x);
  double s = 0.0;
  for (double v : X.data()) s += v;
  Entry e{.op = OpKind::Sum, .a = x.id};
  e.value = Matrix::vector({s});
  return push(std::move(e));
}

Var Tape::scale(Var x, double factor) {
  Matrix y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= factor;
  Entry e{.op = OpKind::Scale, .a = x.id};
  e.factor = factor;
  e.value = std::move(y);
  return push(std::move(e));
}

Matrix& Tape::grad_buf(std::uint32_t id) {
  Entry& e = entries_[id];
  if (e.grad.size() == 0) {
    const Matrix& v = val(id);
    e.grad = Matrix(v.rows(), v.cols());
  }
  return e.grad;
}

void Tape::backward(Var loss, ParameterStore& store) {
  if (!value(loss).is_scalar()) {
    throw ShapeError("backward: loss must be 1x1, got " + value(loss).shape_string());
  }
  if (&store != params_) throw std::invalid_argument("backward: store differs from the tape's parameter store");
  for (auto& e : entries_) e.grad = Matrix();
  grad_buf(loss.id)[0] = 1.0;

  for (std::size_t n = loss.id + 1; n-- > 0;) {
    const auto id = static_cast<std::uint32_t>(n);
    if (entries_[id].grad.size() == 0) continue;
    // Inputs always precede their consumer, so grad_buf() below never
    // touches entry `id` itself.
    Entry& e = entries_[id];
    const Matrix& dy = e.grad;
    switch (e.op) {
      case OpKind::Constant:
        break;
      case OpKind::Param:
        add_into(store.grad(e.aux), dy);
        break;
      case OpKind::MatVec: {
        const Matrix& W = val(e.a);
        const Matrix& X = val(e.b);
        Matrix& dW = grad_buf(e.a);
        Matrix& dX = grad_buf(e.b);
        for (std::size_t r = 0; r < W.rows(); ++r) {
          const double g = dy[r];
          if (g == 0.0) continue;
          for (std::size_t c = 0; c < W.cols(); ++c) {
            dW(r, c) += g * X[c];
            dX[c] += W(r, c) * g;
          }
        }
        break;
      }
      case OpKind::Add:
        add_into(grad_buf(e.a), dy);
        add_into(grad_buf(e.b), dy);
        break;
      case OpKind::Hadamard: {
        const Matrix& A = val(e.a);
        const Matrix& B = val(e.b);
        Matrix& dA = grad_buf(e.a);
        for (std::size_t i = 0; i < dy.size(); ++i) dA[i] += dy[i] * B[i];
        Matrix& dB = grad_buf(e.b);
        for (std::size_t i = 0; i < dy.size(); ++i) dB[i] += dy[i] * A[i];
        break;
      }
      case OpKind::Sigmoid: {
        Matrix& dX = grad_buf(e.a);
        for (std::size_t i = 0; i < dy.size(); ++i) dX[i] += dy[i] * e.value[i] * (1.0 - e.value[i]);
        break;
      }
      case OpKind::Tanh: {
        Matrix& dX = grad_buf(e.a);
        for (std::size_t i = 0; i < dy.size(); ++i) dX[i] += dy[i] * (1.0 - e.value[i] * e.value[i]);
        break;
      }
      case OpKind::Relu: {
        const Matrix& X = val(e.a);
        Matrix& dX = grad_buf(e.a);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          if (X[i] >= 0.0) dX[i] += dy[i];
        }
        break;
      }
      case OpKind::SumList:
        for (std::uint32_t in : e.list) add_into(grad_buf(in), dy);
        break;
      case OpKind::EmbedLookup: {
        auto row = grad_buf(e.a).row(e.aux);
        for (std::size_t i = 0; i < dy.size(); ++i) row[i] += dy[i];
        break;
      }
      case OpKind::SoftmaxCrossEntropy: {
        Matrix& dZ = grad_buf(e.a);
        const double g = dy[0];
        for (std::size_t i = 0; i < e.saved.size(); ++i) {
          dZ[i] += g * (e.saved[i] - (i == e.aux ? 1.0 : 0.0));
        }
        break;
      }
      case OpKind::Sum: {
        Matrix& dX = grad_buf(e.a);
        for (std::size_t i = 0; i < dX.size(); ++i) dX[i] += dy[0];
        break;
      }
      case OpKind::Scale: {
        Matrix& dX = grad_buf(e.a);
        for (std::size_t i = 0; i < dX.size(); ++i) dX[i] += e.factor * dy[i];
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------

double grad_check(const LossFn& loss_fn, ParameterStore& params, double eps) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw std::invalid_argument("grad_check: eps must lie in (0, 1e-3]");

  params.zero_grad();
  {
    Tape tape(params);
    Var loss = loss_fn(tape);
    tape.backward(loss, params);
  }

  auto eval = [&]() {
    Tape tape(params);
    const double f = tape.value(loss_fn(tape))[0];
    if (!std::isfinite(f)) throw NumericError("grad_check: non-finite loss under perturbation");
    return f;
  };

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = params.value(p);
    const Matrix& analytic = params.grad(p);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double f_plus = eval();
      value[i] = saved - eps;
      const double f_minus = eval();
      value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace iotyper::ad
