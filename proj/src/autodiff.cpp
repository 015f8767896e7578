// Copyright 2026 The MobGT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mobgt/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mobgt::ad {

Parameter& ParameterSet::add(std::string name, Matrix init, bool decay) {
  if (find(name) != nullptr) throw std::logic_error("duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(init);
  p->decay = decay;
  p->zero_grad();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("no parameter " + std::string(name));
  return *p;
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return uniform(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

const Matrix& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{Matrix(), {}, {}, &p, record_});
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const Var& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw std::logic_error("backward: root must be a 1x1 value");
  }
  accumulate(root, Matrix::Ones(1, 1));
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  return t.push(a.value() * b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, g * b.value().transpose());
    if (tp.needs_grad(b)) tp.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_transposed(Var a, Var b) {
  Tape& t = a.tape();
  return t.push(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, g * b.value());
    if (tp.needs_grad(b)) tp.accumulate(b, g.transpose() * a.value());
  });
}

Var add(Var a, Var b) {
  return a.tape().push(a.value() + b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  return a.tape().push(a.value() - b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, -g);
  });
}

Var hadamard(Var a, Var b) {
  return a.tape().push(a.value().cwiseProduct(b.value()), {a, b},
                       [a, b](Tape& tp, const Matrix& g) {
                         if (tp.needs_grad(a)) tp.accumulate(a, g.cwiseProduct(b.value()));
                         if (tp.needs_grad(b)) tp.accumulate(b, g.cwiseProduct(a.value()));
                       });
}

Var scale(Var a, double s) {
  return a.tape().push(a.value() * s, {a}, [a, s](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g * s);
  });
}

Var add_row(Var a, Var row) {
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape().push(std::move(out), {a, row}, [a, row](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.needs_grad(row)) tp.accumulate(row, g.colwise().sum());
  });
}

Var linear(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

Var spmm(std::shared_ptr<const SparseMatrix> lhs, Var h) {
  Matrix out = (*lhs) * h.value();
  return h.tape().push(std::move(out), {h}, [lhs, h](Tape& tp, const Matrix& g) {
    tp.accumulate(h, Matrix(lhs->transpose() * g));
  });
}

Var leaky_relu(Var a, double slope) {
  Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return a.tape().push(std::move(out), {a}, [a, slope](Tape& tp, const Matrix& g) {
    Matrix d = a.value().unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
    tp.accumulate(a, g.cwiseProduct(d));
  });
}

Var gelu(Var a) {
  Matrix out = a.value().unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); });
  return a.tape().push(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Matrix d = a.value().unaryExpr([inv_sqrt_2pi](double v) {
      return 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)) +
             v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    });
    tp.accumulate(a, g.cwiseProduct(d));
  });
}

Var concat_cols(std::span<const Var> parts) {
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front().rows();
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().push(std::move(out), parts, [inputs](Tape& tp, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const Var& p : inputs) {
      if (tp.needs_grad(p)) tp.accumulate(p, g.middleCols(offset, p.cols()));
      offset += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().push(std::move(out), parts, [inputs](Tape& tp, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const Var& p : inputs) {
      if (tp.needs_grad(p)) tp.accumulate(p, g.middleRows(offset, p.rows()));
      offset += p.rows();
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Matrix out = a.value().middleCols(start, count);
  return a.tape().push(std::move(out), {a}, [a, start, count](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = g;
    tp.accumulate(a, full);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  Matrix out = a.value().middleRows(start, count);
  return a.tape().push(std::move(out), {a}, [a, start, count](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleRows(start, count) = g;
    tp.accumulate(a, full);
  });
}

Var gather_rows(Var table, std::span<const int> rows) {
  const Matrix& src = table.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= src.rows()) throw std::out_of_range("gather_rows: index");
    out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return table.tape().push(std::move(out), {table}, [table, idx](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(table.rows(), table.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(table, full);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& in = x.value();
  const Eigen::Index n = in.rows();
  const auto width = static_cast<double>(in.cols());
  Matrix xhat(n, in.cols());
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = in.row(r).mean();
    const double var = (in.row(r).array() - mu).square().sum() / width;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  return x.tape().push(
      std::move(out), {x, gain, bias},
      [x, gain, bias, xhat, inv_std, width](Tape& tp, const Matrix& g) {
        if (tp.needs_grad(gain)) tp.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
        if (tp.needs_grad(bias)) tp.accumulate(bias, g.colwise().sum());
        if (!tp.needs_grad(x)) return;
        Matrix dxhat = g;
        dxhat.array().rowwise() *= gain.value().row(0).array();
        Matrix dx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const double m1 = dxhat.row(r).sum() / width;
          const double m2 = dxhat.row(r).dot(xhat.row(r)) / width;
          dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
        }
        tp.accumulate(x, dx);
      });
}

Var softmax_rows(Var a) {
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).unaryExpr([](double v) { return std::exp(v); });
    out.row(r) /= out.row(r).sum();
  }
  Matrix y = out;
  return a.tape().push(std::move(out), {a}, [a, y = std::move(y)](Tape& tp, const Matrix& g) {
    Matrix dx(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      dx.row(r) = y.row(r).array() * (g.row(r).array() - dot);
    }
    tp.accumulate(a, dx);
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().push(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean_of(std::span<const Var> scalars) {
  Matrix out = Matrix::Zero(1, 1);
  for (const Var& s : scalars) out(0, 0) += s.scalar();
  const double inv = 1.0 / static_cast<double>(scalars.size());
  out(0, 0) *= inv;
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().tape().push(std::move(out), scalars, [inputs, inv](Tape& tp, const Matrix& g) {
    for (const Var& s : inputs) tp.accumulate(s, g * inv);
  });
}

}  // namespace mobgt::ad
