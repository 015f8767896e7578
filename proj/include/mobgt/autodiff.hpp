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

#ifndef MOBGT_AUTODIFF_HPP
#define MOBGT_AUTODIFF_HPP

// Minimal tape-based reverse-mode differentiation over dense row-major
// matrices. Every trainable piece of the model is expressed with these ops.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mobgt::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;  // subject to decoupled weight decay

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Owns parameters with stable addresses, in registration order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init, bool decay = true);
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Parameter* find(std::string_view name);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  bool all_finite() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  /// With `record` false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  /// Records a derived value. `backward` runs only when some input needs a
  /// gradient; it must route gradients with accumulate().
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Matrix value, std::span<const Var> inputs, Backward backward);

  void accumulate(Var v, const Matrix& g);
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  /// Seeds d(root)/d(root) = 1 (root must be 1x1) and accumulates into the
  /// grad slot of every reachable Parameter.
  void backward(Var root);

  const Matrix& value(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.param != nullptr ? n.param->value : n.value;
  }
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  // Parameter leaves read the parameter's value in place; it must not change
  // while the tape is alive.
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  bool record_;
  std::deque<Node> nodes_;
};

Var matmul(Var a, Var b);
Var matmul_transposed(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var a, Var row);  // broadcast a 1 x c row over every row of a
Var spmm(std::shared_ptr<const SparseMatrix> lhs, Var h);
Var leaky_relu(Var a, double slope = 0.01);
Var gelu(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var table, std::span<const int> rows);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var a);
Var sum(Var a);
Var mean_of(std::span<const Var> scalars);

/// Glorot-uniform initialization for a (fan_in, fan_out) weight.
Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);
Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, std::mt19937_64& rng);

/// out = x * w + b, with w shaped (in, out) and b shaped (1, out).
Var linear(Var x, Var w, Var b);

}  // namespace mobgt::ad

#endif  // MOBGT_AUTODIFF_HPP
