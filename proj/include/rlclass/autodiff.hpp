// Copyright 2026 The rlclass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tape-based reverse-mode differentiation over Tensor.
//
// A Tape records every primitive executed on its Vars in order. backward()
// replays that record in reverse, each recorded op adding its contribution
// into the gradient buffers of its inputs. Gradients accumulate: parameters
// and differentiable inputs keep summing across backward calls until they are
// explicitly zeroed, while intermediate buffers are rebuilt on every call.

#ifndef RLCLASS_AUTODIFF_HPP_
#define RLCLASS_AUTODIFF_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "rlclass/tensor.hpp"

namespace rlclass {

class Tape;

// Handle to a tensor recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient accumulated by backward(); empty if none reached this Var.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Receives the gradient of the op's output and pointers to the gradient
// buffers of its inputs (nullptr where an input needs no gradient).
using BackwardFn =
    std::function<void(const Tensor& grad_out, std::span<Tensor* const> grad_in)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-differentiable leaf owning a copy of `value`.
  Var constant(Tensor value);
  // Non-differentiable leaf viewing `value`, which must outlive the tape.
  Var constant_view(const Tensor& value);
  // Differentiable leaf; its gradient is read back through Var::grad().
  Var input(Tensor value);
  // Leaf bound to a parameter; backward() accumulates into param.grad.
  Var parameter(Parameter& param);

  // Appends an op output. `backward` may be empty when no input requires grad.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Propagates d(loss)/d(.) to every differentiable leaf reachable from loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  // Ops visited by the most recent backward() call.
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  friend class Var;

  struct Node {
    Tensor owned;
    const Tensor* value = nullptr;
    Tensor grad;
    Tensor pass;  // leaves: this backward call's contribution
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
    bool leaf = true;
  };

  Tensor* grad_buffer(Node& node);

  // deque keeps element addresses stable as the record grows.
  std::deque<Node> nodes_;
  std::size_t last_visits_ = 0;
};

namespace ops {

// 3x3 cross-correlation, stride 1, zero padding 1.
// input [B,H,W,Cin], kernel [3,3,Cin,Cout], bias [Cout] -> [B,H,W,Cout].
Var conv2d(Var input, Var kernel, Var bias);

// 2x2 max pooling with stride 2. Ties route the gradient to the first
// element of the window in row-major order.
Var max_pool2x2(Var input);

// input [B,n], weight [n,m], bias [m] -> [B,m].
Var dense(Var input, Var weight, Var bias);

Var relu(Var input);

constexpr float kLayerNormEpsilon = 1e-5f;

// Per-row standardization over the last axis of [B,n], then gain/shift.
Var layer_norm(Var input, Var gain, Var shift, float epsilon = kLayerNormEpsilon);

// Row-wise softmax of [B,K] with max subtraction.
Var softmax(Var logits);

// [B, ...] -> [B, prod(...)].
Var flatten(Var input);

// Scalar sum of all elements.
Var sum(Var input);

// Scalar sum of input * weights, weights a constant of the same shape.
Var weighted_sum(Var input, const Tensor& weights);

// Scalar sum_t coeff[t] * log(max(probs[t, index[t]], floor)) for probs [B,K].
// Only the picked entries receive gradient; entries at or below the floor get
// zero gradient.
Var weighted_log_pick(Var probs, std::span<const int> index,
                      std::span<const float> coeff, float floor);

}  // namespace ops
}  // namespace rlclass

#endif  // RLCLASS_AUTODIFF_HPP_
