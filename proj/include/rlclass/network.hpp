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

#ifndef RLCLASS_NETWORK_HPP_
#define RLCLASS_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rlclass/autodiff.hpp"
#include "rlclass/tensor.hpp"

namespace rlclass {

// Engine used for every seeded stream (initialization, shuffling, sampling).
using Rng = std::mt19937_64;

struct ConvBlock {
  int num_conv_layers = 2;
  int channels = 32;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

// VGG-style stack: each block is `num_conv_layers` 3x3 convs with ReLU and a
// closing 2x2 max-pool. Then flatten, hidden dense layers with ReLU, a dense
// projection to num_classes, layer norm and softmax.
struct NetworkConfig {
  std::vector<ConvBlock> conv_blocks;
  std::vector<int> dense_units;
  int num_classes = 10;
  std::array<int, 3> input_shape{32, 32, 3};

  // 2x32, pool, 2x64, pool, 2x128, pool, dense 256, dense 10.
  static NetworkConfig Default();

  // Throws ConfigError when a value is out of range or pooling exhausts the
  // spatial extent.
  void validate() const;
  std::size_t parameter_count() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

class Network {
 public:
  // He-uniform weights (limit sqrt(6 / fan_in)), zero biases, unit layer-norm
  // gain and zero shift. Equal seeds give bit-identical parameters.
  static Network build(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter* find_parameter(const std::string& name);
  void zero_grad();

  // Records the forward pass for `images` [B,H,W,C] and returns probs [B,K].
  // Parameter gradients accumulate into parameters() on backward.
  Var forward(Tape& tape, Var images);
  // Same computation with the parameters held constant.
  Var forward_frozen(Tape& tape, Var images) const;

  Tensor predict_probs(const Tensor& images) const;
  // Argmax per row, ties to the lowest class index.
  std::vector<int> predict_classes(const Tensor& images) const;

 private:
  enum class LayerKind { kConv, kPool, kFlatten, kDense, kRelu, kLayerNorm, kSoftmax };
  struct Layer {
    LayerKind kind;
    int first_param = -1;  // index into params_ of the layer's first tensor
  };

  template <typename BindFn>
  Var run(Var images, BindFn&& bind) const;
  void check_input(const Tensor& images) const;

  NetworkConfig config_;
  std::vector<Layer> layers_;
  std::vector<Parameter> params_;
};

// Argmax per row with ties to the lowest index.
std::vector<int> argmax_rows(const Tensor& probs);

struct ActionBatch {
  std::vector<int> actions;
  std::vector<double> log_probs;
};

// Draws one class per row of `probs` from the categorical distribution the
// row defines. Rows must sum to 1 within 1e-4.
ActionBatch sample_actions(const Tensor& probs, Rng& rng);

}  // namespace rlclass

#endif  // RLCLASS_NETWORK_HPP_
