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

#include "rlclass/network.hpp"

#include <algorithm>
#include <cmath>

#include "rlclass/errors.hpp"

namespace rlclass {
namespace {

constexpr std::int64_t kPredictChunk = 256;

Tensor he_uniform(Shape shape, std::int64_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-limit, limit);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

NetworkConfig NetworkConfig::Default() {
  NetworkConfig c;
  c.conv_blocks = {{2, 32}, {2, 64}, {2, 128}};
  c.dense_units = {256};
  c.num_classes = 10;
  c.input_shape = {32, 32, 3};
  return c;
}

void NetworkConfig::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  for (int extent : input_shape) {
    if (extent <= 0) throw ConfigError("input_shape extents must be positive");
  }
  int h = input_shape[0], w = input_shape[1];
  for (const auto& block : conv_blocks) {
    if (block.num_conv_layers < 1 || block.channels < 1) {
      throw ConfigError("conv blocks need at least one layer and one channel");
    }
    if (h % 2 != 0 || w % 2 != 0) {
      throw ConfigError("pooling exhausts the spatial extent: cannot pool " +
                        std::to_string(h) + "x" + std::to_string(w));
    }
    h /= 2;
    w /= 2;
  }
  if (h < 1 || w < 1) throw ConfigError("pooling exhausts the spatial extent");
  for (int units : dense_units) {
    if (units < 1) throw ConfigError("dense layers need at least one unit");
  }
}

std::size_t NetworkConfig::parameter_count() const {
  validate();
  std::size_t count = 0;
  std::size_t channels = input_shape[2];
  std::size_t h = input_shape[0], w = input_shape[1];
  for (const auto& block : conv_blocks) {
    for (int l = 0; l < block.num_conv_layers; ++l) {
      count += 9 * channels * block.channels + block.channels;
      channels = block.channels;
    }
    h /= 2;
    w /= 2;
  }
  std::size_t width = h * w * channels;
  for (int units : dense_units) {
    count += width * units + units;
    width = units;
  }
  count += width * num_classes + num_classes;
  count += 2 * num_classes;
  return count;
}

Network Network::build(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Network net;
  net.config_ = config;
  Rng rng(seed);

  auto add_param = [&net](std::string name, Tensor value) {
    net.params_.emplace_back(std::move(name), std::move(value));
  };

  std::int64_t channels = config.input_shape[2];
  std::int64_t h = config.input_shape[0], w = config.input_shape[1];
  for (std::size_t b = 0; b < config.conv_blocks.size(); ++b) {
    const auto& block = config.conv_blocks[b];
    for (int l = 0; l < block.num_conv_layers; ++l) {
      const std::string prefix =
          "conv" + std::to_string(b + 1) + "_" + std::to_string(l + 1);
      net.layers_.push_back({LayerKind::kConv, static_cast<int>(net.params_.size())});
      add_param(prefix + "/kernel",
                he_uniform({3, 3, channels, block.channels}, 9 * channels, rng));
      add_param(prefix + "/bias", Tensor({block.channels}));
      net.layers_.push_back({LayerKind::kRelu});
      channels = block.channels;
    }
    net.layers_.push_back({LayerKind::kPool});
    h /= 2;
    w /= 2;
  }
  net.layers_.push_back({LayerKind::kFlatten});
  std::int64_t width = h * w * channels;
  for (std::size_t d = 0; d < config.dense_units.size(); ++d) {
    const std::int64_t units = config.dense_units[d];
    const std::string prefix = "dense" + std::to_string(d + 1);
    net.layers_.push_back({LayerKind::kDense, static_cast<int>(net.params_.size())});
    add_param(prefix + "/weight", he_uniform({width, units}, width, rng));
    add_param(prefix + "/bias", Tensor({units}));
    net.layers_.push_back({LayerKind::kRelu});
    width = units;
  }
  net.layers_.push_back({LayerKind::kDense, static_cast<int>(net.params_.size())});
  add_param("logits/weight", he_uniform({width, config.num_classes}, width, rng));
  add_param("logits/bias", Tensor({config.num_classes}));
  net.layers_.push_back({LayerKind::kLayerNorm, static_cast<int>(net.params_.size())});
  add_param("layer_norm/gain", Tensor({config.num_classes}, 1.0f));
  add_param("layer_norm/shift", Tensor({config.num_classes}));
  net.layers_.push_back({LayerKind::kSoftmax});
  return net;
}

Parameter* Network::find_parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void Network::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Network::check_input(const Tensor& images) const {
  const auto& in = config_.input_shape;
  if (images.rank() != 4 || images.dim(1) != in[0] || images.dim(2) != in[1] ||
      images.dim(3) != in[2]) {
    throw ShapeError("network expects images [B," + std::to_string(in[0]) + "," +
                     std::to_string(in[1]) + "," + std::to_string(in[2]) + "], got " +
                     shape_string(images.shape()));
  }
}

template <typename BindFn>
Var Network::run(Var images, BindFn&& bind) const {
  check_input(images.value());
  Var x = images;
  for (const Layer& layer : layers_) {
    switch (layer.kind) {
      case LayerKind::kConv:
        x = ops::conv2d(x, bind(layer.first_param), bind(layer.first_param + 1));
        break;
      case LayerKind::kPool:
        x = ops::max_pool2x2(x);
        break;
      case LayerKind::kFlatten:
        x = ops::flatten(x);
        break;
      case LayerKind::kDense:
        x = ops::dense(x, bind(layer.first_param), bind(layer.first_param + 1));
        break;
      case LayerKind::kRelu:
        x = ops::relu(x);
        break;
      case LayerKind::kLayerNorm:
        x = ops::layer_norm(x, bind(layer.first_param), bind(layer.first_param + 1));
        break;
      case LayerKind::kSoftmax:
        x = ops::softmax(x);
        break;
    }
  }
  return x;
}

Var Network::forward(Tape& tape, Var images) {
  return run(images, [&](int i) { return tape.parameter(params_[i]); });
}

Var Network::forward_frozen(Tape& tape, Var images) const {
  return run(images, [&](int i) { return tape.constant_view(params_[i].value); });
}

Tensor Network::predict_probs(const Tensor& images) const {
  check_input(images);
  const std::int64_t n = images.dim(0);
  const std::int64_t k = config_.num_classes;
  Tensor probs({n, k});
  for (std::int64_t begin = 0; begin < n; begin += kPredictChunk) {
    const std::int64_t count = std::min(kPredictChunk, n - begin);
    Tape tape;
    Var x = tape.constant(count == n ? images : images.slice_rows(begin, count));
    const Tensor& p = forward_frozen(tape, x).value();
    std::copy(p.data().begin(), p.data().end(), probs.data().begin() + begin * k);
  }
  return probs;
}

std::vector<int> Network::predict_classes(const Tensor& images) const {
  return argmax_rows(predict_probs(images));
}

std::vector<int> argmax_rows(const Tensor& probs) {
  if (probs.rank() != 2) throw ShapeError("argmax_rows expects [B,K]");
  const std::size_t rows = probs.dim(0), k = probs.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (probs[r * k + j] > probs[r * k + best]) best = j;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

ActionBatch sample_actions(const Tensor& probs, Rng& rng) {
  if (probs.rank() != 2) throw ShapeError("sample_actions expects [B,K]");
  const std::size_t rows = probs.dim(0), k = probs.dim(1);
  ActionBatch batch;
  batch.actions.resize(rows);
  batch.log_probs.resize(rows);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* p = probs.data().data() + r * k;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!(p[j] >= 0.0f)) {
        throw ContractViolation("sample_actions: negative or NaN probability");
      }
      total += p[j];
    }
    if (std::abs(total - 1.0) > 1e-4) {
      throw ContractViolation("sample_actions: row " + std::to_string(r) + " sums to " +
                              std::to_string(total));
    }
    const double u = unit(rng) * total;
    double cumulative = 0.0;
    std::size_t chosen = k;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (p[j] > 0.0f) last_positive = j;
      cumulative += p[j];
      if (u < cumulative) {
        chosen = j;
        break;
      }
    }
    if (chosen == k) chosen = last_positive;
    batch.actions[r] = static_cast<int>(chosen);
    batch.log_probs[r] = std::log(static_cast<double>(p[chosen]));
  }
  return batch;
}

}  // namespace rlclass
