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

#include "rlclass/objectives.hpp"

#include <vector>

#include "rlclass/errors.hpp"

namespace rlclass {
namespace {

std::size_t batch_of(Var probs) {
  const Tensor& p = probs.value();
  if (p.rank() != 2) throw ShapeError("loss expects probabilities [B,K]");
  return static_cast<std::size_t>(p.dim(0));
}

}  // namespace

LossValue vpg_loss(Var probs, std::span<const int> actions, const RewardBatch& rewards) {
  const std::size_t batch = batch_of(probs);
  if (actions.size() != batch || rewards.rewards.size() != batch) {
    throw ShapeError("vpg_loss: actions/rewards do not match the batch size");
  }
  const float inv_b = 1.0f / static_cast<float>(batch);
  std::vector<float> coeff(batch);
  for (std::size_t t = 0; t < batch; ++t) coeff[t] = -inv_b * rewards.rewards[t];
  return {ops::weighted_log_pick(probs, actions, coeff, kLogProbFloor), batch};
}

LossValue cross_entropy_loss(Var probs, std::span<const int> labels) {
  const std::size_t batch = batch_of(probs);
  if (labels.size() != batch) throw ShapeError("cross_entropy_loss: label count mismatch");
  const float inv_b = 1.0f / static_cast<float>(batch);
  std::vector<float> coeff(batch, -inv_b);
  return {ops::weighted_log_pick(probs, labels, coeff, kLogProbFloor), batch};
}

}  // namespace rlclass
