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

#ifndef RLCLASS_OBJECTIVES_HPP_
#define RLCLASS_OBJECTIVES_HPP_

#include <cstddef>
#include <span>

#include "rlclass/autodiff.hpp"
#include "rlclass/reward_env.hpp"

namespace rlclass {

// Lower clamp applied to every probability before taking its log.
constexpr float kLogProbFloor = 1e-12f;

struct LossValue {
  Var value;  // scalar, differentiable back to the probabilities
  std::size_t batch_size = 0;

  float item() const { return value.value().item(); }
};

// Policy-gradient loss over one-step episodes:
//   sum_t -(1/B) * log(P(a_t | s_t)) * R_t
// Only the taken-action probabilities receive gradient. The value is negative
// whenever penalties outweigh rewards.
LossValue vpg_loss(Var probs, std::span<const int> actions, const RewardBatch& rewards);

// -(1/B) * sum_t log(P(y_t | s_t))
LossValue cross_entropy_loss(Var probs, std::span<const int> labels);

}  // namespace rlclass

#endif  // RLCLASS_OBJECTIVES_HPP_
