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

// Classification as a one-step environment: the state is an image, the action
// is a predicted class, and the reward depends only on the action, the true
// label and the reward scheme.

#ifndef RLCLASS_REWARD_ENV_HPP_
#define RLCLASS_REWARD_ENV_HPP_

#include <span>
#include <vector>

#include "rlclass/network.hpp"
#include "rlclass/tensor.hpp"

namespace rlclass {

struct RewardScheme {
  double reward_correct = 1.0;
  double reward_wrong = -1.0;
  // Optional, one positive entry per class; scales both magnitudes by the
  // sample's true class.
  std::vector<double> per_class_scale;

  // Throws ConfigError unless reward_correct > reward_wrong and every scale
  // entry is positive with exactly num_classes entries (when present).
  void validate(int num_classes) const;
  double scale(int label) const;

  friend bool operator==(const RewardScheme&, const RewardScheme&) = default;
};

struct RewardBatch {
  std::vector<float> rewards;
};

// rewards[t] = scale(y_t) * (a_t == y_t ? reward_correct : reward_wrong),
// optionally times sample_multiplier[t] (trainer-supplied shaping hook).
RewardBatch assign_rewards(std::span<const int> actions, std::span<const int> labels,
                           const RewardScheme& scheme, int num_classes,
                           std::span<const float> sample_multiplier = {});

struct EpisodeStep {
  ActionBatch actions;
  RewardBatch rewards;
};

// Sample actions from already-computed probabilities and score them.
EpisodeStep score_sampled(const Tensor& probs, std::span<const int> labels,
                          const RewardScheme& scheme, Rng& rng);

// predict_probs -> sample_actions -> assign_rewards.
EpisodeStep episode_step(const Network& net, const Tensor& images,
                         std::span<const int> labels, const RewardScheme& scheme, Rng& rng);

}  // namespace rlclass

#endif  // RLCLASS_REWARD_ENV_HPP_
