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

#include "rlclass/reward_env.hpp"

#include <string>

#include "rlclass/errors.hpp"

namespace rlclass {

void RewardScheme::validate(int num_classes) const {
  if (!(reward_correct > reward_wrong)) {
    throw ConfigError("reward_correct must exceed reward_wrong");
  }
  if (!per_class_scale.empty()) {
    if (static_cast<int>(per_class_scale.size()) != num_classes) {
      throw ConfigError("per_class_scale needs one entry per class");
    }
    for (double s : per_class_scale) {
      if (!(s > 0.0)) throw ConfigError("per_class_scale entries must be positive");
    }
  }
}

double RewardScheme::scale(int label) const {
  return per_class_scale.empty() ? 1.0 : per_class_scale.at(label);
}

RewardBatch assign_rewards(std::span<const int> actions, std::span<const int> labels,
                           const RewardScheme& scheme, int num_classes,
                           std::span<const float> sample_multiplier) {
  if (actions.size() != labels.size()) {
    throw InputError("actions and labels differ in length");
  }
  if (!sample_multiplier.empty() && sample_multiplier.size() != labels.size()) {
    throw InputError("sample multiplier length differs from batch");
  }
  scheme.validate(num_classes);
  RewardBatch out;
  out.rewards.resize(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const int a = actions[t], y = labels[t];
    if (a < 0 || a >= num_classes || y < 0 || y >= num_classes) {
      throw InputError("class index out of range at position " + std::to_string(t));
    }
    double r = scheme.scale(y) * (a == y ? scheme.reward_correct : scheme.reward_wrong);
    if (!sample_multiplier.empty()) r *= sample_multiplier[t];
    out.rewards[t] = static_cast<float>(r);
  }
  return out;
}

EpisodeStep score_sampled(const Tensor& probs, std::span<const int> labels,
                          const RewardScheme& scheme, Rng& rng) {
  EpisodeStep step;
  step.actions = sample_actions(probs, rng);
  step.rewards = assign_rewards(step.actions.actions, labels, scheme,
                                static_cast<int>(probs.dim(1)));
  return step;
}

EpisodeStep episode_step(const Network& net, const Tensor& images,
                         std::span<const int> labels, const RewardScheme& scheme, Rng& rng) {
  if (images.rank() < 1 || static_cast<std::size_t>(images.dim(0)) != labels.size()) {
    throw InputError("episode_step: image and label counts differ");
  }
  return score_sampled(net.predict_probs(images), labels, scheme, rng);
}

}  // namespace rlclass
