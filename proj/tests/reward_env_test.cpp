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

#include <gtest/gtest.h>

#include <numeric>

#include "rlclass/errors.hpp"
#include "rlclass/reward_env.hpp"

namespace rlclass {
namespace {

TEST(AssignRewardsTest, CorrectAndWrongUnderDefaultScheme) {
  const RewardScheme scheme;
  const std::vector<int> a1 = {3}, y1 = {3}, a2 = {2}, y2 = {7};
  EXPECT_EQ(assign_rewards(a1, y1, scheme, 10).rewards, std::vector<float>{1.0f});
  EXPECT_EQ(assign_rewards(a2, y2, scheme, 10).rewards, std::vector<float>{-1.0f});
}

TEST(AssignRewardsTest, PerClassScaleMultipliesBothMagnitudes) {
  RewardScheme scheme;
  scheme.per_class_scale = std::vector<double>(10, 1.0);
  scheme.per_class_scale[5] = 2.0;
  const std::vector<int> actions = {5, 4}, labels = {5, 5};
  EXPECT_EQ(assign_rewards(actions, labels, scheme, 10).rewards,
            (std::vector<float>{2.0f, -2.0f}));
}

TEST(AssignRewardsTest, SampleMultiplierHook) {
  const RewardScheme scheme;
  const std::vector<int> actions = {1, 2}, labels = {1, 3};
  const std::vector<float> mult = {1.0f, 3.0f};
  EXPECT_EQ(assign_rewards(actions, labels, scheme, 10, mult).rewards,
            (std::vector<float>{1.0f, -3.0f}));
}

TEST(AssignRewardsTest, OutOfRangeOrMismatchedInputIsInputError) {
  const RewardScheme scheme;
  const std::vector<int> bad = {10}, ok = {1}, two = {1, 2};
  EXPECT_THROW(assign_rewards(bad, ok, scheme, 10), InputError);
  EXPECT_THROW(assign_rewards(ok, bad, scheme, 10), InputError);
  EXPECT_THROW(assign_rewards(ok, two, scheme, 10), InputError);
}

TEST(RewardSchemeTest, Validation) {
  RewardScheme s;
  EXPECT_NO_THROW(s.validate(10));
  s.reward_correct = -2.0;
  EXPECT_THROW(s.validate(10), ConfigError);
  s = RewardScheme{};
  s.per_class_scale = {1.0, 2.0};
  EXPECT_THROW(s.validate(10), ConfigError);
  s.per_class_scale = std::vector<double>(10, 1.0);
  s.per_class_scale[0] = 0.0;
  EXPECT_THROW(s.validate(10), ConfigError);
}

TEST(RewardPropertyTest, DefaultRewardsArePlusMinusOneAndMeanMatchesAccuracy) {
  Rng rng(1);
  std::uniform_int_distribution<int> cls(0, 9);
  std::vector<int> actions(1000), labels(1000);
  for (int i = 0; i < 1000; ++i) {
    actions[i] = cls(rng);
    labels[i] = i % 3 == 0 ? actions[i] : cls(rng);
  }
  const auto r = assign_rewards(actions, labels, RewardScheme{}, 10).rewards;
  int hits = 0;
  double sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    EXPECT_TRUE(r[i] == 1.0f || r[i] == -1.0f);
    hits += actions[i] == labels[i];
    sum += r[i];
  }
  EXPECT_NEAR(sum / 1000.0, 2.0 * hits / 1000.0 - 1.0, 1e-12);
}

TEST(EpisodeStepTest, ConfidentNetworkGetsPositiveReward) {
  Tensor probs({4, 10});
  const std::vector<int> labels = {2, 5, 9, 0};
  for (int t = 0; t < 4; ++t) probs.at({t, labels[t]}) = 1.0f;
  Rng rng(3);
  const EpisodeStep step = score_sampled(probs, labels, RewardScheme{}, rng);
  for (float r : step.rewards.rewards) EXPECT_EQ(r, 1.0f);
}

TEST(EpisodeStepTest, UniformPolicyExpectedReward) {
  const Tensor probs({10000, 10}, 0.1f);
  std::vector<int> labels(10000);
  for (int i = 0; i < 10000; ++i) labels[i] = i % 10;
  Rng rng(4);
  const EpisodeStep step = score_sampled(probs, labels, RewardScheme{}, rng);
  const double mean = std::accumulate(step.rewards.rewards.begin(), step.rewards.rewards.end(), 0.0) /
                      10000.0;
  EXPECT_NEAR(mean, -0.8, 0.02);
}

TEST(EpisodeStepTest, FixedSeedReproducible) {
  NetworkConfig cfg;
  cfg.conv_blocks = {{1, 4}};
  cfg.dense_units = {8};
  cfg.input_shape = {4, 4, 3};
  const Network net = Network::build(cfg, 0);
  Tensor images({6, 4, 4, 3}, 0.5f);
  for (std::size_t i = 0; i < images.size(); ++i) images[i] = static_cast<float>(i % 7) / 7.0f;
  const std::vector<int> labels = {0, 1, 2, 3, 4, 5};
  Rng r1(9), r2(9);
  const EpisodeStep a = episode_step(net, images, labels, RewardScheme{}, r1);
  const EpisodeStep b = episode_step(net, images, labels, RewardScheme{}, r2);
  EXPECT_EQ(a.actions.actions, b.actions.actions);
  EXPECT_EQ(a.rewards.rewards, b.rewards.rewards);
}

}  // namespace
}  // namespace rlclass
