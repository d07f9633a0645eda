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

#include <cmath>

#include "oracle/gradcheck.hpp"
#include "rlclass/errors.hpp"
#include "rlclass/objectives.hpp"

namespace rlclass {
namespace {

using oracle::uniform_tensor;

Tensor two_class_rows(std::initializer_list<float> first_column) {
  Tensor p({static_cast<int>(first_column.size()), 2});
  int r = 0;
  for (float v : first_column) {
    p.at({r, 0}) = v;
    p.at({r, 1}) = 1.0f - v;
    ++r;
  }
  return p;
}

float vpg_value(const Tensor& probs, std::vector<int> actions, std::vector<float> rewards) {
  Tape tape;
  return vpg_loss(tape.constant(probs), actions, RewardBatch{std::move(rewards)}).item();
}

TEST(VpgLossTest, SingleSampleRewardAndPenalty) {
  const Tensor p = two_class_rows({0.5f});
  EXPECT_NEAR(vpg_value(p, {0}, {1.0f}), 0.6931472, 1e-6);
  EXPECT_NEAR(vpg_value(p, {0}, {-1.0f}), -0.6931472, 1e-6);
}

TEST(VpgLossTest, TwoSampleBatchHandValue) {
  const Tensor p = two_class_rows({0.9f, 0.2f});
  const double expected = (-std::log(0.9) + std::log(0.2)) / 2.0;
  EXPECT_NEAR(vpg_value(p, {0, 0}, {1.0f, -1.0f}), expected, 1e-6);
  EXPECT_NEAR(expected, -0.75204, 1e-5);
}

TEST(VpgLossTest, SizeMismatchIsShapeError) {
  Tape tape;
  Var p = tape.constant(two_class_rows({0.5f, 0.5f}));
  const std::vector<int> one = {0};
  EXPECT_THROW(vpg_loss(p, one, RewardBatch{{1.0f, 1.0f}}), ShapeError);
}

TEST(VpgLossTest, CollapsedProbabilityIsFinite) {
  const Tensor p = two_class_rows({0.0f});
  const float v = vpg_value(p, {0}, {1.0f});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -std::log(1e-12), 1e-3);
}

TEST(CrossEntropyTest, UniformAndPerfectPredictions) {
  Tape tape;
  const std::vector<int> labels = {0, 4, 9};
  EXPECT_NEAR(cross_entropy_loss(tape.constant(Tensor({3, 10}, 0.1f)), labels).item(),
              std::log(10.0), 1e-6);
  Tensor onehot({3, 10});
  for (int t = 0; t < 3; ++t) onehot.at({t, labels[t]}) = 1.0f;
  EXPECT_EQ(cross_entropy_loss(tape.constant(onehot), labels).item(), 0.0f);
}

TEST(ObjectiveEquivalenceTest, VpgWithLabelsAndUnitRewardsIsCrossEntropy) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Var probs = ops::softmax(tape.input(uniform_tensor({8, 10}, rng, -3.0f, 3.0f)));
    std::vector<int> labels(8);
    std::uniform_int_distribution<int> cls(0, 9);
    for (int& y : labels) y = cls(rng);
    const float ce = cross_entropy_loss(probs, labels).item();
    const float vpg = vpg_loss(probs, labels, RewardBatch{std::vector<float>(8, 1.0f)}).item();
    EXPECT_NEAR(ce, vpg, 1e-6);
  }
}

// Gradient of the loss w.r.t. the logits feeding a softmax.
Tensor logit_grad(const Tensor& logits, const std::vector<int>& actions,
                  const std::vector<float>& rewards, float* loss = nullptr) {
  Tape tape;
  Var z = tape.input(logits);
  LossValue l = vpg_loss(ops::softmax(z), actions, RewardBatch{rewards});
  if (loss) *loss = l.item();
  tape.backward(l.value);
  return z.grad();
}

TEST(VpgGradientTest, TakenLogitSignFollowsReward) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor z = uniform_tensor({1, 10}, rng, -2.0f, 2.0f);
    const int a = trial % 10;
    EXPECT_LT(logit_grad(z, {a}, {1.0f})[a], 0.0f);
    EXPECT_GT(logit_grad(z, {a}, {-1.0f})[a], 0.0f);
  }
}

TEST(VpgGradientTest, ScalingRewardsScalesLossAndGradient) {
  Rng rng(3);
  const Tensor z = uniform_tensor({4, 10}, rng, -2.0f, 2.0f);
  const std::vector<int> actions = {1, 3, 5, 7};
  const std::vector<float> r = {1.0f, -1.0f, 1.0f, -1.0f};
  std::vector<float> r4;
  for (float v : r) r4.push_back(4.0f * v);
  float l1 = 0.0f, l4 = 0.0f;
  const Tensor g1 = logit_grad(z, actions, r, &l1);
  const Tensor g4 = logit_grad(z, actions, r4, &l4);
  // Power-of-two scaling is exact in binary floating point.
  EXPECT_EQ(l4, 4.0f * l1);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g4[i], 4.0f * g1[i]);
}

TEST(VpgGradientTest, UntakenLogitsMatchClosedFormAndFiniteDifferences) {
  Rng rng(4);
  const int batch = 3;
  const Tensor z = uniform_tensor({batch, 10}, rng, -2.0f, 2.0f);
  const std::vector<int> actions = {2, 0, 9};
  const std::vector<float> rewards = {-1.0f, 1.0f, -2.0f};
  const Tensor g = logit_grad(z, actions, rewards);

  oracle::Vec<double> zd = oracle::cast<double>(z);
  auto loss = [&] {
    double total = 0.0;
    for (int t = 0; t < batch; ++t) {
      double m = -1e300, s = 0.0;
      for (int k = 0; k < 10; ++k) m = std::max(m, zd[t * 10 + k]);
      for (int k = 0; k < 10; ++k) s += std::exp(zd[t * 10 + k] - m);
      const double logp = zd[t * 10 + actions[t]] - m - std::log(s);
      total += -logp * rewards[t] / batch;
    }
    return total;
  };
  for (int t = 0; t < batch; ++t) {
    double m = -1e300, s = 0.0;
    for (int k = 0; k < 10; ++k) m = std::max(m, zd[t * 10 + k]);
    for (int k = 0; k < 10; ++k) s += std::exp(zd[t * 10 + k] - m);
    for (int k = 0; k < 10; ++k) {
      if (k == actions[t]) continue;
      const std::size_t i = t * 10 + k;
      const double pk = std::exp(zd[i] - m) / s;
      const double closed = -(1.0 / batch) * rewards[t] * (-pk);
      EXPECT_NEAR(g[i], closed, 1e-6);
      const double numeric = oracle::central_difference(zd, i, 1e-4, loss);
      EXPECT_TRUE(oracle::grad_close(g[i], numeric)) << g[i] << " vs " << numeric;
    }
  }
}

}  // namespace
}  // namespace rlclass
