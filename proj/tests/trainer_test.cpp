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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlclass/checkpoint.hpp"
#include "rlclass/errors.hpp"
#include "rlclass/evaluation.hpp"
#include "rlclass/objectives.hpp"
#include "rlclass/trainer.hpp"

namespace rlclass {
namespace {

namespace fs = std::filesystem;

NetworkConfig small_config() {
  NetworkConfig cfg;
  cfg.conv_blocks = {{1, 4}, {1, 6}};
  cfg.dense_units = {12};
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

TEST(RmspropTest, ZeroGradientKeepsParametersAndCountsStep) {
  std::vector<Parameter> params;
  params.emplace_back("p", Tensor({3}, 0.7f));
  params[0].grad = Tensor({3});
  OptimizerState s = OptimizerState::for_parameters(params, TrainConfig{});
  rmsprop_step(params, s);
  EXPECT_EQ(s.step, 1);
  EXPECT_EQ(params[0].value, Tensor({3}, 0.7f));
}

TEST(RmspropTest, LearningRateSchedule) {
  TrainConfig cfg;
  OptimizerState s = OptimizerState::for_parameters({}, cfg);
  EXPECT_EQ(s.current_learning_rate(), cfg.learning_rate);
  s.step = 1000;
  EXPECT_DOUBLE_EQ(s.current_learning_rate(), 1e-4 / (1.0 + 1e-6 * 1000));
}

TEST(RmspropTest, MatchesScalarRecurrenceOnQuadratic) {
  std::vector<Parameter> params;
  params.emplace_back("theta", Tensor({1}, 0.0f));
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  OptimizerState s = OptimizerState::for_parameters(params, cfg);
  // Independent double recurrence for (theta - 3)^2.
  double theta = 0.0, v = 0.0;
  for (int step = 0; step < 500; ++step) {
    params[0].grad = Tensor({1}, 2.0f * (params[0].value[0] - 3.0f));
    rmsprop_step(params, s);
    const double g = 2.0 * (theta - 3.0);
    v = 0.9 * v + 0.1 * g * g;
    theta -= 0.01 / (1.0 + 1e-6 * step) * g / (std::sqrt(v) + 1e-7);
  }
  EXPECT_LT(std::fabs(params[0].value[0] - 3.0), 0.1);
  EXPECT_LT(std::fabs(theta - 3.0), 0.1);
  EXPECT_NEAR(params[0].value[0], theta, 1e-3);
  EXPECT_EQ(s.step, 500);
}

TEST(RmspropTest, RejectsBadGradients) {
  std::vector<Parameter> params;
  params.emplace_back("w", Tensor({2}));
  params[0].grad = Tensor({2});
  params[0].grad[1] = std::nanf("");
  OptimizerState s = OptimizerState::for_parameters(params, TrainConfig{});
  try {
    rmsprop_step(params, s);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("'w'"), std::string::npos);
  }
  params[0].grad = Tensor({3});
  EXPECT_THROW(rmsprop_step(params, s), ShapeError);
}

TEST(BatchingTest, RemainderKept) {
  EXPECT_EQ(batch_sizes(100, 32), (std::vector<std::size_t>{32, 32, 32, 4}));
  EXPECT_EQ(batch_sizes(64, 32), (std::vector<std::size_t>{32, 32}));
}

TEST(TrainConfigTest, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate(100));
  EXPECT_THROW(cfg.validate(10), ConfigError);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(100), ConfigError);
  EXPECT_THROW(parse_loss_mode("mse"), ConfigError);
  EXPECT_EQ(parse_adv_mode("pgd"), AdvMode::kPgd);
  EXPECT_EQ(to_string(LossMode::kPolicyGradient), "rl");
}

// Records what each batch trained on and the weights it saw.
class Recorder : public TrainObserver {
 public:
  void on_batch_start(int, std::size_t batch, const Network& net) override {
    starts.push_back(net.parameters());
    (void)batch;
  }
  void on_batch_inputs(int, std::size_t, const Tensor& clean, const Tensor& trained_on) override {
    cleans.push_back(clean);
    inputs.push_back(trained_on);
  }
  void on_update(int, std::size_t, const Network& net) override { updates.push_back(net.parameters()); }

  std::vector<std::vector<Parameter>> starts, updates;
  std::vector<Tensor> cleans, inputs;
};

TEST(TrainEpochTest, OneUpdatePerBatchWithAttacksOnCurrentWeights) {
  const Dataset data = make_synthetic(21, 10, 3);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.adv_mode = AdvMode::kFgsm;
  Network net = Network::build(small_config(), 1);
  Network shadow = net;
  OptimizerState s = OptimizerState::for_parameters(net.parameters(), cfg);
  Rng rng = training_rng(0);
  Recorder rec;
  const EpochStats stats = train_epoch(net, data, cfg, s, rng, 1, &rec);
  EXPECT_EQ(stats.updates, 3u);
  EXPECT_EQ(s.step, 3);
  ASSERT_EQ(rec.inputs.size(), 3u);
  for (std::size_t b = 0; b < 3; ++b) {
    if (b > 0) {
      for (std::size_t i = 0; i < rec.starts[b].size(); ++i) {
        ASSERT_TRUE(bit_equal(rec.starts[b][i].value, rec.updates[b - 1][i].value));
      }
    }
    // Recover the labels from the clean rows and redo the attack.
    const Tensor& clean = rec.cleans[b];
    const std::size_t row = clean.size() / clean.dim(0);
    std::vector<int> labels;
    for (int t = 0; t < clean.dim(0); ++t) {
      for (std::size_t n = 0; n < data.size(); ++n) {
        if (std::memcmp(clean.data().data() + t * row, data.images.data().data() + n * row, row * sizeof(float)) == 0) {
          labels.push_back(data.labels[n]);
          break;
        }
      }
    }
    ASSERT_EQ(labels.size(), static_cast<std::size_t>(clean.dim(0)));
    for (std::size_t i = 0; i < shadow.parameters().size(); ++i) {
      shadow.parameters()[i].value = rec.starts[b][i].value;
    }
    EXPECT_TRUE(bit_equal(fgsm(shadow, clean, labels, cfg.attack), rec.inputs[b]));
  }
}

TEST(TrainEpochTest, ZeroBudgetFgsmEqualsNoAttack) {
  const Dataset data = make_synthetic(20, 10, 4);
  for (LossMode mode : {LossMode::kCrossEntropy, LossMode::kPolicyGradient}) {
    TrainConfig a;
    a.batch_size = 8;
    a.loss_mode = mode;
    a.adv_mode = AdvMode::kNone;
    TrainConfig b = a;
    b.adv_mode = AdvMode::kFgsm;
    b.attack.epsilon = 0.0f;
    Trainer ta(a, small_config()), tb(b, small_config());
    for (int e = 0; e < 2; ++e) {
      EXPECT_NEAR(ta.run_epoch(data).mean_loss, tb.run_epoch(data).mean_loss, 1e-6);
    }
  }
}

TEST(TrainEpochTest, ForcedCorrectActionsWithUnitRewardsEqualCrossEntropyUpdates) {
  const Dataset data = make_synthetic(16, 10, 5);
  Network ce = Network::build(small_config(), 2);
  Network rl = ce;
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  OptimizerState sc = OptimizerState::for_parameters(ce.parameters(), cfg);
  OptimizerState sr = sc;
  for (int step = 0; step < 5; ++step) {
    {
      ce.zero_grad();
      Tape tape;
      tape.backward(cross_entropy_loss(ce.forward(tape, tape.constant_view(data.images)), data.labels).value);
      rmsprop_step(ce.parameters(), sc);
    }
    {
      rl.zero_grad();
      Tape tape;
      Var probs = rl.forward(tape, tape.constant_view(data.images));
      const RewardBatch r = assign_rewards(data.labels, data.labels, RewardScheme{}, 10);
      tape.backward(vpg_loss(probs, data.labels, r).value);
      rmsprop_step(rl.parameters(), sr);
    }
  }
  for (std::size_t i = 0; i < ce.parameters().size(); ++i) {
    const Tensor& a = ce.parameters()[i].value;
    const Tensor& b = rl.parameters()[i].value;
    for (std::size_t j = 0; j < a.size(); ++j) ASSERT_NEAR(a[j], b[j], 1e-6);
  }
}

TrainConfig run_config() {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.checkpoint_every = 20;
  cfg.batch_size = 10;
  cfg.learning_rate = 1e-3;
  cfg.adv_mode = AdvMode::kFgsm;
  cfg.seed = 7;
  return cfg;
}

TEST(TrainerTest, CheckpointScheduleAndDeterminism) {
  const Dataset train = make_synthetic(20, 10, 6);
  const Dataset test = make_synthetic(20, 10, 7);
  const fs::path root = fs::temp_directory_path() / "rlclass_trainer_test";
  fs::remove_all(root);
  std::vector<std::string> metrics;
  for (const char* name : {"a", "b"}) {
    Trainer trainer(run_config(), small_config());
    const auto rows = trainer.train(train, test, root / name);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].epoch, 20);
    EXPECT_EQ(rows[1].epoch, 40);
    std::size_t ckpts = 0;
    for (const auto& e : fs::directory_iterator(root / name / "checkpoints")) {
      ckpts += e.path().extension() == ".rck";
    }
    EXPECT_EQ(ckpts, 2u);
    EXPECT_TRUE(fs::exists(root / name / "checkpoints" / "epoch_0020.rck"));
    EXPECT_FALSE(fs::exists(root / name / "INCOMPLETE"));
    metrics.push_back(slurp(root / name / "metrics.csv"));
    EXPECT_EQ(read_metrics_csv(root / name / "metrics.csv"), rows);
    EXPECT_EQ(load_checkpoint(root / name / "checkpoints" / "epoch_0040.rck").epoch, 40);
  }
  EXPECT_EQ(metrics[0], metrics[1]);
  EXPECT_EQ(metrics[0].substr(0, metrics[0].find('\n')), kMetricsHeader);
  fs::remove_all(root);
}

TEST(TrainerTest, ResumedRunWritesSameMetrics) {
  const Dataset train = make_synthetic(20, 10, 8);
  const Dataset test = make_synthetic(20, 10, 9);
  const fs::path root = fs::temp_directory_path() / "rlclass_trainer_resume";
  fs::remove_all(root);
  TrainConfig cfg = run_config();
  cfg.epochs = 4;
  cfg.checkpoint_every = 2;
  cfg.loss_mode = LossMode::kPolicyGradient;
  Trainer full(cfg, small_config());
  const auto all = full.train(train, test, root / "full");

  TrainConfig half = cfg;
  half.epochs = 2;
  Trainer first(half, small_config());
  first.train(train, test, root / "part");
  Checkpoint ckpt = load_checkpoint(root / "part" / "checkpoints" / "epoch_0002.rck");
  ckpt.train_config.epochs = 4;
  Trainer rest = Trainer::resume(ckpt);
  const auto tail = rest.train(train, test, root / "part");
  ASSERT_EQ(tail.size(), 1u);
  EXPECT_NEAR(tail[0].train_accuracy, all[1].train_accuracy, 1e-6);
  EXPECT_NEAR(tail[0].test_accuracy, all[1].test_accuracy, 1e-6);
  EXPECT_NEAR(tail[0].adv_fgsm_accuracy, all[1].adv_fgsm_accuracy, 1e-6);
  EXPECT_EQ(read_metrics_csv(root / "part" / "metrics.csv").size(), 2u);
  fs::remove_all(root);
}

TEST(RngStateTest, RoundTrip) {
  Rng rng = training_rng(3);
  rng();
  Rng back = rng_from_string(rng_state_string(rng));
  EXPECT_EQ(rng(), back());
  EXPECT_THROW(rng_from_string("garbage"), FormatError);
}

}  // namespace
}  // namespace rlclass
