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

// Adversarial training loop. Every epoch shuffles the training set; every
// batch is attacked with the current weights (unless adversarial training is
// off), scored with the configured objective, and applied through RMSprop.

#ifndef RLCLASS_TRAINER_HPP_
#define RLCLASS_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlclass/attacks.hpp"
#include "rlclass/dataset.hpp"
#include "rlclass/network.hpp"
#include "rlclass/reward_env.hpp"

namespace rlclass {

enum class LossMode { kCrossEntropy, kPolicyGradient };
enum class AdvMode { kNone, kFgsm, kPgd };

std::string to_string(LossMode mode);  // "ce" / "rl"
std::string to_string(AdvMode mode);   // "none" / "fgsm" / "pgd"
LossMode parse_loss_mode(std::string_view text);
AdvMode parse_adv_mode(std::string_view text);

struct TrainConfig {
  int epochs = 220;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double decay = 1e-6;
  double rho = 0.9;
  double optimizer_epsilon = 1e-7;
  LossMode loss_mode = LossMode::kCrossEntropy;
  AdvMode adv_mode = AdvMode::kFgsm;
  // Training attack; its epsilon also sets the FGSM budget of the test-set
  // robustness metric.
  AttackConfig attack;
  int checkpoint_every = 20;
  std::uint64_t seed = 0;
  RewardScheme reward_scheme;
  int eval_batch_size = 256;
  int threads = 1;

  void validate(std::size_t dataset_size) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// RMSprop accumulators plus the schedule lr / (1 + decay * step).
struct OptimizerState {
  std::vector<Tensor> mean_square;
  std::int64_t step = 0;
  double learning_rate = 1e-4;
  double decay = 1e-6;
  double rho = 0.9;
  double epsilon = 1e-7;

  static OptimizerState for_parameters(std::span<const Parameter> params,
                                       const TrainConfig& cfg);
  double current_learning_rate() const;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// v <- rho * v + (1 - rho) * g^2;  theta <- theta - lr_t * g / (sqrt(v) + eps).
// Uses each parameter's accumulated grad. Throws NumericError on a non-finite
// gradient, naming the parameter.
void rmsprop_step(std::span<Parameter> params, OptimizerState& state);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  // Argmax accuracy on the inputs actually trained on (adversarial if enabled).
  double batch_accuracy = 0.0;
  // Accuracy of the sampled actions; policy-gradient mode only, else 0.
  double sampled_accuracy = 0.0;
  std::size_t updates = 0;
};

// Hooks for instrumenting the loop; all default to no-ops.
class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  // Before the batch's adversarial examples are generated.
  virtual void on_batch_start(int /*epoch*/, std::size_t /*batch*/, const Network& /*net*/) {}
  virtual void on_batch_inputs(int /*epoch*/, std::size_t /*batch*/, const Tensor& /*clean*/,
                               const Tensor& /*trained_on*/) {}
  // After the optimizer step of the batch.
  virtual void on_update(int /*epoch*/, std::size_t /*batch*/, const Network& /*net*/) {}
};

// Batch boundaries for n samples: full batches of batch_size, then the
// remainder if any.
std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size);

EpochStats train_epoch(Network& net, const Dataset& data, const TrainConfig& cfg,
                       OptimizerState& state, Rng& rng, int epoch,
                       TrainObserver* observer = nullptr);

struct MetricsRecord;

struct Checkpoint {
  int epoch = 0;
  NetworkConfig network_config;
  std::vector<Parameter> parameters;
  OptimizerState optimizer;
  TrainConfig train_config;
  std::string rng_state;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, const NetworkConfig& net_cfg);
  static Trainer resume(const Checkpoint& checkpoint);

  EpochStats run_epoch(const Dataset& train, TrainObserver* observer = nullptr);
  // Clean train/test accuracy and FGSM test accuracy at the configured eps.
  MetricsRecord measure(const Dataset& train, const Dataset& test) const;
  Checkpoint checkpoint() const;

  // Runs the remaining epochs up to cfg.epochs. Writes epochs.csv, metrics.csv
  // and checkpoints/epoch_NNNN.rck under out_dir every checkpoint_every epochs
  // and at the last epoch. Returns the metrics rows written by this call.
  std::vector<MetricsRecord> train(const Dataset& train, const Dataset& test,
                                   const std::filesystem::path& out_dir,
                                   TrainObserver* observer = nullptr);

  const TrainConfig& config() const { return cfg_; }
  const Network& network() const { return net_; }
  Network& network() { return net_; }
  const OptimizerState& optimizer() const { return opt_; }
  int epoch() const { return epoch_; }

 private:
  Trainer(TrainConfig cfg, Network net);

  TrainConfig cfg_;
  Network net_;
  OptimizerState opt_;
  Rng rng_;
  int epoch_ = 0;
};

// Seed of the training stream (shuffles, action sampling) for a run seed.
Rng training_rng(std::uint64_t seed);

std::string rng_state_string(const Rng& rng);
Rng rng_from_string(const std::string& state);

}  // namespace rlclass

#endif  // RLCLASS_TRAINER_HPP_
