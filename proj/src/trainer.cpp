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

#include "rlclass/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rlclass/checkpoint.hpp"
#include "rlclass/errors.hpp"
#include "rlclass/evaluation.hpp"
#include "rlclass/objectives.hpp"

namespace rlclass {

std::string to_string(LossMode mode) {
  return mode == LossMode::kCrossEntropy ? "ce" : "rl";
}

std::string to_string(AdvMode mode) {
  switch (mode) {
    case AdvMode::kNone:
      return "none";
    case AdvMode::kFgsm:
      return "fgsm";
    case AdvMode::kPgd:
      return "pgd";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view text) {
  if (text == "ce") return LossMode::kCrossEntropy;
  if (text == "rl") return LossMode::kPolicyGradient;
  throw ConfigError("unknown loss mode '" + std::string(text) + "' (valid: ce, rl)");
}

AdvMode parse_adv_mode(std::string_view text) {
  if (text == "none") return AdvMode::kNone;
  if (text == "fgsm") return AdvMode::kFgsm;
  if (text == "pgd") return AdvMode::kPgd;
  throw ConfigError("unknown adversarial mode '" + std::string(text) +
                    "' (valid: none, fgsm, pgd)");
}

void TrainConfig::validate(std::size_t dataset_size) const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (dataset_size == 0) throw ConfigError("training set is empty");
  if (static_cast<std::size_t>(batch_size) > dataset_size) {
    throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                      std::to_string(dataset_size));
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(decay >= 0.0) || !std::isfinite(decay)) throw ConfigError("decay must be nonnegative");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(optimizer_epsilon > 0.0)) throw ConfigError("optimizer epsilon must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be at least 1");
  if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  attack.validate();
}

OptimizerState OptimizerState::for_parameters(std::span<const Parameter> params,
                                              const TrainConfig& cfg) {
  OptimizerState s;
  for (const auto& p : params) s.mean_square.emplace_back(p.value.shape());
  s.learning_rate = cfg.learning_rate;
  s.decay = cfg.decay;
  s.rho = cfg.rho;
  s.epsilon = cfg.optimizer_epsilon;
  return s;
}

double OptimizerState::current_learning_rate() const {
  return learning_rate / (1.0 + decay * static_cast<double>(step));
}

void rmsprop_step(std::span<Parameter> params, OptimizerState& state) {
  if (state.mean_square.size() != params.size()) {
    throw ShapeError("optimizer state holds " + std::to_string(state.mean_square.size()) +
                     " accumulators for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.grad.shape() != p.value.shape() || state.mean_square[i].shape() != p.value.shape()) {
      throw ShapeError("gradient or accumulator shape mismatch for '" + p.name + "'");
    }
    for (float g : p.grad.data()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in '" + p.name + "' at optimizer step " +
                           std::to_string(state.step));
      }
    }
  }
  const float lr = static_cast<float>(state.current_learning_rate());
  const float rho = static_cast<float>(state.rho);
  const float one_minus_rho = static_cast<float>(1.0 - state.rho);
  const float eps = static_cast<float>(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.data();
    const auto g = params[i].grad.data();
    auto v = state.mean_square[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = rho * v[j] + one_minus_rho * g[j] * g[j];
      theta[j] -= lr * g[j] / (std::sqrt(v[j]) + eps);
    }
  }
  ++state.step;
}

std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> sizes(n / batch_size, batch_size);
  if (n % batch_size != 0) sizes.push_back(n % batch_size);
  return sizes;
}

EpochStats train_epoch(Network& net, const Dataset& data, const TrainConfig& cfg,
                       OptimizerState& state, Rng& rng, int epoch, TrainObserver* observer) {
  if (data.size() == 0) throw InputError("training set is empty");
  cfg.validate(data.size());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  EpochStats stats;
  stats.epoch = epoch;
  double loss_sum = 0.0;
  std::size_t argmax_hits = 0;
  std::size_t sampled_hits = 0;
  std::size_t offset = 0;
  const auto sizes = batch_sizes(data.size(), static_cast<std::size_t>(cfg.batch_size));
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const std::span<const std::size_t> idx(order.data() + offset, sizes[b]);
    offset += sizes[b];
    const Dataset batch = data.gather(idx);

    if (observer) observer->on_batch_start(epoch, b, net);
    Tensor inputs;
    switch (cfg.adv_mode) {
      case AdvMode::kNone:
        inputs = batch.images;
        break;
      case AdvMode::kFgsm:
        inputs = fgsm(net, batch.images, batch.labels, cfg.attack);
        break;
      case AdvMode::kPgd:
        inputs = pgd_linf(net, batch.images, batch.labels, cfg.attack);
        break;
    }
    if (observer) observer->on_batch_inputs(epoch, b, batch.images, inputs);

    net.zero_grad();
    Tape tape;
    Var probs = net.forward(tape, tape.constant_view(inputs));
    LossValue loss;
    if (cfg.loss_mode == LossMode::kCrossEntropy) {
      loss = cross_entropy_loss(probs, batch.labels);
    } else {
      const EpisodeStep step = score_sampled(probs.value(), batch.labels, cfg.reward_scheme, rng);
      for (std::size_t t = 0; t < batch.size(); ++t) {
        sampled_hits += step.actions.actions[t] == batch.labels[t];
      }
      loss = vpg_loss(probs, step.actions.actions, step.rewards);
    }
    const auto predicted = argmax_rows(probs.value());
    for (std::size_t t = 0; t < batch.size(); ++t) argmax_hits += predicted[t] == batch.labels[t];
    loss_sum += loss.item();
    tape.backward(loss.value);
    rmsprop_step(net.parameters(), state);
    ++stats.updates;
    if (observer) observer->on_update(epoch, b, net);
  }
  const double n = static_cast<double>(data.size());
  stats.mean_loss = loss_sum / static_cast<double>(stats.updates);
  stats.batch_accuracy = static_cast<double>(argmax_hits) / n;
  stats.sampled_accuracy =
      cfg.loss_mode == LossMode::kPolicyGradient ? static_cast<double>(sampled_hits) / n : 0.0;
  return stats;
}

Rng training_rng(std::uint64_t seed) { return Rng(seed ^ 0x9E3779B97F4A7C15ULL); }

std::string rng_state_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& state) {
  std::istringstream is(state);
  Rng rng;
  is >> rng;
  if (!is) throw FormatError("malformed random-engine state");
  return rng;
}

Trainer::Trainer(TrainConfig cfg, const NetworkConfig& net_cfg)
    : Trainer(cfg, Network::build(net_cfg, cfg.seed)) {}

Trainer::Trainer(TrainConfig cfg, Network net)
    : cfg_(std::move(cfg)),
      net_(std::move(net)),
      opt_(OptimizerState::for_parameters(net_.parameters(), cfg_)),
      rng_(training_rng(cfg_.seed)) {
  cfg_.reward_scheme.validate(net_.config().num_classes);
}

Trainer Trainer::resume(const Checkpoint& checkpoint) {
  Trainer t(checkpoint.train_config, network_from_checkpoint(checkpoint));
  t.opt_ = checkpoint.optimizer;
  t.rng_ = rng_from_string(checkpoint.rng_state);
  t.epoch_ = checkpoint.epoch;
  return t;
}

EpochStats Trainer::run_epoch(const Dataset& train, TrainObserver* observer) {
  EpochStats stats = train_epoch(net_, train, cfg_, opt_, rng_, epoch_ + 1, observer);
  ++epoch_;
  return stats;
}

MetricsRecord Trainer::measure(const Dataset& train, const Dataset& test) const {
  const EvalOptions opts{cfg_.eval_batch_size, cfg_.threads};
  MetricsRecord r;
  r.epoch = epoch_;
  r.loss_mode = cfg_.loss_mode;
  r.train_accuracy = natural_accuracy(net_, train, opts);
  r.test_accuracy = natural_accuracy(net_, test, opts);
  AttackSpec fgsm_spec{AttackSpec::Kind::kFgsm, cfg_.attack};
  r.adv_fgsm_accuracy = adversarial_accuracy(net_, test, fgsm_spec, opts);
  r.generalization_gap = r.train_accuracy - r.test_accuracy;
  return r;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.epoch = epoch_;
  c.network_config = net_.config();
  for (const auto& p : net_.parameters()) c.parameters.emplace_back(p.name, p.value);
  c.optimizer = opt_;
  c.train_config = cfg_;
  c.rng_state = rng_state_string(rng_);
  return c;
}

std::vector<MetricsRecord> Trainer::train(const Dataset& train, const Dataset& test,
                                          const std::filesystem::path& out_dir,
                                          TrainObserver* observer) {
  namespace fs = std::filesystem;
  cfg_.validate(train.size());
  if (test.size() == 0) throw InputError("test set is empty");
  std::error_code ec;
  fs::create_directories(out_dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "checkpoints").string() + ": " + ec.message());

  // Present while a run is in flight; a leftover marker labels partial output.
  const fs::path marker = out_dir / "INCOMPLETE";
  { std::ofstream(marker) << "training in progress or aborted\n"; }

  const bool fresh = epoch_ == 0;
  const auto open_mode = fresh ? std::ios::out | std::ios::trunc : std::ios::out | std::ios::app;
  std::ofstream metrics(out_dir / "metrics.csv", open_mode);
  std::ofstream epochs(out_dir / "epochs.csv", open_mode);
  if (!metrics || !epochs) throw IoError("cannot write metrics under " + out_dir.string());
  if (fresh) {
    write_metrics_header(metrics);
    epochs << "epoch,mean_loss,batch_acc,sampled_acc,updates\n";
  }

  std::vector<MetricsRecord> rows;
  while (epoch_ < cfg_.epochs) {
    const EpochStats stats = run_epoch(train, observer);
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.9g,%.6f,%.6f,%zu\n", stats.epoch, stats.mean_loss,
                  stats.batch_accuracy, stats.sampled_accuracy, stats.updates);
    epochs << line << std::flush;
    if (epoch_ % cfg_.checkpoint_every == 0 || epoch_ == cfg_.epochs) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.rck", epoch_);
      save_checkpoint(out_dir / "checkpoints" / name, checkpoint());
      rows.push_back(measure(train, test));
      write_metrics_row(metrics, rows.back());
      metrics.flush();
    }
    if (!metrics || !epochs) throw IoError("write failure under " + out_dir.string());
  }
  fs::remove(marker, ec);
  return rows;
}

}  // namespace rlclass
