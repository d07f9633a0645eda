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

// rlclass: train, evaluate and probe CIFAR-10 classifiers under CE or
// policy-gradient objectives with adversarial training.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rlclass/checkpoint.hpp"
#include "rlclass/config_io.hpp"
#include "rlclass/dataset.hpp"
#include "rlclass/errors.hpp"
#include "rlclass/evaluation.hpp"
#include "rlclass/trainer.hpp"

namespace fs = std::filesystem;
using namespace rlclass;

namespace {

constexpr int kUsageExit = 1;
constexpr int kDataExit = 2;
constexpr const char* kDataDirEnv = "RLCLASS_DATA_DIR";

// Flag name -> run-config key. Flags given on the command line override the
// --config file.
struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
};

std::string default_data_dir() {
  const char* env = std::getenv(kDataDirEnv);
  return env ? env : "";
}

struct DataFlags {
  std::string data_dir = default_data_dir();
  bool synthetic = false;
  std::size_t synthetic_train = 512;
  std::size_t synthetic_test = 256;
  std::uint64_t data_seed = 0;
  std::size_t train_subset = 0;
  std::size_t test_subset = 0;

  void add_to(CLI::App* app, bool with_train) {
    app->add_option("--data-dir", data_dir,
                    std::string("CIFAR-10 binary directory (default: $") + kDataDirEnv + ")");
    app->add_flag("--synthetic", synthetic, "Use the generated class-separable dataset");
    if (with_train) {
      app->add_option("--synthetic-train", synthetic_train, "Synthetic training-set size");
      app->add_option("--train-subset", train_subset,
                      "Train on the first N training images (0 = all)");
    }
    app->add_option("--synthetic-test", synthetic_test, "Synthetic test-set size");
    app->add_option("--data-seed", data_seed, "Seed of the synthetic data");
    app->add_option("--test-subset", test_subset, "Use the first N test images (0 = all)");
  }

  void put(KeyValues& kv, bool with_train) const {
    kv.set("synthetic", synthetic ? "true" : "false");
    if (synthetic) {
      if (with_train) kv.set("synthetic_train", std::to_string(synthetic_train));
      kv.set("synthetic_test", std::to_string(synthetic_test));
      kv.set("data_seed", std::to_string(data_seed));
    } else {
      kv.set("data_dir", data_dir);
    }
    if (with_train) kv.set("train_subset", std::to_string(train_subset));
    kv.set("test_subset", std::to_string(test_subset));
  }

  void require_source() const {
    if (!synthetic && data_dir.empty()) {
      throw ConfigError(std::string("no data: pass --data-dir, set ") + kDataDirEnv +
                        ", or use --synthetic");
    }
  }

  Dataset test_set(int num_classes) const {
    require_source();
    Dataset test = synthetic ? make_synthetic(synthetic_test, num_classes, data_seed + 1)
                             : load_cifar10_file(fs::path(data_dir) / "test_batch.bin", "test");
    return test_subset ? test.head(test_subset) : test;
  }

  std::pair<Dataset, Dataset> both(int num_classes) const {
    require_source();
    if (synthetic) {
      Dataset train = make_synthetic(synthetic_train, num_classes, data_seed);
      return {train_subset ? train.head(train_subset) : train, test_set(num_classes)};
    }
    auto [train, test] = load_cifar10(data_dir);
    if (train_subset) train = train.head(train_subset);
    if (test_subset) test = test.head(test_subset);
    return {std::move(train), std::move(test)};
  }
};

struct AttackFlags {
  std::string attack = "fgsm";
  std::string eps = "8/255";
  std::string step_size = "2/255";
  int steps = 5;

  void add_to(CLI::App* app, bool with_kind) {
    if (with_kind) {
      app->add_option("--attack", attack, "Attack: none, fgsm, pgd or ensemble")
          ->capture_default_str();
    }
    app->add_option("--eps", eps, "L-infinity budget; fractions such as 8/255 accepted")
        ->capture_default_str();
    app->add_option("--step-size", step_size, "PGD step size")->capture_default_str();
    app->add_option("--pgd-steps", steps, "PGD iterations")->capture_default_str();
  }

  AttackSpec spec() const {
    AttackSpec s;
    s.kind = parse_attack_spec_kind(attack);
    s.config.epsilon = parse_float_value(eps);
    s.config.step_size = parse_float_value(step_size);
    s.config.num_steps = steps;
    s.config.validate();
    return s;
  }
};

Network load_network(const std::string& path) {
  return network_from_checkpoint(load_checkpoint(path));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// ---- train -----------------------------------------------------------------

struct TrainCommand {
  CLI::App* app = nullptr;
  std::string config_path;
  std::string out = "runs/latest";
  std::string resume;
  std::vector<std::string> values;
  DataFlags data;

  static const std::vector<FlagBinding>& bindings() {
    static const std::vector<FlagBinding> kBindings = {
        {"--loss", "loss", "Objective: ce or rl (required)"},
        {"--adv-train", "adv_train", "Adversarial training: none, fgsm or pgd [fgsm]"},
        {"--eps", "eps", "Attack budget, e.g. 8/255 [8/255]"},
        {"--step-size", "step_size", "PGD step size [2/255]"},
        {"--pgd-steps", "num_steps", "PGD iterations [5]"},
        {"--epochs", "epochs", "Training epochs [220]"},
        {"--batch-size", "batch_size", "Batch size [32]"},
        {"--lr", "lr", "RMSprop learning rate [1e-4]"},
        {"--decay", "decay", "Per-update learning-rate decay [1e-6]"},
        {"--seed", "seed", "Run seed: weights, shuffling, action sampling [0]"},
        {"--checkpoint-every", "checkpoint_every", "Checkpoint and metrics interval [20]"},
        {"--reward-correct", "reward_correct", "Reward for a correct action [1]"},
        {"--reward-wrong", "reward_wrong", "Reward for a wrong action [-1]"},
        {"--eval-batch-size", "eval_batch_size", "Evaluation chunk size [256]"},
        {"--threads", "threads", "Worker threads for evaluation [1]"},
        {"--conv-blocks", "conv_blocks", "Conv blocks as layersxchannels [2x32,2x64,2x128]"},
        {"--dense-units", "dense_units", "Hidden dense widths [256]"},
    };
    return kBindings;
  }

  void add_to(CLI::App& root) {
    app = root.add_subcommand("train", "Train a classifier");
    app->add_option("--config", config_path, "key = value run config; flags override it");
    app->add_option("--out", out, "Output directory")->capture_default_str();
    app->add_option("--resume", resume, "Continue from a checkpoint file");
    values.resize(bindings().size());
    for (std::size_t i = 0; i < bindings().size(); ++i) {
      app->add_option(bindings()[i].flag, values[i], bindings()[i].help);
    }
    data.add_to(app, true);
  }

  int run() {
    KeyValues kv;
    if (!config_path.empty()) kv = KeyValues::load(config_path);
    for (std::size_t i = 0; i < bindings().size(); ++i) {
      if (app->count(bindings()[i].flag)) kv.set(bindings()[i].key, values[i]);
    }

    std::optional<Trainer> trainer;
    if (!resume.empty()) {
      Checkpoint ckpt = load_checkpoint(resume);
      if (kv.contains("epochs")) ckpt.train_config = get_train_config(kv, ckpt.train_config);
      trainer.emplace(Trainer::resume(ckpt));
    } else {
      if (!kv.contains("loss")) throw ConfigError("--loss is required (valid: ce, rl)");
      const NetworkConfig net_cfg = get_network_config(kv, NetworkConfig::Default());
      const TrainConfig cfg = get_train_config(kv, TrainConfig{});
      trainer.emplace(cfg, net_cfg);
    }

    auto [train, test] = data.both(trainer->network().config().num_classes);
    trainer->config().validate(train.size());

    const fs::path out_dir(out);
    ensure_dir(out_dir);
    KeyValues resolved;
    put_network_config(resolved, trainer->network().config());
    put_train_config(resolved, trainer->config());
    data.put(resolved, true);
    resolved.set("out", out);
    if (!resume.empty()) resolved.set("resume", resume);
    resolved.save(out_dir / "run_config.txt");

    const auto rows = trainer->train(train, test, out_dir);
    for (const auto& r : rows) {
      std::cout << "epoch " << r.epoch << "  train " << r.train_accuracy << "  test "
                << r.test_accuracy << "  adv_fgsm " << r.adv_fgsm_accuracy << "  gap "
                << r.generalization_gap << "\n";
    }
    return 0;
  }
};

// ---- eval ------------------------------------------------------------------

struct EvalCommand {
  CLI::App* app = nullptr;
  std::string checkpoint;
  std::string out;
  int threads = 1;
  int batch_size = 256;
  std::uint64_t seed = 0;
  AttackFlags attack;
  DataFlags data;

  void add_to(CLI::App& root) {
    app = root.add_subcommand("eval", "Natural and adversarial test accuracy of a checkpoint");
    app->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    app->add_option("--out", out, "Also write the report to this file");
    app->add_option("--threads", threads, "Worker threads")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Evaluation chunk size")->capture_default_str();
    app->add_option("--seed", seed, "Seed for PGD random starts")->capture_default_str();
    attack.add_to(app, true);
    data.add_to(app, false);
  }

  int run() {
    const Network net = load_network(checkpoint);
    AttackSpec spec = attack.spec();
    spec.config.seed = seed;
    const Dataset test = data.test_set(net.config().num_classes);
    const EvalOptions opts{batch_size, threads};

    std::ostringstream report;
    report << "samples=" << test.size() << "\n";
    report << "natural_accuracy=" << natural_accuracy(net, test, opts) << "\n";
    if (spec.kind != AttackSpec::Kind::kNone) {
      report << "attack=" << to_string(spec.kind) << "\n";
      report << "epsilon=" << format_float(spec.config.epsilon) << "\n";
      report << "adversarial_accuracy=" << adversarial_accuracy(net, test, spec, opts) << "\n";
    }
    std::cout << report.str();
    if (!out.empty()) {
      std::ofstream f(out);
      if (!(f << report.str())) throw IoError("cannot write " + out);
    }
    return 0;
  }
};

// ---- sweep -----------------------------------------------------------------

struct SweepCommand {
  CLI::App* app = nullptr;
  std::string checkpoint;
  std::string out;
  std::string eps_list;
  int threads = 1;
  int batch_size = 256;
  std::uint64_t seed = 0;
  AttackFlags attack;
  DataFlags data;

  void add_to(CLI::App& root) {
    app = root.add_subcommand("sweep", "Adversarial accuracy across perturbation budgets");
    app->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    app->add_option("--eps-list", eps_list, "Ascending comma list, e.g. 0,1/255,8/255")
        ->required();
    app->add_option("--out", out, "CSV path (default: stdout)");
    app->add_option("--threads", threads, "Worker threads")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Evaluation chunk size")->capture_default_str();
    app->add_option("--seed", seed, "Seed for PGD random starts")->capture_default_str();
    attack.add_to(app, true);
    data.add_to(app, false);
  }

  int run() {
    std::vector<double> eps;
    std::size_t start = 0;
    while (start <= eps_list.size()) {
      const auto comma = eps_list.find(',', start);
      const std::string item = eps_list.substr(start, comma - start);
      if (item.find_first_not_of(" \t") != std::string::npos) {
        eps.push_back(parse_fraction(item));
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (eps.empty()) throw ConfigError("--eps-list is empty");

    const Network net = load_network(checkpoint);
    AttackSpec spec = attack.spec();
    spec.config.seed = seed;
    const Dataset test = data.test_set(net.config().num_classes);
    const SweepResult sweep = epsilon_sweep(net, test, spec, eps, {batch_size, threads});
    if (out.empty()) {
      write_sweep_csv(std::cout, sweep);
    } else {
      std::ofstream f(out);
      write_sweep_csv(f, sweep);
      if (!f) throw IoError("cannot write " + out);
    }
    return 0;
  }
};

// ---- export-gradients ------------------------------------------------------

struct ExportCommand {
  CLI::App* app = nullptr;
  std::string checkpoint;
  std::string out = "gradients";
  std::string eps = "8/255";
  std::size_t n = 4;
  std::uint64_t seed = 0;
  DataFlags data;

  void add_to(CLI::App& root) {
    app = root.add_subcommand("export-gradients",
                              "Write original, gradient-sign and adversarial images");
    app->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    app->add_option("--out", out, "Output directory")->capture_default_str();
    app->add_option("--eps", eps, "FGSM budget")->capture_default_str();
    app->add_option("--n", n, "Number of test samples")->capture_default_str();
    app->add_option("--seed", seed, "Seed choosing the samples")->capture_default_str();
    data.add_to(app, false);
  }

  int run() {
    const Network net = load_network(checkpoint);
    const Dataset test = data.test_set(net.config().num_classes);
    if (n == 0 || n > test.size()) {
      throw ConfigError("--n must lie in [1, " + std::to_string(test.size()) + "]");
    }
    std::vector<std::size_t> order(test.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(n);
    const Dataset picked = test.gather(order);
    ensure_dir(out);
    const auto files =
        export_gradients(net, picked.images, picked.labels, parse_float_value(eps), out);
    for (const auto& f : files) std::cout << f.string() << "\n";
    return 0;
  }
};

// ---- compare ---------------------------------------------------------------

struct CompareCommand {
  CLI::App* app = nullptr;
  std::string a, b, out;
  double threshold = 0.02;

  void add_to(CLI::App& root) {
    app = root.add_subcommand("compare", "Compare the metrics.csv files of two runs");
    app->add_option("a", a, "First metrics.csv")->required();
    app->add_option("b", b, "Second metrics.csv")->required();
    app->add_option("--gap-threshold", threshold, "Flag gaps above this")
        ->capture_default_str();
    app->add_option("--out", out, "Also write the report to this file");
  }

  int run() {
    const auto ra = read_metrics_csv(fs::path(a));
    const auto rb = read_metrics_csv(fs::path(b));
    const CompareReport report = compare_runs(ra, rb, threshold);
    write_report(std::cout, report);
    if (!out.empty()) {
      std::ofstream f(out);
      write_report(f, report);
      if (!f) throw IoError("cannot write " + out);
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-driven adversarial training of image classifiers"};
  app.require_subcommand(1);
  TrainCommand train;
  EvalCommand eval;
  SweepCommand sweep;
  ExportCommand export_cmd;
  CompareCommand compare;
  train.add_to(app);
  eval.add_to(app);
  sweep.add_to(app);
  export_cmd.add_to(app);
  compare.add_to(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageExit;
  }

  try {
    if (*train.app) return train.run();
    if (*eval.app) return eval.run();
    if (*sweep.app) return sweep.run();
    if (*export_cmd.app) return export_cmd.run();
    if (*compare.app) return compare.run();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  }
  return kUsageExit;
}
