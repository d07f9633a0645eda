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

#ifndef RLCLASS_EVALUATION_HPP_
#define RLCLASS_EVALUATION_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlclass/attacks.hpp"
#include "rlclass/dataset.hpp"
#include "rlclass/network.hpp"
#include "rlclass/trainer.hpp"

namespace rlclass {

struct EvalOptions {
  int batch_size = 256;
  int threads = 1;
};

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Argmax predictions for the whole dataset, chunked by batch_size.
std::vector<int> predict_dataset(const Network& net, const Dataset& data,
                                 const EvalOptions& opts = {});
double natural_accuracy(const Network& net, const Dataset& data,
                        const EvalOptions& opts = {});

// What to attack the evaluation set with.
struct AttackSpec {
  enum class Kind { kNone, kFgsm, kPgd, kEnsemble } kind = Kind::kFgsm;
  AttackConfig config;
};

AttackSpec::Kind parse_attack_spec_kind(std::string_view text);
std::string to_string(AttackSpec::Kind kind);

// Adversarial images for the whole dataset.
Tensor attack_dataset(const Network& net, const Dataset& data, const AttackSpec& attack,
                      const EvalOptions& opts = {});
double adversarial_accuracy(const Network& net, const Dataset& data,
                            const AttackSpec& attack, const EvalOptions& opts = {});

struct SweepResult {
  std::vector<std::pair<double, double>> points;  // (epsilon, accuracy)
};

// Accuracy at each epsilon of an ascending list starting at 0.
SweepResult epsilon_sweep(const Network& net, const Dataset& data, const AttackSpec& attack,
                          std::span<const double> eps_list, const EvalOptions& opts = {});
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

struct MetricsRecord {
  int epoch = 0;
  LossMode loss_mode = LossMode::kCrossEntropy;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double adv_fgsm_accuracy = 0.0;
  double generalization_gap = 0.0;  // train_accuracy - test_accuracy

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline constexpr const char* kMetricsHeader = "epoch,loss_mode,train_acc,test_acc,adv_fgsm_acc,gap";

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricsRecord& record);
// Parses a metrics CSV; throws FormatError on a schema mismatch.
std::vector<MetricsRecord> read_metrics_csv(std::istream& is);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Writes sample_NNN_{orig,grad,adv}.ppm for each image and returns the paths.
// The gradient panel maps sign(d CE / d x) from {-1, 0, +1} to {0, 128, 255};
// the adversarial panel is the FGSM output at `epsilon`.
std::vector<std::filesystem::path> export_gradients(const Network& net, const Tensor& images,
                                                    std::span<const int> labels,
                                                    float epsilon,
                                                    const std::filesystem::path& out_dir);

// Binary PPM (P6) of one [H,W,3] image with values in [0,1].
void write_ppm(const std::filesystem::path& path, std::span<const float> pixels, int height,
               int width);
std::uint8_t to_byte(float value);

struct CompareReport {
  struct Row {
    int epoch;
    double delta_train, delta_test, delta_adv, delta_gap;
  };
  std::vector<Row> deltas;  // b - a at epochs present in both runs
  MetricsRecord best_a, best_b;  // highest adversarial accuracy per run
  std::vector<std::pair<int, double>> gap_a, gap_b;
  std::vector<int> wide_gap_epochs_a, wide_gap_epochs_b;  // gap > threshold
  double gap_threshold = 0.02;
};

CompareReport compare_runs(std::span<const MetricsRecord> a, std::span<const MetricsRecord> b,
                           double gap_threshold = 0.02);
void write_report(std::ostream& os, const CompareReport& report);

}  // namespace rlclass

#endif  // RLCLASS_EVALUATION_HPP_
