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

#include "rlclass/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "rlclass/errors.hpp"

namespace rlclass {
namespace {

// Runs fn(begin, count) over consecutive chunks of [0, n), spread across up
// to `threads` workers. Chunks are disjoint so outputs need no locking.
template <typename Fn>
void for_each_chunk(std::size_t n, int chunk, int threads, Fn&& fn) {
  const std::size_t step = static_cast<std::size_t>(std::max(chunk, 1));
  const std::size_t chunks = (n + step - 1) / step;
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(chunks, 1));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c * step, std::min(step, n - c * step));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks && !failed; c = next++) {
        try {
          fn(c * step, std::min(step, n - c * step));
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad number '" + s + "' in metrics row: " + line);
  }
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw InputError("accuracy: prediction and label counts differ");
  }
  if (labels.empty()) throw InputError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<int> predict_dataset(const Network& net, const Dataset& data,
                                 const EvalOptions& opts) {
  std::vector<int> preds(data.size());
  for_each_chunk(data.size(), opts.batch_size, opts.threads,
                 [&](std::size_t begin, std::size_t count) {
                   const auto p = net.predict_classes(data.images.slice_rows(begin, count));
                   std::copy(p.begin(), p.end(), preds.begin() + begin);
                 });
  return preds;
}

double natural_accuracy(const Network& net, const Dataset& data, const EvalOptions& opts) {
  return accuracy(predict_dataset(net, data, opts), data.labels);
}

AttackSpec::Kind parse_attack_spec_kind(std::string_view text) {
  if (text == "none") return AttackSpec::Kind::kNone;
  if (text == "fgsm") return AttackSpec::Kind::kFgsm;
  if (text == "pgd") return AttackSpec::Kind::kPgd;
  if (text == "ensemble") return AttackSpec::Kind::kEnsemble;
  throw ConfigError("unknown attack '" + std::string(text) +
                    "' (expected none, fgsm, pgd or ensemble)");
}

std::string to_string(AttackSpec::Kind kind) {
  switch (kind) {
    case AttackSpec::Kind::kNone: return "none";
    case AttackSpec::Kind::kFgsm: return "fgsm";
    case AttackSpec::Kind::kPgd: return "pgd";
    case AttackSpec::Kind::kEnsemble: return "ensemble";
  }
  return "none";
}

Tensor attack_dataset(const Network& net, const Dataset& data, const AttackSpec& attack,
                      const EvalOptions& opts) {
  if (attack.kind == AttackSpec::Kind::kNone) return data.images;
  Tensor out(data.images.shape());
  const std::size_t row = data.size() ? data.images.size() / data.size() : 0;
  const auto members = default_ensemble(attack.config);
  for_each_chunk(data.size(), opts.batch_size, opts.threads,
                 [&](std::size_t begin, std::size_t count) {
                   const Tensor x = data.images.slice_rows(begin, count);
                   std::span<const int> y(data.labels.data() + begin, count);
                   Tensor adv;
                   switch (attack.kind) {
                     case AttackSpec::Kind::kFgsm:
                       adv = fgsm(net, x, y, attack.config);
                       break;
                     case AttackSpec::Kind::kPgd:
                       adv = pgd_linf(net, x, y, attack.config);
                       break;
                     default:
                       adv = worst_case_ensemble(net, x, y, members);
                       break;
                   }
                   std::copy(adv.data().begin(), adv.data().end(),
                             out.data().begin() + begin * row);
                 });
  return out;
}

double adversarial_accuracy(const Network& net, const Dataset& data, const AttackSpec& attack,
                            const EvalOptions& opts) {
  Dataset attacked;
  attacked.images = attack_dataset(net, data, attack, opts);
  attacked.labels = data.labels;
  return natural_accuracy(net, attacked, opts);
}

SweepResult epsilon_sweep(const Network& net, const Dataset& data, const AttackSpec& attack,
                          std::span<const double> eps_list, const EvalOptions& opts) {
  if (eps_list.empty()) throw ConfigError("epsilon sweep needs at least one value");
  if (!std::is_sorted(eps_list.begin(), eps_list.end())) {
    throw ConfigError("epsilon sweep values must be ascending");
  }
  SweepResult result;
  for (double eps : eps_list) {
    AttackSpec spec = attack;
    spec.config.epsilon = static_cast<float>(eps);
    result.points.emplace_back(eps, adversarial_accuracy(net, data, spec, opts));
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "epsilon,adv_acc\n";
  for (const auto& [eps, acc] : sweep.points) {
    os << std::setprecision(9) << eps << ',' << fixed6(acc) << '\n';
  }
}

void write_metrics_header(std::ostream& os) { os << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& os, const MetricsRecord& r) {
  os << r.epoch << ',' << to_string(r.loss_mode) << ',' << fixed6(r.train_accuracy) << ','
     << fixed6(r.test_accuracy) << ',' << fixed6(r.adv_fgsm_accuracy) << ','
     << fixed6(r.generalization_gap) << '\n';
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) {
    throw FormatError("metrics header mismatch: expected '" + std::string(kMetricsHeader) +
                      "', got '" + line + "'");
  }
  std::vector<MetricsRecord> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw FormatError("metrics row needs 6 fields: " + line);
    MetricsRecord r;
    r.epoch = static_cast<int>(parse_double(f[0], line));
    try {
      r.loss_mode = parse_loss_mode(f[1]);
    } catch (const ConfigError&) {
      throw FormatError("bad loss_mode in metrics row: " + line);
    }
    r.train_accuracy = parse_double(f[2], line);
    r.test_accuracy = parse_double(f[3], line);
    r.adv_fgsm_accuracy = parse_double(f[4], line);
    r.generalization_gap = parse_double(f[5], line);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_metrics_csv(in);
}

std::uint8_t to_byte(float value) {
  const float v = std::clamp(value, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

void write_ppm(const std::filesystem::path& path, std::span<const float> pixels, int height,
               int width) {
  if (pixels.size() != static_cast<std::size_t>(height) * width * 3) {
    throw ShapeError("write_ppm expects an [H,W,3] image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  std::vector<char> bytes(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) bytes[i] = static_cast<char>(to_byte(pixels[i]));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<std::filesystem::path> export_gradients(const Network& net, const Tensor& images,
                                                    std::span<const int> labels,
                                                    float epsilon,
                                                    const std::filesystem::path& out_dir) {
  if (images.rank() != 4 || images.dim(3) != 3) {
    throw ShapeError("export_gradients expects RGB images [B,H,W,3]");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  AttackConfig cfg;
  cfg.epsilon = epsilon;
  const Tensor grad = input_gradient(net, images, labels);
  const Tensor adv = fgsm(net, images, labels, cfg);
  const int h = static_cast<int>(images.dim(1)), w = static_cast<int>(images.dim(2));
  const std::size_t row = static_cast<std::size_t>(h) * w * 3;

  std::vector<std::filesystem::path> written;
  std::vector<float> panel(row);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%03zu", t);
    const auto base = out_dir / stem;

    auto orig = images.data().subspan(t * row, row);
    written.push_back(base.string() + "_orig.ppm");
    write_ppm(written.back(), orig, h, w);

    // 0 -> 0.0, 128 -> 128/255, 255 -> 1.0 under to_byte.
    for (std::size_t i = 0; i < row; ++i) {
      const float g = grad[t * row + i];
      panel[i] = g > 0.0f ? 1.0f : (g < 0.0f ? 0.0f : 128.0f / 255.0f);
    }
    written.push_back(base.string() + "_grad.ppm");
    write_ppm(written.back(), panel, h, w);

    written.push_back(base.string() + "_adv.ppm");
    write_ppm(written.back(), adv.data().subspan(t * row, row), h, w);
  }
  return written;
}

CompareReport compare_runs(std::span<const MetricsRecord> a, std::span<const MetricsRecord> b,
                           double gap_threshold) {
  if (a.empty() || b.empty()) throw FormatError("compare_runs needs two non-empty runs");
  CompareReport report;
  report.gap_threshold = gap_threshold;
  for (const auto& ra : a) {
    for (const auto& rb : b) {
      if (ra.epoch != rb.epoch) continue;
      report.deltas.push_back({ra.epoch, rb.train_accuracy - ra.train_accuracy,
                               rb.test_accuracy - ra.test_accuracy,
                               rb.adv_fgsm_accuracy - ra.adv_fgsm_accuracy,
                               rb.generalization_gap - ra.generalization_gap});
    }
  }
  auto best = [](std::span<const MetricsRecord> run) {
    return *std::max_element(run.begin(), run.end(), [](const auto& x, const auto& y) {
      return x.adv_fgsm_accuracy < y.adv_fgsm_accuracy;
    });
  };
  report.best_a = best(a);
  report.best_b = best(b);
  for (const auto& r : a) {
    report.gap_a.emplace_back(r.epoch, r.generalization_gap);
    if (r.generalization_gap > gap_threshold) report.wide_gap_epochs_a.push_back(r.epoch);
  }
  for (const auto& r : b) {
    report.gap_b.emplace_back(r.epoch, r.generalization_gap);
    if (r.generalization_gap > gap_threshold) report.wide_gap_epochs_b.push_back(r.epoch);
  }
  return report;
}

void write_report(std::ostream& os, const CompareReport& report) {
  os << "epoch,delta_train_acc,delta_test_acc,delta_adv_fgsm_acc,delta_gap\n";
  for (const auto& d : report.deltas) {
    os << d.epoch << ',' << fixed6(d.delta_train) << ',' << fixed6(d.delta_test) << ','
       << fixed6(d.delta_adv) << ',' << fixed6(d.delta_gap) << '\n';
  }
  auto best_line = [&os](const char* tag, const MetricsRecord& r) {
    os << "best_adv_" << tag << ": epoch " << r.epoch << " (" << to_string(r.loss_mode)
       << ") adv_fgsm_acc " << fixed6(r.adv_fgsm_accuracy) << " test_acc "
       << fixed6(r.test_accuracy) << '\n';
  };
  best_line("a", report.best_a);
  best_line("b", report.best_b);
  auto gap_line = [&os, &report](const char* tag, const auto& series, const auto& wide) {
    os << "gap_" << tag << ":";
    for (const auto& [epoch, gap] : series) os << ' ' << epoch << '=' << fixed6(gap);
    os << "\nwide_gap_" << tag << " (> " << fixed6(report.gap_threshold) << "): "
       << wide.size() << " of " << series.size() << " checkpoints";
    for (int e : wide) os << ' ' << e;
    os << '\n';
  };
  gap_line("a", report.gap_a, report.wide_gap_epochs_a);
  gap_line("b", report.gap_b, report.wide_gap_epochs_b);
}

}  // namespace rlclass
