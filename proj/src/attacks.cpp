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

#include "rlclass/attacks.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "rlclass/errors.hpp"
#include "rlclass/objectives.hpp"

namespace rlclass {
namespace {

float sign_of(float g) { return g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f); }

// Float bounds of the eps-ball around x, tightened so that the distance to x,
// evaluated exactly, never exceeds eps.
struct Ball {
  std::vector<float> lo, hi;
};

Ball ball_around(const Tensor& x, float eps) {
  Ball ball;
  ball.lo.resize(x.size());
  ball.hi.resize(x.size());
  const double e = eps;
  constexpr float kInf = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float xi = x[i];
    float hi = xi + eps;
    while (static_cast<double>(hi) - xi > e) hi = std::nextafter(hi, -kInf);
    float lo = xi - eps;
    while (static_cast<double>(xi) - lo > e) lo = std::nextafter(lo, kInf);
    ball.lo[i] = lo;
    ball.hi[i] = hi;
  }
  return ball;
}

// One projected sign step from `current`.
void signed_step(Tensor& current, const Tensor& grad, float step, const Ball& ball,
                 const AttackConfig& cfg) {
  for (std::size_t i = 0; i < current.size(); ++i) {
    float v = current[i] + step * sign_of(grad[i]);
    v = std::clamp(v, ball.lo[i], ball.hi[i]);
    current[i] = std::clamp(v, cfg.clip_min, cfg.clip_max);
  }
}

void check_images(const Tensor& images, std::span<const int> labels,
                  const AttackConfig& cfg) {
  cfg.validate();
  if (images.rank() < 1 || static_cast<std::size_t>(images.dim(0)) != labels.size()) {
    throw InputError("attack: image and label counts differ");
  }
  for (float v : images.data()) {
    if (!(v >= cfg.clip_min && v <= cfg.clip_max)) {
      throw InputError("attack: input pixel outside the valid range");
    }
  }
}

std::vector<float> per_sample_cross_entropy(const Tensor& probs, std::span<const int> labels) {
  const std::size_t k = probs.dim(1);
  std::vector<float> out(labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    out[t] = -std::log(std::max(probs[t * k + labels[t]], kLogProbFloor));
  }
  return out;
}

}  // namespace

std::string to_string(AttackKind kind) {
  return kind == AttackKind::kFgsm ? "fgsm" : "pgd";
}

AttackKind parse_attack_kind(std::string_view text) {
  if (text == "fgsm") return AttackKind::kFgsm;
  if (text == "pgd") return AttackKind::kPgd;
  throw ConfigError("unknown attack '" + std::string(text) + "' (expected fgsm or pgd)");
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0f) || epsilon > 1.0f) {
    throw ConfigError("attack epsilon must lie in [0, 1]");
  }
  if (!(step_size >= 0.0f)) throw ConfigError("attack step_size must be non-negative");
  if (num_steps < 0) throw ConfigError("attack num_steps must be non-negative");
  if (!(clip_min < clip_max)) throw ConfigError("attack clip range is empty");
}

double parse_fraction(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  auto number = [&](std::string_view s) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return number(text);
  const double den = number(text.substr(slash + 1));
  if (den == 0.0) throw ConfigError("zero denominator in '" + std::string(text) + "'");
  return number(text.substr(0, slash)) / den;
}

Tensor input_gradient(const Network& net, const Tensor& images, std::span<const int> labels) {
  Tape tape;
  Var x = tape.input(images);
  Var probs = net.forward_frozen(tape, x);
  // Summed rather than averaged: same sign as the mean loss, independent of
  // batch size.
  std::vector<float> coeff(labels.size(), -1.0f);
  Var loss = ops::weighted_log_pick(probs, labels, coeff, kLogProbFloor);
  tape.backward(loss);
  return x.grad();
}

Tensor fgsm(const Network& net, const Tensor& images, std::span<const int> labels,
            const AttackConfig& cfg) {
  check_images(images, labels, cfg);
  if (cfg.epsilon == 0.0f) return images;
  const Tensor grad = input_gradient(net, images, labels);
  Tensor adv = images;
  signed_step(adv, grad, cfg.epsilon, ball_around(images, cfg.epsilon), cfg);
  return adv;
}

Tensor pgd_linf(const Network& net, const Tensor& images, std::span<const int> labels,
                const AttackConfig& cfg) {
  check_images(images, labels, cfg);
  const Ball ball = ball_around(images, cfg.epsilon);
  Tensor adv = images;
  if (cfg.random_start && cfg.epsilon > 0.0f) {
    Rng rng(cfg.seed);
    std::uniform_real_distribution<float> dist(-cfg.epsilon, cfg.epsilon);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const float v = std::clamp(adv[i] + dist(rng), ball.lo[i], ball.hi[i]);
      adv[i] = std::clamp(v, cfg.clip_min, cfg.clip_max);
    }
  }
  for (int step = 0; step < cfg.num_steps; ++step) {
    const Tensor grad = input_gradient(net, adv, labels);
    signed_step(adv, grad, cfg.step_size, ball, cfg);
  }
  return adv;
}

Tensor run_attack(AttackKind kind, const Network& net, const Tensor& images,
                  std::span<const int> labels, const AttackConfig& cfg) {
  return kind == AttackKind::kFgsm ? fgsm(net, images, labels, cfg)
                                   : pgd_linf(net, images, labels, cfg);
}

Tensor worst_case_ensemble(const Network& net, const Tensor& images,
                           std::span<const int> labels,
                           std::span<const EnsembleMember> members) {
  if (members.empty()) throw ConfigError("worst_case_ensemble needs at least one member");
  const std::size_t batch = labels.size();
  const std::size_t row = batch ? images.size() / batch : 0;

  Tensor result = images;
  std::vector<char> fooled(batch, 0);
  std::vector<float> best_loss(batch, -std::numeric_limits<float>::infinity());
  for (const auto& member : members) {
    const Tensor adv = run_attack(member.kind, net, images, labels, member.config);
    const Tensor probs = net.predict_probs(adv);
    const std::vector<int> pred = argmax_rows(probs);
    const std::vector<float> loss = per_sample_cross_entropy(probs, labels);
    for (std::size_t t = 0; t < batch; ++t) {
      if (fooled[t]) continue;
      const bool wrong = pred[t] != labels[t];
      if (wrong || loss[t] > best_loss[t]) {
        std::copy_n(adv.data().begin() + t * row, row, result.data().begin() + t * row);
        best_loss[t] = loss[t];
        fooled[t] = wrong;
      }
    }
  }
  return result;
}

std::vector<EnsembleMember> default_ensemble(const AttackConfig& cfg) {
  return {{AttackKind::kFgsm, cfg}, {AttackKind::kPgd, cfg}};
}

}  // namespace rlclass
