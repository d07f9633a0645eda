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

// White-box L-infinity attacks on a Network. Every attack ascends the
// cross-entropy of the softmax output w.r.t. the true labels, whatever the
// objective the network was trained with, and never touches the parameters.

#ifndef RLCLASS_ATTACKS_HPP_
#define RLCLASS_ATTACKS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlclass/network.hpp"
#include "rlclass/tensor.hpp"

namespace rlclass {

enum class AttackKind { kFgsm, kPgd };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view text);

struct AttackConfig {
  float epsilon = 8.0f / 255.0f;
  float step_size = 2.0f / 255.0f;  // PGD only
  int num_steps = 5;                // PGD only
  float clip_min = 0.0f;
  float clip_max = 1.0f;
  bool random_start = false;  // PGD only
  std::uint64_t seed = 0;     // random start stream

  void validate() const;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

// Parses "0.03", "8/255" or "8 / 255" into a double. Throws ConfigError.
double parse_fraction(std::string_view text);

// Gradient of the summed cross-entropy w.r.t. the input images. Its signs
// match those of the mean loss.
Tensor input_gradient(const Network& net, const Tensor& images, std::span<const int> labels);

// clip(x + eps * sign(grad)), with sign(0) = 0.
Tensor fgsm(const Network& net, const Tensor& images, std::span<const int> labels,
            const AttackConfig& cfg);

// num_steps sign-gradient ascent steps of step_size, each projected onto the
// eps-ball around the input and onto [clip_min, clip_max]. Starts at the
// input unless random_start is set.
Tensor pgd_linf(const Network& net, const Tensor& images, std::span<const int> labels,
                const AttackConfig& cfg);

Tensor run_attack(AttackKind kind, const Network& net, const Tensor& images,
                  std::span<const int> labels, const AttackConfig& cfg);

struct EnsembleMember {
  AttackKind kind;
  AttackConfig config;
};

// Per sample: the first member output the network misclassifies; if every
// member leaves the sample correctly classified, the member output with the
// highest cross-entropy.
Tensor worst_case_ensemble(const Network& net, const Tensor& images,
                           std::span<const int> labels,
                           std::span<const EnsembleMember> members);

// FGSM at eps followed by PGD at eps with the given step schedule.
std::vector<EnsembleMember> default_ensemble(const AttackConfig& cfg);

}  // namespace rlclass

#endif  // RLCLASS_ATTACKS_HPP_
