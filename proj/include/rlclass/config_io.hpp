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

// Flat "key = value" run configuration. Blank lines and lines starting with
// '#' are ignored. Floats are written with enough digits to read back
// bit-exactly; epsilon-like values also accept fractions such as 8/255.

#ifndef RLCLASS_CONFIG_IO_HPP_
#define RLCLASS_CONFIG_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "rlclass/network.hpp"
#include "rlclass/reward_env.hpp"
#include "rlclass/trainer.hpp"

namespace rlclass {

class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  std::optional<std::string> get(const std::string& key) const;
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Entries of `other` replace ours.
  void merge(const KeyValues& other);

 private:
  std::map<std::string, std::string> entries_;
};

std::string format_float(float v);
std::string format_double(double v);
float parse_float_value(std::string_view text);

void put_network_config(KeyValues& kv, const NetworkConfig& cfg);
void put_attack_config(KeyValues& kv, const AttackConfig& cfg);
void put_reward_scheme(KeyValues& kv, const RewardScheme& scheme);
// Includes the attack and reward scheme.
void put_train_config(KeyValues& kv, const TrainConfig& cfg);

// Missing keys keep the values of `base`. Throws ConfigError on bad values.
NetworkConfig get_network_config(const KeyValues& kv, NetworkConfig base);
AttackConfig get_attack_config(const KeyValues& kv, AttackConfig base);
RewardScheme get_reward_scheme(const KeyValues& kv, RewardScheme base);
TrainConfig get_train_config(const KeyValues& kv, TrainConfig base);

// FNV-1a over the serialized training configuration.
std::uint64_t train_config_digest(const TrainConfig& cfg);

}  // namespace rlclass

#endif  // RLCLASS_CONFIG_IO_HPP_
