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

#include "rlclass/config_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "rlclass/errors.hpp"

namespace rlclass {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  text = trim(text);
  if (text.empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    items.emplace_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

template <typename Int>
Int parse_int(const std::string& key, std::string_view text) {
  text = trim(text);
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_double_key(const std::string& key, std::string_view text) {
  try {
    return parse_fraction(text);
  } catch (const ConfigError&) {
    throw ConfigError("'" + key + "' expects a number, got '" + std::string(text) + "'");
  }
}

float parse_float_key(const std::string& key, std::string_view text) {
  try {
    return parse_float_value(text);
  } catch (const ConfigError&) {
    throw ConfigError("'" + key + "' expects a number, got '" + std::string(text) + "'");
  }
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("'" + key + "' expects true or false");
}

template <typename Fn>
void with(const KeyValues& kv, const std::string& key, Fn&& fn) {
  if (auto v = kv.get(key)) fn(*v);
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " has no '='");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + " has no key");
    kv.entries_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValues::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << serialize();
  if (!out) throw IoError("short write to " + path.string());
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

float parse_float_value(std::string_view text) {
  text = trim(text);
  if (text.find('/') != std::string_view::npos) {
    return static_cast<float>(parse_fraction(text));
  }
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

void put_network_config(KeyValues& kv, const NetworkConfig& cfg) {
  std::string blocks;
  for (const auto& b : cfg.conv_blocks) {
    if (!blocks.empty()) blocks += ',';
    blocks += std::to_string(b.num_conv_layers) + "x" + std::to_string(b.channels);
  }
  std::string dense;
  for (int u : cfg.dense_units) {
    if (!dense.empty()) dense += ',';
    dense += std::to_string(u);
  }
  kv.set("conv_blocks", blocks);
  kv.set("dense_units", dense);
  kv.set("num_classes", std::to_string(cfg.num_classes));
  kv.set("input_shape", std::to_string(cfg.input_shape[0]) + "," +
                            std::to_string(cfg.input_shape[1]) + "," +
                            std::to_string(cfg.input_shape[2]));
}

void put_attack_config(KeyValues& kv, const AttackConfig& cfg) {
  kv.set("eps", format_float(cfg.epsilon));
  kv.set("step_size", format_float(cfg.step_size));
  kv.set("num_steps", std::to_string(cfg.num_steps));
  kv.set("clip_min", format_float(cfg.clip_min));
  kv.set("clip_max", format_float(cfg.clip_max));
  kv.set("random_start", cfg.random_start ? "true" : "false");
  kv.set("attack_seed", std::to_string(cfg.seed));
}

void put_reward_scheme(KeyValues& kv, const RewardScheme& scheme) {
  kv.set("reward_correct", format_double(scheme.reward_correct));
  kv.set("reward_wrong", format_double(scheme.reward_wrong));
  std::string scales;
  for (double s : scheme.per_class_scale) {
    if (!scales.empty()) scales += ',';
    scales += format_double(s);
  }
  kv.set("per_class_scale", scales);
}

void put_train_config(KeyValues& kv, const TrainConfig& cfg) {
  kv.set("epochs", std::to_string(cfg.epochs));
  kv.set("batch_size", std::to_string(cfg.batch_size));
  kv.set("lr", format_double(cfg.learning_rate));
  kv.set("decay", format_double(cfg.decay));
  kv.set("rho", format_double(cfg.rho));
  kv.set("optimizer_epsilon", format_double(cfg.optimizer_epsilon));
  kv.set("loss", to_string(cfg.loss_mode));
  kv.set("adv_train", to_string(cfg.adv_mode));
  kv.set("checkpoint_every", std::to_string(cfg.checkpoint_every));
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("eval_batch_size", std::to_string(cfg.eval_batch_size));
  kv.set("threads", std::to_string(cfg.threads));
  put_attack_config(kv, cfg.attack);
  put_reward_scheme(kv, cfg.reward_scheme);
}

NetworkConfig get_network_config(const KeyValues& kv, NetworkConfig cfg) {
  with(kv, "conv_blocks", [&](const std::string& v) {
    cfg.conv_blocks.clear();
    for (const auto& item : split_list(v)) {
      const auto x = item.find('x');
      if (x == std::string::npos) {
        throw ConfigError("conv_blocks entries look like 2x32, got '" + item + "'");
      }
      cfg.conv_blocks.push_back({parse_int<int>("conv_blocks", item.substr(0, x)),
                                 parse_int<int>("conv_blocks", item.substr(x + 1))});
    }
  });
  with(kv, "dense_units", [&](const std::string& v) {
    cfg.dense_units.clear();
    for (const auto& item : split_list(v)) {
      cfg.dense_units.push_back(parse_int<int>("dense_units", item));
    }
  });
  with(kv, "num_classes",
       [&](const std::string& v) { cfg.num_classes = parse_int<int>("num_classes", v); });
  with(kv, "input_shape", [&](const std::string& v) {
    const auto items = split_list(v);
    if (items.size() != 3) throw ConfigError("input_shape expects H,W,C");
    for (int i = 0; i < 3; ++i) cfg.input_shape[i] = parse_int<int>("input_shape", items[i]);
  });
  cfg.validate();
  return cfg;
}

AttackConfig get_attack_config(const KeyValues& kv, AttackConfig cfg) {
  with(kv, "eps", [&](const std::string& v) { cfg.epsilon = parse_float_key("eps", v); });
  with(kv, "step_size",
       [&](const std::string& v) { cfg.step_size = parse_float_key("step_size", v); });
  with(kv, "num_steps",
       [&](const std::string& v) { cfg.num_steps = parse_int<int>("num_steps", v); });
  with(kv, "clip_min",
       [&](const std::string& v) { cfg.clip_min = parse_float_key("clip_min", v); });
  with(kv, "clip_max",
       [&](const std::string& v) { cfg.clip_max = parse_float_key("clip_max", v); });
  with(kv, "random_start",
       [&](const std::string& v) { cfg.random_start = parse_bool("random_start", v); });
  with(kv, "attack_seed",
       [&](const std::string& v) { cfg.seed = parse_int<std::uint64_t>("attack_seed", v); });
  cfg.validate();
  return cfg;
}

RewardScheme get_reward_scheme(const KeyValues& kv, RewardScheme scheme) {
  with(kv, "reward_correct", [&](const std::string& v) {
    scheme.reward_correct = parse_double_key("reward_correct", v);
  });
  with(kv, "reward_wrong", [&](const std::string& v) {
    scheme.reward_wrong = parse_double_key("reward_wrong", v);
  });
  with(kv, "per_class_scale", [&](const std::string& v) {
    scheme.per_class_scale.clear();
    for (const auto& item : split_list(v)) {
      scheme.per_class_scale.push_back(parse_double_key("per_class_scale", item));
    }
  });
  return scheme;
}

TrainConfig get_train_config(const KeyValues& kv, TrainConfig cfg) {
  with(kv, "epochs", [&](const std::string& v) { cfg.epochs = parse_int<int>("epochs", v); });
  with(kv, "batch_size",
       [&](const std::string& v) { cfg.batch_size = parse_int<int>("batch_size", v); });
  with(kv, "lr", [&](const std::string& v) { cfg.learning_rate = parse_double_key("lr", v); });
  with(kv, "decay", [&](const std::string& v) { cfg.decay = parse_double_key("decay", v); });
  with(kv, "rho", [&](const std::string& v) { cfg.rho = parse_double_key("rho", v); });
  with(kv, "optimizer_epsilon", [&](const std::string& v) {
    cfg.optimizer_epsilon = parse_double_key("optimizer_epsilon", v);
  });
  with(kv, "loss", [&](const std::string& v) { cfg.loss_mode = parse_loss_mode(v); });
  with(kv, "adv_train", [&](const std::string& v) { cfg.adv_mode = parse_adv_mode(v); });
  with(kv, "checkpoint_every", [&](const std::string& v) {
    cfg.checkpoint_every = parse_int<int>("checkpoint_every", v);
  });
  with(kv, "seed", [&](const std::string& v) { cfg.seed = parse_int<std::uint64_t>("seed", v); });
  with(kv, "eval_batch_size", [&](const std::string& v) {
    cfg.eval_batch_size = parse_int<int>("eval_batch_size", v);
  });
  with(kv, "threads", [&](const std::string& v) { cfg.threads = parse_int<int>("threads", v); });
  cfg.attack = get_attack_config(kv, cfg.attack);
  cfg.reward_scheme = get_reward_scheme(kv, cfg.reward_scheme);
  return cfg;
}

std::uint64_t train_config_digest(const TrainConfig& cfg) {
  KeyValues kv;
  put_train_config(kv, cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : kv.serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rlclass
