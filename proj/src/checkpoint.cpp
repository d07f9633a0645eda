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

#include "rlclass/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "rlclass/config_io.hpp"
#include "rlclass/errors.hpp"

namespace rlclass {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

ContainerEntry float_entry(std::string name, const Tensor& t) {
  ContainerEntry e;
  e.name = std::move(name);
  e.kind = ContainerEntry::Kind::kFloat32;
  e.tensor = t;
  return e;
}

ContainerEntry bytes_entry(std::string name, std::string bytes) {
  ContainerEntry e;
  e.name = std::move(name);
  e.kind = ContainerEntry::Kind::kBytes;
  e.bytes = std::move(bytes);
  return e;
}

}  // namespace

std::vector<std::uint8_t> encode_container(std::span<const ContainerEntry> entries) {
  Writer w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(static_cast<std::uint8_t>(e.kind));
    if (e.kind == ContainerEntry::Kind::kFloat32) {
      w.u32(static_cast<std::uint32_t>(e.tensor.rank()));
      for (auto extent : e.tensor.shape()) w.u32(static_cast<std::uint32_t>(extent));
      for (float v : e.tensor.data()) w.f32(v);
    } else {
      w.u32(1);
      w.u32(static_cast<std::uint32_t>(e.bytes.size()));
      w.raw(e.bytes.data(), e.bytes.size());
    }
  }
  w.u32(crc_of(w.bytes()));
  return std::move(w.bytes());
}

std::vector<ContainerEntry> decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw BadMagicError("not an RCK1 checkpoint (bad magic bytes)");
  }
  if (bytes.size() < 8) throw FormatError("checkpoint truncated");
  Reader header(bytes.subspan(4, 4));
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version) +
                       " (reader supports " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 16) throw FormatError("checkpoint truncated");
  const auto body = bytes.first(bytes.size() - 4);
  const std::uint32_t stored = Reader(bytes.last(4)).u32();
  if (crc_of(body) != stored) throw ChecksumError("checkpoint checksum mismatch");

  Reader r(body.subspan(8));
  const std::uint32_t count = r.u32();
  std::vector<ContainerEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    ContainerEntry e;
    e.name = r.str(r.u32());
    const std::uint8_t kind = r.u8();
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& extent : shape) {
      extent = r.u32();
      n *= static_cast<std::size_t>(extent);
    }
    if (kind == 0) {
      if (rank == 0 || n == 0) throw FormatError("empty tensor entry '" + e.name + "'");
      if (n > r.remaining() / 4) throw FormatError("checkpoint truncated");
      std::vector<float> data(n);
      for (auto& v : data) v = r.f32();
      e.kind = ContainerEntry::Kind::kFloat32;
      e.tensor = Tensor(std::move(shape), std::move(data));
    } else if (kind == 1) {
      if (rank != 1) throw FormatError("byte entry '" + e.name + "' must have rank 1");
      e.kind = ContainerEntry::Kind::kBytes;
      e.bytes = r.str(n);
    } else {
      throw FormatError("unknown entry kind " + std::to_string(kind));
    }
    entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint entries");
  return entries;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  KeyValues meta;
  meta.set("epoch", std::to_string(ckpt.epoch));
  meta.set("optimizer_step", std::to_string(ckpt.optimizer.step));
  meta.set("optimizer_lr", format_double(ckpt.optimizer.learning_rate));
  meta.set("optimizer_decay", format_double(ckpt.optimizer.decay));
  meta.set("optimizer_rho", format_double(ckpt.optimizer.rho));
  meta.set("optimizer_epsilon_value", format_double(ckpt.optimizer.epsilon));
  meta.set("train_config_digest", std::to_string(train_config_digest(ckpt.train_config)));
  put_network_config(meta, ckpt.network_config);
  put_train_config(meta, ckpt.train_config);

  if (ckpt.optimizer.mean_square.size() != ckpt.parameters.size()) {
    throw ContractViolation("optimizer state does not match the parameter list");
  }
  std::vector<ContainerEntry> entries;
  entries.push_back(bytes_entry("meta", meta.serialize()));
  entries.push_back(bytes_entry("rng", ckpt.rng_state));
  for (const auto& p : ckpt.parameters) entries.push_back(float_entry("param/" + p.name, p.value));
  for (std::size_t i = 0; i < ckpt.parameters.size(); ++i) {
    entries.push_back(
        float_entry("opt/" + ckpt.parameters[i].name, ckpt.optimizer.mean_square[i]));
  }
  return encode_container(entries);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto entries = decode_container(bytes);
  std::map<std::string, const ContainerEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  auto bytes_of = [&](const std::string& name) -> const std::string& {
    auto it = by_name.find(name);
    if (it == by_name.end() || it->second->kind != ContainerEntry::Kind::kBytes) {
      throw FormatError("checkpoint lacks '" + name + "'");
    }
    return it->second->bytes;
  };
  auto tensor_of = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end() || it->second->kind != ContainerEntry::Kind::kFloat32) {
      throw FormatError("checkpoint lacks tensor '" + name + "'");
    }
    return it->second->tensor;
  };

  const KeyValues meta = KeyValues::parse(bytes_of("meta"));
  auto need = [&](const std::string& key) {
    auto v = meta.get(key);
    if (!v) throw FormatError("checkpoint metadata lacks '" + key + "'");
    return *v;
  };

  Checkpoint ckpt;
  try {
    ckpt.epoch = std::stoi(need("epoch"));
    ckpt.optimizer.step = std::stoll(need("optimizer_step"));
    ckpt.optimizer.learning_rate = parse_fraction(need("optimizer_lr"));
    ckpt.optimizer.decay = parse_fraction(need("optimizer_decay"));
    ckpt.optimizer.rho = parse_fraction(need("optimizer_rho"));
    ckpt.optimizer.epsilon = parse_fraction(need("optimizer_epsilon_value"));
    ckpt.network_config = get_network_config(meta, NetworkConfig{});
    ckpt.train_config = get_train_config(meta, TrainConfig{});
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("bad checkpoint metadata: ") + e.what());
  }
  if (std::to_string(train_config_digest(ckpt.train_config)) != need("train_config_digest")) {
    throw FormatError("checkpoint training-config digest mismatch");
  }
  ckpt.rng_state = bytes_of("rng");

  // Parameter order and shapes come from the architecture.
  const Network skeleton = Network::build(ckpt.network_config, 0);
  for (const auto& p : skeleton.parameters()) {
    const Tensor& value = tensor_of("param/" + p.name);
    const Tensor& ms = tensor_of("opt/" + p.name);
    if (value.shape() != p.value.shape() || ms.shape() != p.value.shape()) {
      throw FormatError("checkpoint tensor '" + p.name + "' has shape " +
                        shape_string(value.shape()) + ", expected " +
                        shape_string(p.value.shape()));
    }
    ckpt.parameters.emplace_back(p.name, value);
    ckpt.optimizer.mean_square.push_back(ms);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Network network_from_checkpoint(const Checkpoint& ckpt) {
  Network net = Network::build(ckpt.network_config, 0);
  auto& params = net.parameters();
  if (params.size() != ckpt.parameters.size()) {
    throw FormatError("checkpoint parameter count does not match its architecture");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != ckpt.parameters[i].name ||
        params[i].value.shape() != ckpt.parameters[i].value.shape()) {
      throw FormatError("checkpoint parameter '" + ckpt.parameters[i].name +
                        "' does not match the architecture");
    }
    params[i].value = ckpt.parameters[i].value;
    params[i].zero_grad();
  }
  return net;
}

}  // namespace rlclass
