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

// RCK1 checkpoint container. All integers are little-endian and fixed width.
//
//   "RCK1"            4 bytes magic
//   version           u32 (currently 1)
//   entry_count       u32
//   entry_count times:
//     name_length     u32
//     name            name_length bytes (UTF-8)
//     kind            u8: 0 = float32 tensor, 1 = raw bytes
//     rank            u32
//     extents         rank x u32
//     payload         product(extents) x float32 (kind 0) or bytes (kind 1)
//   crc32             u32, zlib CRC-32 of every preceding byte
//
// Checkpoints store "param/<name>" and "opt/<name>" tensors plus "meta"
// (key = value text) and "rng" (engine state text) byte entries.

#ifndef RLCLASS_CHECKPOINT_HPP_
#define RLCLASS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rlclass/network.hpp"
#include "rlclass/tensor.hpp"
#include "rlclass/trainer.hpp"

namespace rlclass {

inline constexpr char kCheckpointMagic[4] = {'R', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ContainerEntry {
  enum class Kind : std::uint8_t { kFloat32 = 0, kBytes = 1 };

  std::string name;
  Kind kind = Kind::kFloat32;
  Tensor tensor;      // kFloat32
  std::string bytes;  // kBytes

  friend bool operator==(const ContainerEntry&, const ContainerEntry&) = default;
};

std::vector<std::uint8_t> encode_container(std::span<const ContainerEntry> entries);
// Throws BadMagicError, VersionError, ChecksumError or FormatError.
std::vector<ContainerEntry> decode_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

// Writes through a temporary file renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the network a checkpoint describes and loads its parameters.
Network network_from_checkpoint(const Checkpoint& ckpt);

}  // namespace rlclass

#endif  // RLCLASS_CHECKPOINT_HPP_
