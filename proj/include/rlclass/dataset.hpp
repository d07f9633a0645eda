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

#ifndef RLCLASS_DATASET_HPP_
#define RLCLASS_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlclass/tensor.hpp"

namespace rlclass {

struct Dataset {
  Tensor images;            // [N,32,32,3], values in [0,1]
  std::vector<int> labels;  // N entries in [0,10)
  std::string split;

  std::size_t size() const { return labels.size(); }
  // Images and labels at `indices`, in that order.
  Dataset gather(std::span<const std::size_t> indices) const;
  // First min(count, size()) samples.
  Dataset head(std::size_t count) const;
};

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarChannels = 3;
constexpr std::size_t kCifarRecordBytes = 1 + kCifarSide * kCifarSide * kCifarChannels;
constexpr int kCifarClasses = 10;

// Decodes CIFAR-10 binary records: one label byte, then 1024 red, 1024 green
// and 1024 blue bytes in row-major plane order. Pixels become channels-last
// and are scaled by 1/255.
Dataset decode_cifar10(std::span<const std::uint8_t> bytes, std::string split);
Dataset load_cifar10_file(const std::filesystem::path& path, std::string split);

// data_batch_1.bin .. data_batch_5.bin and test_batch.bin under `dir`.
std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir);

// Class-separable images: each class paints a fixed colored block in its own
// grid cell over low-amplitude seeded noise. Labels are balanced (i mod K).
Dataset make_synthetic(std::size_t num_samples, int num_classes, std::uint64_t seed);

}  // namespace rlclass

#endif  // RLCLASS_DATASET_HPP_
