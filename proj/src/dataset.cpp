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

#include "rlclass/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>

#include "rlclass/errors.hpp"

namespace rlclass {

Dataset Dataset::gather(std::span<const std::size_t> indices) const {
  const std::size_t row = size() ? images.size() / size() : 0;
  Shape shape = images.shape();
  shape[0] = static_cast<std::int64_t>(indices.size());
  Dataset out;
  out.split = split;
  out.labels.reserve(indices.size());
  std::vector<float> data(indices.size() * row);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw InputError("dataset index out of range");
    std::copy_n(images.data().begin() + src * row, row, data.begin() + i * row);
    out.labels.push_back(labels[src]);
  }
  out.images = Tensor(std::move(shape), std::move(data));
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  count = std::min(count, size());
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  return gather(idx);
}

Dataset decode_cifar10(std::span<const std::uint8_t> bytes, std::string split) {
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError("CIFAR-10 data of " + std::to_string(bytes.size()) +
                      " bytes is not a whole number of 3073-byte records");
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  Dataset ds;
  ds.split = std::move(split);
  ds.labels.resize(n);
  std::vector<float> pixels(n * plane * kCifarChannels);
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] >= kCifarClasses) {
      throw FormatError("CIFAR-10 record " + std::to_string(r) + " has label byte " +
                        std::to_string(rec[0]));
    }
    ds.labels[r] = rec[0];
    float* out = pixels.data() + r * plane * kCifarChannels;
    for (std::size_t c = 0; c < kCifarChannels; ++c) {
      const std::uint8_t* src = rec + 1 + c * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        out[p * kCifarChannels + c] = static_cast<float>(src[p]) / 255.0f;
      }
    }
  }
  ds.images = Tensor({static_cast<std::int64_t>(n), kCifarSide, kCifarSide, kCifarChannels},
                     std::move(pixels));
  return ds;
}

Dataset load_cifar10_file(const std::filesystem::path& path, std::string split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_cifar10(bytes, std::move(split));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir) {
  std::vector<Dataset> parts;
  for (int i = 1; i <= 5; ++i) {
    parts.push_back(
        load_cifar10_file(dir / ("data_batch_" + std::to_string(i) + ".bin"), "train"));
  }
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  Dataset train;
  train.split = "train";
  std::vector<float> pixels;
  pixels.reserve(total * kCifarSide * kCifarSide * kCifarChannels);
  for (const auto& p : parts) {
    pixels.insert(pixels.end(), p.images.data().begin(), p.images.data().end());
    train.labels.insert(train.labels.end(), p.labels.begin(), p.labels.end());
  }
  train.images = Tensor(
      {static_cast<std::int64_t>(total), kCifarSide, kCifarSide, kCifarChannels},
      std::move(pixels));
  Dataset test = load_cifar10_file(dir / "test_batch.bin", "test");
  return {std::move(train), std::move(test)};
}

Dataset make_synthetic(std::size_t num_samples, int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("synthetic data needs at least two classes");
  if (num_samples < static_cast<std::size_t>(num_classes)) {
    throw ConfigError("synthetic data needs at least one sample per class");
  }
  constexpr std::size_t kCell = 8;
  constexpr std::size_t kGrid = kCifarSide / kCell;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> noise(0.0f, 1.0f);

  Dataset ds;
  ds.split = "synthetic";
  ds.labels.resize(num_samples);
  std::vector<float> pixels(num_samples * kCifarSide * kCifarSide * kCifarChannels);
  for (std::size_t i = 0; i < num_samples; ++i) {
    const int label = static_cast<int>(i % num_classes);
    ds.labels[i] = label;
    const std::size_t cell = static_cast<std::size_t>(label) % (kGrid * kGrid);
    const std::size_t cy = (cell / kGrid) * kCell, cx = (cell % kGrid) * kCell;
    const float color[3] = {(label & 1) ? 0.95f : 0.55f, (label & 2) ? 0.95f : 0.55f,
                            (label & 4) ? 0.95f : 0.55f};
    float* img = pixels.data() + i * kCifarSide * kCifarSide * kCifarChannels;
    for (std::size_t y = 0; y < kCifarSide; ++y) {
      for (std::size_t x = 0; x < kCifarSide; ++x) {
        const bool in_block = y >= cy && y < cy + kCell && x >= cx && x < cx + kCell;
        for (std::size_t c = 0; c < kCifarChannels; ++c) {
          const float n = noise(rng);
          const float v = in_block ? color[c] + 0.05f * n : 0.3f * n;
          img[(y * kCifarSide + x) * kCifarChannels + c] = std::clamp(v, 0.0f, 1.0f);
        }
      }
    }
  }
  ds.images = Tensor({static_cast<std::int64_t>(num_samples), kCifarSide, kCifarSide,
                      kCifarChannels},
                     std::move(pixels));
  return ds;
}

}  // namespace rlclass
