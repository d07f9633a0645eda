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

#include "kernels.hpp"

#include <algorithm>
#include <cstring>

namespace rlclass::kernels {

void matmul_acc(const float* a, const float* b, float* c, std::size_t m,
                std::size_t k, std::size_t n) {
  // Four output rows share each streamed row of b; the innermost loop runs
  // over n and vectorizes without reordering any per-element sum.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const float* a0 = a + (i + 0) * k;
    const float* a1 = a + (i + 1) * k;
    const float* a2 = a + (i + 2) * k;
    const float* a3 = a + (i + 3) * k;
    float* __restrict c0 = c + (i + 0) * n;
    float* __restrict c1 = c + (i + 1) * n;
    float* __restrict c2 = c + (i + 2) * n;
    float* __restrict c3 = c + (i + 3) * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float* __restrict bp = b + p * n;
      const float s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
      for (std::size_t j = 0; j < n; ++j) {
        const float bv = bp[j];
        c0[j] += s0 * bv;
        c1[j] += s1 * bv;
        c2[j] += s2 * bv;
        c3[j] += s3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    const float* ai = a + i * k;
    float* __restrict ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float* __restrict bp = b + p * n;
      const float s = ai[p];
      for (std::size_t j = 0; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

void matmul_tn_acc(const float* a, const float* g, float* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    const float* __restrict gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float s = ai[p];
      if (s == 0.0f) continue;
      float* __restrict cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += s * gi[j];
    }
  }
}

void transpose(const float* src, float* dst, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) dst[q * rows + r] = src[r * cols + q];
  }
}

void im2col3x3(const float* image, float* cols, std::size_t h, std::size_t w,
               std::size_t c) {
  const std::size_t row_len = 9 * c;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      float* dst = cols + (y * w + x) * row_len;
      for (int ky = 0; ky < 3; ++ky) {
        const long sy = static_cast<long>(y) + ky - 1;
        for (int kx = 0; kx < 3; ++kx) {
          const long sx = static_cast<long>(x) + kx - 1;
          float* cell = dst + (ky * 3 + kx) * c;
          if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) ||
              sx >= static_cast<long>(w)) {
            std::fill(cell, cell + c, 0.0f);
          } else {
            std::memcpy(cell, image + (sy * w + sx) * c, c * sizeof(float));
          }
        }
      }
    }
  }
}

void col2im3x3_acc(const float* cols, float* image, std::size_t h, std::size_t w,
                   std::size_t c) {
  const std::size_t row_len = 9 * c;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const float* src = cols + (y * w + x) * row_len;
      for (int ky = 0; ky < 3; ++ky) {
        const long sy = static_cast<long>(y) + ky - 1;
        if (sy < 0 || sy >= static_cast<long>(h)) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const long sx = static_cast<long>(x) + kx - 1;
          if (sx < 0 || sx >= static_cast<long>(w)) continue;
          const float* cell = src + (ky * 3 + kx) * c;
          float* out = image + (sy * w + sx) * c;
          for (std::size_t ch = 0; ch < c; ++ch) out[ch] += cell[ch];
        }
      }
    }
  }
}

}  // namespace rlclass::kernels
