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

#ifndef RLCLASS_SRC_KERNELS_HPP_
#define RLCLASS_SRC_KERNELS_HPP_

#include <cstddef>

namespace rlclass::kernels {

// All matrices row-major. Every output element is accumulated over the inner
// dimension in ascending order, one rounded multiply and one rounded add per
// term, so results match a naive triple loop bit for bit.

// c[m,n] += a[m,k] * b[k,n]
void matmul_acc(const float* a, const float* b, float* c, std::size_t m,
                std::size_t k, std::size_t n);

// c[k,n] += a[m,k]^T * g[m,n]
void matmul_tn_acc(const float* a, const float* g, float* c, std::size_t m,
                   std::size_t k, std::size_t n);

// dst[cols,rows] = src[rows,cols]^T
void transpose(const float* src, float* dst, std::size_t rows, std::size_t cols);

// Patch matrix of one [H,W,C] image for a 3x3/pad-1 window:
// cols[(y*W+x), (ky*3+kx)*C + c].
void im2col3x3(const float* image, float* cols, std::size_t h, std::size_t w,
               std::size_t c);

// Adds a patch-matrix gradient back onto an [H,W,C] image gradient.
void col2im3x3_acc(const float* cols, float* image, std::size_t h, std::size_t w,
                   std::size_t c);

}  // namespace rlclass::kernels

#endif  // RLCLASS_SRC_KERNELS_HPP_
