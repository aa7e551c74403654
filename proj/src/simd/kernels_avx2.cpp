// Copyright 2026 The mpsntk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Compiled with -mavx2 -mfma. Nothing in here may run before
// cpu_has_avx2_fma() has returned true.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpsntk/simd/kernels.hpp"

namespace mpsntk::simd {
namespace {

// Packed panels: A in blocks of 6 rows stored k-major (a_pack[p * 6 + r]),
// B in strips of 8 columns stored k-major (b_pack[p * 8 + c]). Each micro
// kernel then streams both operands contiguously.
constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 8;

// 6 x 8 tile: 12 accumulators, 2 B loads and 6 broadcasts per k step. The
// accumulators are named locals; arrays of vectors get spilled by GCC.
inline void micro_6x8(std::size_t k, const double* ap, const double* bp, double* c,
                      std::size_t ldc, bool accumulate) {
  __m256d c00, c01, c10, c11, c20, c21, c30, c31, c40, c41, c50, c51;
  if (accumulate) {
    c00 = _mm256_loadu_pd(c);
    c01 = _mm256_loadu_pd(c + 4);
    c10 = _mm256_loadu_pd(c + ldc);
    c11 = _mm256_loadu_pd(c + ldc + 4);
    c20 = _mm256_loadu_pd(c + 2 * ldc);
    c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    c30 = _mm256_loadu_pd(c + 3 * ldc);
    c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
    c40 = _mm256_loadu_pd(c + 4 * ldc);
    c41 = _mm256_loadu_pd(c + 4 * ldc + 4);
    c50 = _mm256_loadu_pd(c + 5 * ldc);
    c51 = _mm256_loadu_pd(c + 5 * ldc + 4);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = _mm256_setzero_pd();
    c30 = c31 = c40 = c41 = c50 = c51 = _mm256_setzero_pd();
  }
  for (std::size_t p = 0; p < k; ++p, ap += kMr, bp += kNr) {
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d a = _mm256_broadcast_sd(ap);
    c00 = _mm256_fmadd_pd(a, b0, c00);
    c01 = _mm256_fmadd_pd(a, b1, c01);
    a = _mm256_broadcast_sd(ap + 1);
    c10 = _mm256_fmadd_pd(a, b0, c10);
    c11 = _mm256_fmadd_pd(a, b1, c11);
    a = _mm256_broadcast_sd(ap + 2);
    c20 = _mm256_fmadd_pd(a, b0, c20);
    c21 = _mm256_fmadd_pd(a, b1, c21);
    a = _mm256_broadcast_sd(ap + 3);
    c30 = _mm256_fmadd_pd(a, b0, c30);
    c31 = _mm256_fmadd_pd(a, b1, c31);
    a = _mm256_broadcast_sd(ap + 4);
    c40 = _mm256_fmadd_pd(a, b0, c40);
    c41 = _mm256_fmadd_pd(a, b1, c41);
    a = _mm256_broadcast_sd(ap + 5);
    c50 = _mm256_fmadd_pd(a, b0, c50);
    c51 = _mm256_fmadd_pd(a, b1, c51);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
  _mm256_storeu_pd(c + 4 * ldc, c40);
  _mm256_storeu_pd(c + 4 * ldc + 4, c41);
  _mm256_storeu_pd(c + 5 * ldc, c50);
  _mm256_storeu_pd(c + 5 * ldc + 4, c51);
}

// Partial tile: run the full kernel on a scratch tile and copy the valid part.
void micro_edge(std::size_t rows, std::size_t width, std::size_t k, const double* ap,
                const double* bp, double* c, std::size_t ldc, bool accumulate) {
  double tile[kMr * kNr] = {};
  if (accumulate) {
    for (std::size_t r = 0; r < rows; ++r) std::copy(c + r * ldc, c + r * ldc + width, tile + r * kNr);
  }
  micro_6x8(k, ap, bp, tile, kNr, accumulate);
  for (std::size_t r = 0; r < rows; ++r) std::copy(tile + r * kNr, tile + r * kNr + width, c + r * ldc);
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
               std::size_t lda, const double* b, std::size_t ldb, double* c,
               std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
    }
    return;
  }
  thread_local std::vector<double> a_pack;
  thread_local std::vector<double> b_pack;
  const std::size_t blocks = (m + kMr - 1) / kMr;
  a_pack.assign(blocks * kMr * k, 0.0);
  for (std::size_t ib = 0; ib < blocks; ++ib) {
    double* dst = a_pack.data() + ib * kMr * k;
    const std::size_t rows = std::min(kMr, m - ib * kMr);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = a + (ib * kMr + r) * lda;
      for (std::size_t p = 0; p < k; ++p) dst[p * kMr + r] = src[p];
    }
  }
  b_pack.assign(k * kNr, 0.0);
  for (std::size_t j = 0; j < n; j += kNr) {
    const std::size_t width = std::min(kNr, n - j);
    for (std::size_t p = 0; p < k; ++p) {
      const double* src = b + p * ldb + j;
      double* dst = b_pack.data() + p * kNr;
      for (std::size_t q = 0; q < width; ++q) dst[q] = src[q];
    }
    for (std::size_t ib = 0; ib < blocks; ++ib) {
      const double* ap = a_pack.data() + ib * kMr * k;
      double* cb = c + ib * kMr * ldc + j;
      const std::size_t rows = std::min(kMr, m - ib * kMr);
      if (rows == kMr && width == kNr) {
        micro_6x8(k, ap, b_pack.data(), cb, ldc, accumulate);
      } else {
        micro_edge(rows, width, k, ap, b_pack.data(), cb, ldc, accumulate);
      }
    }
  }
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) acc = std::fma(x[i], y[i], acc);
  return acc;
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4),
                                                _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double max_abs_diff_avx2(std::size_t n, const double* x, const double* y) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    m = _mm256_max_pd(m, _mm256_andnot_pd(sign, d));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = std::fmax(std::fmax(lanes[0], lanes[1]), std::fmax(lanes[2], lanes[3]));
  for (; i < n; ++i) r = std::fmax(r, std::fabs(x[i] - y[i]));
  return r;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::kAvx2, "avx2+fma", &gemm_avx2,
                                 &dot_avx2,  &axpy_avx2, &max_abs_diff_avx2};
  return &table;
}

}  // namespace mpsntk::simd
