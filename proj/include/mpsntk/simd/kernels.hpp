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

#pragma once

// Dense double-precision kernels used by every contraction in the library.
//
// Each kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant compiled in its own translation unit. `active()` picks the best
// variant the running CPU supports once, at first use. The scalar table is
// always available and is what the equivalence tests compare against.
//
// All matrices are row-major with an explicit leading dimension.

#include <cstddef>
#include <string_view>

namespace mpsntk::simd {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  /// C = A(m x k) * B(k x n), or C += A * B when `accumulate` is set.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a,
               std::size_t lda, const double* b, std::size_t ldb, double* c,
               std::size_t ldc, bool accumulate);

  /// sum_i x[i] * y[i]
  double (*dot)(std::size_t n, const double* x, const double* y);

  /// y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);

  /// max_i |x[i] - y[i]|
  double (*max_abs_diff)(std::size_t n, const double* x, const double* y);
};

const KernelTable& scalar_kernels();

/// AVX2+FMA table, or nullptr when the build has no x86-64 SIMD support.
const KernelTable* avx2_kernels();

/// True when the CPU executing this process supports AVX2 and FMA.
bool cpu_has_avx2_fma();

/// Kernel table selected for this process. Honors MPSNTK_ISA=scalar.
const KernelTable& active();

/// Overrides the selection (tests and benchmarks). Requesting an ISA the CPU
/// lacks falls back to scalar.
void select(Isa isa);

}  // namespace mpsntk::simd
