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

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "mpsntk/simd/kernels.hpp"

namespace mpsntk::simd {

#if !defined(MPSNTK_HAVE_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool cpu_has_avx2_fma() {
#if defined(MPSNTK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* pick(Isa isa) {
  if (isa == Isa::kAvx2 && cpu_has_avx2_fma() && avx2_kernels() != nullptr) {
    return avx2_kernels();
  }
  return &scalar_kernels();
}

const KernelTable* initial_table() {
  const char* env = std::getenv("MPSNTK_ISA");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_kernels();
  return pick(Isa::kAvx2);
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) { slot().store(pick(isa), std::memory_order_release); }

}  // namespace mpsntk::simd
