// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "chainmpq/simd/kernels.hpp"

namespace chainmpq::simd {
namespace {

bool CpuSupports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(CHAINMPQ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(CHAINMPQ_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* CompiledTable(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &detail::kScalarTable;
    case Isa::kAvx2:
#if defined(CHAINMPQ_HAVE_AVX2)
      return &detail::kAvx2Table;
#else
      return nullptr;
#endif
    case Isa::kNeon:
#if defined(CHAINMPQ_HAVE_NEON)
      return &detail::kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* InitialTable() {
  if (const char* env = std::getenv("CHAINMPQ_SIMD"); env != nullptr) {
    const std::string want(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (want == isa_name(isa)) {
        if (const KernelTable* t = kernels_for(isa)) return t;
      }
    }
    // Unknown or unavailable request: fall through to auto-detection.
  }
  return kernels_for(best_isa());
}

std::atomic<const KernelTable*>& ActiveSlot() {
  static std::atomic<const KernelTable*> slot{InitialTable()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
  const KernelTable* table = CompiledTable(isa);
  if (table == nullptr || !CpuSupports(isa)) return nullptr;
  return table;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

Isa best_isa() {
  if (kernels_for(Isa::kAvx2) != nullptr) return Isa::kAvx2;
  if (kernels_for(Isa::kNeon) != nullptr) return Isa::kNeon;
  return Isa::kScalar;
}

const KernelTable& kernels() {
  return *ActiveSlot().load(std::memory_order_acquire);
}

void select_isa(Isa isa) {
  const KernelTable* table = kernels_for(isa);
  if (table == nullptr) {
    throw std::invalid_argument("kernel variant '" + std::string(isa_name(isa)) +
                                "' is not available on this machine");
  }
  ActiveSlot().store(table, std::memory_order_release);
}

}  // namespace chainmpq::simd
