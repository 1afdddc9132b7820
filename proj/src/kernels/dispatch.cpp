// Copyright 2026 The scmopt Authors.
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
#include <cassert>
#include <cstdlib>
#include <string>

#include "scm/errors.hpp"
#include "scm/kernels.hpp"

namespace scm::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(SCM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  const char* env = std::getenv("SCMOPT_KERNELS");
  if (env == nullptr) return widest_available();
  const std::string choice(env);
  if (choice == "scalar") return Backend::kScalar;
  if (choice == "avx2" && available(Backend::kAvx2)) return Backend::kAvx2;
  if (choice == "neon" && available(Backend::kNeon)) return Backend::kNeon;
  return widest_available();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(initial_backend())};
  return slot;
}

}  // namespace

Backend widest_available() {
  if (available(Backend::kAvx2)) return Backend::kAvx2;
  if (available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "neon") return Backend::kNeon;
  if (name == "auto") return widest_available();
  throw ConfigError("unknown kernel backend '" + std::string(name) + "' (expected scalar, avx2, neon, auto)");
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

bool available(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return true;
    case Backend::kAvx2: return cpu_has_avx2();
    case Backend::kNeon:
#if defined(SCM_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!available(backend)) {
    throw UnsupportedOperation("kernel backend '" + std::string(backend_name(backend)) +
                               "' is not available on this machine");
  }
  switch (backend) {
#if defined(SCM_HAVE_AVX2_KERNELS)
    case Backend::kAvx2: return detail::kAvx2Table;
#endif
#if defined(SCM_HAVE_NEON_KERNELS)
    case Backend::kNeon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active(Backend backend) {
  active_slot().store(&table(backend), std::memory_order_release);
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().squared_distance(a.data(), b.data(), a.size());
}

double squared_norm(std::span<const double> a) { return active().dot(a.data(), a.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(static_cast<std::size_t>(a.cols()) == x.size());
  assert(static_cast<std::size_t>(a.rows()) == y.size());
  active().gemv(a.data(), static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()),
                x.data(), y.data());
}

double mean_squared_residual(const Matrix& a, std::span<const double> x,
                             std::span<const double> target) {
  assert(static_cast<std::size_t>(a.rows()) == target.size());
  if (target.empty()) return 0.0;
  Vector fitted(a.rows());
  gemv(a, x, as_span(fitted));
  return squared_distance(as_span(fitted), target) / static_cast<double>(target.size());
}

}  // namespace scm::kernels
