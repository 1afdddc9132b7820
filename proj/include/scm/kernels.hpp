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

#pragma once

// Dense inner-loop kernels behind a runtime-selected backend.
//
// Every backend computes the same mathematical quantity; only the summation
// order differs, so results agree to rounding (see tests/test_kernels.cpp).
// The scalar backend is the reference: plain left-to-right loops.
//
// Selection happens once, on first use: the SCMOPT_KERNELS environment
// variable ("scalar", "avx2", "neon", "auto") wins, otherwise the widest
// backend the CPU supports is used.

#include <cstddef>
#include <span>
#include <string_view>

#include "scm/linalg.hpp"

namespace scm::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = A x for row-major A of shape rows x cols.
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (a_i - b_i)^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

std::string_view backend_name(Backend backend);

// True when the backend was compiled in and the running CPU supports it.
bool available(Backend backend);

Backend widest_available();

// "scalar", "avx2", "neon" or "auto" (widest available); ConfigError otherwise.
Backend parse_backend(std::string_view name);

// Throws scm::UnsupportedOperation when the backend is unavailable.
const KernelTable& table(Backend backend);

const KernelTable& active();
void set_active(Backend backend);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(const Matrix& a, std::span<const double> x, std::span<double> y);

// (1/|rows|) sum_r (a_r . x - target_r)^2 with `a` row-major.
double mean_squared_residual(const Matrix& a, std::span<const double> x,
                             std::span<const double> target);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(SCM_HAVE_AVX2_KERNELS)
extern const KernelTable kAvx2Table;
#endif
#if defined(SCM_HAVE_NEON_KERNELS)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace scm::kernels
