// Copyright 2026 The thzmesh Authors. All rights reserved.
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

#include <cstdlib>
#include <string>

#include "thzmesh/errors.hpp"
#include "thzmesh/kernels.hpp"

namespace thzmesh::kernels {
namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);

struct Table {
  Isa isa;
  DotFn dot;
  AxpyFn axpy;
};

constexpr Table kScalarTable{Isa::kScalar, &scalar::dot, &scalar::axpy};
constexpr Table kAvx2Table{Isa::kAvx2, &avx2::dot, &avx2::axpy};

bool cpu_has_avx2() {
#if defined(THZMESH_HAVE_AVX2) && defined(__x86_64__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Table initial_table() {
  if (const char* env = std::getenv("THZMESH_ISA")) {
    const std::string v(env);
    if (v == "scalar") return kScalarTable;
    if (v == "avx2" && cpu_has_avx2()) return kAvx2Table;
  }
  return cpu_has_avx2() ? kAvx2Table : kScalarTable;
}

Table& table() {
  static Table t = initial_table();
  return t;
}

void check_size(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw UsageError(std::string("kernel size mismatch in ") + what);
  }
}

}  // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) {
  return isa == Isa::kScalar || cpu_has_avx2();
}

Isa active_isa() { return table().isa; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw UsageError("ISA not supported on this CPU: " +
                     std::string(isa_name(isa)));
  }
  table() = isa == Isa::kAvx2 ? kAvx2Table : kScalarTable;
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_size(a.size(), b.size(), "dot");
  return table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_size(x.size(), y.size(), "axpy");
  table().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::size_t rows, std::size_t cols, std::span<const double> w,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y) {
  check_size(rows * cols, w.size(), "gemv");
  check_size(cols, x.size(), "gemv");
  check_size(rows, y.size(), "gemv");
  if (!b.empty()) check_size(rows, b.size(), "gemv");
  const DotFn d = table().dot;
  for (std::size_t r = 0; r < rows; ++r) {
    const double acc = d(w.data() + r * cols, x.data(), cols);
    y[r] = b.empty() ? acc : acc + b[r];
  }
}

void gemv_t(std::size_t rows, std::size_t cols, std::span<const double> w,
            std::span<const double> g, std::span<double> x_grad) {
  check_size(rows * cols, w.size(), "gemv_t");
  check_size(rows, g.size(), "gemv_t");
  check_size(cols, x_grad.size(), "gemv_t");
  const AxpyFn a = table().axpy;
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) a(g[r], w.data() + r * cols, x_grad.data(), cols);
  }
}

void ger(std::size_t rows, std::size_t cols, double alpha,
         std::span<const double> g, std::span<const double> x,
         std::span<double> w) {
  check_size(rows * cols, w.size(), "ger");
  check_size(rows, g.size(), "ger");
  check_size(cols, x.size(), "ger");
  const AxpyFn a = table().axpy;
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * g[r];
    if (s != 0.0) a(s, x.data(), w.data() + r * cols, cols);
  }
}

}  // namespace thzmesh::kernels
