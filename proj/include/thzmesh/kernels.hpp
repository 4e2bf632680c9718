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

#ifndef THZMESH_KERNELS_HPP_
#define THZMESH_KERNELS_HPP_

// Dense double-precision inner loops used by the network kernel and the fGn
// generator. Each kernel has a scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The variant is picked once at startup from CPUID and can
// be overridden with THZMESH_ISA=scalar|avx2 or set_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace thzmesh::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Throws UsageError when the requested ISA is not available on this CPU.
void set_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y = W x + b, W row-major rows x cols. b may be empty.
void gemv(std::size_t rows, std::size_t cols, std::span<const double> w,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y);
// x_grad += W^T g
void gemv_t(std::size_t rows, std::size_t cols, std::span<const double> w,
            std::span<const double> g, std::span<double> x_grad);
// W += alpha * g x^T
void ger(std::size_t rows, std::size_t cols, double alpha,
         std::span<const double> g, std::span<const double> x,
         std::span<double> w);

// Per-ISA entry points, exposed for equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace thzmesh::kernels

#endif  // THZMESH_KERNELS_HPP_
