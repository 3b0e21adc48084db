// Copyright 2026 The maskfs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASKFS_KERNELS_HPP
#define MASKFS_KERNELS_HPP

#include <cstddef>

namespace maskfs::kernels {

// Data-parallel inner loops. The default entry points are OpenMP-parallel and
// bit-deterministic for any thread count: every output element is owned by one
// thread, and scalar reductions accumulate into fixed-size blocks that are
// combined in index order. kernels::ref holds the naive serial versions used
// by the equivalence tests and the benchmark.

// C(m x n) = A(m x k) * B(k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
// C(m x n) = A(m x k) * B(n x k)^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
// C(m x n) = A(k x m)^T * B(k x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

// out(cols x rows) = a(rows x cols)^T, blocked for cache friendliness.
void transpose(const double* a, std::size_t rows, std::size_t cols, double* out);

// Pairwise consistency sum over unordered sample pairs (i1 < i2):
//   sum_w = sum  prod_{j in support, |x[i1,j]-x[i2,j]| > diff_eps} (1 - p[j])  *  (r[i1]-r[i2])^2
// x is b x d row-major (raw, pre-mask features); r holds per-sample prediction
// scalars; support/p_support list the s mask entries with nonzero probability.
// Entries outside the support contribute an exact factor of 1 and are skipped.
// If grad_r / grad_p are non-null they receive the partials d(sum)/d(r[i]) and
// d(sum)/d(p[support[idx]]).
double rcs_pairs(const double* x, std::size_t b, std::size_t d, const double* r,
                 const std::size_t* support, const double* p_support, std::size_t s,
                 double diff_eps, double* grad_r, double* grad_p);

// out(n x n) symmetric matrix of squared Euclidean distances between rows of x.
void pairwise_sqdist(const double* x, std::size_t n, std::size_t d, double* out);

// out[j] = sum_i a(i,j) * b(i,j) over an n x d pair of row-major matrices
// (column-wise dot; the mask gradient assembly).
void colwise_dot(const double* a, const double* b, double* out, std::size_t n, std::size_t d);

namespace ref {
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void transpose(const double* a, std::size_t rows, std::size_t cols, double* out);
double rcs_pairs(const double* x, std::size_t b, std::size_t d, const double* r,
                 const std::size_t* support, const double* p_support, std::size_t s,
                 double diff_eps, double* grad_r, double* grad_p);
void pairwise_sqdist(const double* x, std::size_t n, std::size_t d, double* out);
void colwise_dot(const double* a, const double* b, double* out, std::size_t n, std::size_t d);
}  // namespace ref

}  // namespace maskfs::kernels

#endif  // MASKFS_KERNELS_HPP
