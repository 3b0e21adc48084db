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

#include "maskfs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace maskfs::kernels {

namespace {

// Pair-block size for the deterministic r_cs reduction. Fixed so the summation
// order does not depend on the thread count.
constexpr std::size_t kRcsBlock = 32;

// One i1-row of the pair sum over a compact b x s panel of support columns.
// Leave-one-out products come from prefix/suffix passes, which cost no
// divisions and make exact-zero factors (p = 1) fall out naturally. scratch
// must hold 2 (s + 1) doubles.
inline double rcs_row_panel(const double* panel, std::size_t b, std::size_t s, const double* r,
                            const double* p_support, double diff_eps, std::size_t i1,
                            double* grad_r, double* grad_p, double* scratch) {
    const double* x1 = panel + i1 * s;
    double* prefix = scratch;          // prefix[t] = prod of factors < t
    double* suffix = scratch + s + 1;  // suffix[t] = prod of factors >= t
    double row_sum = 0.0;
    for (std::size_t i2 = i1 + 1; i2 < b; ++i2) {
        const double* x2 = panel + i2 * s;
        const double dr = r[i1] - r[i2];
        const double dr2 = dr * dr;
        prefix[0] = 1.0;
        for (std::size_t t = 0; t < s; ++t) {
            const double f =
                std::fabs(x1[t] - x2[t]) > diff_eps ? 1.0 - p_support[t] : 1.0;
            prefix[t + 1] = prefix[t] * f;
        }
        const double w = prefix[s];
        row_sum += w * dr2;
        if (grad_r != nullptr) {
            const double g = 2.0 * w * dr;
            grad_r[i1] += g;
            grad_r[i2] -= g;
        }
        if (grad_p != nullptr && dr2 != 0.0) {
            suffix[s] = 1.0;
            for (std::size_t t = s; t-- > 0;) {
                const double f =
                    std::fabs(x1[t] - x2[t]) > diff_eps ? 1.0 - p_support[t] : 1.0;
                suffix[t] = suffix[t + 1] * f;
            }
            for (std::size_t t = 0; t < s; ++t)
                if (std::fabs(x1[t] - x2[t]) > diff_eps)
                    grad_p[t] -= prefix[t] * suffix[t + 1] * dr2;
        }
    }
    return row_sum;
}

}  // namespace

namespace ref {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
            c[i * n + j] = acc;
        }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[j * k + l];
            c[i * n + j] = acc;
        }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += a[l * m + i] * b[l * n + j];
            c[i * n + j] = acc;
        }
}

void transpose(const double* a, std::size_t rows, std::size_t cols, double* out) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = a[i * cols + j];
}

double rcs_pairs(const double* x, std::size_t b, std::size_t d, const double* r,
                 const std::size_t* support, const double* p_support, std::size_t s,
                 double diff_eps, double* grad_r, double* grad_p) {
    // Naive direct form of the pairwise sum, kept as the independent check of
    // the panel/prefix implementation (leave-one-out products via division).
    if (grad_r != nullptr) std::memset(grad_r, 0, b * sizeof(double));
    if (grad_p != nullptr) std::memset(grad_p, 0, s * sizeof(double));
    double total = 0.0;
    for (std::size_t i1 = 0; i1 + 1 < b; ++i1) {
        const double* x1 = x + i1 * d;
        for (std::size_t i2 = i1 + 1; i2 < b; ++i2) {
            const double* x2 = x + i2 * d;
            double prod_nz = 1.0;
            std::size_t zeros = 0;
            std::size_t zero_idx = 0;
            for (std::size_t idx = 0; idx < s; ++idx) {
                const std::size_t j = support[idx];
                if (std::fabs(x1[j] - x2[j]) > diff_eps) {
                    const double f = 1.0 - p_support[idx];
                    if (f == 0.0) {
                        ++zeros;
                        zero_idx = idx;
                    } else {
                        prod_nz *= f;
                    }
                }
            }
            const double dr = r[i1] - r[i2];
            const double dr2 = dr * dr;
            const double w = (zeros == 0) ? prod_nz : 0.0;
            total += w * dr2;
            if (grad_r != nullptr && zeros == 0) {
                const double g = 2.0 * w * dr;
                grad_r[i1] += g;
                grad_r[i2] -= g;
            }
            if (grad_p != nullptr && zeros <= 1 && dr2 != 0.0) {
                if (zeros == 1) {
                    grad_p[zero_idx] -= prod_nz * dr2;
                } else {
                    for (std::size_t idx = 0; idx < s; ++idx) {
                        const std::size_t j = support[idx];
                        if (std::fabs(x1[j] - x2[j]) > diff_eps)
                            grad_p[idx] -= (prod_nz / (1.0 - p_support[idx])) * dr2;
                    }
                }
            }
        }
    }
    return total;
}

void pairwise_sqdist(const double* x, std::size_t n, std::size_t d, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i * n + i] = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < d; ++l) {
                const double diff = x[i * d + l] - x[j * d + l];
                acc += diff * diff;
            }
            out[i * n + j] = acc;
            out[j * n + i] = acc;
        }
    }
}

void colwise_dot(const double* a, const double* b, double* out, std::size_t n, std::size_t d) {
    std::memset(out, 0, d * sizeof(double));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[j] += a[i * d + j] * b[i * d + j];
}

}  // namespace ref

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    // i-k-j order: streams B rows, each C row owned by one thread.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* crow = c + i * n;
        std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = arow[l];
            if (av == 0.0) continue;
            const double* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
            crow[j] = acc;
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    // Materialize A^T first: the column-strided walk through A thrashes the
    // TLB once A outgrows it, and the blocked transpose pays that cost in one
    // tile-friendly pass instead of per output row.
    std::vector<double> at(m * k);
    transpose(a, k, m, at.data());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* crow = c + i * n;
        std::memset(crow, 0, n * sizeof(double));
        const double* arow = at.data() + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = arow[l];
            if (av == 0.0) continue;
            const double* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void transpose(const double* a, std::size_t rows, std::size_t cols, double* out) {
    constexpr std::size_t kTile = 32;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>((rows + kTile - 1) / kTile); ++bi) {
        const std::size_t i0 = static_cast<std::size_t>(bi) * kTile;
        const std::size_t i1 = std::min(i0 + kTile, rows);
        for (std::size_t j0 = 0; j0 < cols; j0 += kTile) {
            const std::size_t j1 = std::min(j0 + kTile, cols);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) out[j * rows + i] = a[i * cols + j];
        }
    }
}

double rcs_pairs(const double* x, std::size_t b, std::size_t d, const double* r,
                 const std::size_t* support, const double* p_support, std::size_t s,
                 double diff_eps, double* grad_r, double* grad_p) {
    if (b < 2) {
        if (grad_r != nullptr) std::memset(grad_r, 0, b * sizeof(double));
        if (grad_p != nullptr) std::memset(grad_p, 0, s * sizeof(double));
        return 0.0;
    }
    // Gather the support columns into a compact b x s panel once; the O(b^2)
    // pair loop then runs on contiguous rows instead of picking s scattered
    // columns out of every 8d-byte row.
    std::vector<double> panel(b * s);
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = x + i * d;
        double* prow = panel.data() + i * s;
        for (std::size_t t = 0; t < s; ++t) prow[t] = row[support[t]];
    }

    const std::size_t n_blocks = (b + kRcsBlock - 1) / kRcsBlock;
    std::vector<double> block_sum(n_blocks, 0.0);
    std::vector<double> block_gr(grad_r != nullptr ? n_blocks * b : 0, 0.0);
    std::vector<double> block_gp(grad_p != nullptr ? n_blocks * s : 0, 0.0);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(n_blocks); ++bb) {
        const std::size_t blk = static_cast<std::size_t>(bb);
        const std::size_t lo = blk * kRcsBlock;
        const std::size_t hi = lo + kRcsBlock < b ? lo + kRcsBlock : b;
        double* gr = grad_r != nullptr ? block_gr.data() + blk * b : nullptr;
        double* gp = grad_p != nullptr ? block_gp.data() + blk * s : nullptr;
        std::vector<double> scratch(2 * (s + 1));
        double acc = 0.0;
        for (std::size_t i1 = lo; i1 < hi && i1 + 1 < b; ++i1)
            acc += rcs_row_panel(panel.data(), b, s, r, p_support, diff_eps, i1, gr, gp,
                                 scratch.data());
        block_sum[blk] = acc;
    }

    // Fixed-order block reduction: block granularity is independent of the
    // thread count, so results are bit-identical however the loop is split.
    double total = 0.0;
    for (std::size_t blk = 0; blk < n_blocks; ++blk) total += block_sum[blk];
    if (grad_r != nullptr) {
        std::memset(grad_r, 0, b * sizeof(double));
        for (std::size_t blk = 0; blk < n_blocks; ++blk)
            for (std::size_t i = 0; i < b; ++i) grad_r[i] += block_gr[blk * b + i];
    }
    if (grad_p != nullptr) {
        std::memset(grad_p, 0, s * sizeof(double));
        for (std::size_t blk = 0; blk < n_blocks; ++blk)
            for (std::size_t i = 0; i < s; ++i) grad_p[i] += block_gp[blk * s + i];
    }
    return total;
}

void pairwise_sqdist(const double* x, std::size_t n, std::size_t d, double* out) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        out[i * n + i] = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < d; ++l) {
                const double diff = x[i * d + l] - x[j * d + l];
                acc += diff * diff;
            }
            out[i * n + j] = acc;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out[j * n + i] = out[i * n + j];
}

void colwise_dot(const double* a, const double* b, double* out, std::size_t n, std::size_t d) {
    // Column chunks walk both matrices row-major so the traffic stays
    // streaming; each chunk's accumulator strip is thread-owned.
    constexpr std::size_t kChunk = 256;
    const std::size_t n_chunks = (d + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(n_chunks); ++cc) {
        const std::size_t j0 = static_cast<std::size_t>(cc) * kChunk;
        const std::size_t j1 = std::min(j0 + kChunk, d);
        double* strip = out + j0;
        std::memset(strip, 0, (j1 - j0) * sizeof(double));
        for (std::size_t i = 0; i < n; ++i) {
            const double* arow = a + i * d;
            const double* brow = b + i * d;
            for (std::size_t j = j0; j < j1; ++j) strip[j - j0] += arow[j] * brow[j];
        }
    }
}

}  // namespace maskfs::kernels
