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

#include "maskfs/miloss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maskfs/kernels.hpp"

namespace maskfs {

namespace {

constexpr double kRowTol = 1e-6;
constexpr double kDiffEps = 1e-9;

void check_probs(const PredictionBatch& batch) {
    if (batch.task != Task::Classification)
        throw std::invalid_argument("quadratic_error: classification batch required");
    if (batch.probs.rows != batch.labels.size())
        throw std::invalid_argument("quadratic_error: labels/probs size mismatch");
    for (std::size_t i = 0; i < batch.probs.rows; ++i) {
        double sum = 0.0;
        for (std::size_t y = 0; y < batch.probs.cols; ++y) {
            const double v = batch.probs(i, y);
            if (v < -kRowTol || v > 1.0 + kRowTol)
                throw std::invalid_argument("quadratic_error: probability outside [0, 1]");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > kRowTol)
            throw std::invalid_argument("quadratic_error: probability row not normalized");
    }
}

std::size_t label_index(const PredictionBatch& batch, std::size_t i) {
    const double l = batch.labels[i];
    const auto y = static_cast<std::size_t>(std::llround(l));
    if (y >= batch.probs.cols) throw std::invalid_argument("label index out of range");
    return y;
}

// Predictions at the samples' own labels (classification) or raw outputs
// (regression) — the r entering the pairwise consistency term.
std::vector<double> own_label_scores(const PredictionBatch& batch) {
    std::vector<double> r(batch.batch_size());
    if (batch.task == Task::Classification) {
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = batch.probs(i, label_index(batch, i));
    } else {
        r = batch.reals;
    }
    return r;
}

struct SupportView {
    std::vector<std::size_t> idx;
    std::vector<double> p;
};

SupportView compress_support(std::span<const double> p) {
    SupportView sv;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] < 0.0 || p[j] > 1.0)
            throw std::invalid_argument("consistency_regularizer: p outside [0, 1]");
        if (p[j] > 0.0) {
            sv.idx.push_back(j);
            sv.p.push_back(p[j]);
        }
    }
    return sv;
}

double median_sigma(const Matrix& sqdist) {
    std::vector<double> d;
    d.reserve(sqdist.rows * (sqdist.rows - 1) / 2);
    for (std::size_t i = 0; i < sqdist.rows; ++i)
        for (std::size_t j = i + 1; j < sqdist.cols; ++j) d.push_back(std::sqrt(sqdist(i, j)));
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid > 0.0 ? *mid : 1.0;
}

Matrix gaussian_kernel(const Matrix& sqdist, double sigma) {
    Matrix k(sqdist.rows, sqdist.cols);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < k.size(); ++i) k.data[i] = std::exp(-sqdist.data[i] * inv);
    return k;
}

Matrix double_center(const Matrix& k) {
    const std::size_t n = k.rows;
    std::vector<double> row_mean(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) row_mean[i] += k(i, j);
        total += row_mean[i];
        row_mean[i] /= static_cast<double>(n);
    }
    total /= static_cast<double>(n) * static_cast<double>(n);
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = k(i, j) - row_mean[i] - row_mean[j] + total;
    return out;
}

struct HsicParts {
    Matrix kx;        // Gaussian kernel on x
    Matrix ly_cent;   // double-centered label kernel
    double sigma_x = 1.0;
    double scale = 1.0;  // 1/(b-1)^2
};

HsicParts hsic_parts(const Matrix& x, const Matrix& y, double sigma_x, double sigma_y) {
    const std::size_t b = x.rows;
    if (b < 2) throw std::invalid_argument("hsic_gaussian: need at least 2 samples");
    if (y.rows != b) throw std::invalid_argument("hsic_gaussian: x/y row mismatch");
    Matrix dx(b, b), dy(b, b);
    kernels::pairwise_sqdist(x.data.data(), b, x.cols, dx.data.data());
    kernels::pairwise_sqdist(y.data.data(), b, y.cols, dy.data.data());
    HsicParts parts;
    parts.sigma_x = sigma_x > 0.0 ? sigma_x : median_sigma(dx);
    const double sy = sigma_y > 0.0 ? sigma_y : median_sigma(dy);
    parts.kx = gaussian_kernel(dx, parts.sigma_x);
    parts.ly_cent = double_center(gaussian_kernel(dy, sy));
    parts.scale = 1.0 / (static_cast<double>(b - 1) * static_cast<double>(b - 1));
    return parts;
}

}  // namespace

double quadratic_error(const PredictionBatch& batch) {
    check_probs(batch);
    const std::size_t b = batch.probs.rows;
    if (b == 0) throw std::invalid_argument("quadratic_error: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t yi = label_index(batch, i);
        double e = 0.0;
        for (std::size_t y = 0; y < batch.probs.cols; ++y) {
            const double r = batch.probs(i, y);
            e += (y == yi) ? (1.0 - r) * (1.0 - r) : r * r;
        }
        total += e;
    }
    return total / static_cast<double>(b);
}

double consistency_regularizer(const Matrix& x_raw, const PredictionBatch& batch,
                               std::span<const double> p) {
    const SupportView sv = compress_support(p);
    if (x_raw.cols != p.size())
        throw std::invalid_argument("consistency_regularizer: x/p dimension mismatch");
    const std::size_t b = batch.batch_size();
    if (x_raw.rows != b) throw std::invalid_argument("consistency_regularizer: x/batch mismatch");
    if (b < 2) return 0.0;
    const std::vector<double> r = own_label_scores(batch);
    return kernels::rcs_pairs(x_raw.data.data(), b, x_raw.cols, r.data(), sv.idx.data(),
                              sv.p.data(), sv.idx.size(), kDiffEps, nullptr, nullptr);
}

LossBreakdown mi_objective(const Matrix& x_raw, const PredictionBatch& batch,
                           std::span<const double> p, double task_loss, LossWeights weights) {
    LossBreakdown out;
    out.weights = weights;
    out.task_loss = task_loss;
    if (weights.mi_weight != 0.0) {
        out.mi_error = quadratic_error(batch);
        out.r_cs = consistency_regularizer(x_raw, batch, p);
    }
    out.combined = weights.task_weight * task_loss + weights.mi_weight * (out.mi_error + out.r_cs);
    return out;
}

double mi_objective_regression(const Matrix& x_raw, std::span<const double> outputs,
                               std::span<const double> labels, std::span<const double> p) {
    if (outputs.size() != labels.size())
        throw std::invalid_argument("mi_objective_regression: outputs/labels mismatch");
    PredictionBatch batch;
    batch.task = Task::Regression;
    batch.reals.assign(outputs.begin(), outputs.end());
    batch.labels.assign(labels.begin(), labels.end());
    double mse = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const double diff = labels[i] - outputs[i];
        mse += diff * diff;
    }
    mse /= static_cast<double>(outputs.size());
    return mse + consistency_regularizer(x_raw, batch, p);
}

double quadratic_mi(const Matrix& joint) {
    double total = 0.0;
    for (double v : joint.data) {
        if (v < 0.0) throw std::invalid_argument("quadratic_mi: negative probability");
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("quadratic_mi: joint not normalized");
    double cond_term = 0.0;
    for (std::size_t x = 0; x < joint.rows; ++x) {
        double px = 0.0;
        for (std::size_t y = 0; y < joint.cols; ++y) px += joint(x, y);
        if (px == 0.0) continue;
        for (std::size_t y = 0; y < joint.cols; ++y) cond_term += joint(x, y) * joint(x, y) / px;
    }
    double marg_term = 0.0;
    for (std::size_t y = 0; y < joint.cols; ++y) {
        double py = 0.0;
        for (std::size_t x = 0; x < joint.rows; ++x) py += joint(x, y);
        marg_term += py * py;
    }
    return cond_term - marg_term;
}

double hsic_gaussian(const Matrix& x_masked, const Matrix& y, double sigma_x, double sigma_y) {
    const HsicParts parts = hsic_parts(x_masked, y, sigma_x, sigma_y);
    // tr(K H L H) = sum_ij K_ij (H L H)_ij since both are symmetric.
    double tr = 0.0;
    for (std::size_t i = 0; i < parts.kx.size(); ++i) tr += parts.kx.data[i] * parts.ly_cent.data[i];
    return -parts.scale * tr;
}

Matrix hsic_gaussian_grad(const Matrix& x_masked, const Matrix& y, double sigma_x, double sigma_y) {
    const HsicParts parts = hsic_parts(x_masked, y, sigma_x, sigma_y);
    const std::size_t b = x_masked.rows;
    const std::size_t d = x_masked.cols;
    Matrix grad(b, d);
    const double inv_ss = 1.0 / (parts.sigma_x * parts.sigma_x);
    // d(-scale * sum K_ij L~_ij)/dx_i; dK_ij/dx_i = -K_ij (x_i - x_j)/sigma^2.
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            const double coef = 2.0 * parts.scale * parts.ly_cent(i, j) * parts.kx(i, j) * inv_ss;
            const double* xi = x_masked.row(i);
            const double* xj = x_masked.row(j);
            double* gi = grad.row(i);
            for (std::size_t l = 0; l < d; ++l) gi[l] += coef * (xi[l] - xj[l]);
        }
    }
    return grad;
}

MiGradients miloss_gradients(const Matrix& x_raw, const PredictionBatch& batch,
                             std::span<const double> p, bool include_rcs, double rcs_scale) {
    MiGradients out;
    out.d_p.assign(p.size(), 0.0);
    const std::size_t b = batch.batch_size();
    const double inv_b = 1.0 / static_cast<double>(b);

    std::vector<double> grad_r(b, 0.0);
    std::vector<double> grad_p_support;
    SupportView sv;
    if (include_rcs && b >= 2) {
        sv = compress_support(p);
        grad_p_support.assign(sv.idx.size(), 0.0);
        const std::vector<double> r = own_label_scores(batch);
        kernels::rcs_pairs(x_raw.data.data(), b, x_raw.cols, r.data(), sv.idx.data(), sv.p.data(),
                           sv.idx.size(), kDiffEps, grad_r.data(), grad_p_support.data());
        for (std::size_t i = 0; i < sv.idx.size(); ++i)
            out.d_p[sv.idx[i]] = rcs_scale * grad_p_support[i];
        for (double& g : grad_r) g *= rcs_scale;
    }

    if (batch.task == Task::Classification) {
        check_probs(batch);
        out.d_probs = Matrix(b, batch.probs.cols);
        for (std::size_t i = 0; i < b; ++i) {
            const std::size_t yi = label_index(batch, i);
            for (std::size_t y = 0; y < batch.probs.cols; ++y) {
                const double ind = (y == yi) ? 1.0 : 0.0;
                out.d_probs(i, y) = 2.0 * (batch.probs(i, y) - ind) * inv_b;
            }
            out.d_probs(i, yi) += grad_r[i];  // r_cs enters through R(x_i, y_i)
        }
    } else {
        out.d_outputs.assign(b, 0.0);
        for (std::size_t i = 0; i < b; ++i)
            out.d_outputs[i] = 2.0 * (batch.reals[i] - batch.labels[i]) * inv_b + grad_r[i];
    }
    return out;
}

}  // namespace maskfs
