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

#include "maskfs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "maskfs/kernels.hpp"

namespace maskfs {

namespace {

std::vector<std::size_t> class_of(std::span<const double> y) {
    std::vector<std::size_t> c(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) c[i] = static_cast<std::size_t>(std::llround(y[i]));
    return c;
}

struct ClassStats {
    std::vector<std::size_t> counts;          // per class
    std::vector<std::vector<double>> mean;    // class x feature
    std::vector<std::vector<double>> var;     // class x feature (population)
    std::vector<double> grand_mean;           // per feature
};

ClassStats per_class_stats(const Matrix& x, const std::vector<std::size_t>& cls, std::size_t nc) {
    ClassStats s;
    s.counts.assign(nc, 0);
    s.mean.assign(nc, std::vector<double>(x.cols, 0.0));
    s.var.assign(nc, std::vector<double>(x.cols, 0.0));
    s.grand_mean.assign(x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        ++s.counts[cls[i]];
        for (std::size_t j = 0; j < x.cols; ++j) {
            s.mean[cls[i]][j] += x(i, j);
            s.grand_mean[j] += x(i, j);
        }
    }
    for (std::size_t c = 0; c < nc; ++c)
        if (s.counts[c] > 0)
            for (double& v : s.mean[c]) v /= static_cast<double>(s.counts[c]);
    for (double& v : s.grand_mean) v /= static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double diff = x(i, j) - s.mean[cls[i]][j];
            s.var[cls[i]][j] += diff * diff;
        }
    for (std::size_t c = 0; c < nc; ++c)
        if (s.counts[c] > 0)
            for (double& v : s.var[c]) v /= static_cast<double>(s.counts[c]);
    return s;
}

// Categories for the plug-in MI estimate: raw values when the feature has at
// most `bins` distinct values, equal-frequency rank bins otherwise.
std::vector<std::size_t> discretize(std::span<const double> v, std::size_t bins) {
    std::set<double> distinct(v.begin(), v.end());
    if (distinct.size() <= bins) {
        std::vector<double> vals(distinct.begin(), distinct.end());
        std::vector<std::size_t> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = static_cast<std::size_t>(
                std::lower_bound(vals.begin(), vals.end(), v[i]) - vals.begin());
        return out;
    }
    return bin_labels(v, bins);
}

double plugin_mi(const std::vector<std::size_t>& a, std::size_t na,
                 const std::vector<std::size_t>& b, std::size_t nb) {
    const double n = static_cast<double>(a.size());
    std::vector<double> joint(na * nb, 0.0), pa(na, 0.0), pb(nb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[a[i] * nb + b[i]] += 1.0;
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            const double pij = joint[i * nb + j] / n;
            if (pij > 0.0) mi += pij * std::log(pij * n * n / (pa[i] * pb[j]));
        }
    return mi;
}

}  // namespace

std::vector<std::size_t> FeatureScores::top_k(std::size_t k) const {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

FeatureScores fisher_score(const Matrix& x, std::span<const double> y_classes,
                           std::size_t n_classes) {
    const std::vector<std::size_t> cls = class_of(y_classes);
    const ClassStats s = per_class_stats(x, cls, n_classes);
    FeatureScores out;
    out.method = ScoreMethod::Fisher;
    out.scores.assign(x.cols, 0.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double nc = static_cast<double>(s.counts[c]);
            const double dm = s.mean[c][j] - s.grand_mean[j];
            num += nc * dm * dm;
            den += nc * s.var[c][j];
        }
        out.scores[j] = den > 0.0 ? num / den : 0.0;
    }
    return out;
}

FeatureScores anova_f(const Matrix& x, std::span<const double> y_classes, std::size_t n_classes) {
    const std::vector<std::size_t> cls = class_of(y_classes);
    const ClassStats s = per_class_stats(x, cls, n_classes);
    const double n = static_cast<double>(x.rows);
    std::size_t groups = 0;
    for (std::size_t c = 0; c < n_classes; ++c)
        if (s.counts[c] > 0) ++groups;
    FeatureScores out;
    out.method = ScoreMethod::AnovaF;
    out.scores.assign(x.cols, 0.0);
    if (groups < 2 || n <= static_cast<double>(groups)) return out;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double ss_between = 0.0, ss_within = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double nc = static_cast<double>(s.counts[c]);
            const double dm = s.mean[c][j] - s.grand_mean[j];
            ss_between += nc * dm * dm;
            ss_within += nc * s.var[c][j];
        }
        const double ms_between = ss_between / static_cast<double>(groups - 1);
        const double ms_within = ss_within / (n - static_cast<double>(groups));
        out.scores[j] = ms_within > 0.0 ? ms_between / ms_within : 0.0;
    }
    return out;
}

FeatureScores binned_mi(const Matrix& x, std::span<const double> y, Task task,
                        std::size_t n_classes, std::size_t bins) {
    std::vector<std::size_t> label_cat;
    std::size_t n_label_cat;
    if (task == Task::Classification) {
        label_cat = class_of(y);
        n_label_cat = n_classes;
    } else {
        label_cat = discretize(y, bins);
        n_label_cat = bins;
    }
    FeatureScores out;
    out.method = ScoreMethod::BinnedMI;
    out.scores.assign(x.cols, 0.0);
    std::vector<double> col(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < x.rows; ++i) col[i] = x(i, j);
        const std::vector<std::size_t> cat = discretize(col, bins);
        const std::size_t n_cat = *std::max_element(cat.begin(), cat.end()) + 1;
        out.scores[j] = plugin_mi(cat, n_cat, label_cat, n_label_cat);
    }
    return out;
}

FeatureScores linear_coef(const Matrix& x, std::span<const double> y, Task task,
                          std::size_t n_classes, std::uint64_t seed) {
    (void)seed;  // fits below are deterministic; kept for interface stability
    FeatureScores out;
    out.method = ScoreMethod::LinearCoef;
    out.scores.assign(x.cols, 0.0);
    const std::size_t d = x.cols;
    const std::size_t n = x.rows;

    if (task == Task::Regression) {
        // Normal equations with a tiny diagonal jitter as a pivot guard.
        Matrix xtx(d, d);
        kernels::ref::gemm_tn(x.data.data(), x.data.data(), xtx.data.data(), d, n, d);
        std::vector<double> xty(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) xty[j] += x(i, j) * y[i];
        for (std::size_t j = 0; j < d; ++j) xtx(j, j) += 1e-12;
        // Gaussian elimination with partial pivoting.
        std::vector<double> beta = xty;
        Matrix a = xtx;
        for (std::size_t col = 0; col < d; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < d; ++r)
                if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
            if (piv != col) {
                for (std::size_t cc = 0; cc < d; ++cc) std::swap(a(col, cc), a(piv, cc));
                std::swap(beta[col], beta[piv]);
            }
            const double pivot = a(col, col);
            if (pivot == 0.0) continue;
            for (std::size_t r = col + 1; r < d; ++r) {
                const double f = a(r, col) / pivot;
                if (f == 0.0) continue;
                for (std::size_t cc = col; cc < d; ++cc) a(r, cc) -= f * a(col, cc);
                beta[r] -= f * beta[col];
            }
        }
        for (std::size_t col = d; col-- > 0;) {
            double acc = beta[col];
            for (std::size_t cc = col + 1; cc < d; ++cc) acc -= a(col, cc) * beta[cc];
            beta[col] = a(col, col) != 0.0 ? acc / a(col, col) : 0.0;
        }
        for (std::size_t j = 0; j < d; ++j) out.scores[j] = std::fabs(beta[j]);
        return out;
    }

    // One-vs-rest logistic fits, full-batch gradient descent, fixed budget.
    const std::vector<std::size_t> cls = class_of(y);
    const double lr = 0.5;
    const int iters = 200;
    std::vector<double> w(d), margin(n), grad(d);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::fill(w.begin(), w.end(), 0.0);
        double b = 0.0;
        for (int it = 0; it < iters; ++it) {
            for (std::size_t i = 0; i < n; ++i) {
                double z = b;
                const double* row = x.row(i);
                for (std::size_t j = 0; j < d; ++j) z += row[j] * w[j];
                const double target = cls[i] == c ? 1.0 : 0.0;
                margin[i] = 1.0 / (1.0 + std::exp(-z)) - target;
            }
            double gb = 0.0;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                gb += margin[i];
                const double* row = x.row(i);
                for (std::size_t j = 0; j < d; ++j) grad[j] += row[j] * margin[i];
            }
            b -= lr * gb / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) w[j] -= lr * grad[j] / static_cast<double>(n);
        }
        for (std::size_t j = 0; j < d; ++j) out.scores[j] = std::max(out.scores[j], std::fabs(w[j]));
    }
    return out;
}

Metrics evaluate_selection(const Dataset& ds, std::span<const std::size_t> indices,
                           const TrainConfig& cfg) {
    if (indices.empty()) throw std::invalid_argument("evaluate_selection: empty index set");
    for (std::size_t j : indices)
        if (j >= ds.d()) throw std::invalid_argument("evaluate_selection: index out of range");
    return train_mlp_on_columns(ds, {indices.begin(), indices.end()}, cfg);
}

}  // namespace maskfs
