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

#ifndef MASKFS_MILOSS_HPP
#define MASKFS_MILOSS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "maskfs/matrix.hpp"

namespace maskfs {

enum class Task { Classification, Regression };

/// Model outputs for one batch. Classification fills probs (b x c, rows sum
/// to 1) and labels holds class indices; regression fills reals and labels
/// holds targets.
struct PredictionBatch {
    Task task = Task::Classification;
    Matrix probs;               // b x c
    std::vector<double> reals;  // b
    std::vector<double> labels; // b (class index or target)

    std::size_t batch_size() const {
        return task == Task::Classification ? probs.rows : reals.size();
    }
};

struct LossWeights {
    double mi_weight = 1.0;
    double task_weight = 1.0;
};

/// Per-step objective decomposition: combined = task_weight * task_loss
/// + mi_weight * (mi_error + r_cs).
struct LossBreakdown {
    double task_loss = 0.0;
    double mi_error = 0.0;
    double r_cs = 0.0;
    double combined = 0.0;
    LossWeights weights;
};

/// Batch mean of (1 - R(x_i, y_i))^2 + sum_{y != y_i} R(x_i, y)^2. Lies in
/// [0, c]. Throws std::invalid_argument if a probability row is off the
/// simplex by more than 1e-6.
double quadratic_error(const PredictionBatch& batch);

/// Pairwise consistency penalty: for each unordered sample pair, the product
/// of (1 - p_j) over features j where the raw inputs differ (|delta| > 1e-9),
/// times the squared difference of the predictions at the samples' own labels
/// (or the raw outputs for regression). x_raw is the pre-mask batch; p is the
/// mask probability vector (length d, entries in [0, 1]). Returns 0 for
/// batches smaller than 2.
double consistency_regularizer(const Matrix& x_raw, const PredictionBatch& batch,
                               std::span<const double> p);

/// quadratic_error + consistency_regularizer combined with the task loss into
/// a LossBreakdown.
LossBreakdown mi_objective(const Matrix& x_raw, const PredictionBatch& batch,
                           std::span<const double> p, double task_loss, LossWeights weights);

/// Continuous-label variant: mean squared error of outputs against labels plus
/// the consistency penalty on squared output differences.
double mi_objective_regression(const Matrix& x_raw, std::span<const double> outputs,
                               std::span<const double> labels, std::span<const double> p);

/// Quadratic relaxation of mutual information for an explicit joint
/// distribution (|X| x |Y| matrix of probabilities summing to 1):
/// I_q = sum P(x,y)^2 / P_X(x) - sum P_Y(y)^2. Verification-suite companion of
/// the training objective, not on the training path.
double quadratic_mi(const Matrix& joint);

/// Negated biased HSIC estimator with Gaussian kernels, usable directly as a
/// minimization regularizer: -(b-1)^{-2} tr(K H L H). y is one-hot (b x c) or
/// a single real column. sigma <= 0 selects the median pairwise distance of
/// the corresponding side (falling back to 1 when the median is 0).
double hsic_gaussian(const Matrix& x_masked, const Matrix& y, double sigma_x = 0.0,
                     double sigma_y = 0.0);

/// Gradient of hsic_gaussian w.r.t. x_masked at fixed sigmas (the median
/// heuristic is a constant of the forward pass).
Matrix hsic_gaussian_grad(const Matrix& x_masked, const Matrix& y, double sigma_x = 0.0,
                          double sigma_y = 0.0);

/// Analytic gradients of quadratic_error + rcs_scale * consistency_regularizer
/// (unweighted by mi_weight; scale that at the call site). rcs_scale lets the
/// training loop enforce the pairwise term batch-wise as a pair mean
/// (2 / (b (b-1))) so it shares the quadratic term's magnitude.
struct MiGradients {
    Matrix d_probs;                 // classification: b x c
    std::vector<double> d_outputs;  // regression: b
    std::vector<double> d_p;        // d
};
MiGradients miloss_gradients(const Matrix& x_raw, const PredictionBatch& batch,
                             std::span<const double> p, bool include_rcs = true,
                             double rcs_scale = 1.0);

}  // namespace maskfs

#endif  // MASKFS_MILOSS_HPP
