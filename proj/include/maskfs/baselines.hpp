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

#ifndef MASKFS_BASELINES_HPP
#define MASKFS_BASELINES_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "maskfs/data.hpp"
#include "maskfs/matrix.hpp"
#include "maskfs/train.hpp"

namespace maskfs {

enum class ScoreMethod { Fisher, AnovaF, BinnedMI, LinearCoef };

struct FeatureScores {
    std::vector<double> scores;
    ScoreMethod method = ScoreMethod::Fisher;

    /// Indices of the k best scores, descending; ties break to the lowest index.
    std::vector<std::size_t> top_k(std::size_t k) const;
};

/// Fisher score per feature: sum_c n_c (mu_cj - mu_j)^2 / sum_c n_c var_cj,
/// with a zero score when the within-class variance vanishes.
FeatureScores fisher_score(const Matrix& x, std::span<const double> y_classes,
                           std::size_t n_classes);

/// One-way ANOVA F statistic per feature (between-group over within-group
/// mean squares).
FeatureScores anova_f(const Matrix& x, std::span<const double> y_classes, std::size_t n_classes);

/// Plug-in mutual information between each feature (equal-frequency binned;
/// low-cardinality features are used as categories directly) and the label
/// (classes, or binned the same way for regression targets).
FeatureScores binned_mi(const Matrix& x, std::span<const double> y, Task task,
                        std::size_t n_classes = 0, std::size_t bins = 10);

/// |coefficient| of an unregularized linear fit: closed-form least squares for
/// regression, seeded full-batch gradient-descent one-vs-rest logistic fits
/// for classification (score = max |coef| over classes).
FeatureScores linear_coef(const Matrix& x, std::span<const double> y, Task task,
                          std::size_t n_classes = 0, std::uint64_t seed = 0);

/// Trains the shared MLP on only the selected columns and reports split
/// metrics. Throws std::invalid_argument on an empty selection.
Metrics evaluate_selection(const Dataset& ds, std::span<const std::size_t> indices,
                           const TrainConfig& cfg);

}  // namespace maskfs

#endif  // MASKFS_BASELINES_HPP
