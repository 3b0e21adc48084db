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

#ifndef MASKFS_SIMPLEX_HPP
#define MASKFS_SIMPLEX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace maskfs {

/// Euclidean projection of a vector onto the probability simplex.
///
/// values sums to 1, entries off the support are exact zeros, and entries on
/// the support equal input - tau. support is sorted ascending; k = |support|.
struct SimplexProjection {
    std::vector<double> values;
    std::vector<std::size_t> support;
    double tau = 0.0;
    std::size_t k = 0;
};

enum class ScalingBranch { ShrinkSupport, GrowSupport, AlreadyTarget };

/// Multiplier that retargets the support cardinality of sparsemax(v).
struct ScalingResult {
    double multiplier = 1.0;
    ScalingBranch branch = ScalingBranch::AlreadyTarget;
    double epsilon_slack = 0.0;
};

/// scaled_sparsemax output: the projection plus the scaling that produced it.
/// applied_multiplier is the multiplier actually used for the projection; it
/// deviates from scaling.multiplier only when the analytic value lands on the
/// strict-inequality boundary in f64 and a corrective nudge was needed to make
/// the support cardinality exact.
struct ScaledProjection {
    SimplexProjection projection;
    ScalingResult scaling;
    double applied_multiplier = 1.0;
};

/// Projects v onto the simplex: descending sort, cumulative sums, the largest
/// k with 1 + k*v_(k) > sum_{i<=k} v_(i), then tau = (sum_{i<=k} v_(i) - 1)/k.
/// O(d log d). Throws std::invalid_argument on empty input or non-finite
/// entries. Ties sort stably (original index order).
SimplexProjection sparsemax(std::span<const double> v);

/// Multiplier m such that sparsemax(m*v) has exactly `target` nonzero entries.
/// Shrinking uses the analytic boundary value; growing applies a (1 - 1e-6)
/// slack because the analytic value puts element `target` at weight exactly 0.
/// Throws std::invalid_argument for target out of [1, d] or non-finite input,
/// std::domain_error when v is uniform (and the support is not already the
/// target) or when boundary ties make the target cardinality unreachable.
ScalingResult scaling_for_target(std::span<const double> v, std::size_t target);

/// scaling_for_target composed with sparsemax. The result's support size is
/// exactly `target`; if the analytic multiplier misfires at the f64 boundary,
/// the applied multiplier is bisected inside the valid interval (support size
/// is monotone non-increasing in the multiplier).
ScaledProjection scaled_sparsemax(std::span<const double> v, std::size_t target);

/// Jacobian-vector product of sparsemax at the given projection: zero outside
/// the support, upstream minus the support mean inside. O(|support|).
std::vector<double> sparsemax_jvp(const SimplexProjection& proj, std::span<const double> upstream);

}  // namespace maskfs

#endif  // MASKFS_SIMPLEX_HPP
