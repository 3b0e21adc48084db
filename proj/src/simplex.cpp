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

#include "maskfs/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace maskfs {

namespace {

void check_finite(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("sparsemax: empty input");
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("sparsemax: non-finite entry");
}

// (value, original index) pairs sorted descending; ties keep original order.
// Contiguous pairs sort far faster than an indirect index sort at large d.
using Entry = std::pair<double, std::uint32_t>;

std::vector<Entry> sort_desc(std::span<const double> v) {
    std::vector<Entry> entries(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        entries[i] = {v[i], static_cast<std::uint32_t>(i)};
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    return entries;
}

// k(v) and tau for the scaled, pre-sorted input. Multiplying by m > 0
// preserves the descending order.
struct Threshold {
    std::size_t k = 0;
    double tau = 0.0;
};

Threshold threshold_sorted(const std::vector<Entry>& sorted, double m) {
    const std::size_t d = sorted.size();
    std::size_t k = 1;
    double cum = m * sorted[0].first;
    double cum_at_k = cum;
    for (std::size_t i = 1; i < d; ++i) {
        const double w = m * sorted[i].first;
        cum += w;
        if (1.0 + static_cast<double>(i + 1) * w > cum) {
            k = i + 1;
            cum_at_k = cum;
        }
    }
    return {k, (cum_at_k - 1.0) / static_cast<double>(k)};
}

SimplexProjection project_sorted(std::span<const double> v, const std::vector<Entry>& sorted, double m) {
    const Threshold th = threshold_sorted(sorted, m);
    const std::size_t d = v.size();
    SimplexProjection out;
    out.values.assign(d, 0.0);
    out.tau = th.tau;
    for (std::size_t i = 0; i < d; ++i) {
        const double p = m * v[i] - th.tau;
        if (p > 0.0) {
            out.values[i] = p;
            out.support.push_back(i);
        }
    }
    out.k = out.support.size();
    return out;
}

std::size_t support_size(std::span<const double> v, const std::vector<Entry>& sorted, double m) {
    const Threshold th = threshold_sorted(sorted, m);
    std::size_t n = 0;
    for (double x : v)
        if (m * x - th.tau > 0.0) ++n;
    return n;
}

bool is_uniform(std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
}

constexpr double kGrowSlack = 1e-6;

ScalingResult scaling_from_sorted(std::span<const double> v, const std::vector<Entry>& sorted,
                                  std::size_t target, std::size_t current) {
    const std::size_t d = v.size();
    if (target < 1 || target > d) throw std::invalid_argument("scaling_for_target: target out of [1, d]");
    if (current == target) return {1.0, ScalingBranch::AlreadyTarget, 0.0};
    if (is_uniform(v)) throw std::domain_error("scaling_for_target: uniform input, support cannot change");

    // A_k = sum_{i<=k} v_(i) - k * v_(k); support of sparsemax(m*v) is the
    // largest k with m * A_k < 1.
    auto a_of = [&](std::size_t kk) {
        double sum = 0.0;
        for (std::size_t i = 0; i < kk; ++i) sum += sorted[i].first;
        return sum - static_cast<double>(kk) * sorted[kk - 1].first;
    };
    if (current > target) {
        const double a = a_of(target + 1);
        if (a <= 0.0) throw std::domain_error("scaling_for_target: tied entries at the target boundary");
        return {1.0 / a, ScalingBranch::ShrinkSupport, 0.0};
    }
    const double a = a_of(target);
    if (a <= 0.0) throw std::domain_error("scaling_for_target: tied entries at the target boundary");
    return {(1.0 - kGrowSlack) / a, ScalingBranch::GrowSupport, kGrowSlack};
}

}  // namespace

SimplexProjection sparsemax(std::span<const double> v) {
    check_finite(v);
    return project_sorted(v, sort_desc(v), 1.0);
}

ScalingResult scaling_for_target(std::span<const double> v, std::size_t target) {
    check_finite(v);
    const auto order = sort_desc(v);
    return scaling_from_sorted(v, order, target, support_size(v, order, 1.0));
}

ScaledProjection scaled_sparsemax(std::span<const double> v, std::size_t target) {
    check_finite(v);
    const auto order = sort_desc(v);
    const std::size_t current = support_size(v, order, 1.0);
    ScaledProjection out;
    out.scaling = scaling_from_sorted(v, order, target, current);
    out.applied_multiplier = out.scaling.multiplier;
    if (support_size(v, order, out.applied_multiplier) != target) {
        // The analytic multiplier sits on (or within an ulp of) the strict
        // k(v) boundary and f64 rounding picked the wrong side. Support size
        // is monotone non-increasing in the multiplier, so bisect a bracket
        // around the analytic value until the cardinality is exact.
        double lo = out.scaling.multiplier;  // support(lo) >= target wanted
        double hi = out.scaling.multiplier;  // support(hi) <= target wanted
        double step = 1e-12;
        while (support_size(v, order, lo) < target) {
            lo = out.scaling.multiplier * (1.0 - step);
            step *= 4.0;
            if (step > 0.5) throw std::domain_error("scaled_sparsemax: cannot reach target support");
        }
        step = 1e-12;
        while (support_size(v, order, hi) > target) {
            hi = out.scaling.multiplier * (1.0 + step);
            step *= 4.0;
            if (step > 0.5) throw std::domain_error("scaled_sparsemax: cannot reach target support");
        }
        double mid = out.scaling.multiplier;
        for (int iter = 0; iter < 200; ++iter) {
            mid = 0.5 * (lo + hi);
            const std::size_t got = support_size(v, order, mid);
            if (got == target) break;
            if (got > target)
                lo = mid;
            else
                hi = mid;
            if (lo == hi || iter == 199)
                throw std::domain_error("scaled_sparsemax: cannot reach target support (tied entries)");
        }
        out.applied_multiplier = mid;
    }
    out.projection = project_sorted(v, order, out.applied_multiplier);
    return out;
}

std::vector<double> sparsemax_jvp(const SimplexProjection& proj, std::span<const double> upstream) {
    check_finite(upstream);
    if (upstream.size() != proj.values.size())
        throw std::invalid_argument("sparsemax_jvp: dimension mismatch");
    std::vector<double> out(upstream.size(), 0.0);
    if (proj.support.empty()) return out;
    double mean = 0.0;
    for (std::size_t i : proj.support) mean += upstream[i];
    mean /= static_cast<double>(proj.support.size());
    for (std::size_t i : proj.support) out[i] = upstream[i] - mean;
    return out;
}

}  // namespace maskfs
