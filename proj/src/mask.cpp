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

#include "maskfs/mask.hpp"

#include <cmath>
#include <stdexcept>

namespace maskfs {

TemperingSchedule TemperingSchedule::make(std::size_t f0, std::size_t fn, std::size_t n_total,
                                          std::size_t n_tmp_override) {
    if (fn == 0 || fn > f0) throw std::invalid_argument("TemperingSchedule: need 1 <= fn <= f0");
    TemperingSchedule s;
    s.f0 = f0;
    s.fn = fn;
    s.n_total = n_total;
    s.n_tmp = n_tmp_override != 0 ? n_tmp_override : std::max<std::size_t>(1, n_total / 2);
    const double range = static_cast<double>(f0) - static_cast<double>(fn);
    for (std::size_t j = 0; j < 5; ++j)
        s.plateaus[j] = static_cast<std::size_t>(
            std::llround(static_cast<double>(f0) - static_cast<double>(j) / 5.0 * range));
    return s;
}

std::size_t target_count_at(const TemperingSchedule& schedule, std::size_t t) {
    if (t > schedule.n_total) throw std::invalid_argument("target_count_at: step beyond n_total");
    if (t >= schedule.n_tmp) return schedule.fn;
    const std::size_t j = 5 * t / schedule.n_tmp;  // in {0..4} since t < n_tmp
    return schedule.plateaus[j];
}

MaskState MaskState::init(std::size_t d, bool scaling_enabled) {
    MaskState m;
    m.argument.assign(d, 1.0);
    m.target_count = d;
    m.scaling_enabled = scaling_enabled;
    return m;
}

void refresh_mask(MaskState& state, std::size_t t, const TemperingSchedule& schedule) {
    state.step = t;
    state.target_count = target_count_at(schedule, t);
    if (!state.scaling_enabled) {
        state.sparse = sparsemax(state.argument);
        state.applied_multiplier = 1.0;
        return;
    }
    try {
        ScaledProjection sp = scaled_sparsemax(state.argument, state.target_count);
        state.sparse = std::move(sp.projection);
        state.applied_multiplier = sp.applied_multiplier;
    } catch (const std::domain_error&) {
        // Uniform argument (step 0 before any gradient) or boundary ties: one
        // unscaled refresh, flagged for the caller.
        state.sparse = sparsemax(state.argument);
        state.applied_multiplier = 1.0;
        state.degenerate_warning = true;
    }
}

Matrix apply_mask(const Matrix& x, const SimplexProjection& sparse) {
    if (x.cols != sparse.values.size()) throw std::invalid_argument("apply_mask: dimension mismatch");
    Matrix out(x.rows, x.cols);  // off-support columns stay bit-exact +0.0
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* src = x.row(i);
        double* dst = out.row(i);
        for (std::size_t j : sparse.support) dst[j] = src[j] * sparse.values[j];
    }
    return out;
}

}  // namespace maskfs
