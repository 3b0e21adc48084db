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

#ifndef MASKFS_MASK_HPP
#define MASKFS_MASK_HPP

#include <array>
#include <cstddef>

#include "maskfs/matrix.hpp"
#include "maskfs/simplex.hpp"

namespace maskfs {

/// Piecewise-constant schedule shrinking the target feature count from f0 to
/// fn over the first n_tmp steps in five plateaus, then holding at fn.
struct TemperingSchedule {
    std::size_t f0 = 0;
    std::size_t fn = 0;
    std::size_t n_total = 0;
    std::size_t n_tmp = 0;
    std::array<std::size_t, 5> plateaus{};

    /// n_tmp_override = 0 selects the default n_total / 2.
    static TemperingSchedule make(std::size_t f0, std::size_t fn, std::size_t n_total,
                                  std::size_t n_tmp_override = 0);
};

/// Target feature count at step t: plateau j = floor(5 t / n_tmp) for
/// t < n_tmp, fn afterwards. Throws std::invalid_argument for t > n_total.
std::size_t target_count_at(const TemperingSchedule& schedule, std::size_t t);

/// The learnable mask: unconstrained argument plus its sparse projection.
struct MaskState {
    std::vector<double> argument;  // the learnable vector, initialized to ones
    SimplexProjection sparse;      // scaled_sparsemax(argument, target_count)
    std::size_t target_count = 0;
    std::size_t step = 0;
    double applied_multiplier = 1.0;  // forward-pass constant for the backward chain
    bool scaling_enabled = true;
    bool degenerate_warning = false;  // set when a refresh fell back to plain sparsemax

    static MaskState init(std::size_t d, bool scaling_enabled = true);
};

/// Updates target_count from the schedule and recomputes the sparse mask from
/// the (unchanged) argument. A degenerate argument (uniform, or tied at the
/// support boundary) falls back to multiplier 1 and sets degenerate_warning.
void refresh_mask(MaskState& state, std::size_t t, const TemperingSchedule& schedule);

/// X ⊙ m_sp per row. Columns outside the support are exact zeros.
Matrix apply_mask(const Matrix& x, const SimplexProjection& sparse);

}  // namespace maskfs

#endif  // MASKFS_MASK_HPP
