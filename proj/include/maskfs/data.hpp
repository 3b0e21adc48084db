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

#ifndef MASKFS_DATA_HPP
#define MASKFS_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "maskfs/matrix.hpp"
#include "maskfs/miloss.hpp"

namespace maskfs {

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct Normalization {
    std::vector<double> mean;
    std::vector<double> sd;  // constant features get sd = 1
    double label_mean = 0.0;
    double label_sd = 1.0;
    bool fitted = false;
};

struct Dataset {
    Matrix x;                // n x d
    std::vector<double> y;   // class indices or reals
    std::size_t n_classes = 0;
    Task task = Task::Classification;
    std::vector<std::string> feature_names;
    std::vector<Split> split;  // per sample; empty until normalize_split
    Normalization norm;

    std::size_t n() const { return x.rows; }
    std::size_t d() const { return x.cols; }
    std::vector<std::size_t> rows_in(Split s) const;
};

/// Parses a headered CSV into a Dataset. Cells must be numeric ('.' decimal,
/// UTF-8, comma separator); classification labels must be non-negative
/// integers. Errors name the offending 1-based data row and column.
Dataset load_csv(const std::string& path, const std::string& label_column, Task task);

/// Writes the dataset back to CSV with round-trip-exact float formatting.
void write_csv(const Dataset& ds, const std::string& path);

/// Seeded shuffle + split by fractions, then per-feature standard
/// normalization fitted on the train split and applied everywhere. Regression
/// labels are standard-normalized with train statistics.
void normalize_split(Dataset& ds, std::array<double, 3> fractions = {0.7, 0.1, 0.2},
                     std::uint64_t seed = 0);

/// Synthetic binary benchmark: i.i.d. U[-1,1] features, five contiguous
/// salient blocks of group_size features driving nonlinear block statistics,
/// the rest pure noise. center_labels (default) thresholds the score at its
/// empirical median so the classes stay balanced; disabling it applies the
/// raw "score > 0" rule, which is heavily one-sided.
struct SynthConfig {
    std::size_t group_size = 10;   // L; salient feature count is 5 L
    std::size_t d_total = 100;
    std::size_t n_samples = 1000;
    double noise_scale = 0.2;
    std::uint64_t seed = 0;
    bool center_labels = true;
    bool permute_columns = false;  // seeded column shuffle so order carries no signal
};

Dataset synth_generate(const SynthConfig& cfg);

/// Noiseless score T1+..+T5 - 3 of one sample's salient block values
/// (length 5 L). Exposed so tests can pin the label rule directly.
double synth_score(std::span<const double> salient, std::size_t group_size);

/// Equal-frequency binning by rank; all bins within +-1 of n/k occupancy.
std::vector<std::size_t> bin_labels(std::span<const double> y, std::size_t k);

}  // namespace maskfs

#endif  // MASKFS_DATA_HPP
