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

#ifndef MASKFS_HARNESS_HPP
#define MASKFS_HARNESS_HPP

#include <string>
#include <vector>

#include "maskfs/baselines.hpp"
#include "maskfs/data.hpp"
#include "maskfs/train.hpp"

namespace maskfs {

/// Dataset source for the comparison harness: a synthetic draw or a CSV.
struct DataSpec {
    bool synthetic = true;
    SynthConfig synth;
    std::string csv_path;
    std::string label_column = "label";
    Task task = Task::Classification;
};

/// Generates/loads and splits the dataset for one harness seed. Synthetic
/// draws and the split shuffle are both reseeded per run.
Dataset make_dataset(const DataSpec& spec, std::uint64_t seed);

/// Ground-truth salient columns when the dataset is synthetic-benchmark
/// shaped (some features named noise_*); empty otherwise.
std::vector<std::size_t> salient_columns(const Dataset& ds);

enum class CompareMethod { Slm, Fisher, AnovaF, BinnedMI, LinearCoef, AllFeatures, RandomK };
const char* method_name(CompareMethod m);

struct CompareRow {
    CompareMethod method;
    std::size_t k = 0;
    double metric_mean = 0.0;
    double metric_sd = 0.0;
    double recovery_mean = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> metric_per_seed;
    std::vector<double> recovery_per_seed;
};

/// Runs the full method grid over `n_seeds` reseeded datasets at each k.
/// Filter scores are fitted on the train split only; every method's selection
/// is evaluated with the same MLP configuration.
std::vector<CompareRow> run_compare(const DataSpec& spec, const TrainConfig& base_cfg,
                                    const std::vector<std::size_t>& ks, std::size_t n_seeds);

}  // namespace maskfs

#endif  // MASKFS_HARNESS_HPP
