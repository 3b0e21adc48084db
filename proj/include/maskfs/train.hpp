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

#ifndef MASKFS_TRAIN_HPP
#define MASKFS_TRAIN_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "maskfs/data.hpp"
#include "maskfs/mask.hpp"
#include "maskfs/net.hpp"

namespace maskfs {

struct TrainConfig {
    std::size_t n_epochs = 30;
    std::size_t batch_size = 128;
    double learning_rate = 3e-3;
    double decay_steps = 1000.0;
    double decay_rate = 0.9;
    std::size_t hidden_units = 64;
    std::size_t n_layers = 1;          // hidden layer count
    std::size_t target_features = 0;   // F_N; must be set
    bool tempering = true;
    std::size_t n_tmp_override = 0;    // 0 = N/2
    double mi_weight = 1.0;
    bool mi_enabled = true;
    bool hsic_enabled = false;
    bool rcs_enabled = true;
    bool scaling_enabled = true;
    std::uint64_t seed = 42;
};

struct Metrics {
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    double auc = std::numeric_limits<double>::quiet_NaN();

    /// Higher-is-better scalar: accuracy for classification, -mae otherwise.
    double primary(Task task) const { return task == Task::Classification ? accuracy : -mae; }
};

struct StepLog {
    std::size_t step = 0;
    std::size_t target = 0;
    std::size_t support = 0;
    LossBreakdown loss;
};

struct SelectionReport {
    std::vector<std::size_t> selected_indices;  // support of the final mask, sorted
    std::vector<double> mask_probs;             // final m_sp, length d
    std::vector<std::size_t> ranking;           // indices by mask probability, descending
    Metrics train_metrics, val_metrics, test_metrics;
    std::vector<StepLog> loss_history;
    TrainConfig config;
    std::size_t degenerate_refreshes = 0;
};

struct TrainOutput {
    SelectionReport report;
    Predictor model;
    SimplexProjection final_mask;
};

/// Runs the end-to-end masked training loop: per step the target count comes
/// from the tempering schedule, the sparse mask is refreshed from the current
/// argument, the masked batch flows through the predictor, and the combined
/// task + MI objective updates both the model parameters and the mask
/// argument through one shared Adam instance.
TrainOutput train_slm(const Dataset& ds, const TrainConfig& cfg);

/// Metrics of a model on one split, with inputs masked when a mask is given.
/// AUC is filled for binary classification.
Metrics evaluate(const Predictor& model, const SimplexProjection* mask, const Dataset& ds,
                 Split split);

/// Plain MLP trained on a column subset (no mask, no MI terms); the baseline
/// evaluation path. Empty columns means all features.
Metrics train_mlp_on_columns(const Dataset& ds, const std::vector<std::size_t>& columns,
                             const TrainConfig& cfg);

struct AblationCell {
    bool mi = false;
    bool tempering = false;
    double mean = 0.0;  // primary metric over seeds
    double sd = 0.0;
    std::vector<double> per_seed;
};

/// The 2x2 {MI on/off} x {tempering on/off} grid over n_seeds seeded runs
/// (seed, seed+1, ...). Cell order: (on,on), (on,off), (off,on), (off,off).
std::vector<AblationCell> run_ablation(const Dataset& ds, const TrainConfig& cfg,
                                       std::size_t n_seeds);

}  // namespace maskfs

#endif  // MASKFS_TRAIN_HPP
