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

#ifndef MASKFS_NET_HPP
#define MASKFS_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "maskfs/matrix.hpp"
#include "maskfs/miloss.hpp"

namespace maskfs {

enum class OutputKind { SoftmaxProbs, Linear };

/// MLP with ReLU hidden layers. Weights are (in x out) so a batch row vector
/// multiplies from the left.
struct Predictor {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    OutputKind output = OutputKind::SoftmaxProbs;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;

    /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
    static Predictor init(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                          std::size_t out_dim, OutputKind output, std::uint64_t seed);

    std::size_t n_layers() const { return weights.size(); }
};

/// Activations cached by forward() for the backward pass.
struct ForwardCache {
    Matrix input;                 // the masked batch
    std::vector<Matrix> post;     // post-ReLU activation per hidden layer
    Matrix logits;                // pre-softmax outputs (or raw linear outputs)
};

/// Runs the batch through the network. Classification rows are softmax
/// probabilities; regression uses the first output column as the prediction.
PredictionBatch forward(const Predictor& model, const Matrix& x, std::span<const double> labels,
                        ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<Matrix> d_weights;
    std::vector<std::vector<double>> d_biases;
    Matrix d_input;
};

/// Backpropagates d_logits (gradient w.r.t. the pre-softmax/linear outputs)
/// through the cached forward pass.
Gradients backward(const Predictor& model, const ForwardCache& cache, const Matrix& d_logits);

/// Row-wise softmax VJP: maps dL/dprobs to dL/dlogits.
Matrix softmax_vjp(const Matrix& probs, const Matrix& d_probs);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double decay_steps = 0.0;  // 0 disables the exponential schedule
    double decay_rate = 1.0;
};

/// Adam with exponential learning-rate decay lr * decay_rate^(t/decay_steps).
/// Parameter tensors are registered once as flat spans; moments match their
/// shapes.
struct OptimizerState {
    AdamConfig cfg;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;

    explicit OptimizerState(AdamConfig cfg) : cfg(cfg) {}
    void register_sizes(const std::vector<std::size_t>& sizes);
    double current_lr() const;
};

void adam_step(OptimizerState& opt, const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads);

/// Versioned little-endian binary checkpoint of model + optimizer state.
void save_checkpoint(const std::string& path, const Predictor& model, const OptimizerState& opt);
void load_checkpoint(const std::string& path, Predictor& model, OptimizerState& opt);

}  // namespace maskfs

#endif  // MASKFS_NET_HPP
