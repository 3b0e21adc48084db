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

#include "maskfs/net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <stdexcept>

#include "maskfs/kernels.hpp"

namespace maskfs {

namespace {

void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias[j];
    }
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data)
        if (v < 0.0) v = 0.0;
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* in = logits.row(i);
        double* out = probs.row(i);
        double mx = in[0];
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            out[j] = std::exp(in[j] - mx);
            sum += out[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) out[j] /= sum;
    }
}

}  // namespace

Predictor Predictor::init(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                          std::size_t out_dim, OutputKind output, std::uint64_t seed) {
    Predictor p;
    p.output = output;
    p.in_dim = in_dim;
    p.out_dim = out_dim;
    std::mt19937_64 rng(seed);
    std::size_t prev = in_dim;
    auto push_layer = [&](std::size_t next) {
        Matrix w(prev, next);
        const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : w.data) v = dist(rng);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(next, 0.0);
        prev = next;
    };
    for (std::size_t h : hidden) push_layer(h);
    push_layer(out_dim);
    return p;
}

PredictionBatch forward(const Predictor& model, const Matrix& x, std::span<const double> labels,
                        ForwardCache* cache) {
    if (x.cols != model.in_dim) throw std::invalid_argument("forward: input dimension mismatch");
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c.input = x;
    c.post.clear();

    Matrix cur = x;
    const std::size_t n_hidden = model.n_layers() - 1;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        Matrix next(cur.rows, model.weights[l].cols);
        kernels::gemm_nn(cur.data.data(), model.weights[l].data.data(), next.data.data(),
                         cur.rows, cur.cols, next.cols);
        add_bias_rows(next, model.biases[l]);
        relu_inplace(next);
        c.post.push_back(next);
        cur = std::move(next);
    }
    const Matrix& wl = model.weights.back();
    c.logits = Matrix(cur.rows, wl.cols);
    kernels::gemm_nn(cur.data.data(), wl.data.data(), c.logits.data.data(), cur.rows, cur.cols,
                     wl.cols);
    add_bias_rows(c.logits, model.biases.back());

    PredictionBatch out;
    out.labels.assign(labels.begin(), labels.end());
    if (model.output == OutputKind::SoftmaxProbs) {
        out.task = Task::Classification;
        softmax_rows(c.logits, out.probs);
    } else {
        out.task = Task::Regression;
        out.reals.resize(c.logits.rows);
        for (std::size_t i = 0; i < c.logits.rows; ++i) out.reals[i] = c.logits(i, 0);
    }
    return out;
}

Gradients backward(const Predictor& model, const ForwardCache& cache, const Matrix& d_logits) {
    Gradients g;
    const std::size_t n_layers = model.n_layers();
    g.d_weights.resize(n_layers);
    g.d_biases.resize(n_layers);

    Matrix delta = d_logits;  // gradient w.r.t. current layer's pre-activation
    for (std::size_t l = n_layers; l-- > 0;) {
        const Matrix& below = (l == 0) ? cache.input : cache.post[l - 1];
        g.d_weights[l] = Matrix(model.weights[l].rows, model.weights[l].cols);
        kernels::gemm_tn(below.data.data(), delta.data.data(), g.d_weights[l].data.data(),
                         below.cols, below.rows, delta.cols);
        g.d_biases[l].assign(delta.cols, 0.0);
        for (std::size_t i = 0; i < delta.rows; ++i)
            for (std::size_t j = 0; j < delta.cols; ++j) g.d_biases[l][j] += delta(i, j);

        Matrix d_below(delta.rows, model.weights[l].rows);
        kernels::gemm_nt(delta.data.data(), model.weights[l].data.data(), d_below.data.data(),
                         delta.rows, delta.cols, d_below.cols);
        if (l > 0) {
            // ReLU gate on the activation below
            const Matrix& act = cache.post[l - 1];
            for (std::size_t i = 0; i < d_below.size(); ++i)
                if (act.data[i] <= 0.0) d_below.data[i] = 0.0;
        }
        delta = std::move(d_below);
    }
    g.d_input = std::move(delta);
    return g;
}

Matrix softmax_vjp(const Matrix& probs, const Matrix& d_probs) {
    Matrix out(probs.rows, probs.cols);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) inner += d_probs(i, j) * probs(i, j);
        for (std::size_t j = 0; j < probs.cols; ++j)
            out(i, j) = probs(i, j) * (d_probs(i, j) - inner);
    }
    return out;
}

void OptimizerState::register_sizes(const std::vector<std::size_t>& sizes) {
    m.clear();
    v.clear();
    for (std::size_t s : sizes) {
        m.emplace_back(s, 0.0);
        v.emplace_back(s, 0.0);
    }
    step = 0;
}

double OptimizerState::current_lr() const {
    if (cfg.decay_steps <= 0.0) return cfg.learning_rate;
    return cfg.learning_rate *
           std::pow(cfg.decay_rate, static_cast<double>(step) / cfg.decay_steps);
}

void adam_step(OptimizerState& opt, const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads) {
    if (params.size() != opt.m.size() || grads.size() != params.size())
        throw std::invalid_argument("adam_step: tensor count mismatch");
    const double lr = opt.current_lr();
    const double t = static_cast<double>(opt.step + 1);
    const double bc1 = 1.0 - std::pow(opt.cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.cfg.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != opt.m[k].size())
            throw std::invalid_argument("adam_step: tensor size mismatch");
        double* p = params[k].data();
        const double* g = grads[k].data();
        double* mk = opt.m[k].data();
        double* vk = opt.v[k].data();
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            mk[i] = opt.cfg.beta1 * mk[i] + (1.0 - opt.cfg.beta1) * g[i];
            vk[i] = opt.cfg.beta2 * vk[i] + (1.0 - opt.cfg.beta2) * g[i] * g[i];
            const double mhat = mk[i] / bc1;
            const double vhat = vk[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + opt.cfg.epsilon);
        }
    }
    ++opt.step;
}

namespace {

constexpr char kMagic[8] = {'M', 'F', 'S', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::FILE* f, std::uint64_t v) { std::fwrite(&v, sizeof(v), 1, f); }
void write_f64s(std::FILE* f, const double* p, std::size_t n) { std::fwrite(p, sizeof(double), n, f); }

std::uint64_t read_u64(std::FILE* f) {
    std::uint64_t v = 0;
    if (std::fread(&v, sizeof(v), 1, f) != 1) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void read_f64s(std::FILE* f, double* p, std::size_t n) {
    if (std::fread(p, sizeof(double), n, f) != n) throw std::runtime_error("checkpoint: truncated file");
}

}  // namespace

// Layout (all integers u64 little-endian, all floats f64 little-endian):
// magic[8], output_kind, in_dim, out_dim, n_layers,
// per layer: rows, cols, weights, bias;
// opt: step, lr, beta1, beta2, epsilon, decay_steps, decay_rate,
// n_tensors, per tensor: size, m, v.
void save_checkpoint(const std::string& path, const Predictor& model, const OptimizerState& opt) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("checkpoint: cannot open " + path);
    std::fwrite(kMagic, 1, sizeof(kMagic), f);
    write_u64(f, model.output == OutputKind::SoftmaxProbs ? 0 : 1);
    write_u64(f, model.in_dim);
    write_u64(f, model.out_dim);
    write_u64(f, model.n_layers());
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        write_u64(f, model.weights[l].rows);
        write_u64(f, model.weights[l].cols);
        write_f64s(f, model.weights[l].data.data(), model.weights[l].size());
        write_f64s(f, model.biases[l].data(), model.biases[l].size());
    }
    write_u64(f, opt.step);
    const double cfg[6] = {opt.cfg.learning_rate, opt.cfg.beta1, opt.cfg.beta2,
                           opt.cfg.epsilon, opt.cfg.decay_steps, opt.cfg.decay_rate};
    write_f64s(f, cfg, 6);
    write_u64(f, opt.m.size());
    for (std::size_t k = 0; k < opt.m.size(); ++k) {
        write_u64(f, opt.m[k].size());
        write_f64s(f, opt.m[k].data(), opt.m[k].size());
        write_f64s(f, opt.v[k].data(), opt.v[k].size());
    }
    std::fclose(f);
}

void load_checkpoint(const std::string& path, Predictor& model, OptimizerState& opt) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, kMagic, 8) != 0) {
        std::fclose(f);
        throw std::runtime_error("checkpoint: bad magic");
    }
    model.output = read_u64(f) == 0 ? OutputKind::SoftmaxProbs : OutputKind::Linear;
    model.in_dim = read_u64(f);
    model.out_dim = read_u64(f);
    const std::size_t n_layers = read_u64(f);
    model.weights.assign(n_layers, Matrix());
    model.biases.assign(n_layers, {});
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t rows = read_u64(f);
        const std::size_t cols = read_u64(f);
        model.weights[l] = Matrix(rows, cols);
        read_f64s(f, model.weights[l].data.data(), rows * cols);
        model.biases[l].assign(cols, 0.0);
        read_f64s(f, model.biases[l].data(), cols);
    }
    opt.step = read_u64(f);
    double cfg[6];
    read_f64s(f, cfg, 6);
    opt.cfg.learning_rate = cfg[0];
    opt.cfg.beta1 = cfg[1];
    opt.cfg.beta2 = cfg[2];
    opt.cfg.epsilon = cfg[3];
    opt.cfg.decay_steps = cfg[4];
    opt.cfg.decay_rate = cfg[5];
    const std::size_t n_tensors = read_u64(f);
    opt.m.assign(n_tensors, {});
    opt.v.assign(n_tensors, {});
    for (std::size_t k = 0; k < n_tensors; ++k) {
        const std::size_t n = read_u64(f);
        opt.m[k].assign(n, 0.0);
        opt.v[k].assign(n, 0.0);
        read_f64s(f, opt.m[k].data(), n);
        read_f64s(f, opt.v[k].data(), n);
    }
    std::fclose(f);
}

}  // namespace maskfs
