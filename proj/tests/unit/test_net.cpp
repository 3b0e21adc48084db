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

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <random>

#include "maskfs/mask.hpp"
#include "maskfs/net.hpp"

using namespace maskfs;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(r, c);
    for (double& v : m.data) v = dist(rng);
    return m;
}

// Cross entropy + quadratic error + consistency regularizer of a forward pass
// through mask -> network, as one scalar for finite differencing.
struct PathSetup {
    Matrix x;                  // raw batch
    std::vector<double> labels;
    Predictor model;
    double mi_weight = 1.0;
};

double path_loss(const PathSetup& s, const std::vector<double>& mask_arg, double multiplier,
                 std::size_t target) {
    // multiplier frozen: sparsemax of multiplier * argument, no retargeting
    std::vector<double> scaled = mask_arg;
    for (double& v : scaled) v *= multiplier;
    const SimplexProjection sp = sparsemax(scaled);
    (void)target;
    const Matrix x_sp = apply_mask(s.x, sp);
    const PredictionBatch pred = forward(s.model, x_sp, s.labels);
    double ce = 0.0;
    for (std::size_t i = 0; i < pred.probs.rows; ++i)
        ce -= std::log(pred.probs(i, static_cast<std::size_t>(s.labels[i])));
    ce /= static_cast<double>(pred.probs.rows);
    const double e = quadratic_error(pred);
    const double rcs = consistency_regularizer(s.x, pred, sp.values);
    return ce + s.mi_weight * (e + rcs);
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("zero weights give uniform probabilities / zero outputs") {
    Predictor clf = Predictor::init(4, {5}, 3, OutputKind::SoftmaxProbs, 1);
    for (auto& w : clf.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    Matrix x(2, 4, 1.5);
    const PredictionBatch pred = forward(clf, x, std::vector<double>{0, 1});
    for (double v : pred.probs.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Predictor reg = Predictor::init(4, {5}, 1, OutputKind::Linear, 1);
    for (auto& w : reg.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    const PredictionBatch rpred = forward(reg, x, std::vector<double>{0.5, -0.5});
    for (double v : rpred.reals) CHECK(v == 0.0);
}

TEST_CASE("single linear layer with known weights matches hand-computed softmax") {
    Predictor model = Predictor::init(2, {}, 2, OutputKind::SoftmaxProbs, 1);
    model.weights[0](0, 0) = 1.0;
    model.weights[0](0, 1) = -1.0;
    model.weights[0](1, 0) = 0.5;
    model.weights[0](1, 1) = 0.0;
    model.biases[0] = {0.1, -0.1};
    Matrix x(1, 2);
    x(0, 0) = 2.0;
    x(0, 1) = -1.0;
    // logits: (2*1 + -1*0.5 + 0.1, 2*-1 + 0 + -0.1) = (1.6, -2.1)
    const PredictionBatch pred = forward(model, x, std::vector<double>{0});
    const double z0 = std::exp(1.6), z1 = std::exp(-2.1);
    CHECK(pred.probs(0, 0) == doctest::Approx(z0 / (z0 + z1)).epsilon(1e-12));
    CHECK(pred.probs(0, 1) == doctest::Approx(z1 / (z0 + z1)).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
    std::mt19937_64 rng(2);
    Predictor model = Predictor::init(6, {8, 8}, 4, OutputKind::SoftmaxProbs, 3);
    const Matrix x = random_matrix(16, 6, rng, 3.0);
    const PredictionBatch pred = forward(model, x, std::vector<double>(16, 0.0));
    for (std::size_t i = 0; i < pred.probs.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < pred.probs.cols; ++j) {
            sum += pred.probs(i, j);
            CHECK(pred.probs(i, j) >= 0.0);
            CHECK(pred.probs(i, j) <= 1.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("backward matches finite differences on every parameter tensor") {
    std::mt19937_64 rng(4);
    Predictor model = Predictor::init(3, {4}, 2, OutputKind::SoftmaxProbs, 5);
    const Matrix x = random_matrix(5, 3, rng);
    const std::vector<double> labels{0, 1, 1, 0, 1};

    auto loss_of = [&](const Predictor& m) {
        const PredictionBatch pred = forward(m, x, labels);
        double ce = 0.0;
        for (std::size_t i = 0; i < 5; ++i)
            ce -= std::log(pred.probs(i, static_cast<std::size_t>(labels[i])));
        return ce / 5.0;
    };

    ForwardCache cache;
    const PredictionBatch pred = forward(model, x, labels, &cache);
    Matrix d_logits(5, 2);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const double ind = j == static_cast<std::size_t>(labels[i]) ? 1.0 : 0.0;
            d_logits(i, j) = (pred.probs(i, j) - ind) / 5.0;
        }
    const Gradients g = backward(model, cache, d_logits);

    const double h = 1e-6;
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        for (std::size_t idx = 0; idx < model.weights[l].size(); ++idx) {
            Predictor lo = model, hi = model;
            lo.weights[l].data[idx] -= h;
            hi.weights[l].data[idx] += h;
            const double fd = (loss_of(hi) - loss_of(lo)) / (2 * h);
            CHECK(g.d_weights[l].data[idx] == doctest::Approx(fd).epsilon(1e-4));
        }
        for (std::size_t idx = 0; idx < model.biases[l].size(); ++idx) {
            Predictor lo = model, hi = model;
            lo.biases[l][idx] -= h;
            hi.biases[l][idx] += h;
            const double fd = (loss_of(hi) - loss_of(lo)) / (2 * h);
            CHECK(g.d_biases[l][idx] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("zero upstream gives zero gradients") {
    std::mt19937_64 rng(5);
    Predictor model = Predictor::init(3, {4}, 2, OutputKind::SoftmaxProbs, 6);
    const Matrix x = random_matrix(4, 3, rng);
    ForwardCache cache;
    forward(model, x, std::vector<double>(4, 0.0), &cache);
    const Gradients g = backward(model, cache, Matrix(4, 2));
    for (const auto& w : g.d_weights)
        for (double v : w.data) CHECK(v == 0.0);
    for (double v : g.d_input.data) CHECK(v == 0.0);
}

TEST_CASE("single layer softmax-CE gradient equals (probs - onehot) x^T") {
    std::mt19937_64 rng(6);
    Predictor model = Predictor::init(3, {}, 2, OutputKind::SoftmaxProbs, 7);
    const Matrix x = random_matrix(1, 3, rng);
    const std::vector<double> labels{1};
    ForwardCache cache;
    const PredictionBatch pred = forward(model, x, labels, &cache);
    Matrix d_logits(1, 2);
    d_logits(0, 0) = pred.probs(0, 0);
    d_logits(0, 1) = pred.probs(0, 1) - 1.0;
    const Gradients g = backward(model, cache, d_logits);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(g.d_weights[0](i, j) ==
                  doctest::Approx(d_logits(0, j) * x(0, i)).epsilon(1e-12));
}

TEST_CASE("adam: zero gradient from a fresh state leaves parameters unchanged") {
    OptimizerState opt{AdamConfig{}};
    opt.register_sizes({3});
    std::vector<double> params{1.0, -2.0, 3.0};
    const std::vector<double> zeros(3, 0.0);
    adam_step(opt, {std::span<double>(params)}, {std::span<const double>(zeros)});
    CHECK(params == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: first-step update magnitude is about lr") {
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    OptimizerState opt{cfg};
    opt.register_sizes({2});
    std::vector<double> params{0.0, 0.0};
    const std::vector<double> grads{0.3, -7.0};
    adam_step(opt, {std::span<double>(params)}, {std::span<const double>(grads)});
    // bias-corrected Adam: update = lr * g / (|g| + ~eps) ~ lr * sign(g)
    CHECK(params[0] == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(params[1] == doctest::Approx(0.01).epsilon(1e-4));
}

TEST_CASE("learning-rate decay hits lr * rate at t = decay_steps") {
    AdamConfig cfg;
    cfg.learning_rate = 0.02;
    cfg.decay_steps = 100;
    cfg.decay_rate = 0.7;
    OptimizerState opt{cfg};
    opt.register_sizes({});
    CHECK(opt.current_lr() == doctest::Approx(0.02).epsilon(1e-12));
    opt.step = 100;
    CHECK(opt.current_lr() == doctest::Approx(0.02 * 0.7).epsilon(1e-12));
    opt.step = 200;
    CHECK(opt.current_lr() == doctest::Approx(0.02 * 0.49).epsilon(1e-12));
}

TEST_CASE("full-path gradient: mask argument through scaled sparsemax") {
    std::mt19937_64 rng(8);
    int tested = 0;
    for (int trial = 0; trial < 60 && tested < 12; ++trial) {
        const std::size_t d = 5, b = 6, c = 2, target = 3;
        PathSetup s{random_matrix(b, d, rng), {}, Predictor::init(d, {4}, c,
                    OutputKind::SoftmaxProbs, 100 + trial), 1.0};
        for (std::size_t i = 0; i < b; ++i)
            s.labels.push_back(static_cast<double>(rng() % c));
        std::vector<double> arg(d);
        std::normal_distribution<double> dist(1.0, 0.3);
        for (double& v : arg) v = dist(rng);

        ScaledProjection sp;
        try {
            sp = scaled_sparsemax(arg, target);
        } catch (const std::domain_error&) {
            continue;
        }
        // skip support-boundary configurations (JVP is not defined there)
        bool boundary = false;
        for (std::size_t i = 0; i < d; ++i)
            if (std::fabs(sp.applied_multiplier * arg[i] - sp.projection.tau) < 1e-4)
                boundary = true;
        if (boundary) continue;
        ++tested;

        // analytic gradient
        const Matrix x_sp = apply_mask(s.x, sp.projection);
        ForwardCache cache;
        const PredictionBatch pred = forward(s.model, x_sp, s.labels, &cache);
        Matrix d_logits(b, c);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                const double ind = j == static_cast<std::size_t>(s.labels[i]) ? 1.0 : 0.0;
                d_logits(i, j) = (pred.probs(i, j) - ind) / static_cast<double>(b);
            }
        const MiGradients mig = miloss_gradients(s.x, pred, sp.projection.values);
        const Matrix d_logits_mi = softmax_vjp(pred.probs, mig.d_probs);
        for (std::size_t i = 0; i < d_logits.size(); ++i)
            d_logits.data[i] += d_logits_mi.data[i];
        const Gradients g = backward(s.model, cache, d_logits);
        std::vector<double> d_msp(d, 0.0);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) d_msp[j] += s.x(i, j) * g.d_input(i, j);
        for (std::size_t j = 0; j < d; ++j) d_msp[j] += mig.d_p[j];
        std::vector<double> d_arg = sparsemax_jvp(sp.projection, d_msp);
        for (double& v : d_arg) v *= sp.applied_multiplier;

        // finite differences with the multiplier frozen
        const double h = 1e-6;
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> lo = arg, hi = arg;
            lo[j] -= h;
            hi[j] += h;
            const double fd = (path_loss(s, hi, sp.applied_multiplier, target) -
                               path_loss(s, lo, sp.applied_multiplier, target)) /
                              (2 * h);
            CHECK(d_arg[j] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
    CHECK(tested >= 10);
}

TEST_CASE("checkpoint round-trips model and optimizer state") {
    std::mt19937_64 rng(9);
    Predictor model = Predictor::init(4, {3}, 2, OutputKind::SoftmaxProbs, 11);
    AdamConfig cfg;
    cfg.learning_rate = 0.005;
    cfg.decay_steps = 50;
    cfg.decay_rate = 0.9;
    OptimizerState opt{cfg};
    opt.register_sizes({model.weights[0].size(), model.biases[0].size(),
                        model.weights[1].size(), model.biases[1].size()});
    for (auto& m : opt.m)
        for (double& v : m) v = 0.25;
    opt.step = 17;

    const std::string path = (std::filesystem::temp_directory_path() / "maskfs_ckpt.bin").string();
    save_checkpoint(path, model, opt);
    Predictor loaded;
    OptimizerState lopt{AdamConfig{}};
    load_checkpoint(path, loaded, lopt);
    CHECK(loaded.in_dim == model.in_dim);
    CHECK(loaded.weights[0].data == model.weights[0].data);
    CHECK(loaded.weights[1].data == model.weights[1].data);
    CHECK(loaded.biases[1] == model.biases[1]);
    CHECK(lopt.step == 17);
    CHECK(lopt.cfg.learning_rate == 0.005);
    CHECK(lopt.m[0][0] == 0.25);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/nope.bin", loaded, lopt), std::runtime_error);
}

}  // TEST_SUITE
