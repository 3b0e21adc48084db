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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <random>

#include "maskfs/miloss.hpp"
#include "support/oracles.hpp"

using namespace maskfs;

namespace {

PredictionBatch make_batch(Matrix probs, std::vector<double> labels) {
    PredictionBatch b;
    b.task = Task::Classification;
    b.probs = std::move(probs);
    b.labels = std::move(labels);
    return b;
}

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

}  // namespace

TEST_SUITE("miloss") {

TEST_CASE("quadratic_error basics") {
    // perfect one-hot predictions -> 0
    CHECK(quadratic_error(make_batch(from_rows({{1.0, 0.0}, {0.0, 1.0}}), {0, 1})) == 0.0);
    // uniform predictions with two classes -> 0.5
    CHECK(quadratic_error(make_batch(from_rows({{0.5, 0.5}}), {0})) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // hand expansion: ((0.04+0.04)+(0.09+0.09))/2 = 0.13
    CHECK(quadratic_error(make_batch(from_rows({{0.8, 0.2}, {0.3, 0.7}}), {0, 1})) ==
          doctest::Approx(0.13).epsilon(1e-12));
    // unnormalized row -> invalid input
    CHECK_THROWS_AS(quadratic_error(make_batch(from_rows({{0.9, 0.3}}), {0})),
                    std::invalid_argument);
}

TEST_CASE("quadratic_error stays within [0, c]") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t b = 1 + rng() % 6, c = 2 + rng() % 4;
        Matrix probs(b, c);
        std::vector<double> labels(b);
        for (std::size_t i = 0; i < b; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                probs(i, j) = unif(rng);
                sum += probs(i, j);
            }
            for (std::size_t j = 0; j < c; ++j) probs(i, j) /= sum;
            labels[i] = static_cast<double>(rng() % c);
        }
        const double e = quadratic_error(make_batch(std::move(probs), std::move(labels)));
        CHECK(e >= 0.0);
        CHECK(e <= static_cast<double>(c));
    }
}

TEST_CASE("consistency_regularizer worked cases") {
    // identical samples and predictions -> 0
    Matrix same(3, 2);  // all zero rows
    PredictionBatch b1 = make_batch(from_rows({{0.6, 0.4}, {0.6, 0.4}, {0.6, 0.4}}), {0, 0, 0});
    CHECK(consistency_regularizer(same, b1, std::vector<double>{0.5, 0.5}) == 0.0);

    // samples differ only at a feature with p_j = 1 -> weight 0
    Matrix x2 = from_rows({{1.0, 0.0}, {2.0, 0.0}});
    PredictionBatch b2 = make_batch(from_rows({{0.9, 0.1}, {0.2, 0.8}}), {0, 1});
    CHECK(consistency_regularizer(x2, b2, std::vector<double>{1.0, 0.0}) == 0.0);

    // differ at features {0,1}, p = (0.5, 0.25, 0), own-label R = (0.9, 0.3):
    // (1-0.5) * (1-0.25) * (0.6)^2 = 0.135
    Matrix x3 = from_rows({{1.0, 5.0, 7.0}, {2.0, 6.0, 7.0}});
    PredictionBatch b3 = make_batch(from_rows({{0.9, 0.1}, {0.7, 0.3}}), {0, 1});
    CHECK(consistency_regularizer(x3, b3, std::vector<double>{0.5, 0.25, 0.0}) ==
          doctest::Approx(0.135).epsilon(1e-12));

    // b < 2 -> 0
    Matrix x4 = from_rows({{1.0, 2.0}});
    PredictionBatch b4 = make_batch(from_rows({{0.9, 0.1}}), {0});
    CHECK(consistency_regularizer(x4, b4, std::vector<double>{0.5, 0.5}) == 0.0);

    // p outside [0,1] -> invalid input
    CHECK_THROWS_AS(consistency_regularizer(x3, b3, std::vector<double>{1.5, 0.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("consistency_regularizer is symmetric under batch permutation and non-negative") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t b = 3 + rng() % 5, d = 2 + rng() % 5;
        Matrix x(b, d);
        for (double& v : x.data) v = g(rng);
        Matrix probs(b, 2);
        std::vector<double> labels(b);
        for (std::size_t i = 0; i < b; ++i) {
            probs(i, 0) = unif(rng);
            probs(i, 1) = 1.0 - probs(i, 0);
            labels[i] = static_cast<double>(rng() % 2);
        }
        std::vector<double> p(d);
        double rest = 1.0;
        for (std::size_t j = 0; j + 1 < d; ++j) {
            p[j] = unif(rng) * rest;
            rest -= p[j];
        }
        p[d - 1] = rest;
        const PredictionBatch batch = make_batch(probs, labels);
        const double v = consistency_regularizer(x, batch, p);
        CHECK(v >= 0.0);

        // reversed batch order
        Matrix xr(b, d);
        Matrix probsr(b, 2);
        std::vector<double> labelsr(b);
        for (std::size_t i = 0; i < b; ++i) {
            std::copy_n(x.row(b - 1 - i), d, xr.row(i));
            probsr(i, 0) = probs(b - 1 - i, 0);
            probsr(i, 1) = probs(b - 1 - i, 1);
            labelsr[i] = labels[b - 1 - i];
        }
        const double vr = consistency_regularizer(xr, make_batch(probsr, labelsr), p);
        CHECK(v == doctest::Approx(vr).epsilon(1e-12));
    }
}

TEST_CASE("mi_objective composition and zero weight") {
    Matrix x = from_rows({{1.0, 5.0, 7.0}, {2.0, 6.0, 7.0}});
    PredictionBatch b = make_batch(from_rows({{0.9, 0.1}, {0.7, 0.3}}), {0, 1});
    const std::vector<double> p{0.5, 0.25, 0.0};

    const LossBreakdown off = mi_objective(x, b, p, 1.25, LossWeights{0.0, 1.0});
    CHECK(off.combined == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(off.mi_error == 0.0);
    CHECK(off.r_cs == 0.0);

    const LossBreakdown on = mi_objective(x, b, p, 1.25, LossWeights{1.0, 1.0});
    // quadratic error: ((0.01+0.01)+(0.49+0.49))/2 = 0.5; r_cs = 0.135
    CHECK(on.mi_error == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(on.r_cs == doctest::Approx(0.135).epsilon(1e-12));
    CHECK(on.combined == doctest::Approx(1.25 + 0.5 + 0.135).epsilon(1e-12));
}

TEST_CASE("mi_objective_regression") {
    Matrix x = from_rows({{1.0}, {2.0}});
    // outputs == labels and equal predictions: both terms vanish
    CHECK(mi_objective_regression(x, std::vector<double>{1.5, 1.5},
                                  std::vector<double>{1.5, 1.5},
                                  std::vector<double>{0.0}) == 0.0);
    // constant outputs, centered labels: MSE = variance (r_cs = 0 with p = 0)
    const std::vector<double> labels{1.0, -1.0};
    CHECK(mi_objective_regression(x, std::vector<double>{0.0, 0.0}, labels,
                                  std::vector<double>{0.0}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // 2-sample hand computation: MSE + (1-p)(dR)^2 with differing feature 0
    // outputs (0.5, 0.1), labels (1, 0): MSE = (0.25 + 0.01)/2 = 0.13
    // r_cs = (1-0.4) * (0.4)^2 = 0.096
    CHECK(mi_objective_regression(x, std::vector<double>{0.5, 0.1},
                                  std::vector<double>{1.0, 0.0},
                                  std::vector<double>{0.4}) ==
          doctest::Approx(0.13 + 0.096).epsilon(1e-12));
}

TEST_CASE("quadratic_mi anchor joints") {
    Matrix indep(2, 2, 0.25);
    CHECK(quadratic_mi(indep) == doctest::Approx(0.0).epsilon(1e-15));
    Matrix dep(2, 2);
    dep(0, 0) = 0.5;
    dep(1, 1) = 0.5;
    CHECK(quadratic_mi(dep) == doctest::Approx(0.5).epsilon(1e-15));
    Matrix point(2, 2);
    point(0, 0) = 1.0;
    CHECK(quadratic_mi(point) == doctest::Approx(0.0).epsilon(1e-15));
    Matrix bad(2, 2, 0.3);
    CHECK_THROWS_AS(quadratic_mi(bad), std::invalid_argument);
}

TEST_CASE("quadratic_mi is non-negative on random joints") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix j = oracles::random_joint(2 + rng() % 5, 2 + rng() % 3, rng);
        CHECK(quadratic_mi(j) >= -1e-12);
    }
}

TEST_CASE("theorem identity: E at the closed-form optimum equals 1 - sum P_Y^2 - I_q") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t nx = 2 + rng() % 5, ny = 2 + rng() % 3;
        const Matrix joint = oracles::random_joint(nx, ny, rng);
        Matrix rstar(nx, ny);
        std::vector<double> px(nx, 0.0);
        double py2 = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) px[x] += joint(x, y);
        for (std::size_t y = 0; y < ny; ++y) {
            double py = 0.0;
            for (std::size_t x = 0; x < nx; ++x) py += joint(x, y);
            py2 += py * py;
        }
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) rstar(x, y) = joint(x, y) / px[x];
        const double e = oracles::error_from_joint(joint, rstar);
        const double rhs = 1.0 - py2 - quadratic_mi(joint);
        CHECK(std::fabs(e - rhs) < 1e-10);
    }
}

TEST_CASE("second-order agreement between I and I_q near uniform binary conditionals") {
    // Fixed perturbation pattern scaled by delta; |Y| = 2 so I - I_q is
    // third-order (the quadratic parts match exactly at |Y| = 2).
    std::mt19937_64 rng(6);
    const std::size_t nx = 4;
    std::vector<double> px{0.1, 0.4, 0.2, 0.3};
    std::vector<double> u(nx);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (double& v : u) v = unif(rng);
    std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> gaps;
    for (double delta : deltas) {
        Matrix joint(nx, 2);
        for (std::size_t x = 0; x < nx; ++x) {
            joint(x, 0) = px[x] * (1.0 + delta * u[x]) / 2.0;
            joint(x, 1) = px[x] * (1.0 - delta * u[x]) / 2.0;
        }
        const double gap = std::fabs(oracles::mutual_information(joint) - quadratic_mi(joint));
        gaps.push_back(gap);
    }
    const double slope = oracles::loglog_slope(deltas, gaps);
    CHECK(slope >= 2.5);
}

TEST_CASE("hsic_gaussian basics") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t b = 24;
    Matrix x(b, 3);
    for (double& v : x.data) v = g(rng);

    // constant labels -> centered label kernel is zero -> HSIC exactly 0
    Matrix y_const(b, 1, 1.0);
    CHECK(hsic_gaussian(x, y_const) == 0.0);

    // x used as its own embedding -> strong dependence, so the returned
    // minimization regularizer (negated estimator) is strictly negative
    CHECK(hsic_gaussian(x, x) < 0.0);

    Matrix tiny(1, 2);
    CHECK_THROWS_AS(hsic_gaussian(tiny, tiny), std::invalid_argument);
}

TEST_CASE("hsic_gaussian is near zero under independence") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t b = 64;
    std::vector<double> values;
    for (int rep = 0; rep < 20; ++rep) {
        Matrix x(b, 4);
        for (double& v : x.data) v = g(rng);
        Matrix y(b, 2);
        for (std::size_t i = 0; i < b; ++i) {
            const std::size_t c = rng() % 2;
            y(i, c) = 1.0;
        }
        values.push_back(-hsic_gaussian(x, y));  // the raw estimator
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double sd = 0.0;
    for (double v : values) sd += (v - mean) * (v - mean);
    sd = std::sqrt(sd / static_cast<double>(values.size()));
    // biased estimator has an O(1/b) positive offset; require mean within
    // 3 sigma of a small bias allowance
    CHECK(std::fabs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(values.size())) + 2.0 / b);

    // dependence dominates independence by an order of magnitude
    Matrix x(b, 4);
    for (double& v : x.data) v = g(rng);
    const double dep = -hsic_gaussian(x, x);
    CHECK(dep > 10.0 * std::fabs(mean));
}

TEST_CASE("hsic gradient matches finite differences at fixed sigma") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t b = 6, d = 3;
    Matrix x(b, d);
    for (double& v : x.data) v = g(rng);
    Matrix y(b, 2);
    for (std::size_t i = 0; i < b; ++i) y(i, i % 2) = 1.0;
    const double sx = 1.3, sy = 0.9;
    const Matrix grad = hsic_gaussian_grad(x, y, sx, sy);
    const double h = 1e-6;
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            Matrix lo = x, hi = x;
            lo(i, j) -= h;
            hi(i, j) += h;
            const double fd = (hsic_gaussian(hi, y, sx, sy) - hsic_gaussian(lo, y, sx, sy)) / (2 * h);
            CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-5));
        }
}

TEST_CASE("miloss gradients match finite differences") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t b = 3 + rng() % 4, c = 2 + rng() % 2, d = 2 + rng() % 4;
        Matrix x(b, d);
        for (double& v : x.data) v = g(rng);
        Matrix probs(b, c);
        std::vector<double> labels(b);
        for (std::size_t i = 0; i < b; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                probs(i, j) = unif(rng);
                sum += probs(i, j);
            }
            for (std::size_t j = 0; j < c; ++j) probs(i, j) /= sum;
            labels[i] = static_cast<double>(rng() % c);
        }
        std::vector<double> p(d, 0.0);
        p[0] = 0.4;
        p[1] = 0.3;  // keep clear of the {0,1} boundaries

        const PredictionBatch batch = make_batch(probs, labels);
        const MiGradients mig = miloss_gradients(x, batch, p);
        auto objective = [&](const Matrix& pr, const std::vector<double>& pp) {
            PredictionBatch bb = make_batch(pr, labels);
            // direct Eq-8 + Eq-9 sum, bypassing the row-normalization check so
            // perturbed rows stay admissible
            double e = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                const auto yi = static_cast<std::size_t>(labels[i]);
                for (std::size_t j = 0; j < c; ++j) {
                    const double r = pr(i, j);
                    e += (j == yi) ? (1.0 - r) * (1.0 - r) : r * r;
                }
            }
            e /= static_cast<double>(b);
            return e + consistency_regularizer(x, bb, pp);
        };
        const double h = 1e-6;
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                Matrix lo = probs, hi = probs;
                lo(i, j) -= h;
                hi(i, j) += h;
                const double fd = (objective(hi, p) - objective(lo, p)) / (2 * h);
                if (std::fabs(fd) > 1e-10)
                    CHECK(mig.d_probs(i, j) == doctest::Approx(fd).epsilon(1e-5));
            }
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> lo = p, hi = p;
            lo[j] -= h;
            hi[j] += h;
            if (lo[j] < 0.0) continue;
            const double fd = (objective(probs, hi) - objective(probs, lo)) / (2 * h);
            if (std::fabs(fd) > 1e-10) CHECK(mig.d_p[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("zero gradient at the closed-form optimum on a duplicated batch") {
    // Batch realizing a 2x2 joint with duplicated samples; pairs with distinct
    // x differ only at feature 0 where p_0 = 1, so their consistency weight
    // vanishes. At R* = P(y|x) a model that ties duplicated inputs to one
    // prediction sees zero gradient: the per-sample partials cancel within
    // each duplicate group.
    Matrix x(4, 2);
    x(0, 0) = 0.0; x(1, 0) = 0.0;
    x(2, 0) = 1.0; x(3, 0) = 1.0;
    std::vector<double> labels{0, 1, 1, 1};
    // empirical P(y|x=0) = (0.5, 0.5); P(y|x=1) = (0, 1)
    Matrix probs = from_rows({{0.5, 0.5}, {0.5, 0.5}, {0.0, 1.0}, {0.0, 1.0}});
    const std::vector<double> p{1.0, 0.0};
    const PredictionBatch batch = make_batch(probs, labels);
    const MiGradients mig = miloss_gradients(x, batch, p);
    for (std::size_t y = 0; y < 2; ++y) {
        CHECK(std::fabs(mig.d_probs(0, y) + mig.d_probs(1, y)) < 1e-12);
        CHECK(std::fabs(mig.d_probs(2, y) + mig.d_probs(3, y)) < 1e-12);
    }
}

TEST_CASE("mi_weight zero yields zero MI gradients in the breakdown") {
    Matrix x = from_rows({{1.0, 2.0}, {3.0, 4.0}});
    PredictionBatch b = make_batch(from_rows({{0.6, 0.4}, {0.3, 0.7}}), {0, 1});
    const LossBreakdown lb = mi_objective(x, b, std::vector<double>{0.5, 0.5}, 2.0,
                                          LossWeights{0.0, 1.0});
    CHECK(lb.combined == 2.0);
    CHECK(lb.mi_error == 0.0);
}

}  // TEST_SUITE
