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
#include <fstream>
#include <stdexcept>
#include <random>

#include "maskfs/data.hpp"

using namespace maskfs;

namespace {

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("load_csv parses a small hand-written file exactly") {
    const std::string path = temp_file("maskfs_small.csv");
    write_file(path, "a,b,label\n1.5,-2,0\n0.25,3e2,1\n-1,0.125,0\n");
    const Dataset ds = load_csv(path, "label", Task::Classification);
    CHECK(ds.n() == 3);
    CHECK(ds.d() == 2);
    CHECK(ds.x(0, 0) == 1.5);
    CHECK(ds.x(0, 1) == -2.0);
    CHECK(ds.x(1, 1) == 300.0);
    CHECK(ds.x(2, 1) == 0.125);
    CHECK(ds.y == std::vector<double>{0, 1, 0});
    CHECK(ds.n_classes == 2);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    std::filesystem::remove(path);
}

TEST_CASE("load_csv errors name the offending row and column") {
    const std::string path = temp_file("maskfs_bad.csv");
    write_file(path, "a,b,label\n1,2,0\n1,oops,1\n");
    try {
        load_csv(path, "label", Task::Classification);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects structural problems") {
    const std::string ragged = temp_file("maskfs_ragged.csv");
    write_file(ragged, "a,b,label\n1,2\n");
    CHECK_THROWS_AS(load_csv(ragged, "label", Task::Classification), std::runtime_error);
    std::filesystem::remove(ragged);

    const std::string empty = temp_file("maskfs_empty.csv");
    write_file(empty, "");
    CHECK_THROWS_AS(load_csv(empty, "label", Task::Classification), std::runtime_error);
    std::filesystem::remove(empty);

    const std::string nolabel = temp_file("maskfs_nolabel.csv");
    write_file(nolabel, "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(nolabel, "label", Task::Classification), std::runtime_error);
    std::filesystem::remove(nolabel);
}

TEST_CASE("write_csv and load_csv round-trip bit-exactly") {
    SynthConfig cfg;
    cfg.group_size = 2;
    cfg.d_total = 15;
    cfg.n_samples = 40;
    cfg.seed = 3;
    const Dataset ds = synth_generate(cfg);
    const std::string p1 = temp_file("maskfs_rt1.csv");
    const std::string p2 = temp_file("maskfs_rt2.csv");
    write_csv(ds, p1);
    const Dataset re = load_csv(p1, "label", Task::Classification);
    CHECK(re.x.data == ds.x.data);  // bit-equal matrix
    CHECK(re.y == ds.y);
    CHECK(re.feature_names == ds.feature_names);
    write_csv(re, p2);
    CHECK(read_file(p1) == read_file(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("normalize_split: 10 samples split 7/1/2") {
    Dataset ds;
    ds.task = Task::Classification;
    ds.n_classes = 2;
    ds.x = Matrix(10, 2, 1.0);
    for (std::size_t i = 0; i < 10; ++i) ds.x(i, 0) = static_cast<double>(i);
    ds.y.assign(10, 0.0);
    ds.feature_names = {"a", "b"};
    normalize_split(ds, {0.7, 0.1, 0.2}, 1);
    std::size_t n_train = ds.rows_in(Split::Train).size();
    std::size_t n_val = ds.rows_in(Split::Val).size();
    std::size_t n_test = ds.rows_in(Split::Test).size();
    CHECK(n_train == 7);
    CHECK(n_val == 1);
    CHECK(n_test == 2);
}

TEST_CASE("normalized train columns have mean 0 and sd 1; constant columns zero out") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(5.0, 3.0);
    Dataset ds;
    ds.task = Task::Regression;
    ds.x = Matrix(50, 3);
    for (std::size_t i = 0; i < 50; ++i) {
        ds.x(i, 0) = g(rng);
        ds.x(i, 1) = g(rng) * 0.01;
        ds.x(i, 2) = 7.5;  // constant
    }
    ds.y.resize(50);
    for (std::size_t i = 0; i < 50; ++i) ds.y[i] = g(rng);
    ds.feature_names = {"a", "b", "c"};
    normalize_split(ds, {0.7, 0.1, 0.2}, 9);

    const auto train = ds.rows_in(Split::Train);
    for (std::size_t j = 0; j < 2; ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i : train) mean += ds.x(i, j);
        mean /= static_cast<double>(train.size());
        for (std::size_t i : train) var += (ds.x(i, j) - mean) * (ds.x(i, j) - mean);
        var /= static_cast<double>(train.size());
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
    }
    for (std::size_t i = 0; i < 50; ++i) CHECK(ds.x(i, 2) == 0.0);  // sd guard

    // regression labels standard-normalized on train statistics
    double lmean = 0.0, lvar = 0.0;
    for (std::size_t i : train) lmean += ds.y[i];
    lmean /= static_cast<double>(train.size());
    for (std::size_t i : train) lvar += (ds.y[i] - lmean) * (ds.y[i] - lmean);
    lvar /= static_cast<double>(train.size());
    CHECK(std::fabs(lmean) < 1e-9);
    CHECK(std::fabs(std::sqrt(lvar) - 1.0) < 1e-9);
}

TEST_CASE("split is deterministic under a fixed seed and covers every sample once") {
    SynthConfig cfg;
    cfg.group_size = 2;
    cfg.d_total = 12;
    cfg.n_samples = 57;
    cfg.seed = 5;
    Dataset a = synth_generate(cfg);
    Dataset b = synth_generate(cfg);
    normalize_split(a, {0.7, 0.1, 0.2}, 77);
    normalize_split(b, {0.7, 0.1, 0.2}, 77);
    CHECK(a.split == b.split);
    CHECK(a.rows_in(Split::Train).size() + a.rows_in(Split::Val).size() +
              a.rows_in(Split::Test).size() ==
          a.n());
}

TEST_CASE("synth label rule: all-zero salient sample under the raw threshold") {
    // T1 = 1, T2 = 1, T3 = -log(1.1), T4 = 0, T5 = 1; score = -log(1.1) < 0.
    const std::vector<double> zeros(10, 0.0);
    const double score = synth_score(zeros, 2);
    CHECK(score == doctest::Approx(-std::log(1.1)).epsilon(1e-12));
    CHECK(score < 0.0);  // raw Eq-style threshold labels this 0
}

TEST_CASE("synth label balance stays inside (0.2, 0.8) with defaults") {
    SynthConfig cfg;
    cfg.group_size = 10;
    cfg.d_total = 100;
    cfg.n_samples = 10000;
    cfg.seed = 11;
    const Dataset ds = synth_generate(cfg);
    double pos = 0.0;
    for (double y : ds.y) pos += y;
    pos /= static_cast<double>(ds.n());
    CHECK(pos > 0.2);
    CHECK(pos < 0.8);
}

TEST_CASE("synth generation is deterministic and permutation of a block keeps labels") {
    SynthConfig cfg;
    cfg.group_size = 3;
    cfg.d_total = 20;
    cfg.n_samples = 30;
    cfg.seed = 21;
    const Dataset a = synth_generate(cfg);
    const Dataset b = synth_generate(cfg);
    CHECK(a.x.data == b.x.data);
    CHECK(a.y == b.y);

    // salient-block permutation invariance: the T's are means over the block
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> sal(15);
    for (double& v : sal) v = unif(rng);
    const double before = synth_score(sal, 3);
    std::swap(sal[0], sal[2]);   // within T1 block
    std::swap(sal[9], sal[11]);  // within T4 block
    const double after = synth_score(sal, 3);
    CHECK(before == doctest::Approx(after).epsilon(1e-12));
}

TEST_CASE("synth T3 term stays finite across the feature domain") {
    // 1.1 + x >= 0.1 on [-1, 1]
    SynthConfig cfg;
    cfg.group_size = 8;
    cfg.d_total = 40;
    cfg.n_samples = 5000;
    cfg.seed = 31;
    const Dataset ds = synth_generate(cfg);
    for (double v : ds.x.data) CHECK(std::isfinite(v));
    for (double y : ds.y) CHECK((y == 0.0 || y == 1.0));
}

TEST_CASE("synth config validation") {
    SynthConfig bad;
    bad.group_size = 10;
    bad.d_total = 40;  // 5L = 50 > 40
    CHECK_THROWS_AS(synth_generate(bad), std::invalid_argument);
}

TEST_CASE("bin_labels worked examples") {
    std::vector<double> y(100);
    for (std::size_t i = 0; i < 100; ++i) y[i] = static_cast<double>(i);
    const std::vector<std::size_t> bins = bin_labels(y, 10);
    for (std::size_t i = 0; i < 100; ++i) CHECK(bins[i] == i / 10);

    const std::vector<std::size_t> one = bin_labels(y, 1);
    for (std::size_t b : one) CHECK(b == 0);
}

TEST_CASE("bin_labels occupancy stays within one of n/k on skewed data") {
    std::mt19937_64 rng(41);
    std::exponential_distribution<double> ex(0.3);
    std::vector<double> y(1037);
    for (double& v : y) v = ex(rng) * ex(rng);  // heavily skewed
    const std::size_t k = 10;
    const std::vector<std::size_t> bins = bin_labels(y, k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t b : bins) ++counts[b];
    const double ideal = static_cast<double>(y.size()) / static_cast<double>(k);
    for (std::size_t c : counts) CHECK(std::fabs(static_cast<double>(c) - ideal) <= 1.0);
}

}  // TEST_SUITE
