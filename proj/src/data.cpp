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

#include "maskfs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace maskfs {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    while (ptr < last && (*ptr == ' ' || *ptr == '\t')) ++ptr;
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw std::runtime_error("load_csv: unparseable cell at row " + std::to_string(row) +
                                 ", column '" + col + "'");
    return v;
}

// Platform-independent Fisher-Yates (std::shuffle output is stdlib-specific).
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace

std::vector<std::size_t> Dataset::rows_in(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(i);
    return out;
}

Dataset load_csv(const std::string& path, const std::string& label_column, Task task) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
    const std::vector<std::string> header = split_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == label_column) label_idx = j;
    if (label_idx == header.size())
        throw std::runtime_error("load_csv: missing label column '" + label_column + "'");

    Dataset ds;
    ds.task = task;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_idx) ds.feature_names.push_back(header[j]);

    std::vector<double> flat;
    std::size_t n = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: ragged row " + std::to_string(row) + " (" +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()) + ")");
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const double v = parse_cell(cells[j], row, header[j]);
            if (j == label_idx)
                ds.y.push_back(v);
            else
                flat.push_back(v);
        }
        ++n;
    }
    if (n == 0) throw std::runtime_error("load_csv: no data rows in " + path);
    ds.x.rows = n;
    ds.x.cols = header.size() - 1;
    ds.x.data = std::move(flat);

    if (task == Task::Classification) {
        double mx = 0.0;
        for (double v : ds.y) {
            if (v < -1e-9 || std::fabs(v - std::llround(v)) > 1e-9)
                throw std::runtime_error("load_csv: classification label not a non-negative integer");
            mx = std::max(mx, v);
        }
        ds.n_classes = static_cast<std::size_t>(std::llround(mx)) + 1;
    }
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j)
        std::fprintf(f, "%s,", ds.feature_names[j].c_str());
    std::fprintf(f, "label\n");
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.d(); ++j) std::fprintf(f, "%.17g,", ds.x(i, j));
        std::fprintf(f, "%.17g\n", ds.y[i]);
    }
    std::fclose(f);
}

void normalize_split(Dataset& ds, std::array<double, 3> fractions, std::uint64_t seed) {
    const std::size_t n = ds.n();
    if (n == 0) throw std::invalid_argument("normalize_split: empty dataset");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    shuffle_indices(order, rng);

    std::size_t n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    ds.split.assign(n, Split::Test);
    for (std::size_t i = 0; i < n_train; ++i) ds.split[order[i]] = Split::Train;
    for (std::size_t i = n_train; i < n_train + n_val; ++i) ds.split[order[i]] = Split::Val;

    const std::vector<std::size_t> train_rows = ds.rows_in(Split::Train);
    if (train_rows.empty()) throw std::invalid_argument("normalize_split: empty train split");

    ds.norm.mean.assign(ds.d(), 0.0);
    ds.norm.sd.assign(ds.d(), 1.0);
    const double inv = 1.0 / static_cast<double>(train_rows.size());
    for (std::size_t j = 0; j < ds.d(); ++j) {
        double mean = 0.0;
        for (std::size_t i : train_rows) mean += ds.x(i, j);
        mean *= inv;
        double var = 0.0;
        for (std::size_t i : train_rows) {
            const double diff = ds.x(i, j) - mean;
            var += diff * diff;
        }
        var *= inv;
        ds.norm.mean[j] = mean;
        ds.norm.sd[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ds.d(); ++j)
            ds.x(i, j) = (ds.x(i, j) - ds.norm.mean[j]) / ds.norm.sd[j];

    if (ds.task == Task::Regression) {
        double mean = 0.0;
        for (std::size_t i : train_rows) mean += ds.y[i];
        mean *= inv;
        double var = 0.0;
        for (std::size_t i : train_rows) {
            const double diff = ds.y[i] - mean;
            var += diff * diff;
        }
        var *= inv;
        ds.norm.label_mean = mean;
        ds.norm.label_sd = var > 0.0 ? std::sqrt(var) : 1.0;
        for (double& v : ds.y) v = (v - ds.norm.label_mean) / ds.norm.label_sd;
    }
    ds.norm.fitted = true;
}

double synth_score(std::span<const double> salient, std::size_t group_size) {
    const std::size_t L = group_size;
    if (salient.size() != 5 * L) throw std::invalid_argument("synth_score: need 5 L values");
    const double invL = 1.0 / static_cast<double>(L);
    double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0, t5 = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        t1 += std::exp(salient[i]);
        t2 += std::fabs(std::sin(2.0 * std::numbers::pi * salient[L + i]));
        t3 += -std::log(1.1 + salient[2 * L + i]);
        t4 += salient[3 * L + i];
        t5 += std::fabs(std::tanh(salient[4 * L + i]));
    }
    t1 *= invL;
    t2 = std::exp(t2 * invL);
    t3 *= invL;
    t4 *= invL;
    t5 = 1.0 / (1.0 + t5 * invL);
    return t1 + t2 + t3 + t4 + t5 - 3.0;
}

Dataset synth_generate(const SynthConfig& cfg) {
    const std::size_t L = cfg.group_size;
    if (L == 0) throw std::invalid_argument("synth_generate: group_size must be positive");
    if (5 * L > cfg.d_total) throw std::invalid_argument("synth_generate: need 5 L <= d_total");
    if (cfg.n_samples == 0) throw std::invalid_argument("synth_generate: need samples");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Dataset ds;
    ds.task = Task::Classification;
    ds.n_classes = 2;
    ds.x = Matrix(cfg.n_samples, cfg.d_total);
    for (double& v : ds.x.data) v = unif(rng);

    std::vector<double> score(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i)
        score[i] = synth_score({ds.x.row(i), 5 * L}, L);

    double threshold = 0.0;
    if (cfg.center_labels) {
        std::vector<double> sorted = score;
        auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
        std::nth_element(sorted.begin(), mid, sorted.end());
        threshold = *mid;
    }

    ds.y.resize(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const double noisy = score[i] - threshold + cfg.noise_scale * gauss(rng);
        ds.y[i] = noisy > 0.0 ? 1.0 : 0.0;
    }

    ds.feature_names.resize(cfg.d_total);
    for (std::size_t b = 0; b < 5; ++b)
        for (std::size_t i = 0; i < L; ++i)
            ds.feature_names[b * L + i] = "t" + std::to_string(b + 1) + "_" + std::to_string(i);
    for (std::size_t j = 5 * L; j < cfg.d_total; ++j)
        ds.feature_names[j] = "noise_" + std::to_string(j - 5 * L);

    if (cfg.permute_columns) {
        std::vector<std::size_t> perm(cfg.d_total);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        shuffle_indices(perm, rng);
        Matrix xp(ds.x.rows, ds.x.cols);
        std::vector<std::string> names(cfg.d_total);
        for (std::size_t j = 0; j < cfg.d_total; ++j) {
            names[j] = ds.feature_names[perm[j]];
            for (std::size_t i = 0; i < ds.x.rows; ++i) xp(i, j) = ds.x(i, perm[j]);
        }
        ds.x = std::move(xp);
        ds.feature_names = std::move(names);
    }
    return ds;
}

std::vector<std::size_t> bin_labels(std::span<const double> y, std::size_t k) {
    if (k == 0) throw std::invalid_argument("bin_labels: need k >= 1");
    const std::size_t n = y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
    std::vector<std::size_t> bins(n, 0);
    for (std::size_t rank = 0; rank < n; ++rank)
        bins[order[rank]] = std::min(k - 1, rank * k / n);
    return bins;
}

}  // namespace maskfs
