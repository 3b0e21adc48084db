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

#include "maskfs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace maskfs {

namespace {

struct TrainSplit {
    Matrix x;
    std::vector<double> y;
};

TrainSplit train_split(const Dataset& ds) {
    const std::vector<std::size_t> rows = ds.rows_in(Split::Train);
    TrainSplit ts;
    ts.x = Matrix(rows.size(), ds.d());
    ts.y.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(ds.x.row(rows[r]), ds.d(), ts.x.row(r));
        ts.y[r] = ds.y[rows[r]];
    }
    return ts;
}

double recovery(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& salient) {
    if (salient.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hit = 0;
    for (std::size_t j : selected)
        if (std::binary_search(salient.begin(), salient.end(), j)) ++hit;
    return static_cast<double>(hit);
}

std::vector<std::size_t> random_columns(std::size_t d, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> cols(d);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (d - i));
        std::swap(cols[i], cols[j]);
    }
    cols.resize(k);
    std::sort(cols.begin(), cols.end());
    return cols;
}

void finish_row(CompareRow& row) {
    double mean = 0.0;
    for (double v : row.metric_per_seed) mean += v;
    mean /= static_cast<double>(row.metric_per_seed.size());
    double var = 0.0;
    for (double v : row.metric_per_seed) var += (v - mean) * (v - mean);
    var /= static_cast<double>(row.metric_per_seed.size());
    row.metric_mean = mean;
    row.metric_sd = std::sqrt(var);
    double rec = 0.0;
    std::size_t nrec = 0;
    for (double v : row.recovery_per_seed)
        if (!std::isnan(v)) {
            rec += v;
            ++nrec;
        }
    row.recovery_mean = nrec > 0 ? rec / static_cast<double>(nrec)
                                 : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Dataset make_dataset(const DataSpec& spec, std::uint64_t seed) {
    Dataset ds;
    if (spec.synthetic) {
        SynthConfig cfg = spec.synth;
        cfg.seed = spec.synth.seed + seed;
        ds = synth_generate(cfg);
    } else {
        ds = load_csv(spec.csv_path, spec.label_column, spec.task);
    }
    normalize_split(ds, {0.7, 0.1, 0.2}, seed);
    return ds;
}

std::vector<std::size_t> salient_columns(const Dataset& ds) {
    bool has_noise = false;
    for (const auto& name : ds.feature_names)
        if (name.rfind("noise_", 0) == 0) has_noise = true;
    std::vector<std::size_t> out;
    if (!has_noise) return out;
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j)
        if (ds.feature_names[j].rfind("noise_", 0) != 0) out.push_back(j);
    return out;
}

const char* method_name(CompareMethod m) {
    switch (m) {
        case CompareMethod::Slm: return "slm";
        case CompareMethod::Fisher: return "fisher";
        case CompareMethod::AnovaF: return "anova_f";
        case CompareMethod::BinnedMI: return "binned_mi";
        case CompareMethod::LinearCoef: return "linear";
        case CompareMethod::AllFeatures: return "all_features";
        case CompareMethod::RandomK: return "random_k";
    }
    return "?";
}

std::vector<CompareRow> run_compare(const DataSpec& spec, const TrainConfig& base_cfg,
                                    const std::vector<std::size_t>& ks, std::size_t n_seeds) {
    if (ks.empty()) throw std::invalid_argument("run_compare: need at least one k");
    const std::vector<CompareMethod> methods = {
        CompareMethod::Slm,        CompareMethod::Fisher,     CompareMethod::AnovaF,
        CompareMethod::BinnedMI,   CompareMethod::LinearCoef, CompareMethod::AllFeatures,
        CompareMethod::RandomK};

    std::vector<CompareRow> rows;
    for (std::size_t k : ks)
        for (CompareMethod m : methods) {
            CompareRow r;
            r.method = m;
            r.k = k;
            rows.push_back(r);
        }
    auto row_of = [&](CompareMethod m, std::size_t k) -> CompareRow& {
        for (auto& r : rows)
            if (r.method == m && r.k == k) return r;
        throw std::logic_error("run_compare: row lookup");
    };

    for (std::size_t s = 0; s < n_seeds; ++s) {
        const Dataset ds = make_dataset(spec, s);
        const std::vector<std::size_t> salient = salient_columns(ds);
        const TrainSplit ts = train_split(ds);
        TrainConfig cfg = base_cfg;
        cfg.seed = base_cfg.seed + s;

        // Filter scores fitted once per seed on the train split.
        std::vector<FeatureScores> scores;
        if (ds.task == Task::Classification) {
            scores.push_back(fisher_score(ts.x, ts.y, ds.n_classes));
            scores.push_back(anova_f(ts.x, ts.y, ds.n_classes));
        }
        scores.push_back(binned_mi(ts.x, ts.y, ds.task, ds.n_classes));
        scores.push_back(linear_coef(ts.x, ts.y, ds.task, ds.n_classes, cfg.seed));

        for (std::size_t k : ks) {
            if (k > ds.d()) throw std::invalid_argument("run_compare: k exceeds feature count");
            {
                TrainConfig slm_cfg = cfg;
                slm_cfg.target_features = k;
                const TrainOutput out = train_slm(ds, slm_cfg);
                CompareRow& r = row_of(CompareMethod::Slm, k);
                r.metric_per_seed.push_back(out.report.test_metrics.primary(ds.task));
                r.recovery_per_seed.push_back(recovery(out.report.selected_indices, salient));
            }
            for (const FeatureScores& fs : scores) {
                const CompareMethod m = fs.method == ScoreMethod::Fisher      ? CompareMethod::Fisher
                                        : fs.method == ScoreMethod::AnovaF    ? CompareMethod::AnovaF
                                        : fs.method == ScoreMethod::BinnedMI ? CompareMethod::BinnedMI
                                                                             : CompareMethod::LinearCoef;
                const std::vector<std::size_t> sel = fs.top_k(k);
                const Metrics metrics = evaluate_selection(ds, sel, cfg);
                CompareRow& r = row_of(m, k);
                r.metric_per_seed.push_back(metrics.primary(ds.task));
                r.recovery_per_seed.push_back(recovery(sel, salient));
            }
            {
                const Metrics metrics = train_mlp_on_columns(ds, {}, cfg);
                CompareRow& r = row_of(CompareMethod::AllFeatures, k);
                r.metric_per_seed.push_back(metrics.primary(ds.task));
                r.recovery_per_seed.push_back(std::numeric_limits<double>::quiet_NaN());
            }
            {
                const std::vector<std::size_t> sel =
                    random_columns(ds.d(), k, cfg.seed * 7919 + k);
                const Metrics metrics = evaluate_selection(ds, sel, cfg);
                CompareRow& r = row_of(CompareMethod::RandomK, k);
                r.metric_per_seed.push_back(metrics.primary(ds.task));
                r.recovery_per_seed.push_back(recovery(sel, salient));
            }
        }
    }
    // Regression datasets skip fisher/anova; drop their empty rows.
    std::erase_if(rows, [](const CompareRow& r) { return r.metric_per_seed.empty(); });
    for (auto& r : rows) finish_row(r);
    return rows;
}

}  // namespace maskfs
