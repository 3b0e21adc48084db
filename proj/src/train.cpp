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

#include "maskfs/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "maskfs/kernels.hpp"

namespace maskfs {

namespace {

constexpr std::uint64_t kBatchStream = 0x9e3779b97f4a7c15ULL;
constexpr double kLogClip = 1e-12;

void gather_rows(const Matrix& x, const std::vector<double>& y,
                 const std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi,
                 Matrix& bx, std::vector<double>& by) {
    if (bx.rows != hi - lo || bx.cols != x.cols) bx = Matrix(hi - lo, x.cols);
    by.resize(hi - lo);
    for (std::size_t r = lo; r < hi; ++r) {
        const std::size_t src = rows[r];
        std::copy_n(x.row(src), x.cols, bx.row(r - lo));
        by[r - lo] = y[src];
    }
}

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

double cross_entropy(const Matrix& probs, const std::vector<double>& labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const auto y = static_cast<std::size_t>(std::llround(labels[i]));
        loss -= std::log(std::max(probs(i, y), kLogClip));
    }
    return loss / static_cast<double>(probs.rows);
}

double mean_abs_error(const std::vector<double>& out, const std::vector<double>& labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) loss += std::fabs(out[i] - labels[i]);
    return loss / static_cast<double>(out.size());
}

double binary_auc(const std::vector<double>& score, const std::vector<double>& labels) {
    const std::size_t n = score.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    // Midranks for ties.
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double rank_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] > 0.5) {
            rank_pos += rank[k];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
    const double np = static_cast<double>(n_pos);
    return (rank_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

Metrics metrics_from_batch(const PredictionBatch& pred) {
    Metrics m;
    if (pred.task == Task::Classification) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.probs.rows; ++i) {
            std::size_t arg = 0;
            for (std::size_t j = 1; j < pred.probs.cols; ++j)
                if (pred.probs(i, j) > pred.probs(i, arg)) arg = j;
            if (arg == static_cast<std::size_t>(std::llround(pred.labels[i]))) ++correct;
        }
        m.accuracy = static_cast<double>(correct) / static_cast<double>(pred.probs.rows);
        if (pred.probs.cols == 2) {
            std::vector<double> score(pred.probs.rows);
            for (std::size_t i = 0; i < pred.probs.rows; ++i) score[i] = pred.probs(i, 1);
            m.auc = binary_auc(score, pred.labels);
        }
    } else {
        m.mae = mean_abs_error(pred.reals, pred.labels);
    }
    return m;
}

struct SplitData {
    Matrix x;
    std::vector<double> y;
};

SplitData materialize(const Dataset& ds, Split split) {
    const std::vector<std::size_t> rows = ds.rows_in(split);
    SplitData sd;
    sd.x = Matrix(rows.size(), ds.d());
    sd.y.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(ds.x.row(rows[r]), ds.d(), sd.x.row(r));
        sd.y[r] = ds.y[rows[r]];
    }
    return sd;
}

// Registers model + optional mask parameters with the optimizer and runs one
// Adam update from matching gradient spans.
struct ParamSet {
    Predictor* model;
    std::vector<double>* mask_arg;  // nullptr for plain MLP training

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> s;
        for (std::size_t l = 0; l < model->n_layers(); ++l) {
            s.push_back(model->weights[l].size());
            s.push_back(model->biases[l].size());
        }
        if (mask_arg != nullptr) s.push_back(mask_arg->size());
        return s;
    }

    void step(OptimizerState& opt, const Gradients& g, const std::vector<double>* mask_grad) {
        std::vector<std::span<double>> params;
        std::vector<std::span<const double>> grads;
        for (std::size_t l = 0; l < model->n_layers(); ++l) {
            params.emplace_back(model->weights[l].data);
            grads.emplace_back(g.d_weights[l].data);
            params.emplace_back(model->biases[l]);
            grads.emplace_back(g.d_biases[l]);
        }
        if (mask_arg != nullptr) {
            params.emplace_back(*mask_arg);
            grads.emplace_back(*mask_grad);
        }
        adam_step(opt, params, grads);
    }
};

Matrix one_hot(const std::vector<double>& labels, std::size_t n_classes) {
    Matrix out(labels.size(), n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        out(i, static_cast<std::size_t>(std::llround(labels[i]))) = 1.0;
    return out;
}

std::vector<std::size_t> hidden_dims(const TrainConfig& cfg) {
    return std::vector<std::size_t>(cfg.n_layers, cfg.hidden_units);
}

}  // namespace

Metrics evaluate(const Predictor& model, const SimplexProjection* mask, const Dataset& ds,
                 Split split) {
    SplitData sd = materialize(ds, split);
    if (sd.x.rows == 0) throw std::invalid_argument("evaluate: empty split");
    const Matrix input = mask != nullptr ? apply_mask(sd.x, *mask) : std::move(sd.x);
    const PredictionBatch pred = forward(model, input, sd.y);
    return metrics_from_batch(pred);
}

TrainOutput train_slm(const Dataset& ds, const TrainConfig& cfg) {
    const std::size_t d = ds.d();
    if (cfg.target_features == 0 || cfg.target_features > d)
        throw std::invalid_argument("train_slm: target_features must be in [1, d]");
    if (ds.split.empty()) throw std::invalid_argument("train_slm: dataset has no splits");
    const SplitData train = materialize(ds, Split::Train);
    if (train.x.rows == 0) throw std::invalid_argument("train_slm: empty train split");
    const std::size_t n_train = train.x.rows;
    const std::size_t bs = std::min(cfg.batch_size, n_train);
    const std::size_t steps_per_epoch = (n_train + bs - 1) / bs;
    const std::size_t n_steps = cfg.n_epochs * steps_per_epoch;

    // Tempering disabled means a constant target (Fig. 2's fixed-count cell).
    const TemperingSchedule schedule =
        cfg.tempering ? TemperingSchedule::make(d, cfg.target_features, n_steps, cfg.n_tmp_override)
                      : TemperingSchedule::make(cfg.target_features, cfg.target_features, n_steps,
                                                cfg.n_tmp_override);

    const std::size_t out_dim = ds.task == Task::Classification ? ds.n_classes : 1;
    const OutputKind kind =
        ds.task == Task::Classification ? OutputKind::SoftmaxProbs : OutputKind::Linear;
    Predictor model = Predictor::init(d, hidden_dims(cfg), out_dim, kind, cfg.seed);
    MaskState mask = MaskState::init(d, cfg.scaling_enabled);

    AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.decay_steps = cfg.decay_steps;
    adam.decay_rate = cfg.decay_rate;
    OptimizerState opt(adam);
    ParamSet params{&model, &mask.argument};
    opt.register_sizes(params.sizes());

    std::mt19937_64 batch_rng(cfg.seed ^ kBatchStream);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainOutput out;
    out.report.config = cfg;
    out.report.loss_history.reserve(n_steps);

    const LossWeights weights{cfg.mi_enabled ? cfg.mi_weight : 0.0, 1.0};
    Matrix bx;
    std::vector<double> by;
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        shuffle_indices(order, batch_rng);
        for (std::size_t start = 0; start < n_train; start += bs, ++t) {
            const std::size_t stop = std::min(start + bs, n_train);
            gather_rows(train.x, train.y, order, start, stop, bx, by);
            const std::size_t b = bx.rows;

            refresh_mask(mask, t, schedule);
            if (mask.degenerate_warning) {
                ++out.report.degenerate_refreshes;
                mask.degenerate_warning = false;
            }

            const Matrix x_sp = apply_mask(bx, mask.sparse);
            ForwardCache cache;
            PredictionBatch pred = forward(model, x_sp, by, &cache);

            LossBreakdown loss;
            loss.weights = weights;
            Matrix d_logits(b, out_dim);
            std::vector<double> d_msp(d, 0.0);

            if (ds.task == Task::Classification) {
                loss.task_loss = cross_entropy(pred.probs, by);
                for (std::size_t i = 0; i < b; ++i) {
                    const auto y = static_cast<std::size_t>(std::llround(by[i]));
                    for (std::size_t j = 0; j < out_dim; ++j) {
                        const double ind = j == y ? 1.0 : 0.0;
                        d_logits(i, j) = (pred.probs(i, j) - ind) / static_cast<double>(b);
                    }
                }
            } else {
                loss.task_loss = mean_abs_error(pred.reals, by);
                for (std::size_t i = 0; i < b; ++i) {
                    const double diff = pred.reals[i] - by[i];
                    d_logits(i, 0) = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) /
                                     static_cast<double>(b);
                }
            }

            Matrix d_xsp_extra;  // extra gradient w.r.t. the masked input (HSIC path)
            if (weights.mi_weight != 0.0) {
                if (cfg.hsic_enabled) {
                    const Matrix ymat = ds.task == Task::Classification
                                            ? one_hot(by, ds.n_classes)
                                            : [&] {
                                                  Matrix m(b, 1);
                                                  for (std::size_t i = 0; i < b; ++i) m(i, 0) = by[i];
                                                  return m;
                                              }();
                    loss.mi_error = hsic_gaussian(x_sp, ymat);
                    d_xsp_extra = hsic_gaussian_grad(x_sp, ymat);
                } else {
                    if (ds.task == Task::Classification) {
                        loss.mi_error = quadratic_error(pred);
                    } else {
                        double mse = 0.0;
                        for (std::size_t i = 0; i < b; ++i) {
                            const double diff = pred.reals[i] - by[i];
                            mse += diff * diff;
                        }
                        loss.mi_error = mse / static_cast<double>(b);
                    }
                    // Batch-wise enforcement: the pairwise sum is normalized to
                    // a pair mean so it shares the quadratic term's magnitude.
                    const double pair_norm =
                        b < 2 ? 0.0 : 2.0 / (static_cast<double>(b) * static_cast<double>(b - 1));
                    if (cfg.rcs_enabled)
                        loss.r_cs = pair_norm * consistency_regularizer(bx, pred, mask.sparse.values);
                    const MiGradients mig =
                        miloss_gradients(bx, pred, mask.sparse.values, cfg.rcs_enabled, pair_norm);
                    if (ds.task == Task::Classification) {
                        const Matrix d_logits_mi = softmax_vjp(pred.probs, mig.d_probs);
                        for (std::size_t i = 0; i < d_logits.size(); ++i)
                            d_logits.data[i] += weights.mi_weight * d_logits_mi.data[i];
                    } else {
                        for (std::size_t i = 0; i < b; ++i)
                            d_logits(i, 0) += weights.mi_weight * mig.d_outputs[i];
                    }
                    for (std::size_t j = 0; j < d; ++j) d_msp[j] += weights.mi_weight * mig.d_p[j];
                }
            }
            loss.combined = loss.task_loss + weights.mi_weight * (loss.mi_error + loss.r_cs);
            if (!std::isfinite(loss.combined))
                throw std::runtime_error("train_slm: non-finite loss at step " + std::to_string(t));

            Gradients g = backward(model, cache, d_logits);
            if (!d_xsp_extra.empty())
                for (std::size_t i = 0; i < g.d_input.size(); ++i)
                    g.d_input.data[i] += weights.mi_weight * d_xsp_extra.data[i];

            // Chain into the mask: d/d m_sp[j] += sum_i x[i,j] * dxsp[i,j],
            // then through the frozen-multiplier sparsemax JVP.
            std::vector<double> from_input(d);
            kernels::colwise_dot(bx.data.data(), g.d_input.data.data(), from_input.data(), b, d);
            for (std::size_t j = 0; j < d; ++j) d_msp[j] += from_input[j];
            std::vector<double> d_arg = sparsemax_jvp(mask.sparse, d_msp);
            for (double& v : d_arg) v *= mask.applied_multiplier;

            params.step(opt, g, &d_arg);

            out.report.loss_history.push_back({t, mask.target_count, mask.sparse.k, loss});
        }
    }

    // Freeze the mask at the final target before evaluation.
    refresh_mask(mask, n_steps, schedule);
    out.final_mask = mask.sparse;
    out.model = std::move(model);
    out.report.selected_indices = out.final_mask.support;
    out.report.mask_probs = out.final_mask.values;
    out.report.ranking.resize(d);
    std::iota(out.report.ranking.begin(), out.report.ranking.end(), std::size_t{0});
    std::stable_sort(out.report.ranking.begin(), out.report.ranking.end(),
                     [&](std::size_t a, std::size_t b2) {
                         return out.report.mask_probs[a] > out.report.mask_probs[b2];
                     });
    out.report.train_metrics = evaluate(out.model, &out.final_mask, ds, Split::Train);
    out.report.val_metrics = evaluate(out.model, &out.final_mask, ds, Split::Val);
    out.report.test_metrics = evaluate(out.model, &out.final_mask, ds, Split::Test);
    return out;
}

Metrics train_mlp_on_columns(const Dataset& ds, const std::vector<std::size_t>& columns,
                             const TrainConfig& cfg) {
    std::vector<std::size_t> cols = columns;
    if (cols.empty()) {
        cols.resize(ds.d());
        std::iota(cols.begin(), cols.end(), std::size_t{0});
    }
    Dataset sub;
    sub.task = ds.task;
    sub.n_classes = ds.n_classes;
    sub.y = ds.y;
    sub.split = ds.split;
    sub.norm = ds.norm;
    sub.x = Matrix(ds.n(), cols.size());
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) sub.x(i, j) = ds.x(i, cols[j]);

    const SplitData train = materialize(sub, Split::Train);
    if (train.x.rows == 0) throw std::invalid_argument("train_mlp_on_columns: empty train split");
    const std::size_t n_train = train.x.rows;
    const std::size_t bs = std::min(cfg.batch_size, n_train);
    const std::size_t out_dim = sub.task == Task::Classification ? sub.n_classes : 1;
    const OutputKind kind =
        sub.task == Task::Classification ? OutputKind::SoftmaxProbs : OutputKind::Linear;
    Predictor model = Predictor::init(cols.size(), hidden_dims(cfg), out_dim, kind, cfg.seed);

    AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.decay_steps = cfg.decay_steps;
    adam.decay_rate = cfg.decay_rate;
    OptimizerState opt(adam);
    ParamSet params{&model, nullptr};
    opt.register_sizes(params.sizes());

    std::mt19937_64 batch_rng(cfg.seed ^ kBatchStream);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Matrix bx;
    std::vector<double> by;
    for (std::size_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        shuffle_indices(order, batch_rng);
        for (std::size_t start = 0; start < n_train; start += bs) {
            const std::size_t stop = std::min(start + bs, n_train);
            gather_rows(train.x, train.y, order, start, stop, bx, by);
            const std::size_t b = bx.rows;
            ForwardCache cache;
            PredictionBatch pred = forward(model, bx, by, &cache);
            Matrix d_logits(b, out_dim);
            if (sub.task == Task::Classification) {
                for (std::size_t i = 0; i < b; ++i) {
                    const auto y = static_cast<std::size_t>(std::llround(by[i]));
                    for (std::size_t j = 0; j < out_dim; ++j) {
                        const double ind = j == y ? 1.0 : 0.0;
                        d_logits(i, j) = (pred.probs(i, j) - ind) / static_cast<double>(b);
                    }
                }
            } else {
                for (std::size_t i = 0; i < b; ++i) {
                    const double diff = pred.reals[i] - by[i];
                    d_logits(i, 0) = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) /
                                     static_cast<double>(b);
                }
            }
            Gradients g = backward(model, cache, d_logits);
            params.step(opt, g, nullptr);
        }
    }
    Metrics m = evaluate(model, nullptr, sub, Split::Test);
    return m;
}

std::vector<AblationCell> run_ablation(const Dataset& ds, const TrainConfig& cfg,
                                       std::size_t n_seeds) {
    std::vector<AblationCell> cells;
    for (const auto [mi, temper] : {std::pair{true, true}, std::pair{true, false},
                                    std::pair{false, true}, std::pair{false, false}}) {
        AblationCell cell;
        cell.mi = mi;
        cell.tempering = temper;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            TrainConfig c = cfg;
            c.mi_enabled = mi;
            c.tempering = temper;
            c.seed = cfg.seed + s;
            const TrainOutput out = train_slm(ds, c);
            cell.per_seed.push_back(out.report.test_metrics.primary(ds.task));
        }
        double mean = 0.0;
        for (double v : cell.per_seed) mean += v;
        mean /= static_cast<double>(cell.per_seed.size());
        double var = 0.0;
        for (double v : cell.per_seed) var += (v - mean) * (v - mean);
        var /= static_cast<double>(cell.per_seed.size());
        cell.mean = mean;
        cell.sd = std::sqrt(var);
        cells.push_back(std::move(cell));
    }
    return cells;
}

}  // namespace maskfs
