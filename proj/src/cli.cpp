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

#include "maskfs/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "maskfs/data.hpp"
#include "maskfs/harness.hpp"
#include "maskfs/net.hpp"
#include "maskfs/report.hpp"
#include "maskfs/train.hpp"

namespace maskfs {

namespace {

namespace fs = std::filesystem;

struct Shared {
    std::string out_dir;
    std::string name;
};

std::string out_path(const Shared& sh, const std::string& file) {
    fs::path base = sh.out_dir;
    fs::create_directories(base);
    return (base / file).string();
}

// Precedence: --out flag > MASKFS_OUT_DIR env > current directory.
void add_shared(CLI::App* cmd, Shared& sh, const std::string& default_name) {
    const char* env = std::getenv("MASKFS_OUT_DIR");
    sh.out_dir = env != nullptr ? env : ".";
    sh.name = default_name;
    cmd->add_option("--out", sh.out_dir, "Output directory");
    cmd->add_option("--name", sh.name, "Basename for output files");
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--target-features", cfg.target_features, "Number of features to select");
    cmd->add_option("--epochs", cfg.n_epochs, "Training epochs");
    cmd->add_option("--batch", cfg.batch_size, "Batch size");
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    cmd->add_option("--decay-steps", cfg.decay_steps, "Exponential decay step scale");
    cmd->add_option("--decay-rate", cfg.decay_rate, "Exponential decay rate");
    cmd->add_option("--hidden", cfg.hidden_units, "Hidden units per layer");
    cmd->add_option("--layers", cfg.n_layers, "Hidden layer count");
    cmd->add_option("--mi-weight", cfg.mi_weight, "Weight of the MI objective");
    cmd->add_option("--n-tmp", cfg.n_tmp_override, "Tempering threshold override (0 = N/2)");
    cmd->add_option("--seed", cfg.seed, "RNG seed");
    cmd->add_flag("--no-tempering{false}", cfg.tempering, "Keep the target feature count constant");
    cmd->add_flag("--no-mi{false}", cfg.mi_enabled, "Disable the MI objective");
    cmd->add_flag("--no-rcs{false}", cfg.rcs_enabled, "Skip the consistency regularizer");
    cmd->add_flag("--no-scaling{false}", cfg.scaling_enabled, "Disable exact-cardinality scaling");
    cmd->add_flag("--hsic", cfg.hsic_enabled, "Replace the MI objective with the HSIC regularizer");
}

Task parse_task(const std::string& s) {
    if (s == "classify" || s == "classification") return Task::Classification;
    if (s == "regress" || s == "regression") return Task::Regression;
    throw CLI::ValidationError("--task", "expected classify|regress");
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int cmd_synth(const Shared& sh, const SynthConfig& cfg) {
    Timer timer;
    const Dataset ds = synth_generate(cfg);
    const std::string csv = out_path(sh, sh.name + ".csv");
    write_csv(ds, csv);
    RunManifest manifest;
    manifest.command = "synth";
    manifest.seed = cfg.seed;
    manifest.config["L"] = std::to_string(cfg.group_size);
    manifest.config["features"] = std::to_string(cfg.d_total);
    manifest.config["samples"] = std::to_string(cfg.n_samples);
    manifest.config["noise"] = format_double(cfg.noise_scale);
    manifest.config["center"] = cfg.center_labels ? "true" : "false";
    manifest.config["permute"] = cfg.permute_columns ? "true" : "false";
    manifest.outputs = {csv};
    manifest.wall_seconds = timer.seconds();
    write_manifest(manifest, out_path(sh, sh.name + ".manifest.json"));
    std::printf("wrote %s (%zu samples, %zu features)\n", csv.c_str(), ds.n(), ds.d());
    return 0;
}

int cmd_train(const Shared& sh, const std::string& data, const std::string& label,
              const std::string& task_str, const TrainConfig& cfg, const std::string& save_model) {
    Timer timer;
    Dataset ds = load_csv(data, label, parse_task(task_str));
    normalize_split(ds, {0.7, 0.1, 0.2}, cfg.seed);
    TrainConfig c = cfg;
    if (c.target_features == 0) c.target_features = ds.d();
    const TrainOutput out = train_slm(ds, c);

    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = c.seed;
    manifest.config = config_snapshot(c);
    manifest.inputs = {data};
    const std::string prefix = out_path(sh, sh.name);
    manifest.outputs = write_selection_report(out.report, prefix, manifest.hash());
    if (!save_model.empty()) {
        OptimizerState dummy{AdamConfig{}};
        save_checkpoint(save_model, out.model, dummy);
        manifest.outputs.push_back(save_model);
    }
    manifest.wall_seconds = timer.seconds();
    write_manifest(manifest, prefix + ".manifest.json");

    const Metrics& m = out.report.test_metrics;
    if (ds.task == Task::Classification) {
        std::printf("test accuracy %.4f", m.accuracy);
        if (!std::isnan(m.auc)) std::printf("  auc %.4f", m.auc);
    } else {
        std::printf("test mae %.4f", m.mae);
    }
    std::printf("  selected %zu features -> %s.selection.tsv\n", out.report.selected_indices.size(),
                prefix.c_str());
    return 0;
}

DataSpec make_spec(const std::string& data, const std::string& label, const std::string& task_str,
                   const SynthConfig& synth) {
    DataSpec spec;
    if (!data.empty()) {
        spec.synthetic = false;
        spec.csv_path = data;
        spec.label_column = label;
        spec.task = parse_task(task_str);
    } else {
        spec.synthetic = true;
        spec.synth = synth;
    }
    return spec;
}

int cmd_compare(const Shared& sh, const DataSpec& spec, const TrainConfig& cfg,
                std::vector<std::size_t> ks, std::size_t n_seeds) {
    Timer timer;
    if (ks.empty()) ks.push_back(cfg.target_features != 0 ? cfg.target_features : 10);
    const std::vector<CompareRow> rows = run_compare(spec, cfg, ks, n_seeds);

    RunManifest manifest;
    manifest.command = "compare";
    manifest.seed = cfg.seed;
    manifest.config = config_snapshot(cfg);
    manifest.config["seeds"] = std::to_string(n_seeds);
    if (!spec.synthetic) manifest.inputs = {spec.csv_path};

    TsvTable table;
    table.columns = {"method", "k", "metric_mean", "metric_sd", "salient_recovered_mean", "seeds"};
    for (const CompareRow& r : rows)
        table.add_row({method_name(r.method), std::to_string(r.k), format_double(r.metric_mean),
                       format_double(r.metric_sd), format_double(r.recovery_mean),
                       std::to_string(r.metric_per_seed.size())});
    const std::string path = out_path(sh, sh.name + ".tsv");
    write_text_atomic(path, table.render(manifest.hash()));
    manifest.outputs = {path};
    manifest.wall_seconds = timer.seconds();
    write_manifest(manifest, out_path(sh, sh.name + ".manifest.json"));

    for (const CompareRow& r : rows)
        std::printf("%-12s k=%-4zu metric %.4f +- %.4f  recovered %.1f\n", method_name(r.method),
                    r.k, r.metric_mean, r.metric_sd, r.recovery_mean);
    return 0;
}

int cmd_ablate(const Shared& sh, const DataSpec& spec, const TrainConfig& cfg,
               std::size_t n_seeds) {
    Timer timer;
    const Dataset ds = make_dataset(spec, 0);
    TrainConfig c = cfg;
    if (c.target_features == 0) c.target_features = std::max<std::size_t>(1, ds.d() / 10);
    const std::vector<AblationCell> cells = run_ablation(ds, c, n_seeds);

    RunManifest manifest;
    manifest.command = "ablate";
    manifest.seed = c.seed;
    manifest.config = config_snapshot(c);
    manifest.config["seeds"] = std::to_string(n_seeds);
    if (!spec.synthetic) manifest.inputs = {spec.csv_path};

    TsvTable table;
    table.columns = {"mi", "tempering", "metric_mean", "metric_sd", "seeds"};
    for (const AblationCell& cell : cells)
        table.add_row({cell.mi ? "on" : "off", cell.tempering ? "on" : "off",
                       format_double(cell.mean), format_double(cell.sd),
                       std::to_string(cell.per_seed.size())});
    const std::string path = out_path(sh, sh.name + ".tsv");
    write_text_atomic(path, table.render(manifest.hash()));
    manifest.outputs = {path};
    manifest.wall_seconds = timer.seconds();
    write_manifest(manifest, out_path(sh, sh.name + ".manifest.json"));

    for (const AblationCell& cell : cells)
        std::printf("mi=%-3s tempering=%-3s  metric %.4f +- %.4f\n", cell.mi ? "on" : "off",
                    cell.tempering ? "on" : "off", cell.mean, cell.sd);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Sparse learnable-mask feature selection toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    // Config keys live in a section named after the subcommand, e.g.
    //   [train]
    //   epochs=100
    // Precedence: explicit flag > config file > built-in default.
    app.set_config("--config", "", "Read options from a TOML/INI config file");
    app.fallthrough();

    // synth
    Shared synth_sh;
    SynthConfig synth_cfg;
    bool raw_threshold = false;
    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
    add_shared(synth, synth_sh, "synth");
    synth->add_option("--L", synth_cfg.group_size, "Salient group size (5L salient features)");
    synth->add_option("--features", synth_cfg.d_total, "Total feature count");
    synth->add_option("--samples", synth_cfg.n_samples, "Sample count");
    synth->add_option("--noise", synth_cfg.noise_scale, "Label noise scale");
    synth->add_option("--seed", synth_cfg.seed, "RNG seed");
    synth->add_flag("--raw-threshold", raw_threshold,
                    "Threshold the raw score at 0 instead of its median (heavily one-sided)");
    synth->add_flag("--permute", synth_cfg.permute_columns, "Shuffle column order (seeded)");

    // train
    Shared train_sh;
    TrainConfig train_cfg;
    std::string train_data, train_label = "label", train_task = "classify", save_model;
    CLI::App* train = app.add_subcommand("train", "Train the masked selector on a CSV dataset");
    add_shared(train, train_sh, "run");
    train->add_option("--data", train_data, "Input CSV")->required();
    train->add_option("--label", train_label, "Label column name");
    train->add_option("--task", train_task, "classify|regress");
    train->add_option("--save-model", save_model, "Write a model checkpoint here");
    add_train_flags(train, train_cfg);

    // compare
    Shared cmp_sh;
    TrainConfig cmp_cfg;
    SynthConfig cmp_synth;
    std::string cmp_data, cmp_label = "label", cmp_task = "classify";
    std::vector<std::size_t> ks;
    std::size_t cmp_seeds = 5;
    CLI::App* compare = app.add_subcommand("compare", "Benchmark SLM against the filter baselines");
    add_shared(compare, cmp_sh, "compare");
    compare->add_option("--data", cmp_data, "Input CSV (omit to use a synthetic draw)");
    compare->add_option("--label", cmp_label, "Label column name");
    compare->add_option("--task", cmp_task, "classify|regress");
    compare->add_option("--k", ks, "Feature counts to select (repeatable)");
    compare->add_option("--seeds", cmp_seeds, "Number of seeded repetitions");
    compare->add_option("--synth-L", cmp_synth.group_size, "Synthetic group size");
    compare->add_option("--synth-features", cmp_synth.d_total, "Synthetic feature count");
    compare->add_option("--synth-samples", cmp_synth.n_samples, "Synthetic sample count");
    compare->add_option("--synth-noise", cmp_synth.noise_scale, "Synthetic label noise");
    add_train_flags(compare, cmp_cfg);

    // ablate
    Shared abl_sh;
    TrainConfig abl_cfg;
    SynthConfig abl_synth;
    std::string abl_data, abl_label = "label", abl_task = "classify";
    std::size_t abl_seeds = 5;
    CLI::App* ablate = app.add_subcommand("ablate", "Run the 2x2 MI/tempering ablation grid");
    add_shared(ablate, abl_sh, "ablation");
    ablate->add_option("--data", abl_data, "Input CSV (omit to use a synthetic draw)");
    ablate->add_option("--label", abl_label, "Label column name");
    ablate->add_option("--task", abl_task, "classify|regress");
    ablate->add_option("--seeds", abl_seeds, "Number of seeded runs per cell");
    ablate->add_option("--synth-L", abl_synth.group_size, "Synthetic group size");
    ablate->add_option("--synth-features", abl_synth.d_total, "Synthetic feature count");
    ablate->add_option("--synth-samples", abl_synth.n_samples, "Synthetic sample count");
    ablate->add_option("--synth-noise", abl_synth.noise_scale, "Synthetic label noise");
    add_train_flags(ablate, abl_cfg);

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            synth_cfg.center_labels = !raw_threshold;
            return cmd_synth(synth_sh, synth_cfg);
        }
        if (train->parsed())
            return cmd_train(train_sh, train_data, train_label, train_task, train_cfg, save_model);
        if (compare->parsed())
            return cmd_compare(cmp_sh, make_spec(cmp_data, cmp_label, cmp_task, cmp_synth),
                               cmp_cfg, ks, cmp_seeds);
        if (ablate->parsed())
            return cmd_ablate(abl_sh, make_spec(abl_data, abl_label, abl_task, abl_synth),
                              abl_cfg, abl_seeds);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help / --version
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace maskfs
