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

#include "maskfs/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace maskfs {

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string RunManifest::hash() const {
    std::uint64_t h = fnv1a(command);
    for (const auto& [k, v] : config) h = fnv1a(k + "=" + v, h);
    h = fnv1a(std::to_string(seed), h);
    for (const auto& p : inputs) h = fnv1a(p, h);
    h = fnv1a(version, h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["seed"] = manifest.seed;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["version"] = manifest.version;
    j["wall_seconds"] = manifest.wall_seconds;
    j["hash"] = manifest.hash();
    write_text_atomic(path, j.dump(2) + "\n");
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::map<std::string, std::string> config_snapshot(const TrainConfig& cfg) {
    std::map<std::string, std::string> m;
    m["epochs"] = std::to_string(cfg.n_epochs);
    m["batch"] = std::to_string(cfg.batch_size);
    m["lr"] = format_double(cfg.learning_rate);
    m["decay_steps"] = format_double(cfg.decay_steps);
    m["decay_rate"] = format_double(cfg.decay_rate);
    m["hidden"] = std::to_string(cfg.hidden_units);
    m["layers"] = std::to_string(cfg.n_layers);
    m["target_features"] = std::to_string(cfg.target_features);
    m["tempering"] = cfg.tempering ? "true" : "false";
    m["n_tmp"] = std::to_string(cfg.n_tmp_override);
    m["mi_weight"] = format_double(cfg.mi_weight);
    m["mi"] = cfg.mi_enabled ? "true" : "false";
    m["hsic"] = cfg.hsic_enabled ? "true" : "false";
    m["rcs"] = cfg.rcs_enabled ? "true" : "false";
    m["scaling"] = cfg.scaling_enabled ? "true" : "false";
    m["seed"] = std::to_string(cfg.seed);
    return m;
}

void TsvTable::add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }

std::string TsvTable::render(const std::string& manifest_hash) const {
    std::ostringstream out;
    out << "# manifest=" << manifest_hash << "\n";
    for (std::size_t j = 0; j < columns.size(); ++j)
        out << columns[j] << (j + 1 < columns.size() ? '\t' : '\n');
    for (const auto& row : rows)
        for (std::size_t j = 0; j < row.size(); ++j)
            out << row[j] << (j + 1 < row.size() ? '\t' : '\n');
    return out.str();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<std::string> write_selection_report(const SelectionReport& report,
                                                const std::string& prefix,
                                                const std::string& manifest_hash) {
    std::vector<std::string> written;

    TsvTable metrics;
    metrics.columns = {"split", "accuracy", "mae", "auc"};
    auto add_metrics = [&](const char* split, const Metrics& m) {
        metrics.add_row({split, format_double(m.accuracy), format_double(m.mae),
                         format_double(m.auc)});
    };
    add_metrics("train", report.train_metrics);
    add_metrics("val", report.val_metrics);
    add_metrics("test", report.test_metrics);
    write_text_atomic(prefix + ".metrics.tsv", metrics.render(manifest_hash));
    written.push_back(prefix + ".metrics.tsv");

    TsvTable loss;
    loss.columns = {"step", "target", "support", "task_loss", "mi_error", "r_cs", "combined"};
    for (const StepLog& s : report.loss_history)
        loss.add_row({std::to_string(s.step), std::to_string(s.target), std::to_string(s.support),
                      format_double(s.loss.task_loss), format_double(s.loss.mi_error),
                      format_double(s.loss.r_cs), format_double(s.loss.combined)});
    write_text_atomic(prefix + ".loss.tsv", loss.render(manifest_hash));
    written.push_back(prefix + ".loss.tsv");

    TsvTable sel;
    sel.columns = {"rank", "feature", "mask_prob", "selected"};
    for (std::size_t r = 0; r < report.ranking.size(); ++r) {
        const std::size_t j = report.ranking[r];
        const bool selected = std::find(report.selected_indices.begin(),
                                        report.selected_indices.end(),
                                        j) != report.selected_indices.end();
        sel.add_row({std::to_string(r), std::to_string(j), format_double(report.mask_probs[j]),
                     selected ? "1" : "0"});
    }
    write_text_atomic(prefix + ".selection.tsv", sel.render(manifest_hash));
    written.push_back(prefix + ".selection.tsv");
    return written;
}

}  // namespace maskfs
