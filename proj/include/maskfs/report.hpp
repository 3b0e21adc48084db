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

#ifndef MASKFS_REPORT_HPP
#define MASKFS_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include "maskfs/train.hpp"

namespace maskfs {

inline constexpr const char* kVersion = "maskfs 0.1.0";

/// Provenance record written once per CLI run; every report file carries the
/// manifest's hash in its header comment.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;  // flattened config snapshot
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string version = kVersion;
    double wall_seconds = 0.0;

    /// FNV-1a 64 hex over the run identity (command, config, seed, inputs,
    /// version); stable across reruns of the same configuration.
    std::string hash() const;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

/// Write-temp-then-rename so report files appear atomically.
void write_text_atomic(const std::string& path, const std::string& content);

std::map<std::string, std::string> config_snapshot(const TrainConfig& cfg);

/// Tab-separated table with named columns and a manifest-hash header comment.
struct TsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::string render(const std::string& manifest_hash) const;
};

std::string format_double(double v);

/// Serializes a SelectionReport into its three report files (metrics, loss
/// series, selection ranking) under `prefix`, returns the written paths.
std::vector<std::string> write_selection_report(const SelectionReport& report,
                                                const std::string& prefix,
                                                const std::string& manifest_hash);

}  // namespace maskfs

#endif  // MASKFS_REPORT_HPP
