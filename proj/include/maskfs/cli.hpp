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

#ifndef MASKFS_CLI_HPP
#define MASKFS_CLI_HPP

namespace maskfs {

/// Batch front end: subcommands synth, train, compare, ablate. Returns the
/// process exit code; failures print a single-line "error: ..." to stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace maskfs

#endif  // MASKFS_CLI_HPP
