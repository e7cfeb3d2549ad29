// Copyright 2026 The cubeeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command implementations behind the cubeeval binary: configuration
// merging, artifact generation, runs, reports and oracle verification.

#ifndef CUBEEVAL_CLI_HPP_
#define CUBEEVAL_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cubeeval/episodes.hpp"
#include "cubeeval/error.hpp"
#include "cubeeval/oracle.hpp"
#include "cubeeval/runner.hpp"

namespace cubeeval {

inline constexpr std::string_view kManifestVersion = "cubeeval-manifest/1";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitGeneration = 3,
  kExitInfrastructure = 4,
  kExitConsistency = 5,
};
int exit_code_for(ErrorCode code);

struct RunConfig {
  std::vector<Task> tasks;                // empty: every task
  std::map<Task, std::vector<int>> depths;  // missing: default_depths(task)
  int n = 100;                            // items per (task, depth) when generating
  std::map<Task, int> n_per_task;
  std::vector<Json> agents;               // make_agent specs; empty: the oracle agent
  std::vector<Modality> modalities;       // empty: default_modality(task)
  RunOptions run;  // run.gen also drives generation
  std::string seeds_file;                 // generate: rebuild from this seed list
  std::string episodes_dir = "episodes";
  std::string output_dir = "run";
  OracleConfig oracle;
};

std::vector<int> default_depths(Task t);
std::vector<Task> selected_tasks(const RunConfig& c);
std::vector<int> selected_depths(const RunConfig& c, Task t);
int items_per_cell(const RunConfig& c, Task t);

Json to_json(const RunConfig& c);
// Keys present in `j` override `base`. Throws Error(kConfigError).
RunConfig merge_run_config(const Json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// Writes episodes.jsonl, seed_lists.json, images/ and manifest.json under
// `out`. Returns the manifest.
Json cmd_generate(const RunConfig& cfg, const std::filesystem::path& out);

// Runs every configured agent over the generated episodes, resuming any
// results already in the output directory. Returns kExitInfrastructure if
// any item ended in an agent failure, else kExitOk.
int cmd_run(const RunConfig& cfg);

struct ReportOptions {
  std::vector<std::filesystem::path> run_dirs;
  std::filesystem::path out;  // empty: the first run directory
  bool replay = false;        // re-simulate every result first
};
// Writes report.json and report.csv and returns the report. Throws
// Error(kConsistencyError) for results without a matching episode and
// Error(kEmptyRun) when there is nothing to score.
Json cmd_report(const ReportOptions& opt, const OracleConfig& oracle);

struct VerifyConfig {
  int radius = 4;        // exhaustive up to this many moves
  int samples = 10000;   // sampled states at sample_depth
  int sample_depth = 5;
  std::uint64_t seed = 1;
  // Per-state search cap; running out counts as a mismatch.
  std::uint64_t node_budget = 1'000'000;
  int stop_after = 10;  // mismatches before giving up
};
struct VerifyReport {
  std::int64_t exhaustive_states = 0;
  std::int64_t sampled_states = 0;
  std::int64_t mismatches = 0;
  std::uint64_t max_nodes = 0;
  double seconds = 0;
  bool stopped_early = false;
  std::vector<std::string> examples;  // first few mismatches
  bool pass() const { return mismatches == 0; }
};
// Compares a fresh breadth-first search against both oracle tiers: the
// pattern-only IDA* and the cached ball.
VerifyReport verify_oracle(const DistanceOracle& oracle, const VerifyConfig& cfg);

// File helpers shared with the tests.
std::vector<Episode> load_episodes(const std::filesystem::path& episodes_dir);
std::string file_digest(const std::filesystem::path& path);  // SHA-256, hex
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cubeeval

#endif  // CUBEEVAL_CLI_HPP_
