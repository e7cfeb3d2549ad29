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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cubeeval/cli.hpp"
#include "cubeeval/metrics.hpp"
#include "doctest.h"
#include "support/shared_oracle.hpp"

namespace fs = std::filesystem;
using namespace cubeeval;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cubeeval-test-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_config() {
  RunConfig c;
  c.oracle = testing::test_oracle_config();
  c.tasks = {Task::kFaceRecon, Task::kVerification, Task::kMovePrediction, Task::kClosedLoop,
             Task::kMoveEffect, Task::kRecovery};
  c.depths[Task::kFaceRecon] = {1};
  c.depths[Task::kClosedLoop] = {1, 2, 3};
  c.depths[Task::kMoveEffect] = {2};
  c.depths[Task::kRecovery] = {1, 2, 3};
  c.n = 8;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CUBEEVAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kCacheFlag = std::string("--cache-dir ") + CUBEEVAL_TEST_CACHE_DIR;

}  // namespace

TEST_CASE("exit codes follow the error families") {
  CHECK(exit_code_for(ErrorCode::kConfigError) == 2);
  CHECK(exit_code_for(ErrorCode::kMalformedText) == 2);
  CHECK(exit_code_for(ErrorCode::kDepthUnachievable) == 3);
  CHECK(exit_code_for(ErrorCode::kQCUnsatisfiable) == 3);
  CHECK(exit_code_for(ErrorCode::kIoError) == 4);
  CHECK(exit_code_for(ErrorCode::kConsistencyError) == 5);
  CHECK(exit_code_for(ErrorCode::kEmptyRun) == 5);
}

TEST_CASE("configuration precedence: flags over file over defaults") {
  RunConfig defaults;
  CHECK(selected_depths(defaults, Task::kClosedLoop) == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(selected_depths(defaults, Task::kVerification) == std::vector<int>{5});
  CHECK(items_per_cell(defaults, Task::kFaceRecon) == 100);

  const fs::path dir = scratch("config");
  std::ofstream(dir / "cfg.json") << R"({"n": 20, "depths": {"closed_loop": [2, 1, 2]},
    "run": {"parse_fail_policy": "halt", "abstain": {"lambda": 0.5}}})";
  RunConfig file = load_run_config(dir / "cfg.json");
  CHECK(file.n == 20);
  CHECK(selected_depths(file, Task::kClosedLoop) == std::vector<int>{1, 2});
  CHECK(file.run.parse_fail_policy == ParseFailPolicy::kHalt);
  CHECK(file.run.abstain.lambda == 0.5);
  CHECK_FALSE(file.run.abstain.enabled);

  RunConfig flags = merge_run_config(Json{{"run", {{"abstain", {{"enabled", true}}}}}, {"n", 4}},
                                     file);
  CHECK(flags.n == 4);
  CHECK(flags.run.abstain.enabled);
  CHECK(flags.run.abstain.lambda == 0.5);
  CHECK(flags.run.parse_fail_policy == ParseFailPolicy::kHalt);

  CHECK(merge_run_config(to_json(flags)).run.abstain.lambda == 0.5);
  CHECK_THROWS_AS(merge_run_config(Json{{"bogus", 1}}), Error);
  CHECK_THROWS_AS(merge_run_config(Json{{"run", {{"abstain", {{"lambda", 2.0}}}}}}), Error);
  CHECK_THROWS_AS(merge_run_config(Json{{"tasks", {"juggling"}}}), Error);
}

TEST_CASE("generation is byte-identical across invocations and rebuilds from seed lists") {
  const fs::path dir = scratch("generate");
  const RunConfig cfg = small_config();
  cmd_generate(cfg, dir / "a");
  cmd_generate(cfg, dir / "b");
  for (const char* f : {"episodes.jsonl", "seed_lists.json", "manifest.json"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  CHECK(slurp(dir / "a" / "images" / "closed_loop_3_7.png") ==
        slurp(dir / "b" / "images" / "closed_loop_3_7.png"));

  RunConfig from_seeds = cfg;
  from_seeds.seeds_file = (dir / "a" / "seed_lists.json").string();
  cmd_generate(from_seeds, dir / "c");
  CHECK(slurp(dir / "a" / "episodes.jsonl") == slurp(dir / "c" / "episodes.jsonl"));

  const Json manifest = read_json_file(dir / "a" / "manifest.json");
  CHECK(manifest["files"]["episodes.jsonl"] == file_digest(dir / "a" / "episodes.jsonl"));
  CHECK(manifest["config"]["run"]["generator"]["qc_epsilon"] == 0.05);
  CHECK(manifest["batches"].size() == 10);
  CHECK(load_episodes(dir / "a").size() == 80);
}

TEST_CASE("unachievable depths and bad flags exit with their codes") {
  const fs::path dir = scratch("exit-codes");
  CHECK(run_cli("generate " + kCacheFlag + " --out " + (dir / "g").string() +
                " --tasks closed_loop --depths closed_loop=99 --n 2") == 3);
  CHECK(run_cli("generate --no-such-flag") == 2);
  CHECK(run_cli("generate " + kCacheFlag + " --out " + (dir / "g").string() +
                " --tasks juggling") == 2);
}

TEST_CASE("an interrupted run resumes to the same files as an uninterrupted one") {
  const fs::path dir = scratch("resume");
  RunConfig cfg = small_config();
  cmd_generate(cfg, dir / "episodes");
  cfg.episodes_dir = (dir / "episodes").string();
  cfg.agents = {Json{{"kind", "random"}, {"seed", 3}}, Json{{"kind", "noisy_oracle"}, {"p", 0.6}, {"seed", 1}}};

  cfg.output_dir = (dir / "full").string();
  REQUIRE(cmd_run(cfg) == kExitOk);
  const std::string full = slurp(dir / "full" / "results.jsonl");
  const std::string full_transcripts = slurp(dir / "full" / "transcripts.jsonl");

  // A crash leaves a prefix of completed lines plus a torn one.
  fs::create_directories(dir / "cut");
  fs::copy_file(dir / "full" / "run_manifest.json", dir / "cut" / "run_manifest.json");
  std::istringstream lines(full);
  std::string line, prefix;
  for (int i = 0; i < 37 && std::getline(lines, line); ++i) prefix += line + "\n";
  std::getline(lines, line);
  prefix += line.substr(0, line.size() / 2);
  std::ofstream(dir / "cut" / "results.jsonl", std::ios::binary) << prefix;

  cfg.output_dir = (dir / "cut").string();
  REQUIRE(cmd_run(cfg) == kExitOk);
  CHECK(slurp(dir / "cut" / "results.jsonl") == full);
  // Transcripts carry wall-clock latency, so only their shape can match.
  const auto count_lines = [](const std::string& t) { return std::count(t.begin(), t.end(), '\n'); };
  CHECK(count_lines(slurp(dir / "cut" / "transcripts.jsonl")) == count_lines(full_transcripts));

  // Rerunning a finished directory changes nothing.
  REQUIRE(cmd_run(cfg) == kExitOk);
  CHECK(slurp(dir / "cut" / "results.jsonl") == full);

  RunConfig other = cfg;
  other.run.parse_fail_policy = ParseFailPolicy::kHalt;
  CHECK_THROWS_WITH_AS(cmd_run(other), doctest::Contains("different configuration"), Error);
}

TEST_CASE("run defaults to the generated tasks and depths") {
  const fs::path dir = scratch("default-selection");
  RunConfig gen;
  gen.oracle = testing::test_oracle_config();
  gen.tasks = {Task::kMovePrediction, Task::kClosedLoop};
  gen.depths[Task::kClosedLoop] = {1, 2};
  gen.n = 8;
  cmd_generate(gen, dir / "episodes");

  RunConfig cfg;
  cfg.oracle = gen.oracle;
  cfg.episodes_dir = (dir / "episodes").string();
  cfg.output_dir = (dir / "run").string();
  REQUIRE(cmd_run(cfg) == kExitOk);
  std::istringstream in(slurp(dir / "run" / "results.jsonl"));
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 8 + 2 * 8);

  // An explicit selection outside the generated cells is still an error.
  cfg.output_dir = (dir / "run-explicit").string();
  cfg.tasks = {Task::kMoveEffect};
  CHECK_THROWS_WITH_AS(cmd_run(cfg), doctest::Contains("no generated move_effect"), Error);
}

TEST_CASE("report recomputes from results and rejects orphans") {
  const fs::path dir = scratch("report");
  RunConfig cfg = small_config();
  cmd_generate(cfg, dir / "episodes");
  cfg.episodes_dir = (dir / "episodes").string();
  cfg.output_dir = (dir / "run").string();
  cfg.agents = {Json{{"kind", "noisy_oracle"}, {"p", 0.5}, {"seed", 9}}};
  REQUIRE(cmd_run(cfg) == kExitOk);

  ReportOptions opt;
  opt.run_dirs = {dir / "run"};
  opt.replay = true;
  const Json report = cmd_report(opt, cfg.oracle);
  const Json again = build_report(ResultStore::load(dir / "run" / "results.jsonl"), 0.25);
  CHECK(report["groups"] == again["groups"]);
  CHECK(read_json_file(dir / "run" / "report.json") == report);
  CHECK(slurp(dir / "run" / "report.csv") == report_csv(report));

  // A result whose episode does not exist.
  fs::copy(dir / "run", dir / "orphan", fs::copy_options::recursive);
  {
    std::istringstream in(slurp(dir / "run" / "results.jsonl"));
    std::string first;
    std::getline(in, first);
    Json j = Json::parse(first);
    j["episode_id"] = "face_recon-d1-9999";
    j["item_id"] = "face_recon-d1-9999@image";
    std::ofstream(dir / "orphan" / "results.jsonl", std::ios::app) << j.dump() << "\n";
  }
  opt.run_dirs = {dir / "orphan"};
  opt.replay = false;
  CHECK_THROWS_WITH_AS(cmd_report(opt, cfg.oracle), doctest::Contains("no matching episode"), Error);

  // A tampered answer fails replay.
  fs::copy(dir / "run", dir / "tampered", fs::copy_options::recursive);
  {
    std::string text = slurp(dir / "run" / "results.jsonl");
    const auto pos = text.find("\"raw\":\"Answer: Yes");
    const auto pos_no = text.find("\"raw\":\"Answer: No");
    REQUIRE((pos != std::string::npos || pos_no != std::string::npos));
    if (pos != std::string::npos)
      text.replace(pos, 18, "\"raw\":\"Answer: No ");
    else
      text.replace(pos_no, 17, "\"raw\":\"Answer: Ye");
    std::ofstream(dir / "tampered" / "results.jsonl", std::ios::binary) << text;
  }
  opt.run_dirs = {dir / "tampered"};
  opt.replay = true;
  CHECK_THROWS_AS(cmd_report(opt, cfg.oracle), Error);

  fs::create_directories(dir / "empty");
  fs::copy_file(dir / "run" / "run_manifest.json", dir / "empty" / "run_manifest.json");
  std::ofstream(dir / "empty" / "results.jsonl");
  opt.run_dirs = {dir / "empty"};
  opt.replay = false;
  try {
    cmd_report(opt, cfg.oracle);
    FAIL("empty run was scored");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyRun);
  }
}

TEST_CASE("an unreachable endpoint exits with the infrastructure code") {
  const fs::path dir = scratch("unreachable");
  RunConfig cfg = small_config();
  cfg.tasks = {Task::kMovePrediction};
  cfg.n = 2;
  cmd_generate(cfg, dir / "episodes");
  cfg.episodes_dir = (dir / "episodes").string();
  cfg.output_dir = (dir / "run").string();
  cfg.agents = {Json{{"kind", "remote"},
                     {"base_url", "http://127.0.0.1:9/v1"},
                     {"model", "m"},
                     {"api_key_env", "CUBEEVAL_TEST_UNREACHABLE_KEY"},
                     {"timeout_s", 1},
                     {"max_retries", 0}}};
  setenv("CUBEEVAL_TEST_UNREACHABLE_KEY", "k", 1);
  CHECK(cmd_run(cfg) == kExitInfrastructure);
  const auto results = ResultStore::load(dir / "run" / "results.jsonl");
  REQUIRE(results.size() == 2);
  CHECK(results[0].failure == AgentFailure::kTransport);

  CHECK(run_cli("run " + kCacheFlag + " --episodes " + (dir / "episodes").string() + " --out " +
                (dir / "cli").string() + " --tasks move_prediction" +
                " --agent remote:base_url=http://127.0.0.1:9/v1,model=m,max_retries=0,timeout_s=1," +
                "api_key_env=CUBEEVAL_TEST_UNREACHABLE_KEY") == 4);
}

TEST_CASE("oracle verification passes on the real tables and catches a corrupted one") {
  VerifyConfig vc;
  vc.radius = 3;
  vc.samples = 300;
  const VerifyReport ok = verify_oracle(testing::test_oracle(), vc);
  CHECK(ok.pass());
  CHECK(ok.exhaustive_states == 1 + 18 + 243 + 3240);
  CHECK(ok.sampled_states == 300);

  const fs::path dir = scratch("sabotage");
  const fs::path src = CUBEEVAL_TEST_CACHE_DIR;
  const auto corners = PatternDatabase::file_name(PatternDatabase::Pattern::corners());
  const auto ball = DistanceBall::file_name(5);
  fs::copy_file(src / ball, dir / ball);
  fs::copy_file(src / corners, dir / corners);
  {
    // Inflate the body past the true distances; the header stays valid.
    std::fstream f(dir / corners, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(16);
    const std::string junk(1 << 20, '\x0c');
    f.write(junk.data(), static_cast<std::streamsize>(junk.size()));
  }
  OracleConfig oc;
  oc.cache_dir = dir;
  const DistanceOracle sabotaged(oc);
  const VerifyReport bad = verify_oracle(sabotaged, vc);
  CHECK_FALSE(bad.pass());
  CHECK(bad.mismatches > 0);
  CHECK_FALSE(bad.examples.empty());

  CHECK(run_cli("verify-oracle --cache-dir " + dir.string() + " --radius 2 --samples 10") == 5);
  CHECK(run_cli("verify-oracle " + kCacheFlag + " --radius 2 --samples 10") == 0);
}
