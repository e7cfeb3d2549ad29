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

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cubeeval/agents.hpp"
#include "cubeeval/cli.hpp"

namespace {

using namespace cubeeval;

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string part = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto dash = part.find('-', 1);
    try {
      if (dash != std::string::npos) {
        const int lo = std::stoi(part.substr(0, dash));
        const int hi = std::stoi(part.substr(dash + 1));
        for (int d = lo; d <= hi; ++d) out.push_back(d);
      } else {
        out.push_back(std::stoi(part));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigError, "not an integer list: " + text);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// "task=1,2,3" or "task=1-5".
std::pair<Task, std::vector<int>> parse_task_depths(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw Error(ErrorCode::kConfigError, "expected task=depths: " + text);
  return {task_from_name(text.substr(0, eq)), parse_int_list(text.substr(eq + 1))};
}

struct Flags {
  std::string config;
  std::string cache_dir;
  int edge_pdb_size = -1;

  std::vector<std::string> tasks;
  std::vector<std::string> depths;
  int n = -1;
  std::vector<std::string> n_task;
  std::string seeds;
  double qc_epsilon = -1;
  bool extra_progress = false;
  bool entropy_shuffle = false;

  std::string episodes;
  std::string out;
  std::vector<std::string> agents;
  std::vector<std::string> modalities;
  std::string format;
  std::string parse_fail_policy;
  bool abstain = false;
  std::string abstain_policy;
  double lambda = -1;
  std::string regime;
  std::string recovery_start;
  bool require_verified_line = false;
};

// Defaults, then the config file, then flags.
RunConfig build_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_run_config(f.config, c);
  Json j = Json::object();
  if (!f.tasks.empty()) j["tasks"] = f.tasks;
  for (const std::string& d : f.depths) {
    const auto [task, list] = parse_task_depths(d);
    j["depths"][std::string(task_name(task))] = list;
  }
  if (f.n >= 0) j["n"] = f.n;
  c = merge_run_config(j, c);
  for (const std::string& entry : f.n_task) {
    const auto [task, list] = parse_task_depths(entry);
    if (list.size() != 1) throw Error(ErrorCode::kConfigError, "expected task=count: " + entry);
    c.n_per_task[task] = list.front();
  }
  if (!f.agents.empty()) {
    c.agents.clear();
    for (const std::string& a : f.agents) c.agents.push_back(parse_agent_spec(a));
  }
  if (!f.modalities.empty()) {
    c.modalities.clear();
    for (const std::string& m : f.modalities) c.modalities.push_back(modality_from_name(m));
  }
  Json run = Json::object();
  if (!f.format.empty()) run["format"] = f.format;
  if (!f.parse_fail_policy.empty()) run["parse_fail_policy"] = f.parse_fail_policy;
  if (f.abstain) run["abstain"]["enabled"] = true;
  if (!f.abstain_policy.empty()) run["abstain"]["policy"] = f.abstain_policy;
  if (f.lambda >= 0) run["abstain"]["lambda"] = f.lambda;
  if (!f.regime.empty()) run["regime"] = f.regime;
  if (!f.recovery_start.empty()) run["recovery_start"] = f.recovery_start;
  if (f.require_verified_line) run["require_verified_line"] = true;
  if (f.qc_epsilon >= 0) run["generator"]["qc_epsilon"] = f.qc_epsilon;
  if (f.extra_progress) run["generator"]["extra_progress_distractor"] = true;
  if (f.entropy_shuffle) run["generator"]["entropy_shuffle"] = true;
  if (!run.empty()) c = merge_run_config(Json{{"run", run}}, c);
  if (!f.seeds.empty()) c.seeds_file = f.seeds;
  if (!f.episodes.empty()) c.episodes_dir = f.episodes;
  if (!f.out.empty()) c.output_dir = f.out;
  if (!f.cache_dir.empty()) c.oracle.cache_dir = f.cache_dir;
  if (f.edge_pdb_size >= 0) c.oracle.edge_pdb_size = f.edge_pdb_size;
  return c;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--cache-dir", f.cache_dir, "oracle table directory");
  sub->add_option("--edge-pdb-size", f.edge_pdb_size, "edges per optional edge pattern table (0 disables)");
}

void add_selection(CLI::App* sub, Flags& f) {
  sub->add_option("--tasks", f.tasks, "tasks to include")->delimiter(',');
  sub->add_option("--depths", f.depths, "per-task depths, e.g. closed_loop=1-5");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cube-state evaluation harness"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "generate episodes, seed lists and images");
  add_common(gen, f);
  add_selection(gen, f);
  gen->add_option("--out", f.out, "output directory")->required();
  gen->add_option("--n", f.n, "items per task and depth");
  gen->add_option("--n-task", f.n_task, "per-task item count, e.g. verification=200");
  gen->add_option("--seeds", f.seeds, "rebuild from a seed list instead of generating");
  gen->add_option("--qc-epsilon", f.qc_epsilon, "allowed deviation of gold-letter frequencies");
  gen->add_flag("--extra-progress-distractor", f.extra_progress,
                "closed-loop options may hold a second progress move");
  gen->add_flag("--entropy-shuffle", f.entropy_shuffle,
                "shuffle option letters from OS entropy (not reproducible)");

  auto* run = app.add_subcommand("run", "run agents over generated episodes");
  add_common(run, f);
  add_selection(run, f);
  run->add_option("--episodes", f.episodes, "generated episode directory")->required();
  run->add_option("--out", f.out, "run directory")->required();
  run->add_option("--agent", f.agents, "agent spec kind[:key=value,...]");
  run->add_option("--modality", f.modalities, "image+text, text or image");
  run->add_option("--format", f.format, "text state format: net or facelets");
  run->add_option("--parse-fail-policy", f.parse_fail_policy, "halt or fallback_A");
  run->add_flag("--abstain", f.abstain, "offer IDK in closed-loop steps");
  run->add_option("--abstain-policy", f.abstain_policy, "teacher_on_abstain or skip_item");
  run->add_option("--lambda", f.lambda, "abstention credit");
  run->add_option("--regime", f.regime, "reflection regime: redacted or unredacted");
  run->add_option("--recovery-start", f.recovery_start, "harvest or synthetic");
  run->add_flag("--require-verified-line", f.require_verified_line,
                "face answers must end with the verification line");

  auto* report = app.add_subcommand("report", "score run directories");
  std::vector<std::string> run_dirs;
  std::string report_out;
  bool do_replay = false;
  std::string report_cache;
  report->add_option("runs", run_dirs, "run directories")->required();
  report->add_option("--out", report_out, "report directory (default: the first run)");
  report->add_flag("--replay", do_replay, "re-simulate every result before scoring");
  report->add_option("--cache-dir", report_cache, "oracle table directory");

  auto* verify = app.add_subcommand("verify-oracle", "cross-check the oracle against breadth-first search");
  VerifyConfig vc;
  add_common(verify, f);
  verify->add_option("--radius", vc.radius, "exhaustive radius");
  verify->add_option("--samples", vc.samples, "sampled states beyond the radius");
  verify->add_option("--sample-depth", vc.sample_depth, "depth of sampled states");
  verify->add_option("--seed", vc.seed, "sampling seed");
  verify->add_option("--node-budget", vc.node_budget, "search nodes allowed per state");

  auto* build = app.add_subcommand("build-cache", "build the oracle tables");
  add_common(build, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      const RunConfig c = build_config(f);
      const Json manifest = cmd_generate(c, f.out);
      std::size_t items = 0;
      for (const Json& b : manifest["batches"]) items += b["count"].get<std::size_t>();
      std::cout << "generated " << items << " items in " << f.out << "\n";
      return kExitOk;
    }
    if (run->parsed()) {
      const RunConfig c = build_config(f);
      const int rc = cmd_run(c);
      if (rc == kExitInfrastructure)
        std::cerr << "some items ended in agent failures; rerun to resume them\n";
      return rc;
    }
    if (report->parsed()) {
      ReportOptions opt;
      for (const std::string& d : run_dirs) opt.run_dirs.push_back(d);
      opt.out = report_out;
      opt.replay = do_replay;
      OracleConfig oc;
      oc.cache_dir = report_cache;
      const Json r = cmd_report(opt, oc);
      std::cout << "scored " << r["groups"].size() << " groups\n";
      return kExitOk;
    }
    if (verify->parsed()) {
      const RunConfig c = build_config(f);
      const VerifyReport r = verify_oracle(*shared_oracle(c.oracle), vc);
      std::cout << "exhaustive states: " << r.exhaustive_states << "\n"
                << "sampled states:    " << r.sampled_states << "\n"
                << "mismatches:        " << r.mismatches << "\n"
                << "max search nodes:  " << r.max_nodes << "\n"
                << "seconds:           " << r.seconds << "\n";
      for (const std::string& ex : r.examples) std::cout << "  " << ex << "\n";
      if (r.stopped_early) std::cout << "stopped after " << r.mismatches << " mismatches\n";
      return r.pass() ? kExitOk : kExitConsistency;
    }
    if (build->parsed()) {
      const RunConfig c = build_config(f);
      const auto oracle = shared_oracle(c.oracle);
      std::cout << "ball states: " << oracle->ball().size() << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfrastructure;
  }
  return kExitOk;
}
