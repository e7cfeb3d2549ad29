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

#include "cubeeval/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cubeeval/agents.hpp"
#include "cubeeval/metrics.hpp"
#include "cubeeval/protocol.hpp"
#include "cubeeval/render.hpp"
#include "cubeeval/rng.hpp"
#include "cubeeval/textgen.hpp"

namespace cubeeval {
namespace fs = std::filesystem;

namespace {

constexpr const char* kEpisodesFile = "episodes.jsonl";
constexpr const char* kSeedListFile = "seed_lists.json";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kRunManifestFile = "run_manifest.json";
constexpr const char* kResultsFile = "results.jsonl";

std::string hex(const unsigned char* bytes, unsigned n) {
  std::ostringstream out;
  for (unsigned i = 0; i < n; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(bytes[i]);
  return out.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error(ErrorCode::kIoError, "SHA-256 unavailable");
  }
  void update(std::string_view bytes) { EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size()); }
  std::string hex_digest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &n);
    return hex(md, n);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

template <typename T, typename F>
std::vector<T> names_from_json(const Json& j, F&& from_name) {
  std::vector<T> out;
  for (const Json& v : j) out.push_back(from_name(v.get<std::string>()));
  return out;
}

Json oracle_json(const OracleConfig& c) {
  return Json{{"ball_radius", c.ball_radius},
              {"edge_pdb_size", c.edge_pdb_size},
              {"node_budget", c.node_budget},
              {"cache_dir", c.cache_dir.string()}};
}

Json template_versions() {
  Json j = Json::object();
  for (const std::string& id : template_ids()) j[id] = prompt_template(id).version;
  return j;
}

// Configuration that decides the bytes of generated artifacts.
Json generation_config(const RunConfig& cfg) {
  Json j = to_json(cfg);
  for (const char* k : {"agents", "modalities", "episodes_dir", "output_dir"}) j.erase(k);
  j["oracle"].erase("cache_dir");
  return j;
}

Json qc_json(const QcReport& qc) {
  return Json{{"applied", qc.applied},
              {"pass", qc.pass},
              {"rounds", qc.rounds},
              {"slot_counts", qc.slot_counts},
              {"duplicates", qc.duplicates}};
}

std::string directory_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::exists(dir))
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const fs::path& f : files) {
    h.update(fs::relative(f, dir).generic_string());
    h.update(std::string_view("\0", 1));
    h.update(file_digest(f));
    h.update("\n");
  }
  return h.hex_digest();
}

std::string closed_loop_id(int depth, int index) {
  Episode e;
  e.task = Task::kClosedLoop;
  e.depth = depth;
  e.index = index;
  return e.id();
}

std::vector<Modality> modalities_for(const RunConfig& cfg, Task t) {
  if (cfg.modalities.empty()) return {default_modality(t)};
  std::vector<Modality> out;
  for (Modality m : cfg.modalities)
    if (modality_supported(t, m)) out.push_back(m);
  if (out.empty())
    throw Error(ErrorCode::kConfigError,
                std::string(task_name(t)) + " supports none of the requested modalities");
  return out;
}

std::vector<Json> agent_specs(const RunConfig& cfg) {
  if (!cfg.agents.empty()) return cfg.agents;
  return {Json{{"kind", "oracle"}}};
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidToken:
    case ErrorCode::kMalformedText:
    case ErrorCode::kMissingPlaceholder:
      return kExitConfig;
    case ErrorCode::kDepthUnachievable:
    case ErrorCode::kQCUnsatisfiable:
    case ErrorCode::kCorruptionFailed:
    case ErrorCode::kSearchBudgetExceeded:
      return kExitGeneration;
    case ErrorCode::kIoError:
    case ErrorCode::kCacheFormat:
      return kExitInfrastructure;
    case ErrorCode::kConsistencyError:
    case ErrorCode::kEmptyRun:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kDegenerateVariance:
    case ErrorCode::kInvalidState:
      return kExitConsistency;
  }
  return kExitConsistency;
}

// ---- configuration

std::vector<int> default_depths(Task t) {
  switch (t) {
    case Task::kFaceRecon: return {1, 2, 3};
    case Task::kVerification: return {5};
    case Task::kMovePrediction:
    case Task::kReflection: return {1};
    case Task::kClosedLoop: return {1, 2, 3, 4, 5};
    case Task::kMoveEffect: return {1, 2, 3};
    case Task::kRecovery: return {1, 2, 3, 4};
  }
  return {};
}

std::vector<Task> selected_tasks(const RunConfig& c) {
  std::vector<Task> out;
  for (Task t : kAllTasks)
    if (c.tasks.empty() || std::find(c.tasks.begin(), c.tasks.end(), t) != c.tasks.end())
      out.push_back(t);
  return out;
}

std::vector<int> selected_depths(const RunConfig& c, Task t) {
  const auto it = c.depths.find(t);
  std::vector<int> d = it != c.depths.end() ? it->second : default_depths(t);
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

int items_per_cell(const RunConfig& c, Task t) {
  const auto it = c.n_per_task.find(t);
  return it != c.n_per_task.end() ? it->second : c.n;
}

Json to_json(const RunConfig& c) {
  Json j;
  Json tasks = Json::array();
  for (Task t : selected_tasks(c)) tasks.push_back(task_name(t));
  j["tasks"] = tasks;
  Json depths = Json::object();
  for (Task t : selected_tasks(c)) depths[std::string(task_name(t))] = selected_depths(c, t);
  j["depths"] = depths;
  Json n = Json::object();
  for (Task t : selected_tasks(c)) n[std::string(task_name(t))] = items_per_cell(c, t);
  j["n"] = n;
  j["agents"] = agent_specs(c);
  Json mods = Json::array();
  for (Modality m : c.modalities) mods.push_back(modality_name(m));
  j["modalities"] = mods;
  j["run"] = to_json(c.run);
  j["seeds_file"] = c.seeds_file;
  j["episodes_dir"] = c.episodes_dir;
  j["output_dir"] = c.output_dir;
  j["oracle"] = oracle_json(c.oracle);
  return j;
}

RunConfig merge_run_config(const Json& j, RunConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "configuration must be a JSON object");
  static const std::set<std::string> known = {
      "tasks", "depths", "n", "agents", "modalities", "run", "seeds_file",
      "episodes_dir", "output_dir", "oracle"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::kConfigError, "unknown configuration key: " + key);
  try {
    if (j.contains("tasks")) c.tasks = names_from_json<Task>(j["tasks"], task_from_name);
    if (j.contains("depths"))
      for (const auto& [name, list] : j["depths"].items())
        c.depths[task_from_name(name)] = list.get<std::vector<int>>();
    if (j.contains("n")) {
      if (j["n"].is_object()) {
        for (const auto& [name, v] : j["n"].items()) c.n_per_task[task_from_name(name)] = v.get<int>();
      } else {
        c.n = j["n"].get<int>();
        c.n_per_task.clear();
      }
    }
    if (j.contains("agents")) c.agents = j["agents"].get<std::vector<Json>>();
    if (j.contains("modalities"))
      c.modalities = names_from_json<Modality>(j["modalities"], modality_from_name);
    if (j.contains("run")) {
      Json merged = to_json(c.run);
      merged.merge_patch(j["run"]);
      c.run = run_options_from_json(merged);
    }
    c.seeds_file = j.value("seeds_file", c.seeds_file);
    c.episodes_dir = j.value("episodes_dir", c.episodes_dir);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("oracle")) {
      const Json& o = j["oracle"];
      c.oracle.ball_radius = o.value("ball_radius", c.oracle.ball_radius);
      c.oracle.edge_pdb_size = o.value("edge_pdb_size", c.oracle.edge_pdb_size);
      c.oracle.node_budget = o.value("node_budget", c.oracle.node_budget);
      if (o.contains("cache_dir")) c.oracle.cache_dir = o["cache_dir"].get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("configuration: ") + e.what());
  }
  if (c.n < 0) throw Error(ErrorCode::kConfigError, "item count must be non-negative");
  return c;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return merge_run_config(j, std::move(base));
}

// ---- files

std::string file_digest(const fs::path& path) {
  Sha256 h;
  h.update(read_file(path));
  return h.hex_digest();
}

Json read_json_file(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kSchemaMismatch, path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::kIoError, "short write to " + path.string());
  }
  fs::rename(tmp, path);
}

std::vector<Episode> load_episodes(const fs::path& episodes_dir) {
  const fs::path file = episodes_dir / kEpisodesFile;
  std::istringstream in(read_file(file));
  std::vector<Episode> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(episode_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kSchemaMismatch,
                  file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---- generate

Json cmd_generate(const RunConfig& cfg, const fs::path& out) {
  const auto oracle = shared_oracle(cfg.oracle);
  std::vector<Batch> batches;
  GenConfig gen = cfg.run.gen;
  if (!cfg.seeds_file.empty()) {
    const SeedList list = load_seed_list(cfg.seeds_file);
    gen = list.config;
    batches = regenerate_from_seed_list(*oracle, list);
  } else {
    for (Task t : selected_tasks(cfg))
      for (int d : selected_depths(cfg, t))
        batches.push_back(generate_batch(*oracle, gen, t, d, items_per_cell(cfg, t)));
  }

  fs::create_directories(out);
  fs::remove_all(out / "images");
  std::string lines;
  Json batch_info = Json::array();
  for (const Batch& b : batches) {
    for (const Episode& e : b.episodes) {
      lines += to_json(e).dump() + "\n";
      if (!e.image_ref.empty()) write_text_file(out / e.image_ref, render_net(e.state));
    }
    batch_info.push_back(Json{{"task", task_name(b.task)},
                              {"depth", b.depth},
                              {"count", b.episodes.size()},
                              {"qc", qc_json(b.qc)}});
  }
  write_text_file(out / kEpisodesFile, lines);
  save_seed_list(seed_list_of(batches, gen), out / kSeedListFile);

  RunConfig effective = cfg;
  effective.run.gen = gen;
  Json manifest;
  manifest["version"] = kManifestVersion;
  manifest["kind"] = "generation";
  manifest["generator"] = kGeneratorVersion;
  manifest["episode_schema"] = kEpisodeSchemaVersion;
  manifest["seed_list"] = kSeedListVersion;
  manifest["template_set"] = kTemplateSetVersion;
  manifest["templates"] = template_versions();
  manifest["metric"] = "FTM";
  manifest["reproducible"] = !gen.entropy_shuffle;
  manifest["config"] = generation_config(effective);
  manifest["batches"] = batch_info;
  manifest["files"] = Json{{kEpisodesFile, file_digest(out / kEpisodesFile)},
                           {kSeedListFile, file_digest(out / kSeedListFile)},
                           {"images", directory_digest(out / "images")}};
  write_text_file(out / kManifestFile, pretty(manifest));
  return manifest;
}

// ---- run

int cmd_run(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  const fs::path episodes_dir = fs::weakly_canonical(cfg.episodes_dir);
  const Json gen_manifest = read_json_file(episodes_dir / kManifestFile);
  // Step options must come from the generator config the episodes were built with.
  cfg.run.gen = gen_config_from_json(gen_manifest.at("config").at("run").at("generator"));
  // Unselected tasks and depths default to what was generated.
  {
    const Json& gen_cfg = gen_manifest.at("config");
    if (cfg.tasks.empty()) cfg.tasks = names_from_json<Task>(gen_cfg.at("tasks"), task_from_name);
    for (const auto& [name, list] : gen_cfg.at("depths").items())
      cfg.depths.try_emplace(task_from_name(name), list.get<std::vector<int>>());
  }
  const std::vector<Episode> episodes = load_episodes(episodes_dir);
  std::map<std::pair<Task, int>, std::vector<const Episode*>> cells;
  for (const Episode& e : episodes) cells[{e.task, e.depth}].push_back(&e);

  const auto oracle = shared_oracle(cfg.oracle);
  std::vector<std::unique_ptr<Agent>> agents;
  Json agent_info = Json::array();
  for (const Json& spec : agent_specs(cfg)) {
    agents.push_back(make_agent(spec, oracle));
    agent_info.push_back(agents.back()->describe());
  }

  struct Cell {
    Task task;
    int depth;
    std::vector<Modality> modalities;
    const std::vector<const Episode*>* items;
  };
  std::vector<Cell> plan;
  for (Task t : selected_tasks(cfg)) {
    for (int d : selected_depths(cfg, t)) {
      const auto it = cells.find({t, d});
      if (it == cells.end())
        throw Error(ErrorCode::kConfigError, std::string("no generated ") + std::string(task_name(t)) +
                                                 " items at depth " + std::to_string(d));
      plan.push_back({t, d, modalities_for(cfg, t), &it->second});
    }
  }

  const fs::path out = cfg.output_dir;
  Json manifest;
  manifest["version"] = kManifestVersion;
  manifest["kind"] = "run";
  manifest["result_schema"] = kResultSchemaVersion;
  manifest["template_set"] = kTemplateSetVersion;
  manifest["templates"] = template_versions();
  manifest["metric"] = "FTM";
  manifest["episodes_dir"] = episodes_dir.string();
  manifest["generation_manifest"] = file_digest(episodes_dir / kManifestFile);
  Json config = to_json(cfg);
  for (const char* k : {"output_dir", "episodes_dir", "seeds_file", "n"}) config.erase(k);
  config["oracle"].erase("cache_dir");
  manifest["config"] = config;
  manifest["agents"] = agent_info;
  const fs::path manifest_path = out / kRunManifestFile;
  if (fs::exists(manifest_path)) {
    if (read_json_file(manifest_path) != manifest)
      throw Error(ErrorCode::kConsistencyError,
                  out.string() + " holds results of a different configuration");
  } else {
    write_text_file(manifest_path, pretty(manifest));
  }

  ResultStore store(out);
  std::mutex store_mu;
  const RunContext ctx{*oracle, cfg.run};
  std::map<std::pair<std::string, std::string>, EpisodeResult> done = store.completed();
  std::vector<EpisodeResult> ordered;
  bool infra = false;

  for (const auto& agent : agents) {
    const auto key_of = [&](const Episode& e, Modality m) {
      return std::make_pair(agent->name(), item_id_for(e, m, cfg.run.regime));
    };
    // Recovery runs after everything else so harvested starts can see the
    // closed-loop results.
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<WorkItem> work;
      for (const Cell& cell : plan) {
        if ((cell.task == Task::kRecovery) != (pass == 1)) continue;
        for (Modality m : cell.modalities) {
          for (const Episode* e : *cell.items) {
            if (done.count(key_of(*e, m))) continue;
            const EpisodeResult* source = nullptr;
            if (cell.task == Task::kRecovery &&
                cfg.run.recovery_start == RecoveryStart::kHarvest) {
              const auto it = done.find(
                  {agent->name(),
                   closed_loop_id(e->depth, e->index) + "@" + std::string(modality_name(m))});
              if (it == done.end())
                throw Error(ErrorCode::kConfigError,
                            "recovery item " + e->id() +
                                " needs a closed-loop result at the same depth and modality");
              source = &it->second;
            }
            work.push_back({e, m, source});
          }
        }
      }
      const auto results = run_items(ctx, *agent, work, [&](const EpisodeResult& r) {
        std::lock_guard lock(store_mu);
        store.append(r);
      });
      for (const EpisodeResult& r : results) done[{r.agent, r.item_id}] = r;
    }
    for (const Cell& cell : plan)
      for (Modality m : cell.modalities)
        for (const Episode* e : *cell.items) {
          const EpisodeResult& r = done.at(key_of(*e, m));
          infra = infra || r.infra_error();
          ordered.push_back(r);
        }
  }
  store.finalize(ordered);
  return infra ? kExitInfrastructure : kExitOk;
}

// ---- report

Json cmd_report(const ReportOptions& opt, const OracleConfig& oracle_cfg) {
  if (opt.run_dirs.empty()) throw Error(ErrorCode::kEmptyRun, "no run directories given");
  std::vector<EpisodeResult> all;
  Json runs = Json::array();
  std::optional<double> lambda;
  std::shared_ptr<const DistanceOracle> oracle;
  for (const fs::path& dir : opt.run_dirs) {
    const Json manifest = read_json_file(dir / kRunManifestFile);
    const fs::path episodes_dir = manifest.at("episodes_dir").get<std::string>();
    if (file_digest(episodes_dir / kManifestFile) != manifest.at("generation_manifest"))
      throw Error(ErrorCode::kConsistencyError,
                  "episodes in " + episodes_dir.string() + " changed since " + dir.string() + " ran");
    const RunOptions options = run_options_from_json(manifest.at("config").at("run"));
    if (lambda && *lambda != options.abstain.lambda)
      throw Error(ErrorCode::kConfigError, "runs disagree on the abstention lambda");
    lambda = options.abstain.lambda;

    std::map<std::string, Episode> episodes;
    for (Episode& e : load_episodes(episodes_dir)) episodes.emplace(e.id(), std::move(e));
    const std::vector<EpisodeResult> results = ResultStore::load(dir / kResultsFile);
    std::map<std::pair<std::string, std::string>, const EpisodeResult*> by_key;
    for (const EpisodeResult& r : results) {
      const auto it = episodes.find(r.episode_id);
      if (it == episodes.end() || it->second.task != r.task)
        throw Error(ErrorCode::kConsistencyError,
                    "result " + r.item_id + " in " + dir.string() + " has no matching episode");
      const Episode& e = it->second;
      const bool single_choice = r.task == Task::kMovePrediction || r.task == Task::kReflection;
      const bool gold_ok = (!single_choice || r.gold_choice == e.gold_choice) &&
                           r.gold_yes == e.gold_yes && r.gold_grid == e.gold_grid &&
                           r.gold_effects == e.gold_effects;
      if (!gold_ok)
        throw Error(ErrorCode::kConsistencyError,
                    "result " + r.item_id + " disagrees with its episode's gold label");
      by_key[{r.agent, r.item_id}] = &r;
    }
    if (opt.replay) {
      if (!oracle) oracle = shared_oracle(oracle_cfg);
      const RunContext ctx{*oracle, options};
      for (const EpisodeResult& r : results) {
        if (r.infra_error()) continue;
        const EpisodeResult* source = nullptr;
        if (r.task == Task::kRecovery && options.recovery_start == RecoveryStart::kHarvest) {
          const auto it = by_key.find(
              {r.agent, closed_loop_id(r.depth, r.index) + "@" + std::string(modality_name(r.modality))});
          if (it == by_key.end())
            throw Error(ErrorCode::kConsistencyError,
                        "recovery result " + r.item_id + " has no closed-loop source");
          source = it->second;
        }
        replay(ctx, episodes.at(r.episode_id), r, source);
      }
    }
    runs.push_back(Json{{"dir", dir.string()},
                        {"results", file_digest(dir / kResultsFile)},
                        {"generation_manifest", manifest.at("generation_manifest")},
                        {"replayed", opt.replay}});
    all.insert(all.end(), results.begin(), results.end());
  }

  Json report;
  report["version"] = kManifestVersion;
  report["kind"] = "report";
  report["runs"] = runs;
  const Json scored = build_report(all, *lambda);
  for (const auto& [k, v] : scored.items()) report[k] = v;
  const fs::path out = opt.out.empty() ? opt.run_dirs.front() : opt.out;
  write_text_file(out / "report.json", pretty(report));
  write_text_file(out / "report.csv", report_csv(report));
  return report;
}

// ---- oracle verification

VerifyReport verify_oracle(const DistanceOracle& oracle, const VerifyConfig& cfg) {
  if (cfg.radius < 0 || cfg.sample_depth < 0 || cfg.samples < 0)
    throw Error(ErrorCode::kConfigError, "verification radius and samples must be non-negative");
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;

  // Breadth-first layers over sticker states, independent of the cubie
  // tables the oracle searches with.
  const int deepest = std::max(cfg.radius, cfg.samples > 0 ? cfg.sample_depth : 0);
  std::unordered_map<CubeState, int> seen;
  std::vector<std::vector<CubeState>> layers(1, {CubeState::solved()});
  seen.emplace(CubeState::solved(), 0);
  for (int d = 1; d <= deepest; ++d) {
    layers.emplace_back();
    for (const CubeState& s : layers[static_cast<std::size_t>(d - 1)])
      for (const Move& m : all_moves()) {
        CubeState next = s.apply(m);
        if (seen.emplace(next, d).second) layers.back().push_back(next);
      }
  }

  const auto check = [&](const CubeState& s, int expected) {
    std::string search = "budget exhausted";
    std::string tiered = "budget exhausted";
    bool ok = true;
    try {
      const auto stats = oracle.search_distance(s, cfg.node_budget);
      report.max_nodes = std::max(report.max_nodes, stats.nodes);
      search = std::to_string(stats.distance);
      ok = stats.distance == expected;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSearchBudgetExceeded) throw;
      ok = false;
    }
    try {
      const int d = oracle.distance(s);
      tiered = std::to_string(d);
      ok = ok && d == expected;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSearchBudgetExceeded) throw;
      ok = false;
    }
    if (ok) return;
    ++report.mismatches;
    if (report.examples.size() < 5)
      report.examples.push_back(to_facelet_string(s) + ": breadth-first " + std::to_string(expected) +
                                ", search " + search + ", oracle " + tiered);
  };
  const auto give_up = [&] {
    report.stopped_early = cfg.stop_after > 0 && report.mismatches >= cfg.stop_after;
    return report.stopped_early;
  };

  for (int d = 0; d <= cfg.radius; ++d)
    for (const CubeState& s : layers[static_cast<std::size_t>(d)]) {
      if (give_up()) break;
      check(s, d);
      ++report.exhaustive_states;
    }

  if (cfg.samples > 0 && cfg.sample_depth > cfg.radius && !give_up()) {
    std::vector<CubeState> layer = layers[static_cast<std::size_t>(cfg.sample_depth)];
    std::sort(layer.begin(), layer.end());
    std::vector<std::size_t> idx(layer.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(cfg.seed, "verify-oracle", {static_cast<std::uint64_t>(cfg.sample_depth)});
    rng.shuffle(idx);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(cfg.samples)));
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) {
      if (give_up()) break;
      check(layer[i], cfg.sample_depth);
      ++report.sampled_states;
    }
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace cubeeval
