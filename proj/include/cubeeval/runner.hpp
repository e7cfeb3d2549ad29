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

// Runs task items against an agent: renders prompts, parses answers,
// advances the cube for the multi-step tasks and records everything needed
// to score and replay an item.

#ifndef CUBEEVAL_RUNNER_HPP_
#define CUBEEVAL_RUNNER_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cubeeval/agents.hpp"
#include "cubeeval/episodes.hpp"
#include "cubeeval/oracle.hpp"
#include "cubeeval/protocol.hpp"

namespace cubeeval {

inline constexpr std::string_view kResultSchemaVersion = "cubeeval-result/1";

enum class HaltReason { kNone, kNonProgress, kParseFail, kSolved, kBudget, kAbstain };
std::string_view halt_reason_name(HaltReason h);
HaltReason halt_reason_from_name(std::string_view name);

enum class ParseFailPolicy { kHalt, kFallbackA };
std::string_view parse_fail_policy_name(ParseFailPolicy p);  // halt, fallback_A
ParseFailPolicy parse_fail_policy_from_name(std::string_view name);

enum class AbstainPolicy { kTeacherOnAbstain, kSkipItem };
std::string_view abstain_policy_name(AbstainPolicy p);  // teacher_on_abstain, skip_item
AbstainPolicy abstain_policy_from_name(std::string_view name);

struct AbstainConfig {
  bool enabled = false;
  AbstainPolicy policy = AbstainPolicy::kTeacherOnAbstain;
  double lambda = 0.25;
  std::optional<double> confidence_threshold;  // recorded only
};

// Where recovery episodes start: the first failure of the same agent's
// closed-loop run, or one seeded non-progress move from the scramble.
enum class RecoveryStart { kHarvest, kSynthetic };
std::string_view recovery_start_name(RecoveryStart r);  // harvest, synthetic
RecoveryStart recovery_start_from_name(std::string_view name);

// Recovery plan update after one attempt.
enum class RecoveryUpdate { kNone, kTeacher, kReplan, kPushInverse, kParseFail };
std::string_view recovery_update_name(RecoveryUpdate u);
RecoveryUpdate recovery_update_from_name(std::string_view name);

// Attempts allowed from a closed-loop failure at depth d: d + 3.
int recovery_budget(int depth);

struct RunOptions {
  StateFormat format = StateFormat::kNet;
  AbstainConfig abstain;
  ParseFailPolicy parse_fail_policy = ParseFailPolicy::kFallbackA;
  ReflectionRegime regime = ReflectionRegime::kRedacted;
  bool require_verified_line = false;
  RecoveryStart recovery_start = RecoveryStart::kHarvest;
  GenConfig gen;
};

Json to_json(const RunOptions& o);
RunOptions run_options_from_json(const Json& j);

// One prompt and its answer.
struct Exchange {
  std::string phase;  // main, reflect, reanswer, step
  int step = 0;
  std::string template_id;
  std::string template_version;
  std::string prompt_hash;
  std::string raw;
  Usage usage;  // transcripts only
  AgentFailure failure = AgentFailure::kNone;
  std::string message;
};

// One decision of a closed-loop or recovery episode.
struct StepRecord {
  int t = 1;
  std::string state_before;  // facelets
  int distance_before = 0;
  std::vector<Move> options;
  std::string raw;
  AnswerKind kind = AnswerKind::kParseFail;
  int choice = -1;
  bool fallback = false;   // parse failure answered with option A
  bool abstained = false;  // IDK
  std::optional<Move> chosen;  // move applied, if any
  int delta = 0;               // distance after minus distance before
  bool in_optimal = false;     // chosen option minimizes successor distance
  bool credited = false;       // in_optimal, not a fallback and not an abstention
  RecoveryUpdate update = RecoveryUpdate::kNone;
  std::string plan_after;  // recovery: plan after the update
  HaltReason halt = HaltReason::kNone;
};

struct EpisodeResult {
  std::string item_id;  // "{episode id}@{modality}[@{regime}]"
  std::string episode_id;
  Task task = Task::kMovePrediction;
  int depth = 0;
  int index = 0;
  Modality modality = Modality::kImageText;
  std::string agent;
  std::vector<Exchange> exchanges;
  AgentFailure failure = AgentFailure::kNone;  // first infrastructure failure

  // Single-answer tasks.
  ParsedAnswer answer;
  int gold_choice = -1;
  std::optional<bool> gold_yes;
  std::optional<FaceGrid> gold_grid;
  std::optional<std::array<MoveEffect, 4>> gold_effects;

  // Reflection.
  ReflectionRegime regime = ReflectionRegime::kRedacted;
  int initial_choice = -1;
  int final_choice = -1;

  // Closed loop and recovery.
  std::vector<StepRecord> steps;
  HaltReason halt = HaltReason::kNone;
  bool solved = false;
  int correct_steps = 0;
  ParseFailPolicy parse_fail_policy = ParseFailPolicy::kFallbackA;
  bool abstain_enabled = false;
  AbstainPolicy abstain_policy = AbstainPolicy::kTeacherOnAbstain;
  bool has_start = true;  // recovery: false when the source run never failed
  std::string start_facelets;
  int start_distance = 0;
  int budget = 0;
  int attempts = 0;

  bool infra_error() const { return failure != AgentFailure::kNone; }
  bool perfect() const { return correct_steps == depth && depth > 0; }
};

std::string item_id_for(const Episode& e, Modality m, ReflectionRegime regime);

// results.jsonl form: no usage or latency, so scripted runs are byte-stable.
Json to_json(const EpisodeResult& r);
EpisodeResult episode_result_from_json(const Json& j);
// transcripts.jsonl lines of one result.
std::vector<Json> transcript_lines(const EpisodeResult& r);

// Image shown with a prompt for a given state.
using ImageSource = std::function<ImageAttachment(const Episode&, const CubeState&)>;
ImageSource rendered_images();

struct RunContext {
  const DistanceOracle& oracle;
  RunOptions options;
  ImageSource images = rendered_images();
};

std::optional<CubeState> harvest_recovery_start(const EpisodeResult& closed_loop);
CubeState synthetic_recovery_start(const DistanceOracle& oracle, const Episode& e);

// Runs one item. Recovery items need the same agent's closed-loop result
// for the episode when starts are harvested. Throws Error(kConfigError)
// for a modality the task does not support.
EpisodeResult run_item(const RunContext& ctx, const Agent& agent, const Episode& e,
                       Modality modality, const EpisodeResult* closed_loop_source = nullptr);

// Runs items with up to agent.concurrency() in flight. on_done sees each
// result as it completes, in completion order; the returned vector is in
// input order.
struct WorkItem {
  const Episode* episode;
  Modality modality;
  const EpisodeResult* closed_loop_source = nullptr;
};
std::vector<EpisodeResult> run_items(const RunContext& ctx, const Agent& agent,
                                     const std::vector<WorkItem>& items,
                                     const std::function<void(const EpisodeResult&)>& on_done = {});

// Re-simulates a stored result by feeding its recorded answers back through
// the runner. Throws Error(kConsistencyError) naming the first difference.
void replay(const RunContext& ctx, const Episode& e, const EpisodeResult& stored,
            const EpisodeResult* closed_loop_source = nullptr);

// ---- run directories

// Append-only results.jsonl and transcripts.jsonl with resume support.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path dir);

  // Completed results keyed by (agent, item id). Results with
  // infrastructure failures are not complete and run again on resume.
  const std::map<std::pair<std::string, std::string>, EpisodeResult>& completed() const {
    return completed_;
  }
  void append(const EpisodeResult& r);
  // Rewrites both files holding `ordered`, in that order.
  void finalize(const std::vector<EpisodeResult>& ordered);

  static std::vector<EpisodeResult> load(const std::filesystem::path& results_file);

 private:
  std::filesystem::path dir_;
  std::map<std::pair<std::string, std::string>, EpisodeResult> completed_;
  std::map<std::pair<std::string, std::string>, std::vector<Json>> transcripts_;
};

}  // namespace cubeeval

#endif  // CUBEEVAL_RUNNER_HPP_
