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

// Seeded task items. Every episode is a pure function of (task, depth,
// index, regeneration round, generator config); gold labels are always
// recomputed from the scramble and the oracle, never stored-only truth.
//
// Random substreams are derived from the episode index, used as the seed,
// with a purpose string and the (task, depth, round) keys.
// Reflection items are the move-prediction items, and recovery items are the
// closed-loop items, so those pairs share seeds.

#ifndef CUBEEVAL_EPISODES_HPP_
#define CUBEEVAL_EPISODES_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cubeeval/cube.hpp"
#include "cubeeval/oracle.hpp"
#include "cubeeval/task.hpp"
#include "json.hpp"

namespace cubeeval {

inline constexpr std::string_view kGeneratorVersion = "cubeeval-gen/1";
inline constexpr std::string_view kSeedListVersion = "cubeeval-seeds/1";
inline constexpr std::string_view kEpisodeSchemaVersion = "cubeeval-episode/1";

using Json = nlohmann::ordered_json;

struct GenConfig {
  // Closed-loop steps: add one more progress move when one exists.
  bool extra_progress_distractor = false;
  // Shuffle option letters from the OS entropy source instead of the seeded
  // stream. Breaks byte-level reproducibility.
  bool entropy_shuffle = false;
  int max_scramble_attempts = 10000;
  double qc_epsilon = 0.05;
  int qc_min_batch = 40;
  int qc_max_rounds = 50;
};

Json to_json(const GenConfig& c);
GenConfig gen_config_from_json(const Json& j);

// Nine color names, row-major.
Json grid_to_json(const FaceGrid& g);
FaceGrid grid_from_json(const Json& j);  // throws Error(kSchemaMismatch)

// Tasks whose items reuse another task's seeds.
Task seed_task(Task t);

enum class Corruption { kNone, kTokenEdit, kOneMove };
std::string_view corruption_name(Corruption c);

struct EpisodeMeta {
  Corruption corruption = Corruption::kNone;
  int edits = 0;                      // token_edit: cells changed
  std::optional<Move> corrupt_move;   // one_move: move applied to the text
  std::optional<MoveEffect> doubled;  // move effect: class holding two options
  int doubled_slot = -1;
  bool fallback = false;              // move effect: fewer than three classes
  bool extra_progress = false;        // closed loop step 1 carried a progress distractor
  int regen = 0;                      // QC regeneration round
  int scramble_attempt = 0;
};

struct Episode {
  Task task = Task::kMovePrediction;
  int depth = 0;
  int index = 0;
  MoveSeq scramble;
  CubeState state;  // scramble applied to solved
  std::string image_ref;
  // MCQ options; for closed-loop items, the step-1 options.
  std::vector<Move> options;

  int gold_choice = -1;                            // move prediction, reflection
  std::optional<bool> gold_yes;                    // verification
  std::optional<FaceGrid> shown_grid;              // verification text hypothesis
  std::optional<FaceGrid> gold_grid;               // face reconstruction
  std::optional<std::array<MoveEffect, 4>> gold_effects;  // move effect
  EpisodeMeta meta;

  // "{task}-d{depth}-{index:04}"
  std::string id() const;
  MoveSeq teacher_plan() const { return invert(scramble); }
  // Slot of the gold option for letter-balance QC; -1 when not applicable.
  int gold_slot() const;
};

// "images/{task}_{depth}_{index}.png"
std::string image_ref_for(Task task, int depth, int index);

// Seed of one random substream of an episode.
std::uint64_t episode_stream(Task task, int depth, int index, int regen, std::string_view purpose,
                             std::initializer_list<std::uint64_t> keys = {});

Json to_json(const Episode& e);
// Rebuilds the state from the scramble and checks it against the stored
// facelets; throws Error(kSchemaMismatch) or Error(kConsistencyError).
Episode episode_from_json(const Json& j);

// ---- generators

Episode gen_face_recon(const DistanceOracle& oracle, const GenConfig& cfg, int depth, int index,
                       int regen = 0);
// Negatives fail with Error(kCorruptionFailed) only if no sub-seed yields a
// state whose front face some progress move changes.
Episode gen_verification(const DistanceOracle& oracle, const GenConfig& cfg, int depth,
                         int index, bool negative, Corruption mode, int regen = 0);
Episode gen_move_prediction(const DistanceOracle& oracle, const GenConfig& cfg, int index,
                            int regen = 0);
Episode gen_closed_loop(const DistanceOracle& oracle, const GenConfig& cfg, int depth, int index,
                        int regen = 0);

// Running counts that steer option placement and feed QC.
struct SlotLedger {
  std::array<int, 4> gold_slots{};
  // Move effect, indexed [slot][class].
  std::array<std::array<int, 3>, 4> slot_class{};
  std::array<int, 3> class_total{};
  std::array<int, 3> feasible{};  // items whose bucket for the class held >= 2 moves
  int items = 0;

  void record(const Episode& e);
  friend bool operator==(const SlotLedger&, const SlotLedger&) = default;
};

// (feasible(c) + 1) / (items + 2).
double p2_hat(MoveEffect c, const SlotLedger& ledger);

Episode gen_move_effect(const DistanceOracle& oracle, const GenConfig& cfg, int depth, int index,
                        const SlotLedger& ledger, int regen = 0);

struct OptionSet {
  std::vector<Move> moves;
  bool fallback = false;        // recovery: canonical construction infeasible
  bool extra_progress = false;  // step options: progress distractor included
  int correct = -1;             // slot of the teacher or the progress option
};

// Teacher move plus three distinct other moves, shuffled by a stream keyed
// by (episode, step). With extra_progress_distractor one of the three is a
// progress move when the state has one besides the teacher.
OptionSet gen_step_options(const DistanceOracle& oracle, const GenConfig& cfg, const Episode& ep,
                           const CubeState& state, Move teacher, int step);
// One progress move and three non-progress moves when possible; otherwise
// three others drawn from all moves but the progress one.
OptionSet gen_recovery_options(const DistanceOracle& oracle, const GenConfig& cfg,
                               const Episode& ep, const CubeState& state, int attempt);

// ---- batches and QC

struct QcReport {
  bool applied = false;  // false below the minimum batch size
  bool pass = true;
  int rounds = 0;
  std::array<int, 4> slot_counts{};
  int duplicates = 0;
  std::vector<int> regenerate;  // positions in the batch
};

// Pass iff every gold slot frequency is within 0.25 +- epsilon and no two
// items share (facelets, option tokens in slot order).
QcReport qc_batch(const std::vector<Episode>& episodes, const GenConfig& cfg);

struct Batch {
  Task task;
  int depth;
  std::vector<Episode> episodes;
  SlotLedger ledger;
  QcReport qc;
};

// Generates items 0..count-1 and regenerates QC failures with fresh rounds.
// Throws Error(kQCUnsatisfiable) when the round budget runs out.
Batch generate_batch(const DistanceOracle& oracle, const GenConfig& cfg, Task task, int depth,
                     int count);
// Rebuilds a batch from per-index regeneration rounds, without QC retries.
Batch regenerate_batch(const DistanceOracle& oracle, const GenConfig& cfg, Task task, int depth,
                       const std::vector<int>& regen);

// ---- seed lists

struct SeedEntry {
  Task task;
  int depth;
  int index;
  int regen;
  std::string scramble;
  Json gold;
};

struct SeedList {
  GenConfig config;
  std::vector<SeedEntry> entries;
};

SeedList seed_list_of(const std::vector<Batch>& batches, const GenConfig& cfg);
void save_seed_list(const SeedList& list, const std::filesystem::path& path);
// Throws Error(kIoError) if missing, Error(kSchemaMismatch) on a foreign
// version.
SeedList load_seed_list(const std::filesystem::path& path);
std::vector<Batch> regenerate_from_seed_list(const DistanceOracle& oracle, const SeedList& list);

}  // namespace cubeeval

#endif  // CUBEEVAL_EPISODES_HPP_
