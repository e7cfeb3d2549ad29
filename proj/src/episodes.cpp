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

#include "cubeeval/episodes.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"
#include "cubeeval/textgen.hpp"

namespace cubeeval {
namespace {

constexpr int kMaxCorruptionAttempts = 100;

int class_index(MoveEffect e) { return static_cast<int>(e); }

Rng shuffle_rng(const GenConfig& cfg, std::uint64_t seed) {
  return Rng(cfg.entropy_shuffle ? entropy_seed() : seed);
}

std::vector<Move> moves_except(const std::vector<Move>& excluded) {
  std::vector<Move> out;
  for (const Move& m : all_moves())
    if (std::find(excluded.begin(), excluded.end(), m) == excluded.end()) out.push_back(m);
  return out;
}

Scramble exact_scramble(const DistanceOracle& oracle, const GenConfig& cfg, int depth,
                        std::uint64_t seed) {
  return scramble(
      depth, seed, [&oracle](const CubeState& s) { return oracle.distance(s); },
      cfg.max_scramble_attempts);
}

Episode base_episode(Task task, int depth, int index, int regen, const Scramble& sc) {
  Episode e;
  e.task = task;
  e.depth = depth;
  e.index = index;
  e.scramble = sc.scramble;
  e.state = sc.state;
  e.meta.regen = regen;
  e.meta.scramble_attempt = sc.attempt;
  return e;
}

// Positions of `moves` after a seeded shuffle, returning the new slot of
// the first element.
int shuffle_options(std::vector<Move>& moves, Rng& rng) {
  const Move first = moves.front();
  rng.shuffle(moves);
  return static_cast<int>(std::find(moves.begin(), moves.end(), first) - moves.begin());
}

std::optional<MoveEffect> effect_from_name(std::string_view s) {
  for (MoveEffect e : {MoveEffect::kDecrease, MoveEffect::kNoChange, MoveEffect::kIncrease})
    if (move_effect_name(e) == s) return e;
  return std::nullopt;
}

Json gold_json(const Episode& e) {
  Json g = Json::object();
  switch (e.task) {
    case Task::kFaceRecon: g["grid"] = grid_to_json(*e.gold_grid); break;
    case Task::kVerification: g["answer"] = *e.gold_yes ? "Yes" : "No"; break;
    case Task::kMovePrediction:
    case Task::kReflection:
      g["letter"] = std::string(1, static_cast<char>('A' + e.gold_choice));
      g["move"] = e.options[static_cast<std::size_t>(e.gold_choice)].token();
      break;
    case Task::kClosedLoop:
    case Task::kRecovery:
      g["distance"] = e.depth;
      g["teacher_plan"] = format_moves(e.teacher_plan());
      g["step1_letter"] = std::string(1, static_cast<char>('A' + e.gold_choice));
      break;
    case Task::kMoveEffect: {
      Json labels = Json::array();
      for (MoveEffect m : *e.gold_effects) labels.push_back(std::string(move_effect_name(m)));
      g["labels"] = labels;
      break;
    }
  }
  return g;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kSchemaMismatch, what);
}

}  // namespace

Json grid_to_json(const FaceGrid& g) {
  Json out = Json::array();
  for (Color c : g) out.push_back(std::string(color_name(c)));
  return out;
}

FaceGrid grid_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 9)
    throw Error(ErrorCode::kSchemaMismatch, "grid must hold nine color names");
  FaceGrid g{};
  for (std::size_t i = 0; i < 9; ++i) {
    const auto c = color_from_name(j[i].get<std::string>());
    if (!c) throw Error(ErrorCode::kSchemaMismatch, "unknown color in grid");
    g[i] = *c;
  }
  return g;
}

Json to_json(const GenConfig& c) {
  Json j;
  j["extra_progress_distractor"] = c.extra_progress_distractor;
  j["entropy_shuffle"] = c.entropy_shuffle;
  j["max_scramble_attempts"] = c.max_scramble_attempts;
  j["qc_epsilon"] = c.qc_epsilon;
  j["qc_min_batch"] = c.qc_min_batch;
  j["qc_max_rounds"] = c.qc_max_rounds;
  return j;
}

GenConfig gen_config_from_json(const Json& j) {
  GenConfig c;
  c.extra_progress_distractor = j.value("extra_progress_distractor", c.extra_progress_distractor);
  c.entropy_shuffle = j.value("entropy_shuffle", c.entropy_shuffle);
  c.max_scramble_attempts = j.value("max_scramble_attempts", c.max_scramble_attempts);
  c.qc_epsilon = j.value("qc_epsilon", c.qc_epsilon);
  c.qc_min_batch = j.value("qc_min_batch", c.qc_min_batch);
  c.qc_max_rounds = j.value("qc_max_rounds", c.qc_max_rounds);
  return c;
}

Task seed_task(Task t) {
  if (t == Task::kReflection) return Task::kMovePrediction;
  if (t == Task::kRecovery) return Task::kClosedLoop;
  return t;
}

std::string_view corruption_name(Corruption c) {
  switch (c) {
    case Corruption::kNone: return "none";
    case Corruption::kTokenEdit: return "token_edit";
    case Corruption::kOneMove: return "one_move";
  }
  return "?";
}

std::string Episode::id() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return std::string(task_name(task)) + "-d" + std::to_string(depth) + "-" + buf;
}

int Episode::gold_slot() const {
  switch (task) {
    case Task::kMovePrediction:
    case Task::kReflection:
    case Task::kClosedLoop:
    case Task::kRecovery: return gold_choice;
    default: return -1;
  }
}

std::string image_ref_for(Task task, int depth, int index) {
  return "images/" + std::string(task_name(task)) + "_" + std::to_string(depth) + "_" +
         std::to_string(index) + ".png";
}

std::uint64_t episode_stream(Task task, int depth, int index, int regen, std::string_view purpose,
                             std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = derive_seed(static_cast<std::uint64_t>(index), purpose,
                                {static_cast<std::uint64_t>(seed_task(task)),
                                 static_cast<std::uint64_t>(depth),
                                 static_cast<std::uint64_t>(regen)});
  for (std::uint64_t k : keys) s = derive_seed(s, "key", {k});
  return s;
}

// ---- generators

Episode gen_face_recon(const DistanceOracle& oracle, const GenConfig& cfg, int depth, int index,
                       int regen) {
  const Task t = Task::kFaceRecon;
  Episode e = base_episode(
      t, depth, index, regen,
      exact_scramble(oracle, cfg, depth, episode_stream(t, depth, index, regen, "scramble")));
  e.image_ref = image_ref_for(t, depth, index);
  e.gold_grid = front_face_grid(e.state);
  return e;
}

Episode gen_verification(const DistanceOracle& oracle, const GenConfig& cfg, int depth,
                         int index, bool negative, Corruption mode, int regen) {
  const Task t = Task::kVerification;
  if (negative && mode == Corruption::kNone)
    throw Error(ErrorCode::kConfigError, "negative verification item needs a corruption mode");
  for (int attempt = 0; attempt < kMaxCorruptionAttempts; ++attempt) {
    Episode e = base_episode(
        t, depth, index, regen,
        exact_scramble(oracle, cfg, depth,
                       episode_stream(t, depth, index, regen, "scramble",
                                      {static_cast<std::uint64_t>(attempt)})));
    e.image_ref = image_ref_for(t, depth, index);
    const FaceGrid truth = front_face_grid(e.state);
    FaceGrid shown = truth;
    if (negative) {
      Rng rng(episode_stream(t, depth, index, regen, "corruption",
                             {static_cast<std::uint64_t>(attempt)}));
      e.meta.corruption = mode;
      if (mode == Corruption::kTokenEdit) {
        e.meta.edits = 1 + static_cast<int>(rng.uniform(3));
        std::vector<int> cells(9);
        std::iota(cells.begin(), cells.end(), 0);
        for (int cell : rng.sample(cells, static_cast<std::size_t>(e.meta.edits))) {
          std::vector<Color> others;
          for (Color c : kAllColors)
            if (c != truth[static_cast<std::size_t>(cell)]) others.push_back(c);
          shown[static_cast<std::size_t>(cell)] = others[rng.uniform(others.size())];
        }
      } else {
        std::vector<Move> visible;
        for (const Move& m : oracle.progress_set(e.state))
          if (front_face_grid(e.state.apply(m)) != truth) visible.push_back(m);
        if (visible.empty()) continue;
        const Move m = visible[rng.uniform(visible.size())];
        e.meta.corrupt_move = m;
        shown = front_face_grid(e.state.apply(m));
      }
    }
    e.shown_grid = shown;
    e.gold_yes = shown == truth;
    return e;
  }
  throw Error(ErrorCode::kCorruptionFailed,
              "no visible one-move corruption for verification item " + std::to_string(index));
}

Episode gen_move_prediction(const DistanceOracle& oracle, const GenConfig& cfg, int index,
                            int regen) {
  const Task t = Task::kMovePrediction;
  Episode e = base_episode(t, 1, index, regen,
                           exact_scramble(oracle, cfg, 1, episode_stream(t, 1, index, regen,
                                                                         "scramble")));
  e.image_ref = image_ref_for(t, 1, index);
  const Move gold = e.teacher_plan().front();
  Rng pick(episode_stream(t, 1, index, regen, "distractors"));
  std::vector<Move> options{gold};
  for (const Move& m : pick.sample(moves_except({gold}), 3)) options.push_back(m);
  Rng shuffle = shuffle_rng(cfg, episode_stream(t, 1, index, regen, "shuffle"));
  e.gold_choice = shuffle_options(options, shuffle);
  e.options = options;
  const std::vector<int> best = oracle.optimal_action_set(e.state, e.options);
  if (best != std::vector<int>{e.gold_choice} || !e.state.apply(gold).is_solved())
    throw Error(ErrorCode::kConsistencyError, "move prediction gold is not the unique solver");
  return e;
}

Episode gen_closed_loop(const DistanceOracle& oracle, const GenConfig& cfg, int depth, int index,
                        int regen) {
  const Task t = Task::kClosedLoop;
  if (depth < 1) throw Error(ErrorCode::kConfigError, "closed-loop depth must be at least 1");
  Episode e = base_episode(
      t, depth, index, regen,
      exact_scramble(oracle, cfg, depth, episode_stream(t, depth, index, regen, "scramble")));
  e.image_ref = image_ref_for(t, depth, index);
  const OptionSet step1 =
      gen_step_options(oracle, cfg, e, e.state, e.teacher_plan().front(), 1);
  e.options = step1.moves;
  e.gold_choice = step1.correct;
  e.meta.extra_progress = step1.extra_progress;
  return e;
}

void SlotLedger::record(const Episode& e) {
  const int slot = e.gold_slot();
  if (slot >= 0) ++gold_slots[static_cast<std::size_t>(slot)];
  ++items;
  if (e.gold_effects) {
    for (std::size_t k = 0; k < 4; ++k) {
      const int c = class_index((*e.gold_effects)[k]);
      ++slot_class[k][static_cast<std::size_t>(c)];
      ++class_total[static_cast<std::size_t>(c)];
    }
  }
}

double p2_hat(MoveEffect c, const SlotLedger& ledger) {
  return (ledger.feasible[static_cast<std::size_t>(class_index(c))] + 1.0) /
         (ledger.items + 2.0);
}

Episode gen_move_effect(const DistanceOracle& oracle, const GenConfig& cfg, int depth, int index,
                        const SlotLedger& ledger, int regen) {
  const Task t = Task::kMoveEffect;
  Episode e = base_episode(
      t, depth, index, regen,
      exact_scramble(oracle, cfg, depth, episode_stream(t, depth, index, regen, "scramble")));

  std::array<std::vector<Move>, 3> bucket;
  for (const Move& m : all_moves())
    bucket[static_cast<std::size_t>(class_index(oracle.move_effect_label(e.state, m)))].push_back(m);

  Rng pick(episode_stream(t, depth, index, regen, "distractors"));
  std::vector<Move> chosen;  // unplaced options
  std::vector<Move> present_pool;
  int present = 0;
  for (const auto& b : bucket) {
    if (b.empty()) continue;
    ++present;
    present_pool.insert(present_pool.end(), b.begin(), b.end());
  }

  std::array<std::optional<Move>, 4> slots;
  if (present == 3) {
    double p2_sum = 0;
    for (MoveEffect c : {MoveEffect::kDecrease, MoveEffect::kNoChange, MoveEffect::kIncrease})
      p2_sum += p2_hat(c, ledger);
    int doubled = -1;
    double best_gap = 0;
    for (int c = 0; c < 3; ++c) {
      if (bucket[static_cast<std::size_t>(c)].size() < 2) continue;
      const double target = 0.25 + 0.25 * p2_hat(static_cast<MoveEffect>(c), ledger) / p2_sum;
      const double observed =
          ledger.items ? ledger.class_total[static_cast<std::size_t>(c)] / (4.0 * ledger.items)
                       : 0.0;
      if (doubled < 0 || target - observed > best_gap) {
        doubled = c;
        best_gap = target - observed;
      }
    }
    for (const auto& b : bucket) chosen.push_back(b[pick.uniform(b.size())]);
    const auto& db = bucket[static_cast<std::size_t>(doubled)];
    std::vector<Move> rest;
    for (const Move& m : db)
      if (m != chosen[static_cast<std::size_t>(doubled)]) rest.push_back(m);
    const int slot = index % 4;
    slots[static_cast<std::size_t>(slot)] = rest[pick.uniform(rest.size())];
    e.meta.doubled = static_cast<MoveEffect>(doubled);
    e.meta.doubled_slot = slot;
  } else {
    e.meta.fallback = true;
    for (const auto& b : bucket)
      if (!b.empty()) chosen.push_back(b[pick.uniform(b.size())]);
    std::vector<Move> rest;
    for (const Move& m : present_pool)
      if (std::find(chosen.begin(), chosen.end(), m) == chosen.end()) rest.push_back(m);
    for (const Move& m : pick.sample(rest, 4 - chosen.size())) chosen.push_back(m);
  }

  // Greedy placement: the permutation of the free slots with the smallest
  // historical slot x class count; ties go to the first permutation.
  std::vector<int> free_slots;
  for (int k = 0; k < 4; ++k)
    if (!slots[static_cast<std::size_t>(k)]) free_slots.push_back(k);
  auto effect_of = [&](const Move& m) {
    for (int c = 0; c < 3; ++c) {
      const auto& b = bucket[static_cast<std::size_t>(c)];
      if (std::find(b.begin(), b.end(), m) != b.end()) return c;
    }
    return 0;
  };
  std::vector<int> perm(chosen.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm = perm;
  long best_cost = -1;
  do {
    long cost = 0;
    for (std::size_t k = 0; k < perm.size(); ++k)
      cost += ledger.slot_class[static_cast<std::size_t>(free_slots[k])]
                               [static_cast<std::size_t>(effect_of(chosen[static_cast<std::size_t>(perm[k])]))];
    if (best_cost < 0 || cost < best_cost) {
      best_cost = cost;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t k = 0; k < free_slots.size(); ++k)
    slots[static_cast<std::size_t>(free_slots[k])] = chosen[static_cast<std::size_t>(best_perm[k])];

  std::array<MoveEffect, 4> gold{};
  for (std::size_t k = 0; k < 4; ++k) {
    e.options.push_back(*slots[k]);
    gold[k] = oracle.move_effect_label(e.state, *slots[k]);
  }
  e.gold_effects = gold;
  return e;
}

OptionSet gen_step_options(const DistanceOracle& oracle, const GenConfig& cfg, const Episode& ep,
                           const CubeState& state, Move teacher, int step) {
  Rng pick(episode_stream(ep.task, ep.depth, ep.index, ep.meta.regen, "distractors",
                          {static_cast<std::uint64_t>(step)}));
  OptionSet out;
  out.moves = {teacher};
  if (cfg.extra_progress_distractor) {
    std::vector<Move> progress;
    for (const Move& m : oracle.progress_set(state))
      if (m != teacher) progress.push_back(m);
    if (!progress.empty()) {
      out.extra_progress = true;
      out.moves.push_back(progress[pick.uniform(progress.size())]);
      std::vector<Move> excluded = oracle.progress_set(state);
      excluded.push_back(teacher);
      std::vector<Move> rest = moves_except(excluded);
      for (const Move& m : pick.sample(rest, 2)) out.moves.push_back(m);
      if (out.moves.size() < 4)
        for (const Move& m : pick.sample(moves_except(out.moves), 4 - out.moves.size()))
          out.moves.push_back(m);
    }
  }
  if (!out.extra_progress)
    for (const Move& m : pick.sample(moves_except({teacher}), 3)) out.moves.push_back(m);
  Rng shuffle = shuffle_rng(cfg, episode_stream(ep.task, ep.depth, ep.index, ep.meta.regen,
                                                "shuffle", {static_cast<std::uint64_t>(step)}));
  out.correct = shuffle_options(out.moves, shuffle);
  return out;
}

OptionSet gen_recovery_options(const DistanceOracle& oracle, const GenConfig& cfg,
                               const Episode& ep, const CubeState& state, int attempt) {
  Rng pick(episode_stream(ep.task, ep.depth, ep.index, ep.meta.regen, "recovery-options",
                          {static_cast<std::uint64_t>(attempt)}));
  const std::vector<Move> progress = oracle.progress_set(state);
  const std::vector<Move> others = moves_except(progress);
  OptionSet out;
  if (!progress.empty() && others.size() >= 3) {
    out.moves.push_back(progress[pick.uniform(progress.size())]);
    for (const Move& m : pick.sample(others, 3)) out.moves.push_back(m);
  } else {
    out.fallback = true;
    const std::vector<Move> pool = progress.empty() ? moves_except({}) : progress;
    out.moves.push_back(pool[pick.uniform(pool.size())]);
    for (const Move& m : pick.sample(moves_except(out.moves), 3)) out.moves.push_back(m);
  }
  Rng shuffle = shuffle_rng(cfg, episode_stream(ep.task, ep.depth, ep.index, ep.meta.regen,
                                                "recovery-shuffle",
                                                {static_cast<std::uint64_t>(attempt)}));
  out.correct = shuffle_options(out.moves, shuffle);
  return out;
}

// ---- serialization

Json to_json(const Episode& e) {
  Json j;
  j["schema"] = kEpisodeSchemaVersion;
  j["id"] = e.id();
  j["task"] = task_name(e.task);
  j["depth"] = e.depth;
  j["index"] = e.index;
  j["regen"] = e.meta.regen;
  j["scramble"] = format_moves(e.scramble);
  j["teacher_plan"] = format_moves(e.teacher_plan());
  j["facelets"] = to_facelet_string(e.state);
  j["net_text"] = to_net_text(e.state);
  j["image"] = e.image_ref;
  Json options = Json::array();
  for (const Move& m : e.options) options.push_back(m.token());
  j["options"] = options;
  j["gold"] = gold_json(e);
  j["hypothesis"] = e.shown_grid ? grid_to_json(*e.shown_grid) : Json();
  Json meta;
  meta["corruption"] = corruption_name(e.meta.corruption);
  meta["edits"] = e.meta.edits;
  meta["corrupt_move"] = e.meta.corrupt_move ? Json(e.meta.corrupt_move->token()) : Json();
  meta["doubled_class"] = e.meta.doubled ? Json(move_effect_name(*e.meta.doubled)) : Json();
  meta["doubled_slot"] = e.meta.doubled_slot;
  meta["fallback"] = e.meta.fallback;
  meta["extra_progress"] = e.meta.extra_progress;
  meta["scramble_attempt"] = e.meta.scramble_attempt;
  j["meta"] = meta;
  j["generator"] = kGeneratorVersion;
  return j;
}

Episode episode_from_json(const Json& j) {
  try {
    require(j.value("schema", "") == kEpisodeSchemaVersion,
            "episode schema '" + j.value("schema", "") + "' is not " +
                std::string(kEpisodeSchemaVersion));
    require(j.value("generator", "") == kGeneratorVersion,
            "generator '" + j.value("generator", "") + "' is not " +
                std::string(kGeneratorVersion));
    Episode e;
    e.task = task_from_name(j.at("task").get<std::string>());
    e.depth = j.at("depth").get<int>();
    e.index = j.at("index").get<int>();
    e.meta.regen = j.at("regen").get<int>();
    e.scramble = parse_moves(j.at("scramble").get<std::string>());
    e.state = CubeState().apply(e.scramble);
    if (to_facelet_string(e.state) != j.at("facelets").get<std::string>())
      throw Error(ErrorCode::kConsistencyError, e.id() + ": facelets disagree with the scramble");
    e.image_ref = j.at("image").get<std::string>();
    for (const auto& tok : j.at("options")) e.options.push_back(parse_move(tok.get<std::string>()));
    const Json& g = j.at("gold");
    switch (e.task) {
      case Task::kFaceRecon: e.gold_grid = grid_from_json(g.at("grid")); break;
      case Task::kVerification: e.gold_yes = g.at("answer").get<std::string>() == "Yes"; break;
      case Task::kMovePrediction:
      case Task::kReflection:
        e.gold_choice = g.at("letter").get<std::string>().at(0) - 'A';
        break;
      case Task::kClosedLoop:
      case Task::kRecovery:
        e.gold_choice = g.at("step1_letter").get<std::string>().at(0) - 'A';
        break;
      case Task::kMoveEffect: {
        std::array<MoveEffect, 4> labels{};
        require(g.at("labels").size() == 4, "move effect needs four labels");
        for (std::size_t k = 0; k < 4; ++k) {
          const auto eff = effect_from_name(g.at("labels")[k].get<std::string>());
          require(eff.has_value(), "unknown move effect label");
          labels[k] = *eff;
        }
        e.gold_effects = labels;
        break;
      }
    }
    if (!j.at("hypothesis").is_null()) e.shown_grid = grid_from_json(j.at("hypothesis"));
    const Json& m = j.at("meta");
    const std::string corruption = m.at("corruption").get<std::string>();
    for (Corruption c : {Corruption::kNone, Corruption::kTokenEdit, Corruption::kOneMove})
      if (corruption_name(c) == corruption) e.meta.corruption = c;
    e.meta.edits = m.at("edits").get<int>();
    if (!m.at("corrupt_move").is_null())
      e.meta.corrupt_move = parse_move(m.at("corrupt_move").get<std::string>());
    if (!m.at("doubled_class").is_null())
      e.meta.doubled = effect_from_name(m.at("doubled_class").get<std::string>());
    e.meta.doubled_slot = m.at("doubled_slot").get<int>();
    e.meta.fallback = m.at("fallback").get<bool>();
    e.meta.extra_progress = m.at("extra_progress").get<bool>();
    e.meta.scramble_attempt = m.at("scramble_attempt").get<int>();
    return e;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("malformed episode: ") + ex.what());
  }
}

// ---- batches and QC

QcReport qc_batch(const std::vector<Episode>& episodes, const GenConfig& cfg) {
  QcReport r;
  const int n = static_cast<int>(episodes.size());
  bool has_slots = false;
  for (const Episode& e : episodes) {
    const int s = e.gold_slot();
    if (s >= 0) {
      has_slots = true;
      ++r.slot_counts[static_cast<std::size_t>(s)];
    }
  }

  std::set<int> regen;
  std::set<std::pair<std::string, std::string>> seen;
  for (int i = 0; i < n; ++i) {
    const Episode& e = episodes[static_cast<std::size_t>(i)];
    if (e.options.empty()) continue;
    auto key = std::make_pair(to_facelet_string(e.state), format_moves(e.options));
    if (!seen.insert(key).second) {
      ++r.duplicates;
      regen.insert(i);
    }
  }

  if (has_slots && n >= cfg.qc_min_batch) {
    r.applied = true;
    const double lo = 0.25 - cfg.qc_epsilon;
    const double hi = 0.25 + cfg.qc_epsilon;
    auto slot_items = [&](int slot) {
      std::vector<int> out;
      for (int i = n - 1; i >= 0; --i)
        if (episodes[static_cast<std::size_t>(i)].gold_slot() == slot) out.push_back(i);
      return out;
    };
    bool any_over = false;
    for (int s = 0; s < 4; ++s) {
      const int count = r.slot_counts[static_cast<std::size_t>(s)];
      if (count > hi * n) {
        any_over = true;
        const int keep = static_cast<int>(hi * n);
        const auto items = slot_items(s);
        for (int k = 0; k < count - keep; ++k) regen.insert(items[static_cast<std::size_t>(k)]);
      }
    }
    if (!any_over) {
      for (int s = 0; s < 4; ++s) {
        const int count = r.slot_counts[static_cast<std::size_t>(s)];
        if (count < lo * n) {
          const int need = static_cast<int>(std::ceil(lo * n)) - count;
          const int largest = static_cast<int>(
              std::max_element(r.slot_counts.begin(), r.slot_counts.end()) -
              r.slot_counts.begin());
          const auto items = slot_items(largest);
          for (int k = 0; k < need && k < static_cast<int>(items.size()); ++k)
            regen.insert(items[static_cast<std::size_t>(k)]);
        }
      }
    }
  }
  r.regenerate.assign(regen.begin(), regen.end());
  r.pass = r.regenerate.empty();
  return r;
}

namespace {

void check_batch_args(Task task, int depth, int count) {
  if (count < 0) throw Error(ErrorCode::kConfigError, "negative item count");
  if ((task == Task::kMovePrediction || task == Task::kReflection) && depth != 1)
    throw Error(ErrorCode::kConfigError, "move prediction items are defined at depth 1 only");
  if (task == Task::kVerification && count % 2 != 0)
    throw Error(ErrorCode::kConfigError, "verification batches need an even item count");
}

// Which item of each verification pair is the negative, and how it is
// corrupted; both are fixed by the index, never by the regeneration round.
std::pair<bool, Corruption> verification_plan(int depth, int index) {
  Rng pair(derive_seed(static_cast<std::uint64_t>(index / 2), "verification-pair",
                       {static_cast<std::uint64_t>(depth)}));
  const bool negative = static_cast<int>(pair.uniform(2)) == index % 2;
  Rng mode(derive_seed(static_cast<std::uint64_t>(index), "verification-mode",
                       {static_cast<std::uint64_t>(depth)}));
  return {negative, mode.bernoulli(0.5) ? Corruption::kTokenEdit : Corruption::kOneMove};
}

Episode build_one(const DistanceOracle& oracle, const GenConfig& cfg, Task task, int depth,
                  int index, int regen, const SlotLedger& ledger) {
  switch (task) {
    case Task::kFaceRecon: return gen_face_recon(oracle, cfg, depth, index, regen);
    case Task::kVerification: {
      const auto [negative, mode] = verification_plan(depth, index);
      return gen_verification(oracle, cfg, depth, index, negative,
                              negative ? mode : Corruption::kNone, regen);
    }
    case Task::kMovePrediction: return gen_move_prediction(oracle, cfg, index, regen);
    case Task::kReflection: {
      Episode e = gen_move_prediction(oracle, cfg, index, regen);
      e.task = Task::kReflection;
      e.image_ref = image_ref_for(task, depth, index);
      return e;
    }
    case Task::kClosedLoop: return gen_closed_loop(oracle, cfg, depth, index, regen);
    case Task::kRecovery: {
      Episode e = gen_closed_loop(oracle, cfg, depth, index, regen);
      e.task = Task::kRecovery;
      e.image_ref = image_ref_for(task, depth, index);
      return e;
    }
    case Task::kMoveEffect: return gen_move_effect(oracle, cfg, depth, index, ledger, regen);
  }
  throw Error(ErrorCode::kConfigError, "unknown task");
}

// Builds every item whose round changed (all items for ledger-driven tasks)
// and replays the ledger from scratch.
void build_batch(const DistanceOracle& oracle, const GenConfig& cfg, Batch& b,
                 const std::vector<int>& regen, const std::vector<int>& built_regen) {
  const bool sequential = b.task == Task::kMoveEffect;
  b.ledger = SlotLedger{};
  b.episodes.resize(regen.size());
  for (std::size_t i = 0; i < regen.size(); ++i) {
    if (sequential || i >= built_regen.size() || built_regen[i] != regen[i])
      b.episodes[i] =
          build_one(oracle, cfg, b.task, b.depth, static_cast<int>(i), regen[i], b.ledger);
    b.ledger.record(b.episodes[i]);
  }
}

}  // namespace

Batch generate_batch(const DistanceOracle& oracle, const GenConfig& cfg, Task task, int depth,
                     int count) {
  check_batch_args(task, depth, count);
  Batch b{task, depth, {}, {}, {}};
  std::vector<int> regen(static_cast<std::size_t>(count), 0);
  std::vector<int> built;
  for (int round = 1; round <= std::max(1, cfg.qc_max_rounds); ++round) {
    build_batch(oracle, cfg, b, regen, built);
    built = regen;
    b.qc = qc_batch(b.episodes, cfg);
    b.qc.rounds = round;
    if (b.qc.pass) return b;
    for (int i : b.qc.regenerate) ++regen[static_cast<std::size_t>(i)];
  }
  throw Error(ErrorCode::kQCUnsatisfiable,
              std::string(task_name(task)) + " d=" + std::to_string(depth) + ": QC failed after " +
                  std::to_string(cfg.qc_max_rounds) + " rounds");
}

Batch regenerate_batch(const DistanceOracle& oracle, const GenConfig& cfg, Task task, int depth,
                       const std::vector<int>& regen) {
  check_batch_args(task, depth, static_cast<int>(regen.size()));
  Batch b{task, depth, {}, {}, {}};
  build_batch(oracle, cfg, b, regen, {});
  b.qc = qc_batch(b.episodes, cfg);
  b.qc.rounds = 1 + *std::max_element(regen.begin(), regen.end());
  return b;
}

// ---- seed lists

SeedList seed_list_of(const std::vector<Batch>& batches, const GenConfig& cfg) {
  SeedList list;
  list.config = cfg;
  for (const Batch& b : batches)
    for (const Episode& e : b.episodes)
      list.entries.push_back(
          {e.task, e.depth, e.index, e.meta.regen, format_moves(e.scramble), gold_json(e)});
  return list;
}

void save_seed_list(const SeedList& list, const std::filesystem::path& path) {
  Json j;
  j["version"] = kSeedListVersion;
  j["generator"] = kGeneratorVersion;
  j["config"] = to_json(list.config);
  Json items = Json::array();
  for (const SeedEntry& s : list.entries) {
    Json item;
    item["task"] = task_name(s.task);
    item["depth"] = s.depth;
    item["index"] = s.index;
    item["seed"] = s.index;
    item["regen"] = s.regen;
    item["scramble"] = s.scramble;
    item["gold"] = s.gold;
    items.push_back(item);
  }
  j["items"] = items;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

SeedList load_seed_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "seed list " + path.string() + " not found");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::kSchemaMismatch, "seed list is not JSON: " + std::string(ex.what()));
  }
  const std::string version = j.is_object() ? j.value("version", "") : "";
  if (version != kSeedListVersion)
    throw Error(ErrorCode::kSchemaMismatch, "seed list version '" + version + "', expected '" +
                                                std::string(kSeedListVersion) + "'");
  const std::string generator = j.value("generator", "");
  if (generator != kGeneratorVersion)
    throw Error(ErrorCode::kSchemaMismatch, "seed list generator '" + generator + "', expected '" +
                                                std::string(kGeneratorVersion) + "'");
  SeedList list;
  try {
    list.config = gen_config_from_json(j.at("config"));
    for (const Json& item : j.at("items"))
      list.entries.push_back({task_from_name(item.at("task").get<std::string>()),
                              item.at("depth").get<int>(), item.at("index").get<int>(),
                              item.at("regen").get<int>(), item.at("scramble").get<std::string>(),
                              item.at("gold")});
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("malformed seed list: ") + ex.what());
  }
  return list;
}

std::vector<Batch> regenerate_from_seed_list(const DistanceOracle& oracle, const SeedList& list) {
  std::vector<std::pair<Task, int>> order;
  std::map<std::pair<Task, int>, std::vector<const SeedEntry*>> groups;
  for (const SeedEntry& s : list.entries) {
    const auto key = std::make_pair(s.task, s.depth);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&s);
  }
  std::vector<Batch> out;
  for (const auto& key : order) {
    const auto& entries = groups[key];
    std::vector<int> regen(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i]->index != static_cast<int>(i))
        throw Error(ErrorCode::kSchemaMismatch, "seed list indices must run 0..n-1 per batch");
      regen[i] = entries[i]->regen;
    }
    Batch b = regenerate_batch(oracle, list.config, key.first, key.second, regen);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const Episode& e = b.episodes[i];
      if (format_moves(e.scramble) != entries[i]->scramble || gold_json(e) != entries[i]->gold)
        throw Error(ErrorCode::kConsistencyError,
                    e.id() + ": regenerated item differs from the seed list");
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace cubeeval
