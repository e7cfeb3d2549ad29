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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "cubeeval/episodes.hpp"
#include "cubeeval/error.hpp"
#include "cubeeval/textgen.hpp"
#include "doctest.h"
#include "support/bfs_oracle.hpp"
#include "support/shared_oracle.hpp"

namespace cubeeval {
namespace {

using testing::BfsOracle;
using testing::test_oracle;

int bfs(const CubeState& s) { return BfsOracle::instance().distance(s).value(); }

// Children beyond the BFS radius cannot be closer than a parent inside it.
std::vector<Move> bfs_progress(const CubeState& s) {
  std::vector<Move> out;
  const int d = bfs(s);
  for (const Move& m : all_moves()) {
    const auto c = BfsOracle::instance().distance(s.apply(m));
    if (c && *c < d) out.push_back(m);
  }
  return out;
}

bool contains(const std::vector<Move>& v, Move m) {
  return std::find(v.begin(), v.end(), m) != v.end();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kConfigError;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cubeeval-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const GenConfig kCfg;

TEST_CASE("face reconstruction items") {
  const DistanceOracle& o = test_oracle();
  for (int i = 0; i < 100; ++i) {
    const Episode e = gen_face_recon(o, kCfg, 3, i);
    CHECK(bfs(e.state) == 3);
    CHECK(e.state == CubeState().apply(e.scramble));
    CHECK(*e.gold_grid == e.state.face(Face::kF));
    CHECK(e.options.empty());
  }
  const Episode a = gen_face_recon(o, kCfg, 1, 0);
  const Episode b = gen_face_recon(o, kCfg, 1, 0);
  CHECK(to_json(a) == to_json(b));
  CHECK(a.id() == "face_recon-d1-0000");
  CHECK(a.image_ref == "images/face_recon_1_0.png");
  CHECK(code_of([&] { gen_face_recon(o, kCfg, 99, 0); }) == ErrorCode::kDepthUnachievable);
}

int mismatches(const FaceGrid& a, const FaceGrid& b) {
  int n = 0;
  for (std::size_t i = 0; i < 9; ++i) n += a[i] != b[i];
  return n;
}

TEST_CASE("verification items") {
  const DistanceOracle& o = test_oracle();
  const Episode pos = gen_verification(o, kCfg, 5, 0, false, Corruption::kNone);
  CHECK(*pos.gold_yes);
  CHECK(*pos.shown_grid == front_face_grid(pos.state));
  CHECK(bfs(pos.state) == 5);

  for (int i = 0; i < 30; ++i) {
    const Episode e = gen_verification(o, kCfg, 5, i, true, Corruption::kTokenEdit);
    CHECK_FALSE(*e.gold_yes);
    CHECK(e.meta.edits >= 1);
    CHECK(e.meta.edits <= 3);
    CHECK(mismatches(*e.shown_grid, front_face_grid(e.state)) == e.meta.edits);

    const Episode m = gen_verification(o, kCfg, 5, i, true, Corruption::kOneMove);
    CHECK_FALSE(*m.gold_yes);
    REQUIRE(m.meta.corrupt_move);
    CHECK(*m.shown_grid == front_face_grid(m.state.apply(*m.meta.corrupt_move)));
    CHECK(contains(bfs_progress(m.state), *m.meta.corrupt_move));
  }

  const Batch batch = generate_batch(o, kCfg, Task::kVerification, 5, 200);
  int yes = 0, token = 0, one = 0;
  for (const Episode& e : batch.episodes) {
    yes += *e.gold_yes;
    token += e.meta.corruption == Corruption::kTokenEdit;
    one += e.meta.corruption == Corruption::kOneMove;
  }
  CHECK(yes == 100);
  CHECK(token + one == 100);
  CHECK(token > 30);
  CHECK(one > 30);
  CHECK(code_of([&] { generate_batch(o, kCfg, Task::kVerification, 5, 3); }) ==
        ErrorCode::kConfigError);
}

TEST_CASE("move prediction items") {
  const DistanceOracle& o = test_oracle();
  for (int i = 0; i < 50; ++i) {
    const Episode e = gen_move_prediction(o, kCfg, i);
    REQUIRE(e.options.size() == 4);
    CHECK(std::set<Move>(e.options.begin(), e.options.end()).size() == 4);
    for (int k = 0; k < 4; ++k)
      CHECK(e.state.apply(e.options[static_cast<std::size_t>(k)]).is_solved() ==
            (k == e.gold_choice));
  }
  CHECK(to_json(gen_move_prediction(o, kCfg, 7)) == to_json(gen_move_prediction(o, kCfg, 7)));

  const Batch batch = generate_batch(o, kCfg, Task::kMovePrediction, 1, 400);
  CHECK(batch.qc.applied);
  CHECK(batch.qc.pass);
  for (int s = 0; s < 4; ++s) {
    const double f = batch.qc.slot_counts[static_cast<std::size_t>(s)] / 400.0;
    CHECK(f >= 0.20);
    CHECK(f <= 0.30);
  }
  const Batch small = generate_batch(o, kCfg, Task::kMovePrediction, 1, 40);
  const Batch reflection = generate_batch(o, kCfg, Task::kReflection, 1, 40);
  for (int i = 0; i < 40; ++i) {
    CHECK(reflection.episodes[static_cast<std::size_t>(i)].scramble ==
          small.episodes[static_cast<std::size_t>(i)].scramble);
  }
  CHECK(code_of([&] { generate_batch(o, kCfg, Task::kMovePrediction, 2, 4); }) ==
        ErrorCode::kConfigError);
}

TEST_CASE("p2_hat") {
  SlotLedger ledger;
  CHECK(p2_hat(MoveEffect::kNoChange, ledger) == 0.5);
  ledger.items = 4;
  ledger.feasible[0] = 3;
  CHECK(p2_hat(MoveEffect::kDecrease, ledger) == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("move effect items") {
  const DistanceOracle& o = test_oracle();
  const Batch batch = generate_batch(o, kCfg, Task::kMoveEffect, 2, 200);
  SlotLedger replay;
  for (std::size_t i = 0; i < batch.episodes.size(); ++i) {
    const Episode& e = batch.episodes[i];
    replay.record(e);
    REQUIRE(e.options.size() == 4);
    CHECK(std::set<Move>(e.options.begin(), e.options.end()).size() == 4);
    const int d = bfs(e.state);
    for (std::size_t k = 0; k < 4; ++k) {
      const CubeState c = e.state.apply(e.options[k]);
      const int delta = bfs(c) - d;
      const MoveEffect want = (delta < 0 || c.is_solved()) ? MoveEffect::kDecrease
                              : delta == 0                 ? MoveEffect::kNoChange
                                                           : MoveEffect::kIncrease;
      CHECK((*e.gold_effects)[k] == want);
    }
    if (!e.meta.fallback) {
      CHECK(e.meta.doubled_slot == static_cast<int>(i % 4));
      CHECK((*e.gold_effects)[static_cast<std::size_t>(e.meta.doubled_slot)] == *e.meta.doubled);
      std::set<MoveEffect> classes(e.gold_effects->begin(), e.gold_effects->end());
      CHECK(classes.size() == 3);
    }
  }
  CHECK(replay == batch.ledger);

  // Each class spread over the four slots within 10% of flat.
  for (std::size_t c = 0; c < 3; ++c) {
    const double flat = batch.ledger.class_total[c] / 4.0;
    for (std::size_t s = 0; s < 4; ++s) {
      CHECK(batch.ledger.slot_class[s][c] >= 0.9 * flat);
      CHECK(batch.ledger.slot_class[s][c] <= 1.1 * flat);
    }
  }

  const Episode solved = gen_move_effect(o, kCfg, 0, 0, SlotLedger{});
  CHECK(solved.meta.fallback);
  for (MoveEffect m : *solved.gold_effects) CHECK(m == MoveEffect::kIncrease);
}

TEST_CASE("step options") {
  const DistanceOracle& o = test_oracle();
  for (int i = 0; i < 40; ++i) {
    const Episode e = gen_closed_loop(o, kCfg, 3, i);
    const Move teacher = e.teacher_plan().front();
    for (int t = 1; t <= 3; ++t) {
      const OptionSet a = gen_step_options(o, kCfg, e, e.state, teacher, t);
      const OptionSet b = gen_step_options(o, kCfg, e, e.state, teacher, t);
      CHECK(a.moves == b.moves);
      CHECK(std::count(a.moves.begin(), a.moves.end(), teacher) == 1);
      CHECK(a.moves[static_cast<std::size_t>(a.correct)] == teacher);
      CHECK(std::set<Move>(a.moves.begin(), a.moves.end()).size() == 4);
    }
    const OptionSet first = gen_step_options(o, kCfg, e, e.state, teacher, 1);
    CHECK(first.moves == e.options);
    CHECK(first.correct == e.gold_choice);

    GenConfig extra = kCfg;
    extra.extra_progress_distractor = true;
    const OptionSet x = gen_step_options(o, extra, e, e.state, teacher, 1);
    const auto progress = bfs_progress(e.state);
    int progress_options = 0;
    for (const Move& m : x.moves) progress_options += contains(progress, m);
    CHECK(progress_options == (progress.size() > 1 ? 2 : 1));
    CHECK(x.extra_progress == (progress.size() > 1));
  }
}

TEST_CASE("recovery options") {
  const DistanceOracle& o = test_oracle();
  int canonical = 0;
  for (int i = 0; i < 100; ++i) {
    const Episode e = gen_closed_loop(o, kCfg, 1 + i % 4, i);
    const OptionSet opts = gen_recovery_options(o, kCfg, e, e.state, 1);
    CHECK(std::set<Move>(opts.moves.begin(), opts.moves.end()).size() == 4);
    if (opts.fallback) continue;
    ++canonical;
    const auto progress = bfs_progress(e.state);
    int n = 0;
    for (const Move& m : opts.moves) n += contains(progress, m);
    CHECK(n == 1);
    CHECK(contains(progress, opts.moves[static_cast<std::size_t>(opts.correct)]));
  }
  CHECK(canonical == 100);

  Episode e = gen_closed_loop(o, kCfg, 1, 0);
  const OptionSet degenerate = gen_recovery_options(o, kCfg, e, CubeState(), 1);
  CHECK(degenerate.fallback);
  CHECK(std::set<Move>(degenerate.moves.begin(), degenerate.moves.end()).size() == 4);
}

TEST_CASE("qc_batch") {
  const DistanceOracle& o = test_oracle();
  std::vector<Episode> batch;
  for (int i = 0; i < 40; ++i) {
    Episode e = gen_move_prediction(o, kCfg, i);
    // Rotate the gold into slot A.
    std::swap(e.options[0], e.options[static_cast<std::size_t>(e.gold_choice)]);
    e.gold_choice = 0;
    batch.push_back(e);
  }
  QcReport r = qc_batch(batch, kCfg);
  CHECK(r.applied);
  CHECK_FALSE(r.pass);
  CHECK(r.regenerate.size() >= 20);

  for (int i = 0; i < 40; ++i) {
    Episode& e = batch[static_cast<std::size_t>(i)];
    std::swap(e.options[0], e.options[static_cast<std::size_t>(i % 4)]);
    e.gold_choice = i % 4;
  }
  r = qc_batch(batch, kCfg);
  CHECK(r.pass);
  CHECK(r.slot_counts == std::array<int, 4>{10, 10, 10, 10});

  batch.push_back(batch[0]);
  batch.push_back(batch[1]);
  batch.push_back(batch[2]);
  batch.push_back(batch[3]);
  r = qc_batch(batch, kCfg);
  CHECK(r.duplicates == 4);
  CHECK(r.regenerate == std::vector<int>{40, 41, 42, 43});

  std::vector<Episode> small(batch.begin(), batch.begin() + 8);
  CHECK_FALSE(qc_batch(small, kCfg).applied);
}

TEST_CASE("closed-loop batch QC balances the step-1 teacher slot") {
  const Batch b = generate_batch(test_oracle(), kCfg, Task::kClosedLoop, 3, 50);
  CHECK(b.qc.applied);
  CHECK(b.qc.pass);
  for (int c : b.qc.slot_counts) {
    CHECK(c >= 10);
    CHECK(c <= 15);
  }
}

TEST_CASE("episode JSON round-trip") {
  const DistanceOracle& o = test_oracle();
  std::vector<Episode> all;
  all.push_back(gen_face_recon(o, kCfg, 2, 3));
  all.push_back(gen_verification(o, kCfg, 5, 1, true, Corruption::kOneMove));
  all.push_back(gen_verification(o, kCfg, 5, 2, true, Corruption::kTokenEdit));
  all.push_back(gen_move_prediction(o, kCfg, 4));
  all.push_back(gen_closed_loop(o, kCfg, 4, 4));
  all.push_back(gen_move_effect(o, kCfg, 3, 5, SlotLedger{}));
  for (const Episode& e : all) {
    const Json j = to_json(e);
    const Episode back = episode_from_json(Json::parse(j.dump()));
    CHECK(to_json(back) == j);
  }
  Json bad = to_json(all[0]);
  bad["facelets"] = to_facelet_string(CubeState());
  CHECK(code_of([&] { episode_from_json(bad); }) == ErrorCode::kConsistencyError);
  bad = to_json(all[0]);
  bad["schema"] = "cubeeval-episode/0";
  CHECK(code_of([&] { episode_from_json(bad); }) == ErrorCode::kSchemaMismatch);
}

TEST_CASE("seed lists") {
  const DistanceOracle& o = test_oracle();
  std::vector<Batch> batches;
  batches.push_back(generate_batch(o, kCfg, Task::kMovePrediction, 1, 40));
  batches.push_back(generate_batch(o, kCfg, Task::kMoveEffect, 1, 24));
  batches.push_back(generate_batch(o, kCfg, Task::kVerification, 5, 10));
  const auto dir = temp_dir("seeds");
  save_seed_list(seed_list_of(batches, kCfg), dir / "seed_lists.json");
  const SeedList loaded = load_seed_list(dir / "seed_lists.json");
  const auto again = regenerate_from_seed_list(o, loaded);
  REQUIRE(again.size() == batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    REQUIRE(again[b].episodes.size() == batches[b].episodes.size());
    for (std::size_t i = 0; i < batches[b].episodes.size(); ++i)
      CHECK(to_json(again[b].episodes[i]).dump() == to_json(batches[b].episodes[i]).dump());
    CHECK(again[b].ledger == batches[b].ledger);
  }

  CHECK(code_of([&] { load_seed_list(dir / "missing.json"); }) == ErrorCode::kIoError);
  {
    std::ofstream out(dir / "foreign.json");
    out << R"({"version": "cubeeval-seeds/0", "items": []})";
  }
  CHECK(code_of([&] { load_seed_list(dir / "foreign.json"); }) == ErrorCode::kSchemaMismatch);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace cubeeval
