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

#include <filesystem>
#include <fstream>
#include <set>

#include "cubeeval/cubie.hpp"
#include "cubeeval/error.hpp"
#include "cubeeval/oracle.hpp"
#include "cubeeval/rng.hpp"
#include "doctest.h"
#include "support/bfs_oracle.hpp"

namespace cubeeval {
namespace {

using testing::BfsOracle;

OracleConfig test_config() {
  OracleConfig cfg;
  cfg.cache_dir = CUBEEVAL_TEST_CACHE_DIR;
  return cfg;
}

const DistanceOracle& oracle() { return *shared_oracle(test_config()); }

CubeState walk_state(Rng& rng, int length) {
  CubeState s;
  for (int i = 0; i < length; ++i)
    s = s.apply(Move::from_index(static_cast<int>(rng.uniform(Move::kCount))));
  return s;
}

TEST_CASE("oracle cache builds and reloads bit-identically") {
  const auto& o = oracle();
  const auto dir = std::filesystem::path(CUBEEVAL_TEST_CACHE_DIR);
  const auto pdb_path = dir / PatternDatabase::file_name(PatternDatabase::Pattern::corners());
  const auto ball_path = dir / DistanceBall::file_name(5);
  REQUIRE(std::filesystem::exists(pdb_path));
  REQUIRE(std::filesystem::exists(ball_path));
  CHECK(std::filesystem::file_size(pdb_path) == 16 + kCornerIndexCount);
  CHECK(std::filesystem::file_size(ball_path) == 16 + 17 * o.ball().size());
  const auto ball = DistanceBall::load(ball_path, 5);
  CHECK(ball.size() == o.ball().size());
  CHECK(std::equal(ball.entries().begin(), ball.entries().end(), o.ball().entries().begin(),
                   [](const auto& a, const auto& b) { return a.key == b.key && a.depth == b.depth; }));
}

TEST_CASE("ball matches the known FTM sphere sizes") {
  // Positions at exact distance 0..5 in the face turn metric.
  const std::uint64_t expected[] = {1, 18, 243, 3240, 43239, 574908};
  std::uint64_t counts[6] = {};
  for (const auto& e : oracle().ball().entries()) ++counts[e.depth];
  for (int d = 0; d <= 5; ++d) CHECK(counts[d] == expected[d]);
  CHECK(oracle().ball().size() == 621649);
}

TEST_CASE("corner pattern database is admissible on the ball and has depth 11") {
  const auto& o = oracle();
  for (const auto& e : o.ball().entries())
    CHECK_LE(o.corner_pdb().at(node_from_key(e.key).corner_index()), e.depth);
  int max_depth = 0;
  for (std::uint64_t i = 0; i < o.corner_pdb().size(); i += 997)
    max_depth = std::max<int>(max_depth, o.corner_pdb().at(i));
  CHECK(max_depth <= 11);
  CHECK(o.corner_pdb().at(0) == 0);
}

TEST_CASE("distance agrees with breadth-first search up to walk depth 5") {
  const auto& bfs = BfsOracle::instance();
  Rng rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    const CubeState s = walk_state(rng, static_cast<int>(rng.uniform(6)));
    const auto expected = bfs.distance(s);
    REQUIRE(expected.has_value());
    CHECK(oracle().distance(s) == *expected);
  }
  CHECK(oracle().distance(CubeState::solved()) == 0);
  CHECK(oracle().distance(CubeState::solved().apply(parse_move("R"))) == 1);
}

TEST_CASE("pattern-only search agrees with the ball") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const CubeState s = walk_state(rng, 1 + static_cast<int>(rng.uniform(5)));
    CHECK(oracle().search_distance(s).distance == oracle().distance(s));
  }
}

TEST_CASE("hybrid and pattern-only search agree beyond the ball") {
  Rng rng(5);
  int beyond = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const CubeState s = walk_state(rng, 6 + static_cast<int>(rng.uniform(2)));
    const int d = oracle().distance(s);
    if (d > 5) ++beyond;
    CHECK(oracle().search_distance(s).distance == d);
  }
  CHECK(beyond > 0);
}

TEST_CASE("triangle step holds for every move") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const CubeState s = walk_state(rng, static_cast<int>(rng.uniform(7)));
    const int d = oracle().distance(s);
    for (const Move& m : all_moves()) CHECK(std::abs(oracle().distance(s.apply(m)) - d) <= 1);
  }
}

TEST_CASE("solve_plan is shortest, deterministic and strictly descending") {
  CHECK(oracle().solve_plan(CubeState::solved()).moves.empty());
  const CubeState fu = CubeState::solved().apply(parse_moves("F U"));
  const Plan p = oracle().solve_plan(fu);
  CHECK(p.length() == 2);
  CHECK(fu.apply(p.moves).is_solved());
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    CubeState s = walk_state(rng, 1 + static_cast<int>(rng.uniform(7)));
    const Plan plan = oracle().solve_plan(s);
    CHECK(plan.length() == oracle().distance(s));
    CHECK(format_moves(plan.moves) == format_moves(oracle().solve_plan(s).moves));
    int d = plan.length();
    for (const Move& m : plan.moves) {
      s = s.apply(m);
      CHECK(oracle().distance(s) == --d);
    }
    CHECK(s.is_solved());
  }
}

TEST_CASE("solve_plan breaks ties by the fixed move order") {
  // U D commute, so U' D' and D' U' both solve; U-group moves come first.
  const Plan p = oracle().solve_plan(CubeState::solved().apply(parse_moves("D U")));
  CHECK(format_moves(p.moves) == "U' D'");
  CHECK(plan_move_order()[3] == parse_move("D"));
}

TEST_CASE("depth-4 scrambles have plans of length 4") {
  const auto& bfs = BfsOracle::instance();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scramble sc = scramble(4, seed, [](const CubeState& s) { return oracle().distance(s); });
    CHECK(bfs.distance(sc.state) == 4);
    CHECK(oracle().solve_plan(sc.state).length() == 4);
    CHECK(sc.state.apply(sc.teacher_plan).is_solved());
  }
}

TEST_CASE("progress set matches brute force and equals first moves of shortest plans") {
  const auto& bfs = BfsOracle::instance();
  CHECK(oracle().progress_set(CubeState::solved()).empty());
  const auto r = oracle().progress_set(CubeState::solved().apply(parse_move("R")));
  CHECK(std::find(r.begin(), r.end(), parse_move("R'")) != r.end());
  const Scramble sc = scramble(3, 11, [](const CubeState& s) { return oracle().distance(s); });
  Rng rng(8);
  std::vector<CubeState> states{sc.state};
  for (int i = 0; i < 30; ++i) states.push_back(walk_state(rng, 1 + static_cast<int>(rng.uniform(4))));
  for (const CubeState& s : states) {
    const int d = *bfs.distance(s);
    std::vector<Move> brute;
    for (const Move& m : all_moves()) {
      const CubeState c = s.apply(m);
      if (*bfs.distance(c) < d || c.is_solved()) brute.push_back(m);
    }
    CHECK(oracle().progress_set(s) == brute);
  }
}

TEST_CASE("optimal action set") {
  const CubeState s = CubeState::solved().apply(parse_move("R"));
  const std::vector<Move> opts = parse_moves("U R' F2 L");
  CHECK(oracle().optimal_action_set(s, opts) == std::vector<int>{1});
  const std::vector<Move> same = parse_moves("U U U U");
  CHECK(oracle().optimal_action_set(s, same) == std::vector<int>{0, 1, 2, 3});
  const auto& bfs = BfsOracle::instance();
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const CubeState q = walk_state(rng, static_cast<int>(rng.uniform(5)));
    std::vector<Move> o;
    for (int k = 0; k < 4; ++k) o.push_back(Move::from_index(static_cast<int>(rng.uniform(18))));
    std::vector<int> dist;
    for (const Move& m : o) dist.push_back(*bfs.distance(q.apply(m)));
    const int best = *std::min_element(dist.begin(), dist.end());
    std::vector<int> expected;
    for (int k = 0; k < 4; ++k)
      if (dist[k] == best) expected.push_back(k);
    CHECK(oracle().optimal_action_set(q, o) == expected);
  }
}

TEST_CASE("move effect labels follow the sign of the distance change") {
  const CubeState one = CubeState::solved().apply(parse_move("F"));
  CHECK(oracle().move_effect_label(one, parse_move("F'")) == MoveEffect::kDecrease);
  for (const Move& m : all_moves())
    CHECK(oracle().move_effect_label(CubeState::solved(), m) == MoveEffect::kIncrease);
  const auto& bfs = BfsOracle::instance();
  const Scramble sc = scramble(3, 2, [](const CubeState& s) { return oracle().distance(s); });
  for (const Move& m : all_moves()) {
    const int delta = *bfs.distance(sc.state.apply(m)) - 3;
    const MoveEffect want = delta < 0   ? MoveEffect::kDecrease
                            : delta == 0 ? MoveEffect::kNoChange
                                         : MoveEffect::kIncrease;
    CHECK(oracle().move_effect_label(sc.state, m) == want);
  }
}

TEST_CASE("scramble depths are exact for d in 0..7") {
  auto dist = [](const CubeState& s) { return oracle().distance(s); };
  for (int d = 0; d <= 7; ++d)
    for (std::uint64_t i = 0; i < 100; ++i) {
      const Scramble sc = scramble(d, i, dist);
      CHECK(sc.scramble.size() == static_cast<std::size_t>(d));
      if (d <= 5) CHECK(oracle().distance(sc.state) == d);
    }
  const Scramble a = scramble(3, 7, dist), b = scramble(3, 7, dist);
  CHECK(a.state == b.state);
  CHECK(a.scramble == b.scramble);
}

TEST_CASE("search budget is enforced") {
  OracleConfig cfg = test_config();
  cfg.node_budget = 10;
  const DistanceOracle tiny(cfg);
  Rng rng(1);
  CubeState far;
  do far = walk_state(rng, 12); while (tiny.ball().find(state_key(make_node(to_cubie(far)))));
  CHECK_THROWS_AS(tiny.distance(far), Error);
}

TEST_CASE("corrupt cache headers are rejected") {
  const auto dir = std::filesystem::path(CUBEEVAL_TEST_CACHE_DIR) / "corrupt";
  std::filesystem::create_directories(dir);
  const auto path = dir / DistanceBall::file_name(2);
  DistanceBall::build(2).save(path);
  CHECK(DistanceBall::load(path, 2).size() == 1 + 18 + 243);
  CHECK_THROWS_AS(DistanceBall::load(path, 3), Error);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(DistanceBall::load(path, 2), Error);
  // load_or_build recovers by rebuilding.
  CHECK(DistanceBall::load_or_build(dir, 2, true).size() == 262);
  CHECK(DistanceBall::load(path, 2).size() == 262);
}

TEST_CASE("edge pattern databases are admissible and keep the oracle exact") {
  const auto pattern = PatternDatabase::Pattern::edges(4, 0);
  const PatternDatabase db = PatternDatabase::build(pattern);
  CHECK(db.size() == 11880 * 16);
  for (std::uint64_t i = 0; i < db.size(); ++i) REQUIRE(db.at(i) != 0xFF);
  for (const auto& e : oracle().ball().entries())
    REQUIRE(db.lookup(node_from_key(e.key)) <= e.depth);
  OracleConfig cfg = test_config();
  cfg.edge_pdb_size = 4;
  const DistanceOracle with_edges(cfg);
  Rng rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const CubeState s = walk_state(rng, 7);
    CHECK(with_edges.search_distance(s).distance == oracle().distance(s));
  }
}

TEST_CASE("unreachable states are rejected") {
  auto st = CubeState::solved().stickers();
  std::swap(st[5], st[10]);
  CHECK_THROWS_AS(oracle().distance(CubeState::from_stickers(st)), Error);
}

}  // namespace
}  // namespace cubeeval
