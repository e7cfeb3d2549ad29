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

// Exact face-turn-metric distance oracle.
//
// Two tiers: states within the BFS ball are answered by lookup; anything
// further out runs IDA* whose heuristic is the max of the corner pattern
// database, any configured edge databases, and the ball itself (a node
// outside the ball is at least radius + 1 away; a node inside it is known
// exactly and ends the search).

#ifndef CUBEEVAL_ORACLE_HPP_
#define CUBEEVAL_ORACLE_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cubeeval/cube.hpp"
#include "cubeeval/pdb.hpp"

namespace cubeeval {

struct OracleConfig {
  int ball_radius = 5;
  // Edges tracked by each of the two optional edge databases; 0 disables.
  int edge_pdb_size = 0;
  std::uint64_t node_budget = 100'000'000;
  std::size_t memo_capacity = 1 << 22;  // searched distances kept; 0 disables
  std::filesystem::path cache_dir;  // empty: default_cache_dir()
  bool persist = true;              // read and write cache files
};

// $CUBEEVAL_CACHE_DIR if set, else ".cubeeval-cache" under the working
// directory.
std::filesystem::path default_cache_dir();

enum class MoveEffect { kDecrease, kNoChange, kIncrease };

std::string_view move_effect_name(MoveEffect e);  // DECREASE NO_CHANGE INCREASE

struct Plan {
  MoveSeq moves;
  int length() const { return static_cast<int>(moves.size()); }
};

// Order in which plans break ties between equally short continuations.
const std::array<Move, Move::kCount>& plan_move_order();

class DistanceOracle {
 public:
  explicit DistanceOracle(OracleConfig config = {});
  ~DistanceOracle();
  DistanceOracle(DistanceOracle&&) noexcept;

  const OracleConfig& config() const { return config_; }
  const DistanceBall& ball() const { return ball_; }
  const PatternDatabase& corner_pdb() const { return corner_pdb_; }
  const std::vector<PatternDatabase>& edge_pdbs() const { return edge_pdbs_; }

  // Throws Error(kInvalidState) for unreachable sticker layouts and
  // Error(kSearchBudgetExceeded) when the node budget runs out.
  int distance(const CubeState& s) const;
  int distance(const SearchNode& n) const;

  struct SearchStats {
    int distance = 0;
    std::uint64_t nodes = 0;
  };
  // IDA* guided by the pattern databases only; never consults the ball.
  // Used to cross-check the two tiers. A zero budget means the configured
  // one.
  SearchStats search_distance(const CubeState& s, std::uint64_t node_budget = 0) const;

  // Admissible lower bound from the pattern databases.
  int heuristic(const SearchNode& n) const;

  Plan solve_plan(const CubeState& s) const;
  // Moves m with distance(m(s)) < distance(s); empty at solved.
  std::vector<Move> progress_set(const CubeState& s) const;
  // Indices of options whose successor distance is minimal.
  std::vector<int> optimal_action_set(const CubeState& s, const std::vector<Move>& options) const;
  MoveEffect move_effect_label(const CubeState& s, Move m) const;

 private:
  struct Search;
  int run_search(const SearchNode& root, bool use_ball, std::uint64_t budget,
                 std::uint64_t* nodes) const;
  // Whether the distance is at most `bound`; one bounded pass, no deepening.
  bool at_most(const SearchNode& n, int bound) const;
  // Distance of a neighbour of a state at distance d: d-1, d or d+1.
  int neighbour_distance(const SearchNode& n, int d) const;

  // Exact distances found by search, shared across queries.
  struct Memo;

  OracleConfig config_;
  std::unique_ptr<Memo> memo_;
  DistanceBall ball_;
  PatternDatabase corner_pdb_;
  std::vector<PatternDatabase> edge_pdbs_;
};

// Shared oracle for the given configuration; built on first request.
std::shared_ptr<const DistanceOracle> shared_oracle(const OracleConfig& config = {});

}  // namespace cubeeval

#endif  // CUBEEVAL_ORACLE_HPP_
