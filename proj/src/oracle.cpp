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

#include "cubeeval/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>
#include <unordered_map>

#include "cubeeval/cubie.hpp"
#include "cubeeval/error.hpp"

namespace cubeeval {
namespace {

constexpr int kInfinity = std::numeric_limits<int>::max();

int face_of(int move_index) { return move_index / 3; }

// Skips a second turn of the same face, and fixes the order of commuting
// opposite-face pairs so each is explored once.
bool pruned(int move_index, int last_face) {
  if (last_face < 0) return false;
  const int f = face_of(move_index);
  if (f == last_face) return true;
  return f == static_cast<int>(opposite(static_cast<Face>(last_face))) && f < last_face;
}

SearchNode node_of(const CubeState& s) { return make_node(to_cubie(s)); }

}  // namespace

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("CUBEEVAL_CACHE_DIR"); env && *env) return env;
  return ".cubeeval-cache";
}

std::string_view move_effect_name(MoveEffect e) {
  switch (e) {
    case MoveEffect::kDecrease: return "DECREASE";
    case MoveEffect::kNoChange: return "NO_CHANGE";
    case MoveEffect::kIncrease: return "INCREASE";
  }
  return "?";
}

const std::array<Move, Move::kCount>& plan_move_order() {
  static const auto order = [] {
    std::array<Move, Move::kCount> out{};
    const Face faces[] = {Face::kU, Face::kD, Face::kR, Face::kL, Face::kF, Face::kB};
    int k = 0;
    for (Face f : faces)
      for (Turn t : {Turn::kClockwise, Turn::kCounterClockwise, Turn::kHalf})
        out[k++] = Move{f, t};
    return out;
  }();
  return order;
}

struct DistanceOracle::Memo {
  std::mutex mu;
  std::unordered_map<StateKey, std::uint8_t, StateKeyHash> table;
};

DistanceOracle::~DistanceOracle() = default;
DistanceOracle::DistanceOracle(DistanceOracle&&) noexcept = default;

DistanceOracle::DistanceOracle(OracleConfig config)
    : config_(std::move(config)), memo_(std::make_unique<Memo>()) {
  if (config_.cache_dir.empty()) config_.cache_dir = default_cache_dir();
  ball_ = DistanceBall::load_or_build(config_.cache_dir, config_.ball_radius, config_.persist);
  corner_pdb_ = PatternDatabase::load_or_build(
      config_.cache_dir, PatternDatabase::Pattern::corners(), config_.persist);
  if (config_.edge_pdb_size > 0) {
    const int k = config_.edge_pdb_size;
    edge_pdbs_.push_back(PatternDatabase::load_or_build(
        config_.cache_dir, PatternDatabase::Pattern::edges(k, 0), config_.persist));
    edge_pdbs_.push_back(PatternDatabase::load_or_build(
        config_.cache_dir, PatternDatabase::Pattern::edges(k, kEdges - k), config_.persist));
  }
}

int DistanceOracle::heuristic(const SearchNode& n) const {
  int h = corner_pdb_.at(n.corner_index());
  for (const PatternDatabase& db : edge_pdbs_) h = std::max<int>(h, db.lookup(n));
  return h;
}

struct DistanceOracle::Search {
  const DistanceOracle& oracle;
  bool use_ball;
  std::uint64_t budget;
  std::uint64_t nodes = 0;
  int threshold = 0;
  int next_threshold = kInfinity;

  bool dfs(const SearchNode& n, int g, int last_face) {
    int h = oracle.heuristic(n);
    if (g + h > threshold) {
      next_threshold = std::min(next_threshold, g + h);
      return false;
    }
    if (n.is_solved()) return true;
    if (use_ball) {
      if (auto exact = oracle.ball_.find(state_key(n))) {
        if (g + *exact <= threshold) return true;
        next_threshold = std::min(next_threshold, g + *exact);
        return false;
      }
      h = std::max(h, oracle.ball_.radius() + 1);
      if (g + h > threshold) {
        next_threshold = std::min(next_threshold, g + h);
        return false;
      }
    }
    for (int m = 0; m < Move::kCount; ++m) {
      if (pruned(m, last_face)) continue;
      if (++nodes > budget)
        throw Error(ErrorCode::kSearchBudgetExceeded,
                    "node budget of " + std::to_string(budget) + " expansions exhausted");
      if (dfs(apply_move(n, m), g + 1, face_of(m))) return true;
    }
    return false;
  }
};

int DistanceOracle::run_search(const SearchNode& root, bool use_ball, std::uint64_t budget,
                               std::uint64_t* nodes) const {
  Search search{*this, use_ball, budget};
  search.threshold = heuristic(root);
  for (;;) {
    search.next_threshold = kInfinity;
    if (search.dfs(root, 0, -1)) break;
    search.threshold = search.next_threshold;
  }
  if (nodes) *nodes = search.nodes;
  return search.threshold;
}

int DistanceOracle::distance(const SearchNode& n) const {
  const StateKey key = state_key(n);
  if (auto exact = ball_.find(key)) return *exact;
  if (config_.memo_capacity == 0) return run_search(n, true, config_.node_budget, nullptr);
  {
    std::lock_guard lock(memo_->mu);
    if (auto it = memo_->table.find(key); it != memo_->table.end()) return it->second;
  }
  const int d = run_search(n, true, config_.node_budget, nullptr);
  std::lock_guard lock(memo_->mu);
  if (memo_->table.size() >= config_.memo_capacity) memo_->table.clear();
  memo_->table.emplace(key, static_cast<std::uint8_t>(d));
  return d;
}

bool DistanceOracle::at_most(const SearchNode& n, int bound) const {
  if (bound < 0) return false;
  const StateKey key = state_key(n);
  if (auto exact = ball_.find(key)) return *exact <= bound;
  if (config_.memo_capacity > 0) {
    std::lock_guard lock(memo_->mu);
    if (auto it = memo_->table.find(key); it != memo_->table.end()) return it->second <= bound;
  }
  Search search{*this, true, config_.node_budget};
  search.threshold = bound;
  return search.dfs(n, 0, -1);
}

int DistanceOracle::neighbour_distance(const SearchNode& n, int d) const {
  if (at_most(n, d - 1)) return d - 1;
  if (at_most(n, d)) return d;
  return d + 1;
}

int DistanceOracle::distance(const CubeState& s) const { return distance(node_of(s)); }

DistanceOracle::SearchStats DistanceOracle::search_distance(const CubeState& s,
                                                            std::uint64_t node_budget) const {
  SearchStats stats;
  stats.distance =
      run_search(node_of(s), false, node_budget ? node_budget : config_.node_budget, &stats.nodes);
  return stats;
}

Plan DistanceOracle::solve_plan(const CubeState& s) const {
  Plan plan;
  SearchNode cur = node_of(s);
  int d = distance(cur);
  while (d > 0) {
    bool stepped = false;
    for (const Move& m : plan_move_order()) {
      SearchNode child = apply_move(cur, m.index());
      if (at_most(child, d - 1)) {
        plan.moves.push_back(m);
        cur = child;
        --d;
        stepped = true;
        break;
      }
    }
    if (!stepped)
      throw Error(ErrorCode::kConsistencyError, "no successor one move closer to solved");
  }
  return plan;
}

std::vector<Move> DistanceOracle::progress_set(const CubeState& s) const {
  const SearchNode root = node_of(s);
  const int d = distance(root);
  std::vector<Move> out;
  if (d == 0) return out;
  for (const Move& m : all_moves())
    if (at_most(apply_move(root, m.index()), d - 1)) out.push_back(m);
  return out;
}

std::vector<int> DistanceOracle::optimal_action_set(const CubeState& s,
                                                    const std::vector<Move>& options) const {
  if (options.empty()) throw Error(ErrorCode::kInvalidState, "empty option list");
  const SearchNode root = node_of(s);
  const int d = distance(root);
  std::vector<int> dist;
  dist.reserve(options.size());
  for (const Move& m : options) dist.push_back(neighbour_distance(apply_move(root, m.index()), d));
  const int best = *std::min_element(dist.begin(), dist.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] == best) out.push_back(static_cast<int>(i));
  return out;
}

MoveEffect DistanceOracle::move_effect_label(const CubeState& s, Move m) const {
  const SearchNode root = node_of(s);
  const SearchNode child = apply_move(root, m.index());
  const int before = distance(root);
  const int after = neighbour_distance(child, before);
  if (after < before || child.is_solved()) return MoveEffect::kDecrease;
  if (after == before) return MoveEffect::kNoChange;
  return MoveEffect::kIncrease;
}

std::shared_ptr<const DistanceOracle> shared_oracle(const OracleConfig& config) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, std::uint64_t, std::string, bool>,
                  std::shared_ptr<const DistanceOracle>>
      cache;
  const auto dir = config.cache_dir.empty() ? default_cache_dir() : config.cache_dir;
  const auto key = std::make_tuple(config.ball_radius, config.edge_pdb_size, config.node_budget,
                                   dir.string(), config.persist);
  std::lock_guard lock(mu);
  auto& slot = cache[key];
  if (!slot) slot = std::make_shared<const DistanceOracle>(config);
  return slot;
}

}  // namespace cubeeval
