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

// Reference distance oracle for tests: plain breadth-first search on
// facelets, independent of the cubie codec, coordinates and pattern
// databases. A radius-3 ball around solved is met by a radius-2 search from
// the query, which gives exact distances up to 5.

#ifndef CUBEEVAL_TESTS_BFS_ORACLE_HPP_
#define CUBEEVAL_TESTS_BFS_ORACLE_HPP_

#include <optional>
#include <unordered_map>
#include <vector>

#include "cubeeval/cube.hpp"

namespace cubeeval::testing {

class BfsOracle {
 public:
  static constexpr int kSolvedRadius = 3;
  static constexpr int kQueryRadius = 2;
  static constexpr int kMaxExact = kSolvedRadius + kQueryRadius;

  static const BfsOracle& instance() {
    static const BfsOracle oracle;
    return oracle;
  }

  // Exact distance when it is at most 5, otherwise nullopt.
  std::optional<int> distance(const CubeState& s) const {
    std::optional<int> best;
    for (const auto& [state, dq] : ball(s, kQueryRadius)) {
      auto it = solved_ball_.find(state);
      if (it == solved_ball_.end()) continue;
      const int total = dq + it->second;
      if (!best || total < *best) best = total;
    }
    return best;
  }

 private:
  BfsOracle() : solved_ball_(ball(CubeState::solved(), kSolvedRadius)) {}

  static std::unordered_map<CubeState, int> ball(const CubeState& root, int radius) {
    std::unordered_map<CubeState, int> seen{{root, 0}};
    std::vector<CubeState> frontier{root};
    for (int depth = 1; depth <= radius; ++depth) {
      std::vector<CubeState> next;
      for (const CubeState& s : frontier)
        for (const Move& m : all_moves()) {
          CubeState c = s.apply(m);
          if (seen.emplace(c, depth).second) next.push_back(c);
        }
      frontier = std::move(next);
    }
    return seen;
  }

  std::unordered_map<CubeState, int> solved_ball_;
};

}  // namespace cubeeval::testing

#endif  // CUBEEVAL_TESTS_BFS_ORACLE_HPP_
