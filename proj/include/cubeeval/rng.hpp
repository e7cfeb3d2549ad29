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

#ifndef CUBEEVAL_RNG_HPP_
#define CUBEEVAL_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace cubeeval {

// 64-bit FNV-1a; used for cache keys and prompt hashes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// Derives an independent substream seed from a master seed, a purpose string
// and any number of integer keys. Same inputs always give the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::initializer_list<std::uint64_t> keys = {});

// Portable random source. std::mt19937_64 output is fully specified, but the
// standard distributions are not, so sampling helpers live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng(std::uint64_t master, std::string_view purpose,
      std::initializer_list<std::uint64_t> keys = {})
      : engine_(derive_seed(master, purpose, keys)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform(std::uint64_t n);

  // Uniform double in [0, 1).
  double unit();

  bool bernoulli(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  // k distinct elements of `pool`, in sampled order.
  template <typename T>
  std::vector<T> sample(std::vector<T> pool, std::size_t k) {
    std::vector<T> out;
    for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
      std::size_t j = static_cast<std::size_t>(uniform(pool.size()));
      out.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

// Seed drawn from the operating system; only used by the opt-in entropy
// shuffle mode.
std::uint64_t entropy_seed();

}  // namespace cubeeval

#endif  // CUBEEVAL_RNG_HPP_
