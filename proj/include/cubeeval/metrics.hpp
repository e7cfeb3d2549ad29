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

// Scores computed from stored results only. Undefined values are NaN and
// serialize as the string sentinels "NaN" (empty partition) or "NA" (no
// sample to summarize).

#ifndef CUBEEVAL_METRICS_HPP_
#define CUBEEVAL_METRICS_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cubeeval/runner.hpp"

namespace cubeeval {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct ReconMetrics {
  int n = 0;
  double element_acc = kUndefined;
  double matrix_acc = kUndefined;
  double parse_violation_rate = kUndefined;
};
ReconMetrics recon_metrics(const std::vector<EpisodeResult>& results);

struct VerificationCounts {
  std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
  std::int64_t parse_fail = 0;
};
struct VerificationMetrics {
  double tpr = kUndefined;
  double tnr = kUndefined;
  double bal = kUndefined;  // (tpr + tnr) / 2 over parsed items
  double parse = kUndefined;
  double yes_rate = kUndefined;
  double bias = kUndefined;  // |yes_rate - 0.5|
};
VerificationCounts verification_counts(const std::vector<EpisodeResult>& results);
VerificationMetrics verification_metrics(const VerificationCounts& c);

struct ChoiceMetrics {
  int n = 0;
  double accuracy = kUndefined;  // parse failures count as wrong
  double parse = kUndefined;
};
ChoiceMetrics choice_metrics(const std::vector<EpisodeResult>& results);

// Letters per item, -1 for no valid answer.
struct ReflectionMetrics {
  int n = 0;
  double init_acc = kUndefined;
  double final_acc = kUndefined;
  double delta_pp = kUndefined;  // percentage points
  double efr = kUndefined;       // wrong then right, over initially wrong
  double otr = kUndefined;       // right then wrong, over initially right
};
ReflectionMetrics reflection_metrics(const std::vector<int>& initials, const std::vector<int>& finals,
                                     const std::vector<int>& golds);
ReflectionMetrics reflection_metrics(const std::vector<EpisodeResult>& results);

struct ClosedLoopMetrics {
  int n = 0;
  double ta_pct = kUndefined;       // mean credited steps / d
  double perfect_pct = kUndefined;  // all d steps credited
};
ClosedLoopMetrics closed_loop_metrics(const std::vector<EpisodeResult>& results, int depth);

// [gold][predicted] over DECREASE, NO_CHANGE, INCREASE.
struct Confusion3 {
  std::array<std::array<std::int64_t, 3>, 3> m{};
  std::int64_t parse_fail = 0;

  void add(MoveEffect gold, MoveEffect predicted) {
    ++m[static_cast<std::size_t>(gold)][static_cast<std::size_t>(predicted)];
  }
  std::int64_t total() const;
};
// Unparsed answers add four parse failures.
Confusion3 move_effect_confusion(const std::vector<EpisodeResult>& results);

struct ClassificationMetrics {
  double micro_acc = kUndefined;
  double macro_f1 = kUndefined;
  double kappa = kUndefined;
  std::array<double, 3> f1{};
  double parse = kUndefined;  // scored / (scored + parse failures)
};
ClassificationMetrics classification_metrics(const Confusion3& c);

struct WilsonInterval {
  double lo = kUndefined;
  double hi = kUndefined;
};
WilsonInterval wilson_ci(std::int64_t k, std::int64_t n, double z = 1.96);

struct RecoveryMetrics {
  int n = 0;           // items with a start state
  int no_failure = 0;  // harvested items whose closed-loop run never failed
  int solved = 0;
  double sr = kUndefined;
  WilsonInterval ci;
  double p1 = kUndefined;
  double p_le3 = kUndefined;
  double med_at_solved = kUndefined;
  double avg_at_all = kUndefined;  // failures count as the budget
};
// Attempts per item, 0 for unsolved items.
RecoveryMetrics recovery_metrics(const std::vector<int>& solved_attempts, int max_attempts);
RecoveryMetrics recovery_metrics(const std::vector<EpisodeResult>& results);

struct SelectiveCounts {
  std::int64_t n_correct = 0, n_wrong = 0, n_idk = 0, n_parsefail = 0, n_total = 0;
};
struct SelectiveMetrics {
  double coverage = kUndefined;
  double sel_acc = kUndefined;
  double idk_rate = kUndefined;
  double apa = kUndefined;
};
// Throws Error(kConsistencyError) if the counts do not sum to n_total.
SelectiveMetrics selective_metrics(const SelectiveCounts& c, double lambda);
// Closed-loop decisions: credited, answered but not credited, IDK, and
// parse failures (fallbacks and agent failures included).
SelectiveCounts selective_counts(const std::vector<EpisodeResult>& results);

struct Correlation {
  double r = kUndefined;
  double lo = kUndefined;  // Fisher-z 95% interval
  double hi = kUndefined;
};
// Needs at least three points; throws Error(kDegenerateVariance) when either
// series is constant.
Correlation pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

// ---- reports

// Metrics per (agent, task, modality, regime, depth) group, in that order.
Json build_report(const std::vector<EpisodeResult>& results, double lambda);
// One row per report group; the columns are the union of metric names.
std::string report_csv(const Json& report);

// NaN as "NaN", or as `sentinel` where given.
Json metric_json(double v, const char* sentinel = "NaN");

}  // namespace cubeeval

#endif  // CUBEEVAL_METRICS_HPP_
