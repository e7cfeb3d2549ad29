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

#include "cubeeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "cubeeval/error.hpp"

namespace cubeeval {
namespace {

double ratio(double num, double den) { return den > 0 ? num / den : kUndefined; }

}  // namespace

Json metric_json(double v, const char* sentinel) {
  if (std::isnan(v)) return sentinel;
  return v;
}

ReconMetrics recon_metrics(const std::vector<EpisodeResult>& results) {
  ReconMetrics m;
  double cells = 0;
  int exact = 0;
  int violations = 0;
  for (const EpisodeResult& r : results) {
    ++m.n;
    if (r.answer.kind != AnswerKind::kGrid) {
      ++violations;
      continue;
    }
    int same = 0;
    for (std::size_t i = 0; i < 9; ++i) same += r.answer.grid[i] == (*r.gold_grid)[i];
    cells += same / 9.0;
    exact += same == 9;
  }
  m.element_acc = ratio(cells, m.n);
  m.matrix_acc = ratio(exact, m.n);
  m.parse_violation_rate = ratio(violations, m.n);
  return m;
}

VerificationCounts verification_counts(const std::vector<EpisodeResult>& results) {
  VerificationCounts c;
  for (const EpisodeResult& r : results) {
    if (r.answer.kind != AnswerKind::kYesNo) {
      ++c.parse_fail;
      continue;
    }
    const bool gold = *r.gold_yes;
    const bool yes = r.answer.yes;
    if (gold) (yes ? c.tp : c.fn)++;
    else (yes ? c.fp : c.tn)++;
  }
  return c;
}

VerificationMetrics verification_metrics(const VerificationCounts& c) {
  VerificationMetrics m;
  const double parsed = static_cast<double>(c.tp + c.fn + c.tn + c.fp);
  m.tpr = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  m.tnr = ratio(static_cast<double>(c.tn), static_cast<double>(c.tn + c.fp));
  m.bal = (m.tpr + m.tnr) / 2;
  m.parse = ratio(parsed, parsed + static_cast<double>(c.parse_fail));
  m.yes_rate = ratio(static_cast<double>(c.tp + c.fp), parsed);
  m.bias = std::fabs(m.yes_rate - 0.5);
  return m;
}

ChoiceMetrics choice_metrics(const std::vector<EpisodeResult>& results) {
  ChoiceMetrics m;
  int correct = 0;
  int parsed = 0;
  for (const EpisodeResult& r : results) {
    ++m.n;
    if (r.answer.kind != AnswerKind::kChoice) continue;
    ++parsed;
    correct += r.answer.choice == r.gold_choice;
  }
  m.accuracy = ratio(correct, m.n);
  m.parse = ratio(parsed, m.n);
  return m;
}

ReflectionMetrics reflection_metrics(const std::vector<int>& initials, const std::vector<int>& finals,
                                     const std::vector<int>& golds) {
  if (initials.size() != finals.size() || finals.size() != golds.size())
    throw Error(ErrorCode::kConsistencyError, "reflection series differ in length");
  ReflectionMetrics m;
  m.n = static_cast<int>(golds.size());
  int init_right = 0, final_right = 0, wrong = 0, fixed = 0, right = 0, broken = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool a = initials[i] == golds[i];
    const bool b = finals[i] == golds[i];
    init_right += a;
    final_right += b;
    if (a) {
      ++right;
      broken += !b;
    } else {
      ++wrong;
      fixed += b;
    }
  }
  m.init_acc = ratio(init_right, m.n);
  m.final_acc = ratio(final_right, m.n);
  m.delta_pp = 100.0 * (m.final_acc - m.init_acc);
  m.efr = ratio(fixed, wrong);
  m.otr = ratio(broken, right);
  return m;
}

ReflectionMetrics reflection_metrics(const std::vector<EpisodeResult>& results) {
  std::vector<int> initials, finals, golds;
  for (const EpisodeResult& r : results) {
    initials.push_back(r.initial_choice);
    finals.push_back(r.final_choice);
    golds.push_back(r.gold_choice);
  }
  return reflection_metrics(initials, finals, golds);
}

ClosedLoopMetrics closed_loop_metrics(const std::vector<EpisodeResult>& results, int depth) {
  ClosedLoopMetrics m;
  if (depth <= 0) throw Error(ErrorCode::kConfigError, "closed-loop depth must be positive");
  double credit = 0;
  int perfect = 0;
  for (const EpisodeResult& r : results) {
    if (r.depth != depth)
      throw Error(ErrorCode::kConsistencyError, r.item_id + " is not at depth " + std::to_string(depth));
    ++m.n;
    int credited = 0;
    for (const StepRecord& s : r.steps) credited += s.credited;
    if (credited > depth) throw Error(ErrorCode::kConsistencyError, r.item_id + " credits more than d steps");
    credit += static_cast<double>(credited) / depth;
    perfect += credited == depth;
  }
  m.ta_pct = 100.0 * ratio(credit, m.n);
  m.perfect_pct = 100.0 * ratio(perfect, m.n);
  return m;
}

std::int64_t Confusion3::total() const {
  std::int64_t t = 0;
  for (const auto& row : m)
    for (std::int64_t v : row) t += v;
  return t;
}

Confusion3 move_effect_confusion(const std::vector<EpisodeResult>& results) {
  Confusion3 c;
  for (const EpisodeResult& r : results) {
    if (r.answer.kind != AnswerKind::kEffectQuad) {
      c.parse_fail += 4;
      continue;
    }
    for (std::size_t i = 0; i < 4; ++i) c.add((*r.gold_effects)[i], r.answer.effects[i]);
  }
  return c;
}

ClassificationMetrics classification_metrics(const Confusion3& c) {
  ClassificationMetrics out;
  const std::int64_t n = c.total();
  out.parse = ratio(static_cast<double>(n), static_cast<double>(n + c.parse_fail));
  if (n == 0) return out;
  std::array<std::int64_t, 3> row{}, col{};
  std::int64_t trace = 0;
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t p = 0; p < 3; ++p) {
      row[g] += c.m[g][p];
      col[p] += c.m[g][p];
    }
    trace += c.m[g][g];
  }
  out.micro_acc = static_cast<double>(trace) / static_cast<double>(n);
  double f1_sum = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double tp = static_cast<double>(c.m[k][k]);
    const double precision = col[k] > 0 ? tp / static_cast<double>(col[k]) : 0.0;
    const double recall = row[k] > 0 ? tp / static_cast<double>(row[k]) : 0.0;
    out.f1[k] = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    f1_sum += out.f1[k];
  }
  out.macro_f1 = f1_sum / 3;
  // Integer form of (p_o - p_e) / (1 - p_e): exact zero for a constant predictor.
  std::int64_t chance = 0;
  for (std::size_t k = 0; k < 3; ++k) chance += row[k] * col[k];
  const std::int64_t num = n * trace - chance;
  const std::int64_t den = n * n - chance;
  out.kappa = den == 0 ? (trace == n ? 1.0 : 0.0) : static_cast<double>(num) / static_cast<double>(den);
  return out;
}

WilsonInterval wilson_ci(std::int64_t k, std::int64_t n, double z) {
  if (n <= 0) return {};
  if (k < 0 || k > n) throw Error(ErrorCode::kConsistencyError, "wilson_ci needs 0 <= k <= n");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double center = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  WilsonInterval ci{std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
  if (k == 0) ci.lo = 0;
  if (k == n) ci.hi = 1;
  return ci;
}

RecoveryMetrics recovery_metrics(const std::vector<int>& solved_attempts, int max_attempts) {
  RecoveryMetrics m;
  m.n = static_cast<int>(solved_attempts.size());
  std::vector<int> solved;
  int p1 = 0, p3 = 0;
  double total = 0;
  for (int t : solved_attempts) {
    if (t > max_attempts) throw Error(ErrorCode::kConsistencyError, "attempts exceed the budget");
    if (t > 0) {
      solved.push_back(t);
      p1 += t == 1;
      p3 += t <= 3;
      total += t;
    } else {
      total += max_attempts;
    }
  }
  m.solved = static_cast<int>(solved.size());
  m.sr = ratio(m.solved, m.n);
  m.ci = wilson_ci(m.solved, m.n);
  m.p1 = ratio(p1, m.n);
  m.p_le3 = ratio(p3, m.n);
  m.avg_at_all = ratio(total, m.n);
  if (!solved.empty()) {
    std::sort(solved.begin(), solved.end());
    const std::size_t mid = solved.size() / 2;
    m.med_at_solved = solved.size() % 2 ? solved[mid] : (solved[mid - 1] + solved[mid]) / 2.0;
  }
  return m;
}

RecoveryMetrics recovery_metrics(const std::vector<EpisodeResult>& results) {
  std::vector<int> attempts;
  int budget = 0;
  int no_failure = 0;
  for (const EpisodeResult& r : results) {
    if (!r.has_start) {
      ++no_failure;
      continue;
    }
    if (budget != 0 && r.budget != budget)
      throw Error(ErrorCode::kConsistencyError, "recovery budgets differ within a group");
    budget = r.budget;
    attempts.push_back(r.solved ? r.attempts : 0);
  }
  RecoveryMetrics m = recovery_metrics(attempts, budget);
  m.no_failure = no_failure;
  return m;
}

SelectiveMetrics selective_metrics(const SelectiveCounts& c, double lambda) {
  if (c.n_correct + c.n_wrong + c.n_idk + c.n_parsefail != c.n_total)
    throw Error(ErrorCode::kConsistencyError, "selective counts do not sum to n_total");
  if (lambda < 0 || lambda > 1) throw Error(ErrorCode::kConfigError, "lambda must lie in [0, 1]");
  SelectiveMetrics m;
  const double total = static_cast<double>(c.n_total);
  const double answered = static_cast<double>(c.n_correct + c.n_wrong);
  m.coverage = ratio(answered, total);
  m.sel_acc = ratio(static_cast<double>(c.n_correct), answered);
  m.idk_rate = ratio(static_cast<double>(c.n_idk), total);
  m.apa = ratio(static_cast<double>(c.n_correct) + lambda * static_cast<double>(c.n_idk), total);
  return m;
}

SelectiveCounts selective_counts(const std::vector<EpisodeResult>& results) {
  SelectiveCounts c;
  for (const EpisodeResult& r : results) {
    for (const StepRecord& s : r.steps) {
      ++c.n_total;
      if (s.abstained) ++c.n_idk;
      else if (s.kind != AnswerKind::kChoice) ++c.n_parsefail;
      else if (s.credited) ++c.n_correct;
      else ++c.n_wrong;
    }
  }
  return c;
}

Correlation pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kConfigError, "pearson_r series differ in length");
  const std::size_t n = xs.size();
  if (n < 3) throw Error(ErrorCode::kConfigError, "pearson_r needs at least three points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0 || syy == 0) throw Error(ErrorCode::kDegenerateVariance, "a series has zero variance");
  Correlation c;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::fabs(c.r) == 1.0) {
    c.lo = c.hi = c.r;
  } else if (n == 3) {
    c.lo = -1;
    c.hi = 1;
  } else {
    const double z = std::atanh(c.r);
    const double se = 1 / std::sqrt(static_cast<double>(n) - 3);
    c.lo = std::tanh(z - 1.96 * se);
    c.hi = std::tanh(z + 1.96 * se);
  }
  return c;
}

// ---- reports

namespace {

Json group_metrics(Task task, int depth, const std::vector<EpisodeResult>& rs, double lambda) {
  Json m;
  switch (task) {
    case Task::kFaceRecon: {
      const ReconMetrics x = recon_metrics(rs);
      m["element_acc"] = metric_json(x.element_acc);
      m["matrix_acc"] = metric_json(x.matrix_acc);
      m["parse_violation_rate"] = metric_json(x.parse_violation_rate);
      break;
    }
    case Task::kVerification: {
      const VerificationCounts c = verification_counts(rs);
      const VerificationMetrics x = verification_metrics(c);
      m["bal"] = metric_json(x.bal);
      m["tpr"] = metric_json(x.tpr);
      m["tnr"] = metric_json(x.tnr);
      m["parse"] = metric_json(x.parse);
      m["bias"] = metric_json(x.bias);
      m["yes_rate"] = metric_json(x.yes_rate);
      m["confusion"] = {{"tp", c.tp}, {"fn", c.fn}, {"tn", c.tn}, {"fp", c.fp}, {"parse_fail", c.parse_fail}};
      break;
    }
    case Task::kMovePrediction: {
      const ChoiceMetrics x = choice_metrics(rs);
      m["accuracy"] = metric_json(x.accuracy);
      m["parse"] = metric_json(x.parse);
      break;
    }
    case Task::kReflection: {
      const ReflectionMetrics x = reflection_metrics(rs);
      m["init_acc"] = metric_json(x.init_acc);
      m["final_acc"] = metric_json(x.final_acc);
      m["delta_pp"] = metric_json(x.delta_pp);
      m["efr"] = metric_json(x.efr);
      m["otr"] = metric_json(x.otr);
      break;
    }
    case Task::kClosedLoop: {
      const ClosedLoopMetrics x = closed_loop_metrics(rs, depth);
      m["ta_pct"] = metric_json(x.ta_pct);
      m["perfect_pct"] = metric_json(x.perfect_pct);
      const SelectiveCounts c = selective_counts(rs);
      const SelectiveMetrics s = selective_metrics(c, lambda);
      m["coverage"] = metric_json(s.coverage);
      m["sel_acc"] = metric_json(s.sel_acc, "NA");
      m["idk_rate"] = metric_json(s.idk_rate);
      m["apa"] = metric_json(s.apa);
      m["selective_counts"] = {{"n_correct", c.n_correct}, {"n_wrong", c.n_wrong}, {"n_idk", c.n_idk},
                               {"n_parsefail", c.n_parsefail}, {"n_total", c.n_total}};
      std::map<std::string, int> halts;
      for (const EpisodeResult& r : rs) ++halts[std::string(halt_reason_name(r.halt))];
      m["halts"] = halts;
      break;
    }
    case Task::kMoveEffect: {
      const Confusion3 c = move_effect_confusion(rs);
      const ClassificationMetrics x = classification_metrics(c);
      m["micro_acc"] = metric_json(x.micro_acc);
      m["macro_f1"] = metric_json(x.macro_f1);
      m["kappa"] = metric_json(x.kappa);
      m["parse"] = metric_json(x.parse);
      m["confusion"] = c.m;
      break;
    }
    case Task::kRecovery: {
      const RecoveryMetrics x = recovery_metrics(rs);
      m["n_started"] = x.n;
      m["n_no_failure"] = x.no_failure;
      m["sr"] = metric_json(x.sr);
      m["sr_ci_lo"] = metric_json(x.ci.lo);
      m["sr_ci_hi"] = metric_json(x.ci.hi);
      m["p1"] = metric_json(x.p1);
      m["p_le3"] = metric_json(x.p_le3);
      m["med_at_solved"] = metric_json(x.med_at_solved, "NA");
      m["avg_at_all"] = metric_json(x.avg_at_all);
      break;
    }
  }
  return m;
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json build_report(const std::vector<EpisodeResult>& results, double lambda) {
  if (results.empty()) throw Error(ErrorCode::kEmptyRun, "no results to report");
  using Key = std::tuple<std::string, int, std::string, std::string, int>;
  std::map<Key, std::vector<EpisodeResult>> groups;
  for (const EpisodeResult& r : results) {
    const std::string regime =
        r.task == Task::kReflection ? std::string(reflection_regime_name(r.regime)) : std::string();
    groups[{r.agent, static_cast<int>(r.task), std::string(modality_name(r.modality)), regime, r.depth}]
        .push_back(r);
  }
  Json out;
  out["lambda"] = lambda;
  out["metric"] = "FTM";
  Json list = Json::array();
  for (const auto& [key, rs] : groups) {
    const Task task = static_cast<Task>(std::get<1>(key));
    int infra = 0;
    for (const EpisodeResult& r : rs) infra += r.infra_error();
    Json g;
    g["agent"] = std::get<0>(key);
    g["task"] = task_name(task);
    g["modality"] = std::get<2>(key);
    g["regime"] = std::get<3>(key);
    g["depth"] = std::get<4>(key);
    g["n"] = rs.size();
    g["infra_errors"] = infra;
    g["metrics"] = group_metrics(task, std::get<4>(key), rs, lambda);
    list.push_back(std::move(g));
  }
  out["groups"] = std::move(list);
  return out;
}

std::string report_csv(const Json& report) {
  std::vector<std::string> columns;
  for (const Json& g : report.at("groups"))
    for (const auto& [name, value] : g.at("metrics").items())
      if (value.is_number() || value.is_string())
        if (std::find(columns.begin(), columns.end(), name) == columns.end()) columns.push_back(name);
  std::ostringstream out;
  out << "agent,task,modality,regime,depth,n,infra_errors";
  for (const std::string& c : columns) out << ',' << c;
  out << '\n';
  for (const Json& g : report.at("groups")) {
    out << csv_field(g["agent"].get<std::string>()) << ',' << g["task"].get<std::string>() << ','
        << csv_field(g["modality"].get<std::string>()) << ',' << g["regime"].get<std::string>() << ','
        << g["depth"].get<int>() << ',' << g["n"].get<std::size_t>() << ',' << g["infra_errors"].get<int>();
    const Json& m = g["metrics"];
    for (const std::string& c : columns) {
      out << ',';
      if (!m.contains(c)) continue;
      const Json& v = m[c];
      out << (v.is_string() ? v.get<std::string>() : v.dump());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cubeeval
