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

#include "cubeeval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "cubeeval/error.hpp"
#include "cubeeval/render.hpp"
#include "cubeeval/rng.hpp"
#include "cubeeval/textgen.hpp"

namespace cubeeval {
namespace {

template <typename E, std::size_t N>
E enum_from_name(std::string_view name, const std::array<E, N>& values,
                 std::string_view (*to_name)(E), std::string_view what) {
  for (E v : values)
    if (to_name(v) == name) return v;
  throw Error(ErrorCode::kConfigError, "unknown " + std::string(what) + ": " + std::string(name));
}

}  // namespace

std::string_view halt_reason_name(HaltReason h) {
  switch (h) {
    case HaltReason::kNone: return "none";
    case HaltReason::kNonProgress: return "non_progress";
    case HaltReason::kParseFail: return "parse_fail";
    case HaltReason::kSolved: return "solved";
    case HaltReason::kBudget: return "budget";
    case HaltReason::kAbstain: return "abstain";
  }
  return "?";
}

HaltReason halt_reason_from_name(std::string_view name) {
  return enum_from_name(name,
                        std::array{HaltReason::kNone, HaltReason::kNonProgress, HaltReason::kParseFail,
                                   HaltReason::kSolved, HaltReason::kBudget, HaltReason::kAbstain},
                        halt_reason_name, "halt reason");
}

std::string_view parse_fail_policy_name(ParseFailPolicy p) {
  return p == ParseFailPolicy::kHalt ? "halt" : "fallback_A";
}

ParseFailPolicy parse_fail_policy_from_name(std::string_view name) {
  return enum_from_name(name, std::array{ParseFailPolicy::kHalt, ParseFailPolicy::kFallbackA},
                        parse_fail_policy_name, "parse-fail policy");
}

std::string_view abstain_policy_name(AbstainPolicy p) {
  return p == AbstainPolicy::kTeacherOnAbstain ? "teacher_on_abstain" : "skip_item";
}

AbstainPolicy abstain_policy_from_name(std::string_view name) {
  return enum_from_name(name, std::array{AbstainPolicy::kTeacherOnAbstain, AbstainPolicy::kSkipItem},
                        abstain_policy_name, "abstention policy");
}

std::string_view recovery_start_name(RecoveryStart r) {
  return r == RecoveryStart::kHarvest ? "harvest" : "synthetic";
}

RecoveryStart recovery_start_from_name(std::string_view name) {
  return enum_from_name(name, std::array{RecoveryStart::kHarvest, RecoveryStart::kSynthetic},
                        recovery_start_name, "recovery start");
}

std::string_view recovery_update_name(RecoveryUpdate u) {
  switch (u) {
    case RecoveryUpdate::kNone: return "none";
    case RecoveryUpdate::kTeacher: return "teacher";
    case RecoveryUpdate::kReplan: return "replan";
    case RecoveryUpdate::kPushInverse: return "push_inverse";
    case RecoveryUpdate::kParseFail: return "parse_fail";
  }
  return "?";
}

RecoveryUpdate recovery_update_from_name(std::string_view name) {
  return enum_from_name(name,
                        std::array{RecoveryUpdate::kNone, RecoveryUpdate::kTeacher, RecoveryUpdate::kReplan,
                                   RecoveryUpdate::kPushInverse, RecoveryUpdate::kParseFail},
                        recovery_update_name, "recovery update");
}

int recovery_budget(int depth) { return depth + 3; }

Json to_json(const RunOptions& o) {
  Json abstain{{"enabled", o.abstain.enabled},
               {"policy", abstain_policy_name(o.abstain.policy)},
               {"lambda", o.abstain.lambda},
               {"confidence_threshold",
                o.abstain.confidence_threshold ? Json(*o.abstain.confidence_threshold) : Json()}};
  return Json{{"format", state_format_name(o.format)},
              {"abstain", abstain},
              {"parse_fail_policy", parse_fail_policy_name(o.parse_fail_policy)},
              {"regime", reflection_regime_name(o.regime)},
              {"require_verified_line", o.require_verified_line},
              {"recovery_start", recovery_start_name(o.recovery_start)},
              {"generator", to_json(o.gen)}};
}

RunOptions run_options_from_json(const Json& j) {
  RunOptions o;
  try {
    if (j.contains("format")) o.format = state_format_from_name(j["format"].get<std::string>());
    if (j.contains("abstain")) {
      const Json& a = j["abstain"];
      o.abstain.enabled = a.value("enabled", o.abstain.enabled);
      if (a.contains("policy")) o.abstain.policy = abstain_policy_from_name(a["policy"].get<std::string>());
      o.abstain.lambda = a.value("lambda", o.abstain.lambda);
      if (a.contains("confidence_threshold") && !a["confidence_threshold"].is_null())
        o.abstain.confidence_threshold = a["confidence_threshold"].get<double>();
    }
    if (j.contains("parse_fail_policy"))
      o.parse_fail_policy = parse_fail_policy_from_name(j["parse_fail_policy"].get<std::string>());
    if (j.contains("regime")) o.regime = reflection_regime_from_name(j["regime"].get<std::string>());
    o.require_verified_line = j.value("require_verified_line", o.require_verified_line);
    if (j.contains("recovery_start"))
      o.recovery_start = recovery_start_from_name(j["recovery_start"].get<std::string>());
    if (j.contains("generator")) o.gen = gen_config_from_json(j["generator"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("run options: ") + e.what());
  }
  if (o.abstain.lambda < 0 || o.abstain.lambda > 1)
    throw Error(ErrorCode::kConfigError, "abstention lambda must lie in [0, 1]");
  return o;
}

std::string item_id_for(const Episode& e, Modality m, ReflectionRegime regime) {
  std::string id = e.id() + "@" + std::string(modality_name(m));
  if (e.task == Task::kReflection) id += "@" + std::string(reflection_regime_name(regime));
  return id;
}

ImageSource rendered_images() {
  return [](const Episode& e, const CubeState& s) {
    return ImageAttachment{s == e.state ? e.image_ref : std::string(), render_net(s)};
  };
}

// ---- item execution

namespace {

ParsedAnswer failed_answer(const Completion& c) {
  ParsedAnswer a;
  a.reason = "agent failure: " + std::string(agent_failure_name(c.failure));
  return a;
}

class ItemRun {
 public:
  ItemRun(const RunContext& ctx, const Agent& agent, const Episode& e, Modality m,
          EpisodeResult& result)
      : ctx_(ctx), agent_(agent), e_(e), m_(m), r_(result) {}

  PromptContext prompt_context(const CubeState& state) const {
    PromptContext p;
    p.state = state;
    p.format = ctx_.options.format;
    if (has_image(m_)) p.image = ctx_.images(e_, state);
    return p;
  }

  AgentView view(const CubeState& state, PromptPhase phase = PromptPhase::kMain, int step = 1) const {
    AgentView v;
    v.task = e_.task;
    v.modality = m_;
    v.phase = phase;
    v.step = step;
    v.state = state;
    return v;
  }

  Completion ask(std::string_view phase, int step, const PromptContext& pctx, const AgentView& v) {
    AgentRequest req{r_.item_id, render_prompt(e_.task, m_, pctx), v};
    Completion c = agent_.complete(req);
    Exchange x;
    x.phase = phase;
    x.step = step;
    x.template_id = req.prompt.template_id;
    x.template_version = req.prompt.template_version;
    x.prompt_hash = req.prompt.hash();
    x.raw = c.ok() ? c.text : std::string();
    x.usage = c.usage;
    x.failure = c.failure;
    x.message = c.message;
    r_.exchanges.push_back(std::move(x));
    if (!c.ok() && !r_.infra_error()) r_.failure = c.failure;
    if (!c.ok()) c.text.clear();
    return c;
  }

  void face_recon() {
    const Completion c = ask("main", 1, prompt_context(e_.state), view(e_.state));
    r_.answer = c.ok() ? parse_grid(c.text, ctx_.options.require_verified_line) : failed_answer(c);
    r_.gold_grid = e_.gold_grid;
  }

  void verification() {
    PromptContext p = prompt_context(e_.state);
    p.front_grid = *e_.shown_grid;
    AgentView v = view(e_.state);
    v.shown_grid = e_.shown_grid;
    const Completion c = ask("main", 1, p, v);
    r_.answer = c.ok() ? parse_yesno(c.text) : failed_answer(c);
    r_.gold_yes = e_.gold_yes;
  }

  void move_prediction() {
    PromptContext p = prompt_context(e_.state);
    p.options = e_.options;
    AgentView v = view(e_.state);
    v.options = e_.options;
    const Completion c = ask("main", 1, p, v);
    r_.answer = c.ok() ? parse_choice(c.text, false) : failed_answer(c);
    r_.gold_choice = e_.gold_choice;
  }

  void move_effect() {
    PromptContext p = prompt_context(e_.state);
    p.options = e_.options;
    AgentView v = view(e_.state);
    v.options = e_.options;
    const Completion c = ask("main", 1, p, v);
    r_.answer = c.ok() ? parse_move_effect(c.text) : failed_answer(c);
    r_.gold_effects = e_.gold_effects;
  }

  void reflection() {
    const ReflectionRegime regime = ctx_.options.regime;
    r_.regime = regime;
    r_.gold_choice = e_.gold_choice;
    PromptContext p = prompt_context(e_.state);
    p.options = e_.options;
    p.regime = regime;
    AgentView v = view(e_.state);
    v.options = e_.options;

    const Completion draft = ask("main", 1, p, v);
    const ParsedAnswer first = draft.ok() ? parse_choice(draft.text, false) : failed_answer(draft);
    r_.initial_choice = first.kind == AnswerKind::kChoice ? first.choice : -1;
    r_.answer = failed_answer(draft);
    if (!draft.ok()) return;

    p.model_choice = r_.initial_choice >= 0 ? std::string(1, option_letter(r_.initial_choice)) : "none";
    p.correct_answer = std::string(1, option_letter(e_.gold_choice));
    v.draft_choice = r_.initial_choice;
    v.revealed_answer = regime == ReflectionRegime::kUnredacted ? e_.gold_choice : -1;
    p.phase = v.phase = PromptPhase::kReflect;
    const Completion reflect = ask("reflect", 1, p, v);
    if (!reflect.ok()) {
      r_.answer = failed_answer(reflect);
      return;
    }

    p.phase = v.phase = PromptPhase::kReanswer;
    p.reflection = reflect.text;
    const Completion final = ask("reanswer", 1, p, v);
    r_.answer = final.ok() ? parse_choice(final.text, false) : failed_answer(final);
    r_.final_choice = r_.answer.kind == AnswerKind::kChoice ? r_.answer.choice : -1;
  }

  void closed_loop() {
    const DistanceOracle& oracle = ctx_.oracle;
    const RunOptions& opt = ctx_.options;
    r_.parse_fail_policy = opt.parse_fail_policy;
    r_.abstain_enabled = opt.abstain.enabled;
    r_.abstain_policy = opt.abstain.policy;
    r_.gold_choice = e_.gold_choice;

    CubeState state = e_.state;
    MoveSeq plan = e_.teacher_plan();
    int dist = oracle.distance(state);
    for (int t = 1; t <= e_.depth; ++t) {
      const Move teacher = plan.front();
      const OptionSet opts = gen_step_options(oracle, opt.gen, e_, state, teacher, t);
      StepRecord s;
      s.t = t;
      s.state_before = to_facelet_string(state);
      s.distance_before = dist;
      s.options = opts.moves;

      PromptContext p = prompt_context(state);
      p.options = opts.moves;
      p.distance = dist;
      p.allow_idk = opt.abstain.enabled;
      AgentView v = view(state, PromptPhase::kMain, t);
      v.options = opts.moves;
      v.allow_idk = opt.abstain.enabled;
      const Completion c = ask("step", t, p, v);
      const ParsedAnswer a = c.ok() ? parse_choice(c.text, opt.abstain.enabled) : failed_answer(c);
      s.raw = c.text;
      s.kind = a.kind;
      s.choice = a.choice;

      int slot = -1;
      if (!c.ok()) {
        s.halt = HaltReason::kParseFail;
      } else if (a.kind == AnswerKind::kIdk) {
        s.abstained = true;
        if (opt.abstain.policy == AbstainPolicy::kSkipItem)
          s.halt = HaltReason::kAbstain;
        else
          slot = opts.correct;
      } else if (a.kind != AnswerKind::kChoice) {
        if (opt.parse_fail_policy == ParseFailPolicy::kHalt) {
          s.halt = HaltReason::kParseFail;
        } else {
          s.fallback = true;
          slot = 0;
        }
      } else {
        slot = a.choice;
      }
      if (slot < 0) {
        r_.steps.push_back(std::move(s));
        break;
      }

      const Move chosen = opts.moves[static_cast<std::size_t>(slot)];
      const auto optimal = oracle.optimal_action_set(state, opts.moves);
      s.chosen = chosen;
      s.in_optimal = std::find(optimal.begin(), optimal.end(), slot) != optimal.end();
      s.credited = s.in_optimal && !s.fallback && !s.abstained;
      const CubeState next = state.apply(chosen);
      const int next_dist = oracle.distance(next);
      s.delta = next_dist - dist;
      r_.correct_steps += s.credited;
      if (s.delta < 0) {
        if (chosen == teacher)
          plan.erase(plan.begin());
        else
          plan = oracle.solve_plan(next).moves;
      }
      state = next;
      dist = next_dist;
      if (s.delta >= 0)
        s.halt = HaltReason::kNonProgress;
      else if (state.is_solved())
        s.halt = HaltReason::kSolved;
      else if (t == e_.depth)
        s.halt = HaltReason::kBudget;
      const bool stop = s.halt != HaltReason::kNone;
      r_.steps.push_back(std::move(s));
      if (stop) break;
    }
    r_.halt = r_.steps.empty() ? HaltReason::kNone : r_.steps.back().halt;
    r_.solved = state.is_solved();
  }

  void recovery(const EpisodeResult* source) {
    const DistanceOracle& oracle = ctx_.oracle;
    const RunOptions& opt = ctx_.options;
    std::optional<CubeState> start;
    if (opt.recovery_start == RecoveryStart::kSynthetic) {
      start = synthetic_recovery_start(oracle, e_);
    } else {
      if (!source)
        throw Error(ErrorCode::kConfigError,
                    "recovery item " + e_.id() + " needs the agent's closed-loop result");
      start = harvest_recovery_start(*source);
    }
    r_.budget = recovery_budget(e_.depth);
    if (!start) {
      r_.has_start = false;
      return;
    }
    CubeState state = *start;
    r_.start_facelets = to_facelet_string(state);
    int dist = oracle.distance(state);
    r_.start_distance = dist;
    MoveSeq plan = oracle.solve_plan(state).moves;

    for (int a = 1; a <= r_.budget && !state.is_solved(); ++a) {
      const OptionSet opts = gen_recovery_options(oracle, opt.gen, e_, state, a);
      StepRecord s;
      s.t = a;
      s.state_before = to_facelet_string(state);
      s.distance_before = dist;
      s.options = opts.moves;
      PromptContext p = prompt_context(state);
      p.options = opts.moves;
      p.distance = dist;
      AgentView v = view(state, PromptPhase::kMain, a);
      v.options = opts.moves;
      const Completion c = ask("step", a, p, v);
      const ParsedAnswer ans = c.ok() ? parse_choice(c.text, false) : failed_answer(c);
      s.raw = c.text;
      s.kind = ans.kind;
      s.choice = ans.choice;
      r_.attempts = a;

      if (ans.kind != AnswerKind::kChoice) {
        s.update = RecoveryUpdate::kParseFail;
      } else {
        const Move m = opts.moves[static_cast<std::size_t>(ans.choice)];
        const auto optimal = oracle.optimal_action_set(state, opts.moves);
        s.chosen = m;
        s.in_optimal = std::find(optimal.begin(), optimal.end(), ans.choice) != optimal.end();
        s.credited = s.in_optimal;
        const CubeState next = state.apply(m);
        const int next_dist = oracle.distance(next);
        s.delta = next_dist - dist;
        if (!plan.empty() && m == plan.front()) {
          plan.erase(plan.begin());
          s.update = RecoveryUpdate::kTeacher;
        } else if (s.delta < 0) {
          plan = oracle.solve_plan(next).moves;
          s.update = RecoveryUpdate::kReplan;
        } else {
          plan.insert(plan.begin(), m.inverse());
          s.update = RecoveryUpdate::kPushInverse;
        }
        state = next;
        dist = next_dist;
      }
      s.plan_after = format_moves(plan);
      if (!state.apply(plan).is_solved())
        throw Error(ErrorCode::kConsistencyError, "recovery plan no longer solves " + r_.item_id);

      if (state.is_solved())
        s.halt = HaltReason::kSolved;
      else if (!c.ok())
        s.halt = HaltReason::kParseFail;
      else if (a == r_.budget)
        s.halt = HaltReason::kBudget;
      const bool stop = s.halt != HaltReason::kNone;
      r_.steps.push_back(std::move(s));
      if (stop) break;
    }
    r_.halt = r_.steps.empty() ? HaltReason::kNone : r_.steps.back().halt;
    r_.solved = state.is_solved();
  }

 private:
  const RunContext& ctx_;
  const Agent& agent_;
  const Episode& e_;
  Modality m_;
  EpisodeResult& r_;
};

}  // namespace

std::optional<CubeState> harvest_recovery_start(const EpisodeResult& closed_loop) {
  if (closed_loop.steps.empty()) return std::nullopt;
  const StepRecord& last = closed_loop.steps.back();
  if (last.halt != HaltReason::kNonProgress && last.halt != HaltReason::kParseFail &&
      last.halt != HaltReason::kAbstain)
    return std::nullopt;
  CubeState s = parse_facelet_string(last.state_before);
  if (last.chosen) s = s.apply(*last.chosen);
  return s;
}

CubeState synthetic_recovery_start(const DistanceOracle& oracle, const Episode& e) {
  const auto progress = oracle.progress_set(e.state);
  std::vector<Move> others;
  for (const Move& m : all_moves())
    if (std::find(progress.begin(), progress.end(), m) == progress.end()) others.push_back(m);
  Rng rng(episode_stream(e.task, e.depth, e.index, e.meta.regen, "recovery-start"));
  return e.state.apply(others[rng.uniform(others.size())]);
}

EpisodeResult run_item(const RunContext& ctx, const Agent& agent, const Episode& e, Modality modality,
                       const EpisodeResult* closed_loop_source) {
  if (!modality_supported(e.task, modality))
    throw Error(ErrorCode::kConfigError, std::string(task_name(e.task)) + " does not support modality " +
                                             std::string(modality_name(modality)));
  EpisodeResult r;
  r.item_id = item_id_for(e, modality, ctx.options.regime);
  r.episode_id = e.id();
  r.task = e.task;
  r.depth = e.depth;
  r.index = e.index;
  r.modality = modality;
  r.agent = agent.name();
  ItemRun run(ctx, agent, e, modality, r);
  switch (e.task) {
    case Task::kFaceRecon: run.face_recon(); break;
    case Task::kVerification: run.verification(); break;
    case Task::kMovePrediction: run.move_prediction(); break;
    case Task::kReflection: run.reflection(); break;
    case Task::kClosedLoop: run.closed_loop(); break;
    case Task::kMoveEffect: run.move_effect(); break;
    case Task::kRecovery: run.recovery(closed_loop_source); break;
  }
  return r;
}

std::vector<EpisodeResult> run_items(const RunContext& ctx, const Agent& agent,
                                     const std::vector<WorkItem>& items,
                                     const std::function<void(const EpisodeResult&)>& on_done) {
  std::vector<EpisodeResult> out(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      {
        std::lock_guard lock(mu);
        if (error) return;
      }
      try {
        const WorkItem& w = items[i];
        out[i] = run_item(ctx, agent, *w.episode, w.modality, w.closed_loop_source);
        std::lock_guard lock(mu);
        if (on_done) on_done(out[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(agent.concurrency(), 1)),
                                              std::max<std::size_t>(items.size(), 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// ---- replay

namespace {

class ReplayAgent : public Agent {
 public:
  explicit ReplayAgent(const EpisodeResult& stored) : stored_(stored) {}
  const std::string& name() const override { return stored_.agent; }
  Completion complete(const AgentRequest&) const override {
    Completion c;
    if (next_ >= stored_.exchanges.size())
      throw Error(ErrorCode::kConsistencyError,
                  "replay of " + stored_.item_id + " asks for more answers than were recorded");
    const Exchange& x = stored_.exchanges[next_++];
    c.text = x.raw;
    c.failure = x.failure;
    c.message = x.message;
    return c;
  }
  Json describe() const override { return Json{{"kind", "replay"}}; }

 private:
  const EpisodeResult& stored_;
  mutable std::size_t next_ = 0;
};

}  // namespace

void replay(const RunContext& ctx, const Episode& e, const EpisodeResult& stored,
            const EpisodeResult* closed_loop_source) {
  RunContext local = ctx;
  local.options.regime = stored.regime;
  local.options.parse_fail_policy = stored.parse_fail_policy;
  local.options.abstain.enabled = stored.abstain_enabled;
  local.options.abstain.policy = stored.abstain_policy;
  const ReplayAgent agent(stored);
  const EpisodeResult again = run_item(local, agent, e, stored.modality, closed_loop_source);
  const Json a = to_json(stored);
  const Json b = to_json(again);
  if (a == b) return;
  const Json patch = Json::diff(a, b);
  throw Error(ErrorCode::kConsistencyError,
              "replay of " + stored.item_id + " differs at " + patch.at(0).value("path", std::string("?")));
}

// ---- serialization

namespace {

Json letter_or_null(int choice) {
  return choice >= 0 ? Json(std::string(1, option_letter(choice))) : Json();
}

int letter_from_json(const Json& j) {
  if (j.is_null()) return -1;
  const std::string s = j.get<std::string>();
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'D')
    throw Error(ErrorCode::kSchemaMismatch, "bad option letter: " + s);
  return s[0] - 'A';
}

Json labels_json(const std::array<MoveEffect, 4>& labels) {
  Json out = Json::array();
  for (MoveEffect e : labels) out.push_back(std::string(move_effect_name(e)));
  return out;
}

std::array<MoveEffect, 4> labels_from_json(const Json& j) {
  std::array<MoveEffect, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto e = move_effect_from_name(j.at(i).get<std::string>());
    if (!e) throw Error(ErrorCode::kSchemaMismatch, "bad move-effect label");
    out[i] = *e;
  }
  return out;
}

AnswerKind answer_kind_from_name(std::string_view name) {
  for (AnswerKind k : {AnswerKind::kChoice, AnswerKind::kIdk, AnswerKind::kYesNo, AnswerKind::kGrid,
                       AnswerKind::kEffectQuad, AnswerKind::kParseFail})
    if (answer_kind_name(k) == name) return k;
  throw Error(ErrorCode::kSchemaMismatch, "unknown answer kind: " + std::string(name));
}

AgentFailure failure_from_name(std::string_view name) {
  for (AgentFailure f : {AgentFailure::kNone, AgentFailure::kTransport, AgentFailure::kTimeout,
                         AgentFailure::kAuth})
    if (agent_failure_name(f) == name) return f;
  throw Error(ErrorCode::kSchemaMismatch, "unknown failure kind: " + std::string(name));
}

Json answer_json(const ParsedAnswer& a, Task task) {
  Json j{{"kind", answer_kind_name(a.kind)}};
  switch (a.kind) {
    case AnswerKind::kChoice: j["choice"] = letter_or_null(a.choice); break;
    case AnswerKind::kYesNo: j["yes"] = a.yes; break;
    case AnswerKind::kGrid: j["grid"] = grid_to_json(a.grid); break;
    case AnswerKind::kEffectQuad: j["effects"] = labels_json(a.effects); break;
    case AnswerKind::kParseFail: j["reason"] = a.reason; break;
    case AnswerKind::kIdk: break;
  }
  if (task == Task::kMoveEffect) j["effect_ok"] = a.effect_ok;
  return j;
}

ParsedAnswer answer_from_json(const Json& j) {
  ParsedAnswer a;
  a.kind = answer_kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("choice")) a.choice = letter_from_json(j["choice"]);
  if (j.contains("yes")) a.yes = j["yes"].get<bool>();
  if (j.contains("grid")) a.grid = grid_from_json(j["grid"]);
  if (j.contains("effects")) a.effects = labels_from_json(j["effects"]);
  if (j.contains("effect_ok")) a.effect_ok = j["effect_ok"].get<std::array<bool, 4>>();
  if (j.contains("reason")) a.reason = j["reason"].get<std::string>();
  return a;
}

Json moves_json(const std::vector<Move>& moves) {
  Json out = Json::array();
  for (const Move& m : moves) out.push_back(m.token());
  return out;
}

Json step_json(const StepRecord& s, Task task) {
  Json j{{"t", s.t},
         {"state_before", s.state_before},
         {"distance_before", s.distance_before},
         {"options", moves_json(s.options)},
         {"kind", answer_kind_name(s.kind)},
         {"choice", letter_or_null(s.choice)},
         {"fallback", s.fallback},
         {"abstained", s.abstained},
         {"chosen", s.chosen ? Json(s.chosen->token()) : Json()},
         {"delta", s.delta},
         {"in_optimal", s.in_optimal},
         {"credited", s.credited}};
  if (task == Task::kRecovery) {
    j["update"] = recovery_update_name(s.update);
    j["plan_after"] = s.plan_after;
  }
  j["halt"] = halt_reason_name(s.halt);
  return j;
}

StepRecord step_from_json(const Json& j) {
  StepRecord s;
  s.t = j.at("t").get<int>();
  s.state_before = j.at("state_before").get<std::string>();
  s.distance_before = j.at("distance_before").get<int>();
  for (const Json& m : j.at("options")) s.options.push_back(parse_move(m.get<std::string>()));
  s.kind = answer_kind_from_name(j.at("kind").get<std::string>());
  s.choice = letter_from_json(j.at("choice"));
  s.fallback = j.at("fallback").get<bool>();
  s.abstained = j.at("abstained").get<bool>();
  if (!j.at("chosen").is_null()) s.chosen = parse_move(j["chosen"].get<std::string>());
  s.delta = j.at("delta").get<int>();
  s.in_optimal = j.at("in_optimal").get<bool>();
  s.credited = j.at("credited").get<bool>();
  if (j.contains("update")) s.update = recovery_update_from_name(j["update"].get<std::string>());
  if (j.contains("plan_after")) s.plan_after = j["plan_after"].get<std::string>();
  s.halt = halt_reason_from_name(j.at("halt").get<std::string>());
  return s;
}

}  // namespace

Json to_json(const EpisodeResult& r) {
  Json j;
  j["schema"] = kResultSchemaVersion;
  j["item_id"] = r.item_id;
  j["episode_id"] = r.episode_id;
  j["agent"] = r.agent;
  j["task"] = task_name(r.task);
  j["depth"] = r.depth;
  j["index"] = r.index;
  j["modality"] = modality_name(r.modality);
  j["failure"] = agent_failure_name(r.failure);
  Json ex = Json::array();
  for (const Exchange& x : r.exchanges) {
    ex.push_back({{"phase", x.phase},
                  {"step", x.step},
                  {"template_id", x.template_id},
                  {"template_version", x.template_version},
                  {"prompt_hash", x.prompt_hash},
                  {"raw", x.raw},
                  {"failure", agent_failure_name(x.failure)},
                  {"message", x.message}});
  }
  j["exchanges"] = ex;
  switch (r.task) {
    case Task::kFaceRecon:
      j["answer"] = answer_json(r.answer, r.task);
      j["gold"] = {{"grid", grid_to_json(*r.gold_grid)}};
      break;
    case Task::kVerification:
      j["answer"] = answer_json(r.answer, r.task);
      j["gold"] = {{"answer", *r.gold_yes}};
      break;
    case Task::kMovePrediction:
      j["answer"] = answer_json(r.answer, r.task);
      j["gold"] = {{"letter", letter_or_null(r.gold_choice)}};
      break;
    case Task::kMoveEffect:
      j["answer"] = answer_json(r.answer, r.task);
      j["gold"] = {{"labels", labels_json(*r.gold_effects)}};
      break;
    case Task::kReflection:
      j["regime"] = reflection_regime_name(r.regime);
      j["answer"] = answer_json(r.answer, r.task);
      j["initial"] = letter_or_null(r.initial_choice);
      j["final"] = letter_or_null(r.final_choice);
      j["gold"] = {{"letter", letter_or_null(r.gold_choice)}};
      break;
    case Task::kClosedLoop:
    case Task::kRecovery: {
      if (r.task == Task::kClosedLoop) {
        j["parse_fail_policy"] = parse_fail_policy_name(r.parse_fail_policy);
        j["abstain"] = {{"enabled", r.abstain_enabled}, {"policy", abstain_policy_name(r.abstain_policy)}};
        j["correct_steps"] = r.correct_steps;
        j["gold"] = {{"step1_letter", letter_or_null(r.gold_choice)}};
      } else {
        j["has_start"] = r.has_start;
        j["start_facelets"] = r.start_facelets;
        j["start_distance"] = r.start_distance;
        j["budget"] = r.budget;
        j["attempts"] = r.attempts;
      }
      j["halt"] = halt_reason_name(r.halt);
      j["solved"] = r.solved;
      Json steps = Json::array();
      for (const StepRecord& s : r.steps) steps.push_back(step_json(s, r.task));
      j["steps"] = steps;
      break;
    }
  }
  return j;
}

EpisodeResult episode_result_from_json(const Json& j) {
  EpisodeResult r;
  try {
    if (j.at("schema").get<std::string>() != kResultSchemaVersion)
      throw Error(ErrorCode::kSchemaMismatch, "result schema " + j["schema"].get<std::string>());
    r.item_id = j.at("item_id").get<std::string>();
    r.episode_id = j.at("episode_id").get<std::string>();
    r.agent = j.at("agent").get<std::string>();
    r.task = task_from_name(j.at("task").get<std::string>());
    r.depth = j.at("depth").get<int>();
    r.index = j.at("index").get<int>();
    r.modality = modality_from_name(j.at("modality").get<std::string>());
    r.failure = failure_from_name(j.at("failure").get<std::string>());
    for (const Json& x : j.at("exchanges")) {
      Exchange e;
      e.phase = x.at("phase").get<std::string>();
      e.step = x.at("step").get<int>();
      e.template_id = x.at("template_id").get<std::string>();
      e.template_version = x.at("template_version").get<std::string>();
      e.prompt_hash = x.at("prompt_hash").get<std::string>();
      e.raw = x.at("raw").get<std::string>();
      e.failure = failure_from_name(x.at("failure").get<std::string>());
      e.message = x.at("message").get<std::string>();
      r.exchanges.push_back(std::move(e));
    }
    if (j.contains("answer")) {
      r.answer = answer_from_json(j["answer"]);
      if (!r.exchanges.empty()) r.answer.raw = r.exchanges.back().raw;
    }
    const Json gold = j.value("gold", Json::object());
    switch (r.task) {
      case Task::kFaceRecon: r.gold_grid = grid_from_json(gold.at("grid")); break;
      case Task::kVerification: r.gold_yes = gold.at("answer").get<bool>(); break;
      case Task::kMovePrediction:
      case Task::kReflection: r.gold_choice = letter_from_json(gold.at("letter")); break;
      case Task::kClosedLoop: r.gold_choice = letter_from_json(gold.at("step1_letter")); break;
      case Task::kMoveEffect: r.gold_effects = labels_from_json(gold.at("labels")); break;
      default: break;
    }
    if (r.task == Task::kReflection) {
      r.regime = reflection_regime_from_name(j.at("regime").get<std::string>());
      r.initial_choice = letter_from_json(j.at("initial"));
      r.final_choice = letter_from_json(j.at("final"));
    }
    if (r.task == Task::kClosedLoop || r.task == Task::kRecovery) {
      if (r.task == Task::kClosedLoop) {
        r.parse_fail_policy = parse_fail_policy_from_name(j.at("parse_fail_policy").get<std::string>());
        r.abstain_enabled = j.at("abstain").at("enabled").get<bool>();
        r.abstain_policy = abstain_policy_from_name(j.at("abstain").at("policy").get<std::string>());
        r.correct_steps = j.at("correct_steps").get<int>();
      } else {
        r.has_start = j.at("has_start").get<bool>();
        r.start_facelets = j.at("start_facelets").get<std::string>();
        r.start_distance = j.at("start_distance").get<int>();
        r.budget = j.at("budget").get<int>();
        r.attempts = j.at("attempts").get<int>();
      }
      r.halt = halt_reason_from_name(j.at("halt").get<std::string>());
      r.solved = j.at("solved").get<bool>();
      const Json& steps = j.at("steps");
      for (std::size_t i = 0; i < steps.size(); ++i) {
        StepRecord s = step_from_json(steps[i]);
        if (i < r.exchanges.size()) s.raw = r.exchanges[i].raw;
        r.steps.push_back(std::move(s));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("result record: ") + e.what());
  }
  return r;
}

std::vector<Json> transcript_lines(const EpisodeResult& r) {
  std::vector<Json> out;
  for (const Exchange& x : r.exchanges) {
    out.push_back({{"item_id", r.item_id},
                   {"agent", r.agent},
                   {"phase", x.phase},
                   {"step", x.step},
                   {"template_id", x.template_id},
                   {"template_version", x.template_version},
                   {"prompt_hash", x.prompt_hash},
                   {"raw", x.raw},
                   {"usage",
                    {{"tokens_in", x.usage.tokens_in},
                     {"tokens_out", x.usage.tokens_out},
                     {"latency_ms", x.usage.latency_ms}}},
                   {"error", agent_failure_name(x.failure)},
                   {"message", x.message}});
  }
  return out;
}

// ---- result store

namespace {

constexpr const char* kResultsFile = "results.jsonl";
constexpr const char* kTranscriptsFile = "transcripts.jsonl";

// Parses JSON lines, ignoring a torn final line left by an interrupted run.
std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::vector<Json> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(Json::parse(lines[i]));
    } catch (const nlohmann::json::parse_error&) {
      if (i + 1 != lines.size())
        throw Error(ErrorCode::kSchemaMismatch, path.string() + ": bad JSON on line " + std::to_string(i + 1));
    }
  }
  return out;
}

void write_lines_atomically(const std::filesystem::path& path, const std::vector<Json>& lines) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
    for (const Json& j : lines) out << j.dump() << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void append_lines(const std::filesystem::path& path, const std::vector<Json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + path.string());
  for (const Json& j : lines) out << j.dump() << '\n';
  out.flush();
}

}  // namespace

ResultStore::ResultStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  for (const Json& j : read_json_lines(dir_ / kResultsFile)) {
    EpisodeResult r = episode_result_from_json(j);
    if (!r.infra_error()) completed_[{r.agent, r.item_id}] = std::move(r);
  }
  for (const Json& j : read_json_lines(dir_ / kTranscriptsFile)) {
    const std::pair<std::string, std::string> key{j.value("agent", ""), j.value("item_id", "")};
    if (completed_.count(key)) transcripts_[key].push_back(j);
  }
}

void ResultStore::append(const EpisodeResult& r) {
  append_lines(dir_ / kResultsFile, {to_json(r)});
  const auto lines = transcript_lines(r);
  append_lines(dir_ / kTranscriptsFile, lines);
  transcripts_[{r.agent, r.item_id}] = lines;
}

void ResultStore::finalize(const std::vector<EpisodeResult>& ordered) {
  std::vector<Json> results;
  std::vector<Json> transcripts;
  for (const EpisodeResult& r : ordered) {
    results.push_back(to_json(r));
    const auto it = transcripts_.find({r.agent, r.item_id});
    const auto lines = it != transcripts_.end() ? it->second : transcript_lines(r);
    transcripts.insert(transcripts.end(), lines.begin(), lines.end());
  }
  write_lines_atomically(dir_ / kResultsFile, results);
  write_lines_atomically(dir_ / kTranscriptsFile, transcripts);
}

std::vector<EpisodeResult> ResultStore::load(const std::filesystem::path& results_file) {
  if (!std::filesystem::exists(results_file))
    throw Error(ErrorCode::kIoError, "no such file: " + results_file.string());
  std::vector<EpisodeResult> out;
  for (const Json& j : read_json_lines(results_file)) out.push_back(episode_result_from_json(j));
  return out;
}

}  // namespace cubeeval
