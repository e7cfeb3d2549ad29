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

#include "cubeeval/agents.hpp"
#include "cubeeval/error.hpp"
#include "cubeeval/runner.hpp"
#include "cubeeval/textgen.hpp"
#include "doctest.h"
#include "support/bfs_oracle.hpp"
#include "support/shared_oracle.hpp"

namespace cubeeval {
namespace {

using testing::BfsOracle;
using testing::test_oracle;
using testing::test_oracle_config;

std::shared_ptr<const DistanceOracle> oracle_ptr() { return shared_oracle(test_oracle_config()); }

// Agent driven by a callback.
class FnAgent : public Agent {
 public:
  using Fn = std::function<Completion(const AgentRequest&)>;
  FnAgent(std::string name, Fn fn, int concurrency = 1)
      : name_(std::move(name)), fn_(std::move(fn)), concurrency_(concurrency) {}
  const std::string& name() const override { return name_; }
  Completion complete(const AgentRequest& r) const override { return fn_(r); }
  int concurrency() const override { return concurrency_; }
  Json describe() const override { return Json{{"kind", "test"}}; }

 private:
  std::string name_;
  Fn fn_;
  int concurrency_;
};

Completion text(std::string s) {
  Completion c;
  c.text = std::move(s);
  return c;
}

ScriptedAgent scripted(ScriptedKind kind) {
  return ScriptedAgent(std::string(scripted_kind_name(kind)), {kind},
                       kind == ScriptedKind::kOracle ? oracle_ptr() : nullptr);
}

RunContext context(RunOptions opt = {}) { return RunContext{test_oracle(), opt}; }

const GenConfig kGen;

int bfs(const CubeState& s) { return BfsOracle::instance().distance(s).value(); }

EpisodeResult round_trip(const EpisodeResult& r) {
  return episode_result_from_json(Json::parse(to_json(r).dump()));
}

TEST_CASE("face reconstruction runs") {
  const RunContext ctx = context();
  ScriptedSpec noise{ScriptedKind::kGridNoise};
  noise.k = 1;
  const ScriptedAgent noisy("noise", noise);
  for (int i = 0; i < 10; ++i) {
    const Episode e = gen_face_recon(test_oracle(), kGen, 2, i);
    const EpisodeResult echo = run_item(ctx, scripted(ScriptedKind::kEchoGoldGrid), e, Modality::kImage);
    REQUIRE(echo.answer.kind == AnswerKind::kGrid);
    CHECK(echo.answer.grid == *e.gold_grid);
    CHECK(echo.exchanges.size() == 1);
    CHECK(echo.exchanges[0].template_id == "face_recon");
    const EpisodeResult n = run_item(ctx, noisy, e, Modality::kImage);
    int same = 0;
    for (std::size_t k = 0; k < 9; ++k) same += n.answer.grid[k] == (*e.gold_grid)[k];
    CHECK(same == 8);
    CHECK_FALSE(run_item(ctx, scripted(ScriptedKind::kMalformed), e, Modality::kImage).answer.ok());
    CHECK(to_json(round_trip(n)) == to_json(n));
  }
  const Episode e = gen_face_recon(test_oracle(), kGen, 1, 0);
  CHECK_THROWS_AS(run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kText), Error);
}

TEST_CASE("verification runs") {
  const RunContext ctx = context();
  const Batch b = generate_batch(test_oracle(), kGen, Task::kVerification, 5, 20);
  for (const Episode& e : b.episodes) {
    const EpisodeResult yes = run_item(ctx, scripted(ScriptedKind::kAlwaysYes), e, Modality::kImageText);
    CHECK(yes.answer.kind == AnswerKind::kYesNo);
    CHECK(yes.answer.yes);
    CHECK(yes.gold_yes == e.gold_yes);
    const EpisodeResult o = run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kImageText);
    CHECK(o.answer.yes == *e.gold_yes);
    CHECK(to_json(round_trip(o)) == to_json(o));
  }
}

TEST_CASE("move prediction runs in every modality") {
  const RunContext ctx = context();
  for (Modality m : {Modality::kImageText, Modality::kText, Modality::kImage}) {
    for (int i = 0; i < 20; ++i) {
      const Episode e = gen_move_prediction(test_oracle(), kGen, i);
      const EpisodeResult r = run_item(ctx, scripted(ScriptedKind::kOracle), e, m);
      REQUIRE(r.answer.kind == AnswerKind::kChoice);
      CHECK(r.answer.choice == e.gold_choice);
      CHECK(r.item_id == e.id() + "@" + std::string(modality_name(m)));
    }
  }
}

TEST_CASE("move effect runs") {
  const RunContext ctx = context();
  const Batch b = generate_batch(test_oracle(), kGen, Task::kMoveEffect, 2, 12);
  for (const Episode& e : b.episodes) {
    const EpisodeResult r = run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kText);
    REQUIRE(r.answer.kind == AnswerKind::kEffectQuad);
    CHECK(r.answer.effects == *e.gold_effects);
    CHECK(to_json(round_trip(r)) == to_json(r));
  }
}

TEST_CASE("reflection runs three phases") {
  const Batch b = generate_batch(test_oracle(), kGen, Task::kReflection, 1, 8);
  for (ReflectionRegime regime : {ReflectionRegime::kRedacted, ReflectionRegime::kUnredacted}) {
    RunOptions opt;
    opt.regime = regime;
    const RunContext ctx = context(opt);
    for (const Episode& e : b.episodes) {
      int revealed = -2;
      const FnAgent gold_on_reanswer("fix", [&](const AgentRequest& r) {
        if (r.view.phase == PromptPhase::kReflect) {
          revealed = r.view.revealed_answer;
          return text("I picked the wrong face.");
        }
        if (r.view.phase == PromptPhase::kReanswer) return text(format_choice(e.gold_choice));
        return text(format_choice((e.gold_choice + 1) % 4));
      });
      const EpisodeResult r = run_item(ctx, gold_on_reanswer, e, Modality::kImageText);
      REQUIRE(r.exchanges.size() == 3);
      CHECK(r.exchanges[0].template_id == "move_prediction_image_text");
      CHECK(r.exchanges[1].template_id ==
            "reflection_" + std::string(reflection_regime_name(regime)));
      CHECK(r.exchanges[2].template_id == "reanswer");
      CHECK(r.initial_choice == (e.gold_choice + 1) % 4);
      CHECK(r.final_choice == e.gold_choice);
      CHECK(revealed == (regime == ReflectionRegime::kUnredacted ? e.gold_choice : -1));
      CHECK(r.item_id == e.id() + "@image+text@" + std::string(reflection_regime_name(regime)));
      CHECK(to_json(round_trip(r)) == to_json(r));
      replay(ctx, e, round_trip(r));
    }
  }
  // A draft that fails to parse still reflects, with "none" as the choice.
  const Episode e = b.episodes[0];
  std::string reflect_prompt;
  const FnAgent agent("x", [&](const AgentRequest& r) {
    if (r.view.phase == PromptPhase::kReflect) reflect_prompt = r.prompt.user;
    return text(r.view.phase == PromptPhase::kMain ? "B" : format_choice(1));
  });
  const EpisodeResult r = run_item(context(), agent, e, Modality::kImageText);
  CHECK(r.initial_choice == -1);
  CHECK(r.final_choice == 1);
  CHECK(reflect_prompt.find("none") != std::string::npos);
}

TEST_CASE("closed loop with the oracle agent") {
  const RunContext ctx = context();
  for (int d = 1; d <= 5; ++d) {
    for (int i = 0; i < 10; ++i) {
      const Episode e = gen_closed_loop(test_oracle(), kGen, d, i);
      const EpisodeResult r = run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kImageText);
      CHECK(r.correct_steps == d);
      CHECK(r.perfect());
      CHECK(r.solved);
      CHECK(r.halt == HaltReason::kSolved);
      REQUIRE(static_cast<int>(r.steps.size()) == d);
      for (const StepRecord& s : r.steps) CHECK(s.delta == -1);
      CHECK(r.steps[0].options == e.options);
      CHECK_FALSE(harvest_recovery_start(r).has_value());
      replay(ctx, e, round_trip(r));
    }
  }
}

TEST_CASE("closed loop parse-failure policies") {
  const ScriptedAgent malformed = scripted(ScriptedKind::kMalformed);
  RunOptions halt;
  halt.parse_fail_policy = ParseFailPolicy::kHalt;
  for (int i = 0; i < 40; ++i) {
    const Episode e = gen_closed_loop(test_oracle(), kGen, 3, i);
    const EpisodeResult h = run_item(context(halt), malformed, e, Modality::kText);
    REQUIRE(h.steps.size() == 1);
    CHECK(h.halt == HaltReason::kParseFail);
    CHECK_FALSE(h.steps[0].chosen.has_value());
    CHECK(h.correct_steps == 0);
    CHECK(*harvest_recovery_start(h) == e.state);

    // Fallback A: progress exactly while slot A holds a progress move.
    const EpisodeResult f = run_item(context(), malformed, e, Modality::kText);
    CubeState s = e.state;
    for (const StepRecord& step : f.steps) {
      CHECK(step.fallback);
      CHECK_FALSE(step.credited);
      CHECK(*step.chosen == step.options[0]);
      const int before = bfs(s);
      s = s.apply(step.options[0]);
      CHECK(step.delta == bfs(s) - before);
      if (step.delta >= 0) CHECK(step.halt == HaltReason::kNonProgress);
    }
    CHECK(f.correct_steps == 0);
    if (f.halt == HaltReason::kNonProgress) CHECK(*harvest_recovery_start(f) == s);
    replay(context(), e, round_trip(f));
  }
}

TEST_CASE("closed loop abstention") {
  const ScriptedAgent idk = scripted(ScriptedKind::kAlwaysIdk);
  RunOptions teacher;
  teacher.abstain.enabled = true;
  RunOptions skip = teacher;
  skip.abstain.policy = AbstainPolicy::kSkipItem;
  for (int i = 0; i < 10; ++i) {
    const Episode e = gen_closed_loop(test_oracle(), kGen, 4, i);
    const EpisodeResult t = run_item(context(teacher), idk, e, Modality::kImageText);
    CHECK(t.steps.size() == 4);
    CHECK(t.correct_steps == 0);
    CHECK(t.solved);
    CHECK(t.exchanges[0].template_id == "closed_loop_idk");
    for (const StepRecord& s : t.steps) {
      CHECK(s.abstained);
      CHECK(s.delta == -1);
    }
    const EpisodeResult k = run_item(context(skip), idk, e, Modality::kImageText);
    REQUIRE(k.steps.size() == 1);
    CHECK(k.halt == HaltReason::kAbstain);
    replay(context(skip), e, round_trip(k));
  }
  // Without abstention enabled IDK is a parse failure.
  const Episode e = gen_closed_loop(test_oracle(), kGen, 2, 0);
  RunOptions halt;
  halt.parse_fail_policy = ParseFailPolicy::kHalt;
  CHECK(run_item(context(halt), idk, e, Modality::kText).halt == HaltReason::kParseFail);
}

TEST_CASE("transport failure mid-episode fails closed") {
  const Episode e = gen_closed_loop(test_oracle(), kGen, 4, 1);
  const ScriptedAgent oracle = scripted(ScriptedKind::kOracle);
  const FnAgent flaky("flaky", [&](const AgentRequest& r) {
    if (r.view.step == 2) {
      Completion c;
      c.failure = AgentFailure::kTransport;
      c.message = "connection reset";
      return c;
    }
    return oracle.complete(r);
  });
  const EpisodeResult r = run_item(context(), flaky, e, Modality::kText);
  CHECK(r.infra_error());
  CHECK(r.failure == AgentFailure::kTransport);
  REQUIRE(r.steps.size() == 2);
  CHECK(r.halt == HaltReason::kParseFail);
  CHECK(r.correct_steps == 1);
  replay(context(), e, round_trip(r));
}

TEST_CASE("recovery with synthetic starts") {
  RunOptions opt;
  opt.recovery_start = RecoveryStart::kSynthetic;
  const RunContext ctx = context(opt);
  for (int d = 1; d <= 4; ++d) {
    for (int i = 0; i < 10; ++i) {
      Episode e = gen_closed_loop(test_oracle(), kGen, d, i);
      e.task = Task::kRecovery;
      const CubeState start = synthetic_recovery_start(test_oracle(), e);
      const int k = bfs(start);
      CHECK(k >= d);

      const EpisodeResult o = run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kText);
      CHECK(o.budget == d + 3);
      CHECK(o.start_distance == k);
      CHECK(o.solved);
      CHECK(o.attempts == k);
      for (const StepRecord& s : o.steps) {
        CHECK(s.delta == -1);
        CHECK(parse_facelet_string(s.state_before).apply(*s.chosen).apply(parse_moves(s.plan_after)).is_solved());
      }

      const EpisodeResult m = run_item(ctx, scripted(ScriptedKind::kMalformed), e, Modality::kText);
      CHECK_FALSE(m.solved);
      CHECK(m.attempts == d + 3);
      CHECK(m.halt == HaltReason::kBudget);
      for (const StepRecord& s : m.steps) CHECK(s.update == RecoveryUpdate::kParseFail);

      // One non-progress pick, then the oracle.
      const ScriptedAgent oracle = scripted(ScriptedKind::kOracle);
      const FnAgent detour("detour", [&](const AgentRequest& r) {
        if (r.view.step != 1) return oracle.complete(r);
        const int best = oracle_choice(test_oracle(), r.view.state, r.view.options);
        return text(format_choice((best + 1) % 4));
      });
      const EpisodeResult p = run_item(ctx, detour, e, Modality::kText);
      REQUIRE_FALSE(p.steps.empty());
      const StepRecord& first = p.steps[0];
      CHECK(first.update == RecoveryUpdate::kPushInverse);
      CHECK(first.delta >= 0);
      CHECK(parse_moves(first.plan_after).front() == first.chosen->inverse());
      const int after = k + first.delta;
      if (1 + after <= d + 3) {
        CHECK(p.solved);
        CHECK(p.attempts == 1 + after);
      } else {
        CHECK_FALSE(p.solved);
      }
      replay(ctx, e, round_trip(p));
      replay(ctx, e, round_trip(o));
    }
  }
}

TEST_CASE("recovery with harvested starts") {
  RunOptions halt;
  halt.parse_fail_policy = ParseFailPolicy::kHalt;
  const RunContext ctx = context(halt);
  const Episode cl = gen_closed_loop(test_oracle(), kGen, 2, 3);
  Episode rec = cl;
  rec.task = Task::kRecovery;
  const EpisodeResult source = run_item(ctx, scripted(ScriptedKind::kMalformed), cl, Modality::kText);
  const EpisodeResult r = run_item(ctx, scripted(ScriptedKind::kOracle), rec, Modality::kText, &source);
  CHECK(r.has_start);
  CHECK(r.start_facelets == to_facelet_string(cl.state));
  CHECK(r.attempts == 2);
  CHECK(r.solved);

  const EpisodeResult solved = run_item(ctx, scripted(ScriptedKind::kOracle), cl, Modality::kText);
  const EpisodeResult none = run_item(ctx, scripted(ScriptedKind::kOracle), rec, Modality::kText, &solved);
  CHECK_FALSE(none.has_start);
  CHECK(none.exchanges.empty());
  CHECK_THROWS_AS(run_item(ctx, scripted(ScriptedKind::kOracle), rec, Modality::kText), Error);
}

TEST_CASE("replay detects tampering") {
  const RunContext ctx = context();
  const Episode e = gen_closed_loop(test_oracle(), kGen, 3, 5);
  EpisodeResult r = run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kText);
  r.steps[1].delta = 0;
  CHECK_THROWS_AS(replay(ctx, e, r), Error);
  EpisodeResult other = run_item(ctx, scripted(ScriptedKind::kOracle), e, Modality::kText);
  other.exchanges[2].raw = format_choice((other.steps[2].choice + 1) % 4);
  CHECK_THROWS_AS(replay(ctx, e, other), Error);
}

TEST_CASE("concurrent runs match sequential runs") {
  const RunContext ctx = context();
  const Batch b = generate_batch(test_oracle(), kGen, Task::kClosedLoop, 3, 12);
  ScriptedSpec noisy{ScriptedKind::kNoisyOracle};
  noisy.p = 0.4;
  noisy.seed = 5;
  const ScriptedAgent base("noisy", noisy, oracle_ptr());
  const FnAgent wide("noisy", [&](const AgentRequest& r) { return base.complete(r); }, 4);
  std::vector<WorkItem> items;
  for (const Episode& e : b.episodes) items.push_back({&e, Modality::kText});
  int seen = 0;
  const auto seq = run_items(ctx, base, items);
  const auto par = run_items(ctx, wide, items, [&](const EpisodeResult&) { ++seen; });
  CHECK(seen == 12);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(to_json(seq[i]) == to_json(par[i]));
}

TEST_CASE("result store resumes") {
  const auto dir = std::filesystem::temp_directory_path() / "cubeeval-test-store";
  std::filesystem::remove_all(dir);
  const RunContext ctx = context();
  std::vector<EpisodeResult> all;
  for (int i = 0; i < 4; ++i)
    all.push_back(run_item(ctx, scripted(ScriptedKind::kOracle),
                           gen_move_prediction(test_oracle(), kGen, i), Modality::kText));
  EpisodeResult failed = all[3];
  failed.failure = AgentFailure::kTimeout;
  {
    ResultStore store(dir);
    CHECK(store.completed().empty());
    store.append(all[1]);
    store.append(all[0]);
    store.append(failed);
  }
  {
    std::ofstream torn(dir / "results.jsonl", std::ios::app);
    torn << "{\"schema\": \"cubeeval-res";
  }
  ResultStore again(dir);
  CHECK(again.completed().size() == 2);
  CHECK(again.completed().count({"oracle", all[0].item_id}) == 1);
  CHECK(again.completed().count({"oracle", all[3].item_id}) == 0);
  again.append(all[2]);
  again.append(all[3]);
  again.finalize(all);
  const auto loaded = ResultStore::load(dir / "results.jsonl");
  REQUIRE(loaded.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(to_json(loaded[i]) == to_json(all[i]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("run options JSON") {
  RunOptions o;
  o.abstain.enabled = true;
  o.abstain.policy = AbstainPolicy::kSkipItem;
  o.abstain.confidence_threshold = 0.7;
  o.parse_fail_policy = ParseFailPolicy::kHalt;
  o.regime = ReflectionRegime::kUnredacted;
  o.recovery_start = RecoveryStart::kSynthetic;
  o.format = StateFormat::kFacelets;
  CHECK(to_json(run_options_from_json(to_json(o))) == to_json(o));
  Json bad = to_json(o);
  bad["abstain"]["lambda"] = 1.5;
  CHECK_THROWS_AS(run_options_from_json(bad), Error);
  CHECK(recovery_budget(1) == 4);
  CHECK(recovery_budget(4) == 7);
}

}  // namespace
}  // namespace cubeeval
