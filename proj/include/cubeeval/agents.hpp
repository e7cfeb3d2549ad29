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

// Agents answer rendered prompts. Remote agents call a chat-completions
// endpoint; scripted agents produce strict-format answers for harness
// checks and see only what a prompt shows, plus an oracle handle for the
// oracle-backed kinds.

#ifndef CUBEEVAL_AGENTS_HPP_
#define CUBEEVAL_AGENTS_HPP_

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cubeeval/cube.hpp"
#include "cubeeval/episodes.hpp"
#include "cubeeval/oracle.hpp"
#include "cubeeval/protocol.hpp"
#include "cubeeval/task.hpp"

namespace cubeeval {

// Agent-visible content of one prompt.
struct AgentView {
  Task task = Task::kMovePrediction;
  Modality modality = Modality::kImageText;
  PromptPhase phase = PromptPhase::kMain;
  int step = 1;
  CubeState state;                    // the state the prompt depicts
  std::optional<FaceGrid> shown_grid; // verification: grid given as text
  std::vector<Move> options;
  bool allow_idk = false;
  int draft_choice = -1;      // reflection phases: letter drafted, -1 for none
  int revealed_answer = -1;   // unredacted reflection: letter the prompt reveals
};

struct AgentRequest {
  std::string item_id;
  PromptBundle prompt;
  AgentView view;
};

enum class AgentFailure { kNone, kTransport, kTimeout, kAuth };
std::string_view agent_failure_name(AgentFailure f);  // "", transport, timeout, auth

struct Usage {
  int tokens_in = 0;
  int tokens_out = 0;
  double latency_ms = 0;
};

struct Completion {
  std::string text;
  Usage usage;
  AgentFailure failure = AgentFailure::kNone;
  std::string message;  // failure detail; never contains credentials

  bool ok() const { return failure == AgentFailure::kNone; }
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual const std::string& name() const = 0;
  // Must be safe to call from several threads at once.
  virtual Completion complete(const AgentRequest& request) const = 0;
  // Requests the runner may have in flight at once.
  virtual int concurrency() const { return 1; }
  // Configuration echo for manifests; carries no secrets.
  virtual Json describe() const = 0;
};

// ---- scripted

enum class ScriptedKind {
  kOracle,
  kNoisyOracle,
  kRandom,
  kConstant,
  kAlwaysYes,
  kAlwaysNo,
  kAlwaysIdk,
  kMalformed,
  kEchoGoldGrid,
  kGridNoise,
};
std::string_view scripted_kind_name(ScriptedKind k);

struct ScriptedSpec {
  ScriptedKind kind = ScriptedKind::kOracle;
  double p = 0;              // noisy_oracle: chance of a random answer
  std::uint64_t seed = 0;    // noisy_oracle, random, grid_noise
  std::string value;         // constant: A-D or a move-effect label
  int k = 1;                 // grid_noise: cells changed
};

// Text a scripted agent emits for one view. The oracle is consulted only by
// the oracle-backed kinds and may be null for the others. Random draws come
// from a stream keyed by (seed, item id, phase, step), so answers do not
// depend on request order.
std::string scripted_act(const ScriptedSpec& spec, const AgentView& view,
                         const std::string& item_id, const DistanceOracle* oracle);

// Index of the option with the smallest successor distance, lowest letter
// on ties.
int oracle_choice(const DistanceOracle& oracle, const CubeState& state,
                  const std::vector<Move>& options);

class ScriptedAgent : public Agent {
 public:
  // Test-only: the oracle handle gives oracle kinds their answers.
  ScriptedAgent(std::string name, ScriptedSpec spec,
                std::shared_ptr<const DistanceOracle> oracle = nullptr);

  const std::string& name() const override { return name_; }
  Completion complete(const AgentRequest& request) const override;
  Json describe() const override;
  const ScriptedSpec& spec() const { return spec_; }

 private:
  std::string name_;
  ScriptedSpec spec_;
  std::shared_ptr<const DistanceOracle> oracle_;
};

// ---- remote

struct EndpointConfig {
  std::string base_url;               // e.g. https://host/v1
  std::string model;
  std::string api_key_env = "CUBEEVAL_API_KEY";
  double timeout_s = 120;
  int max_retries = 3;
  double backoff_base_s = 1.0;        // wait base * 2^retry before retrying
  int concurrency = 4;
  double temperature = 0;
  int max_tokens = 1024;
};

Json to_json(const EndpointConfig& c);
EndpointConfig endpoint_config_from_json(const Json& j);

// Chat-completions request body: a system message and a user message whose
// content parts hold the text and, if present, the image as a data URL.
Json chat_request_body(const EndpointConfig& cfg, const PromptBundle& prompt);

class RemoteAgent : public Agent {
 public:
  RemoteAgent(std::string name, EndpointConfig cfg);
  ~RemoteAgent() override;

  const std::string& name() const override { return name_; }
  // Retries connection failures, timeouts, 429 and 5xx responses with
  // exponential backoff; 401 and 403 fail at once as kAuth.
  Completion complete(const AgentRequest& request) const override;
  int concurrency() const override { return cfg_.concurrency; }
  Json describe() const override;

 private:
  struct Impl;
  std::string name_;
  EndpointConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

// Builds an agent from {"kind": ..., "name": ..., parameters}. Kinds are the
// scripted kind names plus "remote" (parameters: EndpointConfig fields).
// Throws Error(kConfigError) on unknown kinds or bad parameters.
std::unique_ptr<Agent> make_agent(const Json& spec, std::shared_ptr<const DistanceOracle> oracle);

// "kind" or "kind:key=value,key=value"; a bare value after the colon is
// the constant kind's value. Returns the JSON form accepted by make_agent.
Json parse_agent_spec(std::string_view text);

}  // namespace cubeeval

#endif  // CUBEEVAL_AGENTS_HPP_
