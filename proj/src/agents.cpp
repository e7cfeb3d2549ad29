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

#include "cubeeval/agents.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"
#include "cubeeval/textgen.hpp"
#include "httplib.h"

namespace cubeeval {
namespace {

enum class AnswerShape { kGrid, kYesNo, kChoice, kEffects, kFreeText };

AnswerShape shape_of(const AgentView& v) {
  if (v.phase == PromptPhase::kReflect) return AnswerShape::kFreeText;
  switch (v.task) {
    case Task::kFaceRecon: return AnswerShape::kGrid;
    case Task::kVerification: return AnswerShape::kYesNo;
    case Task::kMoveEffect: return AnswerShape::kEffects;
    default: return AnswerShape::kChoice;
  }
}

constexpr std::string_view kMalformed = "???";
constexpr std::uint64_t kColorCount = 6;

std::string oracle_answer(const DistanceOracle& oracle, const AgentView& v) {
  switch (shape_of(v)) {
    case AnswerShape::kGrid: return format_grid(front_face_grid(v.state));
    case AnswerShape::kYesNo:
      return format_yesno(v.shown_grid && *v.shown_grid == front_face_grid(v.state));
    case AnswerShape::kChoice: return format_choice(oracle_choice(oracle, v.state, v.options));
    case AnswerShape::kEffects: {
      std::array<MoveEffect, 4> labels{};
      for (std::size_t i = 0; i < 4 && i < v.options.size(); ++i)
        labels[i] = oracle.move_effect_label(v.state, v.options[i]);
      return format_move_effect(labels);
    }
    case AnswerShape::kFreeText: {
      const int best = oracle_choice(oracle, v.state, v.options);
      return std::string("Option ") + option_letter(best) + " leaves the cube closest to solved.";
    }
  }
  return std::string(kMalformed);
}

std::string random_answer(Rng& rng, const AgentView& v) {
  switch (shape_of(v)) {
    case AnswerShape::kGrid: {
      FaceGrid g{};
      for (Color& c : g) c = static_cast<Color>(rng.uniform(kColorCount));
      return format_grid(g);
    }
    case AnswerShape::kYesNo: return format_yesno(rng.bernoulli(0.5));
    case AnswerShape::kChoice:
      return format_choice(static_cast<int>(rng.uniform(std::max<std::size_t>(v.options.size(), 1))));
    case AnswerShape::kEffects: {
      std::array<MoveEffect, 4> labels{};
      for (MoveEffect& e : labels) e = static_cast<MoveEffect>(rng.uniform(3));
      return format_move_effect(labels);
    }
    case AnswerShape::kFreeText: return "I will check each option again.";
  }
  return std::string(kMalformed);
}

std::string constant_answer(const std::string& value, const AgentView& v) {
  switch (shape_of(v)) {
    case AnswerShape::kChoice:
      if (value.size() == 1 && value[0] >= 'A' && value[0] <= 'D') return format_choice(value[0] - 'A');
      break;
    case AnswerShape::kEffects:
      if (auto e = move_effect_from_name(value)) return format_move_effect({*e, *e, *e, *e});
      break;
    case AnswerShape::kYesNo:
      if (value == "Yes" || value == "No") return format_yesno(value == "Yes");
      break;
    case AnswerShape::kFreeText: return "I keep my answer.";
    case AnswerShape::kGrid: break;
  }
  return value;
}

FaceGrid noisy_grid(FaceGrid g, int k, Rng& rng) {
  std::vector<std::size_t> cells(9);
  for (std::size_t i = 0; i < 9; ++i) cells[i] = i;
  for (std::size_t cell : rng.sample(cells, static_cast<std::size_t>(std::clamp(k, 0, 9)))) {
    const auto shift = 1 + rng.uniform(kColorCount - 1);
    g[cell] = static_cast<Color>((static_cast<std::uint64_t>(g[cell]) + shift) % kColorCount);
  }
  return g;
}

bool needs_oracle(ScriptedKind k) {
  return k == ScriptedKind::kOracle || k == ScriptedKind::kNoisyOracle;
}

}  // namespace

std::string_view agent_failure_name(AgentFailure f) {
  switch (f) {
    case AgentFailure::kNone: return "";
    case AgentFailure::kTransport: return "transport";
    case AgentFailure::kTimeout: return "timeout";
    case AgentFailure::kAuth: return "auth";
  }
  return "";
}

std::string_view scripted_kind_name(ScriptedKind k) {
  switch (k) {
    case ScriptedKind::kOracle: return "oracle";
    case ScriptedKind::kNoisyOracle: return "noisy_oracle";
    case ScriptedKind::kRandom: return "random";
    case ScriptedKind::kConstant: return "constant";
    case ScriptedKind::kAlwaysYes: return "always_yes";
    case ScriptedKind::kAlwaysNo: return "always_no";
    case ScriptedKind::kAlwaysIdk: return "always_idk";
    case ScriptedKind::kMalformed: return "malformed";
    case ScriptedKind::kEchoGoldGrid: return "echo_gold_grid";
    case ScriptedKind::kGridNoise: return "grid_noise";
  }
  return "?";
}

int oracle_choice(const DistanceOracle& oracle, const CubeState& state,
                  const std::vector<Move>& options) {
  if (options.empty()) return 0;
  return oracle.optimal_action_set(state, options).front();
}

std::string scripted_act(const ScriptedSpec& spec, const AgentView& view,
                         const std::string& item_id, const DistanceOracle* oracle) {
  Rng rng(spec.seed, "scripted-agent",
          {fnv1a64(item_id), static_cast<std::uint64_t>(view.phase),
           static_cast<std::uint64_t>(view.step)});
  const bool recon = view.task == Task::kFaceRecon;
  switch (spec.kind) {
    case ScriptedKind::kOracle: return oracle_answer(*oracle, view);
    case ScriptedKind::kNoisyOracle:
      return rng.bernoulli(spec.p) ? random_answer(rng, view) : oracle_answer(*oracle, view);
    case ScriptedKind::kRandom: return random_answer(rng, view);
    case ScriptedKind::kConstant: return constant_answer(spec.value, view);
    case ScriptedKind::kAlwaysYes: return format_yesno(true);
    case ScriptedKind::kAlwaysNo: return format_yesno(false);
    case ScriptedKind::kAlwaysIdk: return format_idk();
    case ScriptedKind::kMalformed: return std::string(kMalformed);
    case ScriptedKind::kEchoGoldGrid:
      return recon ? format_grid(front_face_grid(view.state)) : std::string(kMalformed);
    case ScriptedKind::kGridNoise:
      return recon ? format_grid(noisy_grid(front_face_grid(view.state), spec.k, rng))
                   : std::string(kMalformed);
  }
  return std::string(kMalformed);
}

ScriptedAgent::ScriptedAgent(std::string name, ScriptedSpec spec,
                             std::shared_ptr<const DistanceOracle> oracle)
    : name_(std::move(name)), spec_(std::move(spec)), oracle_(std::move(oracle)) {
  if (needs_oracle(spec_.kind) && !oracle_)
    throw Error(ErrorCode::kConfigError,
                std::string(scripted_kind_name(spec_.kind)) + " agent needs an oracle");
  if (spec_.p < 0 || spec_.p > 1) throw Error(ErrorCode::kConfigError, "p must lie in [0, 1]");
}

Completion ScriptedAgent::complete(const AgentRequest& request) const {
  const auto start = std::chrono::steady_clock::now();
  Completion c;
  c.text = scripted_act(spec_, request.view, request.item_id, oracle_.get());
  c.usage.tokens_out = static_cast<int>(c.text.size());
  c.usage.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return c;
}

Json ScriptedAgent::describe() const {
  Json j;
  j["kind"] = scripted_kind_name(spec_.kind);
  j["name"] = name_;
  switch (spec_.kind) {
    case ScriptedKind::kNoisyOracle:
      j["p"] = spec_.p;
      j["seed"] = spec_.seed;
      break;
    case ScriptedKind::kRandom: j["seed"] = spec_.seed; break;
    case ScriptedKind::kConstant: j["value"] = spec_.value; break;
    case ScriptedKind::kGridNoise:
      j["k"] = spec_.k;
      j["seed"] = spec_.seed;
      break;
    default: break;
  }
  return j;
}

// ---- remote

Json to_json(const EndpointConfig& c) {
  return Json{{"base_url", c.base_url},       {"model", c.model},
              {"api_key_env", c.api_key_env}, {"timeout_s", c.timeout_s},
              {"max_retries", c.max_retries}, {"backoff_base_s", c.backoff_base_s},
              {"concurrency", c.concurrency}, {"temperature", c.temperature},
              {"max_tokens", c.max_tokens}};
}

EndpointConfig endpoint_config_from_json(const Json& j) {
  EndpointConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base_s = j.value("backoff_base_s", c.backoff_base_s);
    c.concurrency = j.value("concurrency", c.concurrency);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("endpoint config: ") + e.what());
  }
  if (c.concurrency < 1) throw Error(ErrorCode::kConfigError, "concurrency must be positive");
  if (c.max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  return c;
}

Json chat_request_body(const EndpointConfig& cfg, const PromptBundle& prompt) {
  Json user_content = Json::array();
  user_content.push_back({{"type", "text"}, {"text", prompt.user}});
  if (prompt.image) {
    user_content.push_back(
        {{"type", "image_url"},
         {"image_url",
          {{"url", "data:image/png;base64," + httplib::detail::base64_encode(prompt.image->png)}}}});
  }
  Json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  body["messages"] = Json::array({Json{{"role", "system"}, {"content", prompt.system}},
                                  Json{{"role", "user"}, {"content", user_content}}});
  return body;
}

struct RemoteAgent::Impl {
  explicit Impl(int slots) : slots(slots) {}
  std::counting_semaphore<1024> slots;
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path
};

RemoteAgent::RemoteAgent(std::string name, EndpointConfig cfg)
    : name_(std::move(name)), cfg_(std::move(cfg)) {
  if (cfg_.concurrency < 1 || cfg_.concurrency > 1024)
    throw Error(ErrorCode::kConfigError, "concurrency must lie in [1, 1024]");
  impl_ = std::make_unique<Impl>(cfg_.concurrency);
  const auto scheme_end = cfg_.base_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::kConfigError, "base_url needs a scheme: " + cfg_.base_url);
  const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
  impl_->origin = cfg_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  impl_->path = prefix + "/chat/completions";
}

RemoteAgent::~RemoteAgent() = default;

Json RemoteAgent::describe() const {
  Json j = to_json(cfg_);
  j["kind"] = "remote";
  j["name"] = name_;
  return j;
}

namespace {

std::string content_text(const Json& content) {
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  if (content.is_array())
    for (const Json& part : content)
      if (part.is_object() && part.value("type", "") == "text") out += part.value("text", "");
  return out;
}

}  // namespace

Completion RemoteAgent::complete(const AgentRequest& request) const {
  Completion out;
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) {
    out.failure = AgentFailure::kAuth;
    out.message = "environment variable " + cfg_.api_key_env + " is not set";
    return out;
  }
  const std::string body = chat_request_body(cfg_, request.prompt).dump();
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(impl_->origin);
    const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    const auto sent = std::chrono::steady_clock::now();
    auto res = client.Post(impl_->path, headers, body, "application/json");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - sent).count();

    bool retry = false;
    if (!res) {
      const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                             (res.error() == httplib::Error::Read && elapsed >= cfg_.timeout_s * 0.95);
      out.failure = timed_out ? AgentFailure::kTimeout : AgentFailure::kTransport;
      out.message = httplib::to_string(res.error());
      retry = true;
    } else if (res->status == 401 || res->status == 403) {
      out.failure = AgentFailure::kAuth;
      out.message = "HTTP " + std::to_string(res->status);
    } else if (res->status == 429 || res->status >= 500) {
      out.failure = AgentFailure::kTransport;
      out.message = "HTTP " + std::to_string(res->status);
      retry = true;
    } else if (res->status != 200) {
      out.failure = AgentFailure::kTransport;
      out.message = "HTTP " + std::to_string(res->status);
    } else {
      try {
        const Json reply = Json::parse(res->body);
        out.text = content_text(reply.at("choices").at(0).at("message").at("content"));
        if (reply.contains("usage") && reply["usage"].is_object()) {
          out.usage.tokens_in = reply["usage"].value("prompt_tokens", 0);
          out.usage.tokens_out = reply["usage"].value("completion_tokens", 0);
        }
        out.failure = AgentFailure::kNone;
        out.message.clear();
      } catch (const nlohmann::json::exception&) {
        out.failure = AgentFailure::kTransport;
        out.message = "malformed response body";
      }
    }
    if (!retry || attempt >= cfg_.max_retries) break;
    std::this_thread::sleep_for(std::chrono::duration<double>(cfg_.backoff_base_s * (1 << attempt)));
  }
  out.usage.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---- construction

namespace {

ScriptedKind scripted_kind_from_name(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(ScriptedKind::kGridNoise); ++k)
    if (scripted_kind_name(static_cast<ScriptedKind>(k)) == name) return static_cast<ScriptedKind>(k);
  throw Error(ErrorCode::kConfigError, "unknown agent kind: " + std::string(name));
}

std::string default_name(const Json& spec) {
  std::string name = spec.at("kind").get<std::string>();
  std::string params;
  for (const auto& [key, value] : spec.items()) {
    if (key == "kind" || key == "name" || key == "api_key_env") continue;
    if (!params.empty()) params += ',';
    params += key + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
  }
  return params.empty() ? name : name + "(" + params + ")";
}

}  // namespace

std::unique_ptr<Agent> make_agent(const Json& spec, std::shared_ptr<const DistanceOracle> oracle) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw Error(ErrorCode::kConfigError, "agent spec needs a string \"kind\"");
  const std::string kind = spec["kind"].get<std::string>();
  const std::string name = spec.contains("name") ? spec["name"].get<std::string>() : default_name(spec);
  if (kind == "remote") return std::make_unique<RemoteAgent>(name, endpoint_config_from_json(spec));
  ScriptedSpec s;
  s.kind = scripted_kind_from_name(kind);
  try {
    s.p = spec.value("p", 0.0);
    s.seed = spec.value("seed", std::uint64_t{0});
    s.value = spec.value("value", std::string());
    s.k = spec.value("k", 1);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("agent spec: ") + e.what());
  }
  if (s.kind == ScriptedKind::kConstant && s.value.empty())
    throw Error(ErrorCode::kConfigError, "constant agent needs a value");
  return std::make_unique<ScriptedAgent>(name, s, needs_oracle(s.kind) ? std::move(oracle) : nullptr);
}

Json parse_agent_spec(std::string_view text) {
  Json j;
  const auto colon = text.find(':');
  j["kind"] = std::string(text.substr(0, colon));
  if (colon == std::string_view::npos) return j;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view part = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      j["value"] = std::string(part);
      continue;
    }
    const std::string key(part.substr(0, eq));
    const std::string value(part.substr(eq + 1));
    double number = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), number);
    if (ec == std::errc() && ptr == value.data() + value.size() && key != "name" && key != "model" &&
        key != "value") {
      if (value.find_first_of(".eE") == std::string::npos && value[0] != '-')
        j[key] = std::stoull(value);
      else
        j[key] = number;
    } else {
      j[key] = value;
    }
  }
  return j;
}

}  // namespace cubeeval
