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

// Prompt rendering from the shipped templates, and the strict answer
// grammars. Parsers are total: any input yields a ParsedAnswer, and a
// failure carries the reason for the first rule it broke. The accepted
// languages are listed in README.md.

#ifndef CUBEEVAL_PROTOCOL_HPP_
#define CUBEEVAL_PROTOCOL_HPP_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cubeeval/cube.hpp"
#include "cubeeval/oracle.hpp"
#include "cubeeval/task.hpp"
#include "cubeeval/textgen.hpp"

namespace cubeeval {

inline constexpr std::string_view kTemplateSetVersion = "cubeeval-prompts/1";

struct PromptTemplate {
  std::string id;
  std::string system;
  std::string user;
  // Set version plus a hash of both texts.
  std::string version;
};

// Throws Error(kConfigError) for an unknown id.
const PromptTemplate& prompt_template(std::string_view id);
std::vector<std::string> template_ids();

// Replaces every {name} with values.at(name) in one pass; substituted text
// is never rescanned. Throws Error(kMissingPlaceholder) if a name has no
// value.
std::string fill_placeholders(std::string_view text,
                              const std::map<std::string, std::string>& values);

struct ImageAttachment {
  std::string ref;  // path relative to the episode directory, may be empty
  std::string png;
};

struct PromptBundle {
  std::string template_id;
  std::string template_version;
  std::string system;
  std::string user;
  std::optional<ImageAttachment> image;

  // 16 hex digits over system, user and image bytes.
  std::string hash() const;
};

enum class ReflectionRegime { kRedacted, kUnredacted };
std::string_view reflection_regime_name(ReflectionRegime r);
ReflectionRegime reflection_regime_from_name(std::string_view name);

enum class PromptPhase { kMain, kReflect, kReanswer };

// Everything a prompt may show. Fields a template does not reference are
// ignored.
struct PromptContext {
  PromptPhase phase = PromptPhase::kMain;
  CubeState state;
  StateFormat format = StateFormat::kNet;
  std::vector<Move> options;
  FaceGrid front_grid{};  // verification: the grid shown as text
  int distance = 0;       // closed loop and recovery: current distance
  bool allow_idk = false;
  ReflectionRegime regime = ReflectionRegime::kUnredacted;
  std::string model_choice;    // reflection: drafted letter
  std::string correct_answer;  // reflection: gold letter
  std::string reflection;      // re-answer: reflection text
  ImageAttachment image;       // attached iff the modality has an image
};

std::string template_id_for(Task task, Modality modality, const PromptContext& ctx);

// Throws Error(kConfigError) for a modality the task does not support and
// Error(kMissingPlaceholder) if a template needs a value the context lacks.
PromptBundle render_prompt(Task task, Modality modality, const PromptContext& ctx);

// ---- answers

enum class AnswerKind { kChoice, kIdk, kYesNo, kGrid, kEffectQuad, kParseFail };
std::string_view answer_kind_name(AnswerKind k);

struct ParsedAnswer {
  AnswerKind kind = AnswerKind::kParseFail;
  int choice = -1;  // kChoice: 0..3 for A..D
  bool yes = false;
  FaceGrid grid{};
  std::array<MoveEffect, 4> effects{};
  // kEffectQuad and move-effect failures: which of the four lines parsed.
  std::array<bool, 4> effect_ok{};
  std::string reason;  // kParseFail only
  std::string raw;

  bool ok() const { return kind != AnswerKind::kParseFail; }
};

char option_letter(int index);  // 0 -> 'A'

ParsedAnswer parse_choice(std::string_view text, bool allow_idk);
ParsedAnswer parse_yesno(std::string_view text);
ParsedAnswer parse_grid(std::string_view text, bool require_verified_line = false);
ParsedAnswer parse_move_effect(std::string_view text);

std::string format_choice(int index);  // "<ANSWER> B </ANSWER>"
std::string format_idk();              // "<ANSWER> IDK </ANSWER>"
std::string format_yesno(bool yes);    // "Answer: Yes"
std::string format_grid(const FaceGrid& grid, bool verified_line = true);
std::string format_move_effect(const std::array<MoveEffect, 4>& effects);
// Canonical text of a successful parse; empty for kParseFail.
std::string format_answer(const ParsedAnswer& a);

std::optional<MoveEffect> move_effect_from_name(std::string_view name);

}  // namespace cubeeval

#endif  // CUBEEVAL_PROTOCOL_HPP_
