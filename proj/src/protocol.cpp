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

#include "cubeeval/protocol.hpp"

#include <cstdio>

#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"
#include "template_data.hpp"

namespace cubeeval {
namespace {

std::string hex64(std::uint64_t v, int digits = 16) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf + 16 - digits, static_cast<std::size_t>(digits));
}

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
  static const auto table = [] {
    std::map<std::string, PromptTemplate, std::less<>> out;
    for (std::size_t i = 0; i < detail::kTemplateFileCount; ++i) {
      const std::string_view name = detail::kTemplateFiles[i].name;
      const std::size_t dot = name.rfind('.');
      const std::string id(name.substr(0, dot));
      const std::string_view part = name.substr(dot + 1);
      PromptTemplate& t = out[id];
      t.id = id;
      (part == "system" ? t.system : t.user) = detail::kTemplateFiles[i].text;
    }
    for (auto& [id, t] : out)
      t.version = std::string(kTemplateSetVersion) + "#" +
                  hex64(fnv1a64(t.system + '\0' + t.user), 8);
    return out;
  }();
  return table;
}

bool is_ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool is_ident(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

// ---- parsing helpers

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_hs(char c) { return c == ' ' || c == '\t'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

struct Cursor {
  std::string_view s;
  std::size_t i = 0;

  bool done() const { return i >= s.size(); }
  char peek() const { return done() ? '\0' : s[i]; }
  void skip_ws() {
    while (!done() && is_ws(s[i])) ++i;
  }
  void skip_hs() {
    while (!done() && is_hs(s[i])) ++i;
  }
  bool eat(std::string_view lit) {
    if (s.substr(i, lit.size()) != lit) return false;
    i += lit.size();
    return true;
  }
  bool eat_ci(std::string_view lit) {
    if (s.size() - std::min(i, s.size()) < lit.size()) return false;
    for (std::size_t k = 0; k < lit.size(); ++k)
      if (lower(s[i + k]) != lower(lit[k])) return false;
    i += lit.size();
    return true;
  }
  bool eat_newline() {
    if (peek() == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
      i += 2;
      return true;
    }
    if (peek() == '\n') {
      ++i;
      return true;
    }
    return false;
  }
  std::string_view word() {
    const std::size_t start = i;
    while (!done() && ((s[i] >= 'A' && s[i] <= 'Z') || (s[i] >= 'a' && s[i] <= 'z') ||
                       s[i] == '_'))
      ++i;
    return s.substr(start, i - start);
  }
};

ParsedAnswer fail(std::string_view raw, std::string reason) {
  ParsedAnswer a;
  a.kind = AnswerKind::kParseFail;
  a.reason = std::move(reason);
  a.raw = std::string(raw);
  return a;
}

std::string at(const Cursor& c) { return " at offset " + std::to_string(c.i); }

bool contains_ci(std::string_view hay, std::string_view needle) {
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    Cursor c{hay, i};
    if (c.eat_ci(needle)) return true;
  }
  return false;
}

// Answer value after a tag. Returns 0..3 for A..D, 4 for abstention, -1 on
// no match.
int choice_value(Cursor& c, bool allow_idk, bool allow_e) {
  if (allow_idk && c.eat_ci("IDK")) return 4;
  const char ch = lower(c.peek());
  if (ch >= 'a' && ch <= 'd') {
    ++c.i;
    return ch - 'a';
  }
  if (allow_idk && allow_e && ch == 'e') {
    ++c.i;
    return 4;
  }
  return -1;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view id) {
  const auto& table = registry();
  auto it = table.find(id);
  if (it == table.end())
    throw Error(ErrorCode::kConfigError, "unknown prompt template '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> template_ids() {
  std::vector<std::string> out;
  for (const auto& [id, t] : registry()) out.push_back(id);
  return out;
}

std::string fill_placeholders(std::string_view text,
                              const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{' && i + 1 < text.size() && is_ident_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_ident(text[j])) ++j;
      if (j < text.size() && text[j] == '}') {
        const std::string name(text.substr(i + 1, j - i - 1));
        auto it = values.find(name);
        if (it == values.end())
          throw Error(ErrorCode::kMissingPlaceholder, "no value for {" + name + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

std::string PromptBundle::hash() const {
  std::uint64_t h = fnv1a64(system);
  h = fnv1a64(std::string_view("\0", 1), h);
  h = fnv1a64(user, h);
  h = fnv1a64(std::string_view("\0", 1), h);
  if (image) h = fnv1a64(image->png, h);
  return hex64(h);
}

std::string_view reflection_regime_name(ReflectionRegime r) {
  return r == ReflectionRegime::kRedacted ? "redacted" : "unredacted";
}

ReflectionRegime reflection_regime_from_name(std::string_view name) {
  if (name == "redacted") return ReflectionRegime::kRedacted;
  if (name == "unredacted") return ReflectionRegime::kUnredacted;
  throw Error(ErrorCode::kConfigError, "unknown reflection regime '" + std::string(name) + "'");
}

std::string template_id_for(Task task, Modality modality, const PromptContext& ctx) {
  switch (task) {
    case Task::kFaceRecon: return "face_recon";
    case Task::kVerification: return "verification";
    case Task::kMovePrediction:
      switch (modality) {
        case Modality::kImageText: return "move_prediction_image_text";
        case Modality::kText: return "move_prediction_text";
        case Modality::kImage: return "move_prediction_image";
      }
      break;
    case Task::kReflection:
      switch (ctx.phase) {
        case PromptPhase::kMain: return "move_prediction_image_text";
        case PromptPhase::kReflect:
          return ctx.regime == ReflectionRegime::kRedacted ? "reflection_redacted"
                                                           : "reflection_unredacted";
        case PromptPhase::kReanswer: return "reanswer";
      }
      break;
    case Task::kClosedLoop: return ctx.allow_idk ? "closed_loop_idk" : "closed_loop";
    case Task::kMoveEffect: return "move_effect";
    case Task::kRecovery: return "recovery";
  }
  throw Error(ErrorCode::kConfigError, "no template for task");
}

PromptBundle render_prompt(Task task, Modality modality, const PromptContext& ctx) {
  if (!modality_supported(task, modality))
    throw Error(ErrorCode::kConfigError, std::string(task_name(task)) + " does not support " +
                                             std::string(modality_name(modality)) + " prompts");
  const PromptTemplate& tpl = prompt_template(template_id_for(task, modality, ctx));

  std::map<std::string, std::string> values;
  const std::string state_text = to_state_text(ctx.state, ctx.format);
  values["textual_representation"] = state_text;
  values["state_text"] = state_text;
  values["cube_state"] = state_text;
  values["front_face"] = format_front_grid(ctx.front_grid);
  values["n_moves"] = std::to_string(ctx.distance);
  for (Face f : kAllFaces)
    values[std::string(1, face_letter(f)) + "_color"] = std::string(color_name(face_color(f)));
  if (ctx.options.size() == 4) {
    for (int k = 0; k < 4; ++k) {
      const std::string token = ctx.options[static_cast<std::size_t>(k)].token();
      values[std::string("move_") + option_letter(k)] = token;
      values[std::string("option_") + option_letter(k)] = token;
    }
  }
  if (!ctx.model_choice.empty()) values["model_choice"] = ctx.model_choice;
  if (!ctx.correct_answer.empty()) values["correct_answer"] = ctx.correct_answer;
  if (ctx.phase == PromptPhase::kReanswer) values["reflection"] = ctx.reflection;

  PromptBundle out;
  out.template_id = tpl.id;
  out.template_version = tpl.version;
  out.system = fill_placeholders(tpl.system, values);
  out.user = fill_placeholders(tpl.user, values);
  if (has_image(modality)) {
    if (ctx.image.png.empty())
      throw Error(ErrorCode::kMissingPlaceholder, "prompt needs an image attachment");
    out.image = ctx.image;
  }
  return out;
}

// ---- answers

std::string_view answer_kind_name(AnswerKind k) {
  switch (k) {
    case AnswerKind::kChoice: return "choice";
    case AnswerKind::kIdk: return "idk";
    case AnswerKind::kYesNo: return "yesno";
    case AnswerKind::kGrid: return "grid";
    case AnswerKind::kEffectQuad: return "effects";
    case AnswerKind::kParseFail: return "parse_fail";
  }
  return "?";
}

char option_letter(int index) { return static_cast<char>('A' + index); }

std::optional<MoveEffect> move_effect_from_name(std::string_view name) {
  for (MoveEffect e : {MoveEffect::kDecrease, MoveEffect::kNoChange, MoveEffect::kIncrease})
    if (move_effect_name(e) == name) return e;
  return std::nullopt;
}

ParsedAnswer parse_choice(std::string_view text, bool allow_idk) {
  ParsedAnswer out;
  out.raw = std::string(text);
  Cursor c{text};
  c.skip_ws();
  std::string reason;
  int value = -1;
  if (c.eat_ci("<ANSWER>")) {
    c.skip_ws();
    value = choice_value(c, allow_idk, false);
    if (value < 0) {
      reason = "expected an option letter" + at(c);
    } else {
      c.skip_ws();
      if (!c.eat_ci("</ANSWER>")) {
        reason = "expected </ANSWER>" + at(c);
        value = -1;
      }
    }
  } else if (c.eat_ci("ANSWER:")) {
    c.skip_ws();
    value = choice_value(c, allow_idk, true);
    if (value < 0) reason = "expected an option letter" + at(c);
  } else {
    reason = "expected <ANSWER> or ANSWER:" + at(c);
  }
  if (value >= 0) {
    c.skip_ws();
    if (!c.done()) {
      reason = "trailing text" + at(c);
      value = -1;
    }
  }
  if (value < 0 && allow_idk &&
      (contains_ci(text, "i don't know") || contains_ci(text, "i don’t know")))
    value = 4;
  if (value < 0) return fail(text, reason);
  if (value == 4) {
    out.kind = AnswerKind::kIdk;
  } else {
    out.kind = AnswerKind::kChoice;
    out.choice = value;
  }
  return out;
}

ParsedAnswer parse_yesno(std::string_view text) {
  Cursor c{text};
  c.skip_ws();
  if (!c.eat("Answer:")) return fail(text, "expected Answer:" + at(c));
  c.skip_hs();
  bool yes;
  if (c.eat_ci("yes")) {
    yes = true;
  } else if (c.eat_ci("no")) {
    yes = false;
  } else {
    return fail(text, "expected Yes or No" + at(c));
  }
  c.skip_ws();
  if (!c.done()) return fail(text, "trailing text" + at(c));
  ParsedAnswer out;
  out.kind = AnswerKind::kYesNo;
  out.yes = yes;
  out.raw = std::string(text);
  return out;
}

ParsedAnswer parse_grid(std::string_view text, bool require_verified_line) {
  Cursor c{text};
  c.skip_ws();
  if (!c.eat_ci("ANSWER:")) return fail(text, "expected ANSWER:" + at(c));
  FaceGrid grid{};
  for (int row = 0; row < 3; ++row) {
    c.skip_hs();
    if (!c.eat_newline()) return fail(text, "expected a line break" + at(c));
    c.skip_hs();
    if (!c.eat_ci("Row")) return fail(text, "expected Row " + std::to_string(row + 1) + at(c));
    const std::size_t before = c.i;
    c.skip_hs();
    if (c.i == before || !c.eat(std::to_string(row + 1)))
      return fail(text, "expected row number " + std::to_string(row + 1) + at(c));
    c.skip_hs();
    if (!c.eat(":")) return fail(text, "expected ':'" + at(c));
    c.skip_hs();
    if (!c.eat("[")) return fail(text, "expected '['" + at(c));
    for (int col = 0; col < 3; ++col) {
      c.skip_hs();
      if (col > 0) {
        if (!c.eat(",")) return fail(text, "expected ','" + at(c));
        c.skip_hs();
      }
      const std::size_t start = c.i;
      const std::string_view word = c.word();
      const auto color = color_from_name(word);
      if (!color) {
        Cursor probe{text, start};
        while (!probe.done() && !is_ws(probe.peek()) && probe.peek() != ',' &&
               probe.peek() != ']')
          ++probe.i;
        return fail(text, "unknown color '" + std::string(text.substr(start, probe.i - start)) +
                              "' at offset " + std::to_string(start));
      }
      grid[static_cast<std::size_t>(row * 3 + col)] = *color;
    }
    c.skip_hs();
    if (!c.eat("]")) return fail(text, "expected ']'" + at(c));
  }
  c.skip_ws();
  const bool verified = c.eat_ci("Answer verified for correctness.");
  if (require_verified_line && !verified)
    return fail(text, "missing verification line" + at(c));
  c.skip_ws();
  if (!c.done()) return fail(text, "trailing text" + at(c));
  ParsedAnswer out;
  out.kind = AnswerKind::kGrid;
  out.grid = grid;
  out.raw = std::string(text);
  return out;
}

ParsedAnswer parse_move_effect(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    bool blank = true;
    for (char ch : line)
      if (!is_ws(ch)) blank = false;
    if (!blank) lines.push_back(line);
    start = end + 1;
  }

  ParsedAnswer out;
  out.raw = std::string(text);
  std::string reason;
  for (int k = 0; k < 4; ++k) {
    const std::string letter(1, option_letter(k));
    if (static_cast<std::size_t>(k) >= lines.size()) {
      if (reason.empty()) reason = "missing line for option " + letter;
      continue;
    }
    Cursor c{lines[static_cast<std::size_t>(k)]};
    std::string why;
    c.skip_ws();
    if (!c.eat("<" + letter + ">")) {
      why = "expected <" + letter + ">";
    } else {
      c.skip_hs();
      const auto effect = move_effect_from_name(c.word());
      c.skip_hs();
      if (!effect) {
        why = "unknown label";
      } else if (!c.eat("</" + letter + ">")) {
        why = "expected </" + letter + ">";
      } else {
        c.skip_ws();
        if (!c.done()) {
          why = "trailing text";
        } else {
          out.effects[static_cast<std::size_t>(k)] = *effect;
          out.effect_ok[static_cast<std::size_t>(k)] = true;
        }
      }
    }
    if (!why.empty() && reason.empty()) reason = "option " + letter + ": " + why;
  }
  if (reason.empty() && lines.size() > 4) reason = "more than four lines";
  if (!reason.empty()) {
    out.kind = AnswerKind::kParseFail;
    out.reason = reason;
    return out;
  }
  out.kind = AnswerKind::kEffectQuad;
  return out;
}

std::string format_choice(int index) {
  return std::string("<ANSWER> ") + option_letter(index) + " </ANSWER>";
}

std::string format_idk() { return "<ANSWER> IDK </ANSWER>"; }

std::string format_yesno(bool yes) { return yes ? "Answer: Yes" : "Answer: No"; }

std::string format_grid(const FaceGrid& grid, bool verified_line) {
  std::string out = "ANSWER:\n" + format_front_grid(grid);
  if (verified_line) out += "\nAnswer verified for correctness.";
  return out;
}

std::string format_move_effect(const std::array<MoveEffect, 4>& effects) {
  std::string out;
  for (int k = 0; k < 4; ++k) {
    if (k) out += '\n';
    const char l = option_letter(k);
    out += std::string("<") + l + "> " +
           std::string(move_effect_name(effects[static_cast<std::size_t>(k)])) + " </" + l + ">";
  }
  return out;
}

std::string format_answer(const ParsedAnswer& a) {
  switch (a.kind) {
    case AnswerKind::kChoice: return format_choice(a.choice);
    case AnswerKind::kIdk: return format_idk();
    case AnswerKind::kYesNo: return format_yesno(a.yes);
    case AnswerKind::kGrid: return format_grid(a.grid);
    case AnswerKind::kEffectQuad: return format_move_effect(a.effects);
    case AnswerKind::kParseFail: return "";
  }
  return "";
}

}  // namespace cubeeval
