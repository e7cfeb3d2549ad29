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

#include "cubeeval/task.hpp"

#include <string>

#include "cubeeval/error.hpp"

namespace cubeeval {

std::string_view task_name(Task t) {
  switch (t) {
    case Task::kFaceRecon: return "face_recon";
    case Task::kVerification: return "verification";
    case Task::kMovePrediction: return "move_prediction";
    case Task::kReflection: return "reflection";
    case Task::kClosedLoop: return "closed_loop";
    case Task::kMoveEffect: return "move_effect";
    case Task::kRecovery: return "recovery";
  }
  return "?";
}

Task task_from_name(std::string_view name) {
  for (Task t : kAllTasks)
    if (task_name(t) == name) return t;
  throw Error(ErrorCode::kConfigError, "unknown task '" + std::string(name) + "'");
}

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kImageText: return "image+text";
    case Modality::kText: return "text";
    case Modality::kImage: return "image";
  }
  return "?";
}

Modality modality_from_name(std::string_view name) {
  for (Modality m : {Modality::kImageText, Modality::kText, Modality::kImage})
    if (modality_name(m) == name) return m;
  throw Error(ErrorCode::kConfigError, "unknown modality '" + std::string(name) + "'");
}

bool modality_supported(Task t, Modality m) {
  switch (t) {
    case Task::kFaceRecon: return m == Modality::kImage;
    case Task::kVerification:
    case Task::kReflection: return m == Modality::kImageText;
    case Task::kMovePrediction: return true;
    case Task::kClosedLoop:
    case Task::kMoveEffect:
    case Task::kRecovery: return has_text(m);
  }
  return false;
}

Modality default_modality(Task t) {
  switch (t) {
    case Task::kFaceRecon: return Modality::kImage;
    case Task::kMoveEffect: return Modality::kText;
    default: return Modality::kImageText;
  }
}

}  // namespace cubeeval
