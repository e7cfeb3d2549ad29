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

// Task and input-modality identifiers shared by generation, prompting and
// scoring.

#ifndef CUBEEVAL_TASK_HPP_
#define CUBEEVAL_TASK_HPP_

#include <array>
#include <string_view>

namespace cubeeval {

enum class Task {
  kFaceRecon,
  kVerification,
  kMovePrediction,
  kReflection,
  kClosedLoop,
  kMoveEffect,
  kRecovery,
};

inline constexpr std::array<Task, 7> kAllTasks = {
    Task::kFaceRecon,  Task::kVerification, Task::kMovePrediction, Task::kReflection,
    Task::kClosedLoop, Task::kMoveEffect,   Task::kRecovery};

// face_recon verification move_prediction reflection closed_loop
// move_effect recovery
std::string_view task_name(Task t);
// Throws Error(kConfigError) for unknown names.
Task task_from_name(std::string_view name);

enum class Modality { kImageText, kText, kImage };

std::string_view modality_name(Modality m);  // image+text, text, image
Modality modality_from_name(std::string_view name);

inline bool has_image(Modality m) { return m != Modality::kText; }
inline bool has_text(Modality m) { return m != Modality::kImage; }

// Whether a task's prompt can be posed in the given modality.
bool modality_supported(Task t, Modality m);
Modality default_modality(Task t);

}  // namespace cubeeval

#endif  // CUBEEVAL_TASK_HPP_
