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

// Prompt template files compiled into the library.

#ifndef CUBEEVAL_SRC_TEMPLATE_DATA_HPP_
#define CUBEEVAL_SRC_TEMPLATE_DATA_HPP_

#include <cstddef>

namespace cubeeval::detail {

struct TemplateFile {
  const char* name;  // "<id>.system" or "<id>.user"
  const char* text;
};

extern const TemplateFile kTemplateFiles[];
extern const std::size_t kTemplateFileCount;

}  // namespace cubeeval::detail

#endif  // CUBEEVAL_SRC_TEMPLATE_DATA_HPP_
