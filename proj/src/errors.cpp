// Copyright 2026 The amrplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "amrplan/errors.hpp"

#include <utility>

namespace amrplan {
namespace {

std::string JoinFields(const std::vector<std::string>& fields) {
  std::string out = "invalid field(s):";
  for (const auto& f : fields) out += " " + f;
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> fields)
    : ConfigError(JoinFields(fields)), fields_(std::move(fields)) {}

}  // namespace amrplan
