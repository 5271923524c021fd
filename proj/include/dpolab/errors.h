// Copyright 2026 The dpolab Authors.
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

#ifndef DPOLAB_ERRORS_H_
#define DPOLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dpolab {

// Invalid user-supplied configuration (bad bounds, unknown keys, parse
// failures). The message names the violated bound.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation precondition (dimension mismatch, index out of
// range, empty batch).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Numerical failure during optimization, e.g. a non-finite gradient.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpolab

#endif  // DPOLAB_ERRORS_H_
