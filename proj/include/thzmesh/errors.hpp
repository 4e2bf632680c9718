// Copyright 2026 The thzmesh Authors. All rights reserved.
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

#ifndef THZMESH_ERRORS_HPP_
#define THZMESH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace thzmesh {

// Invalid configuration values or inconsistent experiment setup.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments outside a function's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// API misuse: mismatched dimensions, missing forward cache, and so on.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised when some node cannot reach the donor.
class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered during training.
class TrainingAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace thzmesh

#endif  // THZMESH_ERRORS_HPP_
