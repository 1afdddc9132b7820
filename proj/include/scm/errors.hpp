// Copyright 2026 The scmopt Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace scm {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (panel files, dimension mismatches).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Weight set {w in [-C_L, C_U]^J : sum w = 1} is empty, or an interval is
// reversed.
class InfeasibleConstraints : public Error {
 public:
  using Error::Error;
};

// Solver failure serious enough that results cannot be trusted.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Requested operation needs information the caller did not supply, e.g. an
// exact risk for a generator without a Gaussian outcome law.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

}  // namespace scm
