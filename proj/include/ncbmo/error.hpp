// Copyright 2026 The ncbmo Authors
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
#include <string_view>

namespace ncbmo {

enum class ErrorCode {
  // linalg
  NonHermitian,
  SingularPower,
  BadExponent,
  // algebra
  DimensionMismatch,
  BadSpec,
  NotIncreasing,
  NotModularInvariant,
  StateNotFaithful,
  // martingale
  TooLarge,
  // norms
  NotPSD,
  OptimizerDiverged,
  NotCommutative,
  LengthMismatch,
  // interval
  NotNested,
  // verify
  BadWitness,
  NotTracial,
  EmptyStream,
  // cli
  ParseError,
  IoError,
};

/// Module-qualified name, e.g. "linalg.NonHermitian".
std::string_view code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ncbmo
