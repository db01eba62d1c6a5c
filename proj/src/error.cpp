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

#include "ncbmo/error.hpp"

namespace ncbmo {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonHermitian: return "linalg.NonHermitian";
    case ErrorCode::SingularPower: return "linalg.SingularPower";
    case ErrorCode::BadExponent: return "linalg.BadExponent";
    case ErrorCode::DimensionMismatch: return "algebra.DimensionMismatch";
    case ErrorCode::BadSpec: return "algebra.BadSpec";
    case ErrorCode::NotIncreasing: return "algebra.NotIncreasing";
    case ErrorCode::NotModularInvariant: return "algebra.NotModularInvariant";
    case ErrorCode::StateNotFaithful: return "algebra.StateNotFaithful";
    case ErrorCode::TooLarge: return "martingale.TooLarge";
    case ErrorCode::NotPSD: return "norms.NotPSD";
    case ErrorCode::OptimizerDiverged: return "norms.OptimizerDiverged";
    case ErrorCode::NotCommutative: return "norms.NotCommutative";
    case ErrorCode::LengthMismatch: return "norms.LengthMismatch";
    case ErrorCode::NotNested: return "interval.NotNested";
    case ErrorCode::BadWitness: return "verify.BadWitness";
    case ErrorCode::NotTracial: return "verify.NotTracial";
    case ErrorCode::EmptyStream: return "verify.EmptyStream";
    case ErrorCode::ParseError: return "cli.ParseError";
    case ErrorCode::IoError: return "cli.IoError";
  }
  return "unknown";
}

}  // namespace ncbmo
