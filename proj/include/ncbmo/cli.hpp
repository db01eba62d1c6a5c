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

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncbmo/interval.hpp"
#include "ncbmo/verify.hpp"

namespace ncbmo {

inline constexpr const char* kVersion = "0.3.0";

/// A filtration read from a spec file, with an optional element.
///
/// Line-oriented format, '#' starts a comment:
///
///   dim 4                       ambient dimension (required first)
///   factors 2 2                 tensor factor sizes, product = dim
///   density uniform             or: diag w1 .. wN
///                               or: tensor a1 a2 | b1 b2   (diagonal factors)
///                               or: matrix, followed by N rows of N entries
///   level scalar                one line per level, smallest first
///   level diagonal
///   level full
///   level blocks 2x1 1x2        block_size x multiplicity, consecutive
///   level tensor full scalar    one token per factor: full|scalar|diagonal
///   element identity            or: diag v1 .. vN, or: matrix + N rows
///
/// Matrix entries are "re" or "re:im". The shortcut
///   dyadic depth 3 fiber 2
/// replaces dim/levels with the dyadic step-function filtration; a density
/// line then describes the fiber state.
struct FiltrationSpec {
  std::shared_ptr<const Filtration> filtration;
  std::optional<Matrix> element;
};

/// Throws ParseError with the line number on any violation.
FiltrationSpec parse_filtration_spec(std::istream& in);
FiltrationSpec parse_filtration_spec_file(const std::string& path);

enum class OutputFormat { Json, Csv };

struct RunConfig {
  std::string command;  // norms, jn, inclusion, largedev, counterexample, interval, sweep
  std::string spec_path;
  std::vector<double> p_list;  // command default when empty
  std::optional<double> eta;
  std::uint64_t seed = 1;
  int ensemble = 4;
  OutputFormat format = OutputFormat::Json;
  std::string out_path;  // stdout when empty
  bool positive_witness = false;
  std::vector<double> t_list{1.0, 2.0, 4.0, 8.0};
  std::vector<int> n_list{2, 4, 8};
};

/// Runs one command and returns its report. Throws on bad input.
VerifyReport execute(const RunConfig& config);

/// Effective configuration as serialized in every report.
nlohmann::json config_json(const RunConfig& config);
nlohmann::json report_json(const VerifyReport& report, const RunConfig& config);

/// Long format, one row per value:
/// check,label,sample,key,value,pass,hard
std::string report_csv(const VerifyReport& report);

/// Executes and writes the report. Exit codes: 0 pass, 1 assertion
/// failure, 2 usage, parse or domain error (message on `err`).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv with CLI11 and runs. Usage errors return 2.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ncbmo
