//
// Copyright 2026 The privsynth Authors
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
//

#ifndef PRIVSYNTH_CLI_H_
#define PRIVSYNTH_CLI_H_

// Command implementations behind the privsynth tool. Each returns a process
// exit code and writes diagnostics to `err`; none modifies its inputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "privsynth/model.h"
#include "privsynth/sim.h"
#include "privsynth/synth.h"

namespace privsynth::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,  // also I/O and usage errors
  kExitInfeasible = 2,
  kExitSolverFailure = 3,
};

inline constexpr char kToolVersion[] = "privsynth 1.0.0";

struct Overrides {
  std::optional<int> horizon;
  std::optional<double> eps_y;
  std::optional<double> eps_u;
  std::uint64_t seed = 42;
  int jobs = 0;  // 0: OpenMP default
};

// Model file with --k / --eps-y / --eps-u applied, then validated.
ModelFile LoadWithOverrides(const std::filesystem::path& path,
                            const Overrides& o);

// Paths of the files written next to a mechanism file `mech.json`:
// mech.report.json, mech.iterations.csv, mech.manifest.json.
struct SynthesisOutputs {
  std::filesystem::path mechanism, report, iterations, manifest;
  static SynthesisOutputs For(const std::filesystem::path& mechanism);
};

int CmdValidate(const std::filesystem::path& model, const Overrides& o,
                std::ostream& out, std::ostream& err);
int CmdSynthesize(const std::filesystem::path& model,
                  const std::filesystem::path& out_mechanism,
                  const Overrides& o, std::ostream& out, std::ostream& err);
int CmdEvaluate(const std::filesystem::path& model,
                const std::filesystem::path& mechanism, const Overrides& o,
                const std::optional<std::filesystem::path>& out_json,
                std::ostream& out, std::ostream& err);
// Writes out_csv, out_csv + ".summary.json" and out_csv + ".manifest.json".
int CmdSimulate(const std::filesystem::path& model,
                const std::filesystem::path& mechanism, int n_runs,
                InputWindow window, const Overrides& o,
                const std::filesystem::path& out_csv, std::ostream& out,
                std::ostream& err);
// Writes out_csv and out_csv + ".manifest.json".
int CmdSweep(const std::filesystem::path& model,
             const std::vector<double>& eps_y, const std::vector<double>& eps_u,
             const Overrides& o, const std::filesystem::path& out_csv,
             std::ostream& out, std::ostream& err);
// Writes the assembled program in the solver's text dump format.
int CmdDumpProblem(const std::filesystem::path& model, const Overrides& o,
                   const std::filesystem::path& out_txt, std::ostream& out,
                   std::ostream& err);

struct SweepRow {
  double eps_y = 0.0;
  double eps_u = 0.0;
  std::string status;
  std::string message;
  MechanismMetrics metrics;
  bool has_metrics = false;
};

// One synthesis per grid point, eps_Y-major order. Points run in parallel
// when jobs != 1; the result does not depend on the thread count.
std::vector<SweepRow> RunSweep(const SystemModel& model,
                               const SynthesisRequest& base,
                               const std::vector<double>& eps_y,
                               const std::vector<double>& eps_u, int jobs,
                               const SynthesisOptions& opts = {});

void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows,
                   const std::string& manifest_sha256);

// Parses "0.5,1,2,inf".
std::vector<double> ParseGrid(const std::string& text);

// Run manifest. `identity` holds everything that determines the outputs;
// its hash is stamped into every artifact. The wall-clock time lives only in
// the manifest file, outside the hashed part.
struct Manifest {
  nlohmann::json identity;
  std::string Hash() const;
  void Write(const std::filesystem::path& path,
             const std::vector<std::filesystem::path>& artifacts) const;
};
Manifest MakeManifest(const std::string& command,
                      const std::vector<std::filesystem::path>& inputs,
                      const nlohmann::json& options);

}  // namespace privsynth::cli

#endif  // PRIVSYNTH_CLI_H_
