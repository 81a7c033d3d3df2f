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

// privsynth: synthesize and evaluate privacy-preserving distortion
// mechanisms for linear Gaussian systems.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "privsynth/cli.h"
#include "privsynth/error.h"

namespace {

using privsynth::cli::Overrides;

struct RawOverrides {
  std::optional<int> k;
  std::optional<std::string> eps_y, eps_u;
  std::uint64_t seed = 42;
  int jobs = 0;
};

void AddOverrides(CLI::App* app, RawOverrides& raw) {
  app->add_option("--k", raw.k, "Horizon K (overrides the model file)")
      ->check(CLI::PositiveNumber);
  app->add_option("--eps-y", raw.eps_y, "Output distortion budget or 'inf'");
  app->add_option("--eps-u", raw.eps_u, "Input distortion budget or 'inf'");
  app->add_option("--seed", raw.seed, "Random seed")->capture_default_str();
  app->add_option("--jobs", raw.jobs, "Worker threads (0 = all)")
      ->check(CLI::NonNegativeNumber);
}

Overrides Resolve(const RawOverrides& raw) {
  Overrides o;
  o.horizon = raw.k;
  auto budget = [](const std::optional<std::string>& s) -> std::optional<double> {
    if (!s) return std::nullopt;
    return privsynth::cli::ParseGrid(*s).at(0);
  };
  o.eps_y = budget(raw.eps_y);
  o.eps_u = budget(raw.eps_u);
  o.seed = raw.seed;
  o.jobs = raw.jobs;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal privacy-preserving distortion for linear Gaussian systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", privsynth::cli::kToolVersion);

  RawOverrides raw;
  std::string model, mechanism, out;
  std::string grid_y = "inf", grid_u = "inf";
  int runs = 10000;
  std::string window = "full";

  auto* validate = app.add_subcommand("validate", "Check a model file");
  validate->add_option("model", model, "Model JSON")->required();
  AddOverrides(validate, raw);

  auto* synth = app.add_subcommand("synthesize", "Solve for the optimal mechanism");
  synth->add_option("model", model, "Model JSON")->required();
  synth->add_option("-o,--out", out, "Mechanism JSON to write")->required();
  AddOverrides(synth, raw);

  auto* eval = app.add_subcommand("evaluate", "Closed-form metrics of a mechanism");
  eval->add_option("model", model, "Model JSON")->required();
  eval->add_option("mechanism", mechanism, "Mechanism JSON")->required();
  eval->add_option("-o,--out", out, "Metrics JSON (default: stdout)");
  AddOverrides(eval, raw);

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo adversary experiment");
  sim->add_option("model", model, "Model JSON")->required();
  sim->add_option("mechanism", mechanism, "Mechanism JSON")->required();
  sim->add_option("-o,--out", out, "Per-step CSV to write")->required();
  sim->add_option("--runs", runs, "Number of trajectories")->capture_default_str();
  sim->add_option("--window", window, "Disclosed inputs seen: full (K) or lifted (K-1)")
      ->check(CLI::IsMember({"full", "lifted"}))
      ->capture_default_str();
  AddOverrides(sim, raw);

  auto* sweep = app.add_subcommand("sweep", "Optimal cost over a budget grid");
  sweep->add_option("model", model, "Model JSON")->required();
  sweep->add_option("-o,--out", out, "Sweep CSV to write")->required();
  sweep->add_option("--eps-y-grid", grid_y, "Comma-separated eps_Y values")
      ->capture_default_str();
  sweep->add_option("--eps-u-grid", grid_u, "Comma-separated eps_U values")
      ->capture_default_str();
  AddOverrides(sweep, raw);

  auto* dump = app.add_subcommand("dump-problem", "Write the assembled program as text");
  dump->add_option("model", model, "Model JSON")->required();
  dump->add_option("-o,--out", out, "Text file to write")->required();
  AddOverrides(dump, raw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : privsynth::cli::kExitValidation;
  }

  namespace c = privsynth::cli;
  Overrides o;
  try {
    o = Resolve(raw);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return c::kExitValidation;
  }
  if (*validate) return c::CmdValidate(model, o, std::cout, std::cerr);
  if (*synth) return c::CmdSynthesize(model, out, o, std::cout, std::cerr);
  if (*eval) {
    std::optional<std::filesystem::path> target;
    if (!out.empty()) target = out;
    return c::CmdEvaluate(model, mechanism, o, target, std::cout, std::cerr);
  }
  if (*sim) {
    const auto w = window == "lifted" ? privsynth::InputWindow::kLifted
                                      : privsynth::InputWindow::kFull;
    return c::CmdSimulate(model, mechanism, runs, w, o, out, std::cout, std::cerr);
  }
  if (*sweep) {
    std::vector<double> ey, eu;
    try {
      ey = c::ParseGrid(grid_y);
      eu = c::ParseGrid(grid_u);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return c::kExitValidation;
    }
    return c::CmdSweep(model, ey, eu, o, out, std::cout, std::cerr);
  }
  if (*dump) return c::CmdDumpProblem(model, o, out, std::cout, std::cerr);
  return c::kExitValidation;
}
