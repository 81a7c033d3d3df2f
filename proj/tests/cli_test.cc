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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "privsynth/cli.h"
#include "privsynth/error.h"
#include "privsynth/hash.h"

namespace privsynth::cli {
namespace {

namespace fs = std::filesystem;
const fs::path kFixtures = PRIVSYNTH_FIXTURES;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("privsynth_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

TEST_CASE("exit codes") {
  Scratch s("exit");
  std::ostringstream out, err;
  const Overrides o;
  CHECK(CmdValidate(kFixtures / "scalar.json", o, out, err) == kExitOk);
  CHECK(CmdValidate(s.dir / "missing.json", o, out, err) == kExitValidation);
  CHECK(CmdSynthesize(kFixtures / "eps_u_zero.json", s.dir / "m.json", o, out,
                      err) == kExitInfeasible);
  CHECK(err.str().find("input distortion budget infeasible") != std::string::npos);
  Overrides neg;
  neg.eps_y = -1.0;
  CHECK(CmdValidate(kFixtures / "scalar.json", neg, out, err) == kExitValidation);
}

TEST_CASE("synthesize, evaluate and simulate round trip") {
  Scratch s("roundtrip");
  std::ostringstream out, err;
  const Overrides o;
  const fs::path model = kFixtures / "scalar.json";
  const std::string before = Sha256File(model);
  REQUIRE(CmdSynthesize(model, s.dir / "m.json", o, out, err) == kExitOk);
  const SynthesisOutputs files = SynthesisOutputs::For(s.dir / "m.json");
  CHECK(fs::exists(files.report));
  CHECK(fs::exists(files.iterations));
  CHECK(fs::exists(files.manifest));
  CHECK(CmdEvaluate(model, s.dir / "m.json", o, s.dir / "eval.json", out, err) ==
        kExitOk);
  CHECK(CmdSimulate(model, s.dir / "m.json", 200, InputWindow::kFull, o,
                    s.dir / "sim.csv", out, err) == kExitOk);
  CHECK(CmdSimulate(model, s.dir / "m.json", 0, InputWindow::kFull, o,
                    s.dir / "bad.csv", out, err) == kExitValidation);
  CHECK(Sha256File(model) == before);

  // Mechanism built for another model.
  CHECK(CmdSimulate(kFixtures / "reactor4.json", s.dir / "m.json", 10,
                    InputWindow::kFull, o, s.dir / "x.csv", out,
                    err) == kExitValidation);

  const nlohmann::json manifest = nlohmann::json::parse(Slurp(files.manifest));
  const std::string csv = Slurp(files.iterations);
  CHECK(csv.rfind("# manifest_sha256=" + manifest["manifest_sha256"].get<std::string>(),
                  0) == 0);
}

TEST_CASE("reruns are byte-identical") {
  Scratch a("rerun_a"), b("rerun_b");
  std::ostringstream out, err;
  const Overrides o;
  const fs::path model = kFixtures / "two_state.json";
  for (const Scratch* s : {&a, &b}) {
    REQUIRE(CmdSynthesize(model, s->dir / "m.json", o, out, err) == kExitOk);
    REQUIRE(CmdSimulate(model, s->dir / "m.json", 500, InputWindow::kFull, o,
                        s->dir / "sim.csv", out, err) == kExitOk);
  }
  for (const char* name : {"m.json", "m.report.json", "m.iterations.csv",
                           "sim.csv", "sim.csv.summary.json"}) {
    CAPTURE(name);
    CHECK(Slurp(a.dir / name) == Slurp(b.dir / name));
  }
}

TEST_CASE("a one-point sweep agrees with synthesize") {
  const ModelFile f = LoadWithOverrides(kFixtures / "scalar.json", {});
  const SynthesisReport r = Synthesize(f.model, f.request);
  REQUIRE(r.ok());
  const std::vector<SweepRow> rows = RunSweep(
      f.model, f.request, {f.request.eps_y}, {f.request.eps_u}, 1);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].has_metrics);
  CHECK(rows[0].metrics.cost == doctest::Approx(r.metrics.cost).epsilon(1e-12));
}

TEST_CASE("an infeasible grid point does not spoil the others") {
  Scratch s("sweep");
  std::ostringstream out, err;
  const Overrides o;
  CHECK(CmdSweep(kFixtures / "scalar.json", {0.5, 1.0}, {0.0, 1.0}, o,
                 s.dir / "sweep.csv", out, err) == kExitOk);
  const ModelFile f = LoadWithOverrides(kFixtures / "scalar.json", {});
  const std::vector<SweepRow> rows =
      RunSweep(f.model, f.request, {0.5, 1.0}, {0.0, 1.0}, 0);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].status == "Infeasible");
  CHECK(rows[1].status == "Optimal");
  CHECK(rows[2].status == "Infeasible");
  CHECK(rows[3].status == "Optimal");
  CHECK(rows[3].eps_y == 1.0);
}

TEST_CASE("grid parsing") {
  const std::vector<double> g = ParseGrid("0.5, 1,inf");
  REQUIRE(g.size() == 3);
  CHECK(std::isinf(g[2]));
  CHECK_THROWS_AS(ParseGrid("1,abc"), ValidationError);
}

}  // namespace
}  // namespace privsynth::cli
