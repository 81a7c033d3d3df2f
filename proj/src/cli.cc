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

#include "privsynth/cli.h"

#include <fmt/format.h>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "privsynth/error.h"
#include "privsynth/hash.h"
#include "privsynth/sdp.h"

namespace privsynth::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Finite values as JSON numbers; inf and nan have no JSON spelling.
json JsonNumber(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

void WriteText(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
  if (!out) throw ParseError("failed writing " + path.string());
}

void WriteJson(const fs::path& path, const json& doc) {
  WriteText(path, doc.dump(2) + "\n");
}

json OverridesJson(const SynthesisRequest& r, std::uint64_t seed) {
  return {{"K", r.horizon},
          {"eps_Y", BudgetToJson(r.eps_y)},
          {"eps_U", BudgetToJson(r.eps_u)},
          {"seed", seed}};
}

int ExitFor(sdp::SolveStatus s) {
  switch (s) {
    case sdp::SolveStatus::kOptimal:
      return kExitOk;
    case sdp::SolveStatus::kInfeasible:
      return kExitInfeasible;
    default:
      return kExitSolverFailure;
  }
}

void SetJobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

fs::path WithSuffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs `body`, mapping library exceptions onto exit codes.
template <typename Fn>
int Guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const ExtractionFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

ModelFile LoadWithOverrides(const fs::path& path, const Overrides& o) {
  ModelFile f = ParseModelFile(path);
  if (o.horizon) f.request.horizon = *o.horizon;
  if (o.eps_y) f.request.eps_y = *o.eps_y;
  if (o.eps_u) f.request.eps_u = *o.eps_u;
  const ValidationReport report = Validate(f.model, f.request);
  if (!report.ok()) throw ValidationError(report.ToString());
  return f;
}

SynthesisOutputs SynthesisOutputs::For(const fs::path& mechanism) {
  fs::path stem = mechanism;
  if (stem.extension() == ".json") stem.replace_extension();
  return {mechanism, WithSuffix(stem, ".report.json"),
          WithSuffix(stem, ".iterations.csv"),
          WithSuffix(stem, ".manifest.json")};
}

// ---------------------------------------------------------------------------
// Manifest.

std::string Manifest::Hash() const { return Sha256Hex(identity.dump()); }

void Manifest::Write(const fs::path& path,
                     const std::vector<fs::path>& artifacts) const {
  json doc = identity;
  doc["manifest_sha256"] = Hash();
  json list = json::array();
  for (const fs::path& a : artifacts) {
    list.push_back({{"file", a.filename().string()}, {"sha256", Sha256File(a)}});
  }
  doc["artifacts"] = list;
  doc["wall_clock"] = UtcTimestamp();
  WriteJson(path, doc);
}

Manifest MakeManifest(const std::string& command,
                      const std::vector<fs::path>& inputs,
                      const json& options) {
  Manifest m;
  m.identity["tool"] = kToolVersion;
  m.identity["command"] = command;
  json list = json::array();
  for (const fs::path& p : inputs) {
    list.push_back({{"file", p.filename().string()}, {"sha256", Sha256File(p)}});
  }
  m.identity["inputs"] = list;
  m.identity["options"] = options;
  return m;
}

// ---------------------------------------------------------------------------
// Commands.

int CmdValidate(const fs::path& model, const Overrides& o, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    ModelFile f = ParseModelFile(model);
    if (o.horizon) f.request.horizon = *o.horizon;
    if (o.eps_y) f.request.eps_y = *o.eps_y;
    if (o.eps_u) f.request.eps_u = *o.eps_u;
    const ValidationReport report = Validate(f.model, f.request);
    if (!report.ok()) {
      err << report.ToString();
      return static_cast<int>(kExitValidation);
    }
    out << fmt::format("ok: n_x={} n_u={} n_y={} n_s={} K={}\n", f.model.nx(),
                       f.model.nu(), f.model.ny(), f.model.ns(),
                       f.request.horizon);
    return static_cast<int>(kExitOk);
  });
}

int CmdSynthesize(const fs::path& model, const fs::path& out_mechanism,
                  const Overrides& o, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    const ModelFile f = LoadWithOverrides(model, o);
    const Manifest manifest = MakeManifest(
        "synthesize", {model}, OverridesJson(f.request, o.seed));
    const std::string hash = manifest.Hash();
    const SynthesisOutputs paths = SynthesisOutputs::For(out_mechanism);

    const SynthesisReport report = Synthesize(f.model, f.request);
    std::vector<fs::path> artifacts;
    WriteText(paths.iterations, "# manifest_sha256=" + hash + "\n" +
                                    sdp::IterationLogCsv(report.solution.log));
    artifacts.push_back(paths.iterations);
    json rep = ReportToJson(report);
    rep["manifest_sha256"] = hash;
    WriteJson(paths.report, rep);
    artifacts.push_back(paths.report);
    if (report.ok()) {
      const json provenance = {
          {"model_sha256", Sha256File(model)},
          {"request", OverridesJson(f.request, o.seed)},
          {"solver_status", sdp::ToString(report.status)},
          {"manifest_sha256", hash}};
      WriteJson(paths.mechanism, MechanismToJson(*report.mechanism, provenance));
      artifacts.push_back(paths.mechanism);
    }
    manifest.Write(paths.manifest, artifacts);

    for (const std::string& w : report.warnings) err << "warning: " << w << "\n";
    if (!report.ok()) {
      err << "error: " << sdp::ToString(report.status) << ": " << report.message
          << "\n";
      return ExitFor(report.status);
    }
    out << fmt::format(
        "Optimal: cost {} bits (I[S;Z] {} bits, h[H] {} bits), "
        "distortion_Y {}, distortion_U {}\n",
        CsvNumber(report.metrics.cost), CsvNumber(report.metrics.mi_bits),
        CsvNumber(report.metrics.entropy_h_bits),
        CsvNumber(report.metrics.distortion_y),
        CsvNumber(report.metrics.distortion_u));
    return static_cast<int>(kExitOk);
  });
}

namespace {

Mechanism LoadMechanism(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mechanism file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed mechanism file " + path.string() + ": " +
                     e.what());
  }
  return MechanismFromJson(doc);
}

json MetricsJson(const MechanismMetrics& m) {
  return {{"mi_bits", JsonNumber(m.mi_bits)},
          {"mi_bits_entropy_route", JsonNumber(m.mi_bits_entropy_route)},
          {"entropy_H_bits", JsonNumber(m.entropy_h_bits)},
          {"cost", JsonNumber(m.cost)},
          {"distortion_Y", JsonNumber(m.distortion_y)},
          {"distortion_U", JsonNumber(m.distortion_u)}};
}

json StatJson(const SampleStat& s) {
  return {{"mean", JsonNumber(s.mean)}, {"se", JsonNumber(s.se)}};
}

}  // namespace

int CmdEvaluate(const fs::path& model, const fs::path& mechanism,
                const Overrides& o,
                const std::optional<fs::path>& out_json, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    const Mechanism mech = LoadMechanism(mechanism);
    Overrides fixed = o;
    if (!fixed.horizon) fixed.horizon = mech.horizon();
    const ModelFile f = LoadWithOverrides(model, fixed);
    const LiftedSystem lift = BuildLift(f.model, f.request.horizon);
    const MechanismMetrics m = EvaluateMechanism(f.model, lift, f.request, mech);
    const json doc = MetricsJson(m);
    if (out_json) {
      WriteJson(*out_json, doc);
    } else {
      out << doc.dump(2) << "\n";
    }
    return static_cast<int>(kExitOk);
  });
}

int CmdSimulate(const fs::path& model, const fs::path& mechanism, int n_runs,
                InputWindow window, const Overrides& o, const fs::path& out_csv,
                std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    if (n_runs <= 0) {
      err << "error: n_runs must be positive\n";
      return static_cast<int>(kExitValidation);
    }
    const Mechanism mech = LoadMechanism(mechanism);
    Overrides fixed = o;
    if (!fixed.horizon) fixed.horizon = mech.horizon();
    const ModelFile f = LoadWithOverrides(model, fixed);
    mech.CheckCompatible(f.model, f.request.horizon);
    SetJobs(o.jobs);

    json options = OverridesJson(f.request, o.seed);
    options["n_runs"] = n_runs;
    options["window"] = window == InputWindow::kFull ? "full" : "lifted";
    const Manifest manifest =
        MakeManifest("simulate", {model, mechanism}, options);
    const std::string hash = manifest.Hash();

    ExperimentOptions eo;
    eo.n_runs = n_runs;
    eo.seed = o.seed;
    eo.window = window;
    const ExperimentSummary s = RunExperiment(f.model, f.request, mech, eo);
    const LiftedSystem lift = BuildLift(f.model, f.request.horizon);
    const MechanismMetrics closed =
        EvaluateMechanism(f.model, lift, f.request, mech);

    std::ostringstream csv;
    WriteExperimentCsv(csv, s, hash);
    WriteText(out_csv, csv.str());
    const fs::path summary_path = WithSuffix(out_csv, ".summary.json");
    json summary = {
        {"manifest_sha256", hash},
        {"n_runs", s.n_runs},
        {"seed", s.seed},
        {"distortion_Y", StatJson(s.distortion_y)},
        {"distortion_U", StatJson(s.distortion_u)},
        {"distortion_Y_closed_form", JsonNumber(closed.distortion_y)},
        {"distortion_U_closed_form", JsonNumber(closed.distortion_u)},
        {"stacked_mse_zr", StatJson(s.stacked_mse_zr)},
        {"stacked_mse_yu", StatJson(s.stacked_mse_yu)},
        {"predicted_mse_zr", JsonNumber(s.predicted_mse_zr)},
        {"predicted_mse_yu", JsonNumber(s.predicted_mse_yu)}};
    WriteJson(summary_path, summary);
    manifest.Write(WithSuffix(out_csv, ".manifest.json"),
                   {out_csv, summary_path});
    out << fmt::format("{} runs: stacked MSE given (Z,R) {}, given (Y,U) {}\n",
                       n_runs, CsvNumber(s.stacked_mse_zr.mean),
                       CsvNumber(s.stacked_mse_yu.mean));
    return static_cast<int>(kExitOk);
  });
}

std::vector<SweepRow> RunSweep(const SystemModel& model,
                               const SynthesisRequest& base,
                               const std::vector<double>& eps_y,
                               const std::vector<double>& eps_u, int jobs,
                               const SynthesisOptions& opts) {
  std::vector<SweepRow> rows;
  for (double ey : eps_y) {
    for (double eu : eps_u) rows.push_back({ey, eu, "", "", {}, false});
  }
  const int n = static_cast<int>(rows.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    SweepRow& row = rows[i];
    SynthesisRequest req = base;
    req.eps_y = row.eps_y;
    req.eps_u = row.eps_u;
    try {
      const SynthesisReport r = Synthesize(model, req, opts);
      row.status = sdp::ToString(r.status);
      row.message = r.message;
      if (r.ok()) {
        row.metrics = r.metrics;
        row.has_metrics = true;
      }
    } catch (const ExtractionFailure& e) {
      row.status = "ExtractionFailure";
      row.message = e.what();
    } catch (const std::exception& e) {
      row.status = "Error";
      row.message = e.what();
    }
  }
  return rows;
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows,
                   const std::string& manifest_sha256) {
  out << "# manifest_sha256=" << manifest_sha256 << "\n";
  out << "eps_Y,eps_U,cost_bits,mi_bits,entropy_H_bits,distortion_Y,"
         "distortion_U,solver_status\n";
  const double nan = std::nan("");
  for (const SweepRow& r : rows) {
    const MechanismMetrics& m = r.metrics;
    auto v = [&](double x) { return CsvNumber(r.has_metrics ? x : nan); };
    out << CsvNumber(r.eps_y) << ',' << CsvNumber(r.eps_u) << ',' << v(m.cost)
        << ',' << v(m.mi_bits) << ',' << v(m.entropy_h_bits) << ','
        << v(m.distortion_y) << ',' << v(m.distortion_u) << ',' << r.status
        << '\n';
  }
}

std::vector<double> ParseGrid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ValidationError("empty grid entry in '" + text + "'");
    const std::string token = item.substr(b, e - b + 1);
    if (token == "inf" || token == "+inf" || token == "infinity") {
      out.push_back(kUnboundedBudget);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw ValidationError("grid entry '" + token + "' is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("grid is empty");
  for (double v : out) {
    if (std::isnan(v) || v < 0) {
      throw ValidationError(fmt::format("grid value {} is not a budget", v));
    }
  }
  return out;
}

int CmdSweep(const fs::path& model, const std::vector<double>& eps_y,
             const std::vector<double>& eps_u, const Overrides& o,
             const fs::path& out_csv, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    const ModelFile f = LoadWithOverrides(model, o);
    json options = OverridesJson(f.request, o.seed);
    json gy = json::array(), gu = json::array();
    for (double v : eps_y) gy.push_back(BudgetToJson(v));
    for (double v : eps_u) gu.push_back(BudgetToJson(v));
    options["eps_Y_grid"] = gy;
    options["eps_U_grid"] = gu;
    const Manifest manifest = MakeManifest("sweep", {model}, options);
    const std::vector<SweepRow> rows =
        RunSweep(f.model, f.request, eps_y, eps_u, o.jobs);
    std::ostringstream csv;
    WriteSweepCsv(csv, rows, manifest.Hash());
    WriteText(out_csv, csv.str());
    manifest.Write(WithSuffix(out_csv, ".manifest.json"), {out_csv});
    int failed = 0;
    for (const SweepRow& r : rows) {
      if (r.status != "Optimal") {
        ++failed;
        err << fmt::format("point eps_Y={} eps_U={}: {} {}\n", r.eps_y, r.eps_u,
                           r.status, r.message);
      }
    }
    out << fmt::format("{} points, {} not optimal\n", rows.size(), failed);
    return static_cast<int>(kExitOk);
  });
}

int CmdDumpProblem(const fs::path& model, const Overrides& o,
                   const fs::path& out_txt, std::ostream& out,
                   std::ostream& err) {
  return Guarded(err, [&] {
    const ModelFile f = LoadWithOverrides(model, o);
    const LiftedSystem lift = BuildLift(f.model, f.request.horizon);
    const PrivacyProgram p = AssembleProgram(lift, f.model, f.request);
    WriteText(out_txt, sdp::DumpProblem(p.problem));
    out << fmt::format("{} coordinates, {} constraints\n",
                       p.problem.num_coordinates(),
                       p.problem.constraints().size());
    return static_cast<int>(kExitOk);
  });
}

}  // namespace privsynth::cli
