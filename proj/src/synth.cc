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

#include "privsynth/synth.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "privsynth/error.h"
#include "privsynth/gauss.h"
#include "privsynth/random.h"

namespace privsynth {
namespace {

using nlohmann::json;

double MeanDiagonal(const MatrixXd& m) { return m.trace() / m.rows(); }

MatrixXd LowerFactor(const MatrixXd& cov, std::string_view what) {
  return CholeskyOrThrow(cov, what).matrixL();
}

bool Mentions(const std::vector<std::string>& names, std::string_view what) {
  return std::find(names.begin(), names.end(), what) != names.end();
}

}  // namespace

// ---------------------------------------------------------------------------
// Mechanism.

Mechanism::Mechanism(std::vector<MatrixXd> g_blocks, MatrixXd sigma_v,
                     MatrixXd sigma_h)
    : g_blocks_(std::move(g_blocks)),
      sigma_v_(std::move(sigma_v)),
      sigma_h_(std::move(sigma_h)) {
  if (g_blocks_.empty()) throw DimensionError("mechanism has no G blocks");
  const Eigen::Index ny = g_blocks_.front().rows();
  for (const MatrixXd& g : g_blocks_) {
    if (g.rows() != ny || g.cols() != ny) {
      throw DimensionError("G blocks must all be square of the same size");
    }
  }
  const Eigen::Index k = static_cast<Eigen::Index>(g_blocks_.size());
  if (sigma_v_.rows() != k * ny || sigma_v_.cols() != k * ny) {
    throw DimensionError(fmt::format("Sigma_V must be {0}x{0}", k * ny));
  }
  if (sigma_h_.rows() == 0 || sigma_h_.rows() != sigma_h_.cols() ||
      sigma_h_.rows() % k != 0) {
    throw DimensionError(
        fmt::format("Sigma_H must be square with a multiple of {} rows", k));
  }
  chol_v_ = LowerFactor(sigma_v_, "Sigma_V");
  chol_h_ = LowerFactor(sigma_h_, "Sigma_H");
}

void Mechanism::CheckCompatible(const SystemModel& model, int k) const {
  if (horizon() != k || ny() != model.ny() || nu() != model.nu()) {
    throw DimensionError(fmt::format(
        "mechanism is for K={}, n_y={}, n_u={}; model needs K={}, n_y={}, "
        "n_u={}",
        horizon(), ny(), nu(), k, model.ny(), model.nu()));
  }
}

// ---------------------------------------------------------------------------
// Program.

PrivacyProgram AssembleProgram(const LiftedSystem& lift,
                               const SystemModel& model,
                               const SynthesisRequest& request,
                               const SynthesisOptions& opts) {
  PrivacyProgram p;
  p.moments = OutputMoments(lift, model);
  const int k = lift.horizon;
  const int ks = k * model.ns();
  const int ky = k * model.ny();
  const int ku = k * model.nu();
  const MatrixXd& sigma_y = p.moments.cov_y;
  const MatrixXd& sigma_s = p.moments.cov_s;
  const MatrixXd& cross = p.moments.cross_ys;  // C~ Q D~^T
  p.output_weight = request.OutputWeight(model);
  p.input_weight = request.InputWeight(model);
  const MatrixXd n_y = p.output_weight.transpose() * p.output_weight;
  const MatrixXd n_u = p.input_weight.transpose() * p.input_weight;

  const double scale_y = MeanDiagonal(sigma_y);
  p.delta_s = opts.margin * MeanDiagonal(sigma_s);
  // The Sigma_V LMI mixes Sigma_Y-sized and inverse-sized blocks.
  p.delta_v = opts.margin * std::min(scale_y, 1.0 / scale_y);
  const double input_scale =
      std::isfinite(request.eps_u) && request.eps_u > 0
          ? request.eps_u / n_u.trace()
          : 1.0;
  p.delta_h = opts.margin * input_scale;

  sdp::SdpProblem& prob = p.problem;
  p.pi = prob.AddSymmetric("Pi", ks);
  p.sigma_z = prob.AddSymmetric("Sigma_Z", ky);
  p.g = prob.AddBlockDiagonal("G", k, model.ny());
  p.sigma_h = prob.AddSymmetric("Sigma_H", ku);
  prob.SetLogDetWeight(p.pi, 1.0);
  prob.SetLogDetWeight(p.sigma_h, 1.0);

  // [Sigma_S - Pi, (G~ P)^T; G~ P, Sigma_Z] >= 0.
  p.mi_lmi = prob.AddLmi(kMiLmi, ks + ky);
  prob.AddConstant(p.mi_lmi, 0, 0, sigma_s);
  prob.AddVariable(p.mi_lmi, 0, 0, p.pi, -1.0);
  prob.AddProduct(p.mi_lmi, ks, 0, MatrixXd::Identity(ky, ky), p.g, cross);
  prob.AddVariable(p.mi_lmi, ks, ks, p.sigma_z);

  p.pi_positive = prob.AddLmi(kPiPositive, ks, p.delta_s);
  prob.AddVariable(p.pi_positive, 0, 0, p.pi);

  if (std::isfinite(request.eps_y)) {
    // [theta, m^T; m, I] >= 0 with m = W_Y (G~ - I) mu_Y and
    // theta = eps_Y - tr N (Sigma_Z + Sigma_Y) + 2 tr N G~ Sigma_Y.
    const MatrixXd& w = p.output_weight;
    const int rows = static_cast<int>(w.rows());
    const VectorXd& mu = p.moments.mean_y;
    p.output_distortion = prob.AddLmi(kOutputDistortion, 1 + rows);
    MatrixXd theta0(1, 1);
    theta0(0, 0) = request.eps_y - (n_y * sigma_y).trace();
    prob.AddConstant(p.output_distortion, 0, 0, theta0);
    prob.AddTrace(p.output_distortion, 0, 0, p.sigma_z, n_y, -1.0);
    prob.AddTrace(p.output_distortion, 0, 0, p.g, sigma_y * n_y, 2.0);
    prob.AddProduct(p.output_distortion, 1, 0, w, p.g, mu);
    prob.AddConstant(p.output_distortion, 1, 0, -(w * mu));
    prob.AddConstant(p.output_distortion, 1, 1, MatrixXd::Identity(rows, rows));
  }
  if (std::isfinite(request.eps_u)) {
    p.input_distortion = prob.AddLinear(kInputDistortion, request.eps_u);
    prob.AddTrace(p.input_distortion, 0, 0, p.sigma_h, n_u, -1.0);
  }

  // [Sigma_Z, G~; G~^T, Sigma_Y^-1] >= delta I.
  p.sigma_v_lmi = prob.AddLmi(kSigmaVLmi, 2 * ky, p.delta_v);
  prob.AddVariable(p.sigma_v_lmi, 0, 0, p.sigma_z);
  prob.AddProduct(p.sigma_v_lmi, 0, ky, MatrixXd::Identity(ky, ky), p.g,
                  MatrixXd::Identity(ky, ky));
  prob.AddConstant(p.sigma_v_lmi, ky, ky,
                   CholeskyOrThrow(sigma_y, "Sigma_Y")
                       .solve(MatrixXd::Identity(ky, ky)));

  p.sigma_h_positive = prob.AddLmi(kSigmaHPositive, ku, p.delta_h);
  prob.AddVariable(p.sigma_h_positive, 0, 0, p.sigma_h);
  return p;
}

VectorXd AnalyticStart(const PrivacyProgram& p,
                       const SynthesisRequest& request) {
  const MatrixXd& sigma_y = p.moments.cov_y;
  const MatrixXd& sigma_s = p.moments.cov_s;
  const Eigen::Index ky = sigma_y.rows();
  const Eigen::Index ks = sigma_s.rows();
  const Eigen::Index ku = p.input_weight.cols();
  const MatrixXd n_y = p.output_weight.transpose() * p.output_weight;
  const MatrixXd n_u = p.input_weight.transpose() * p.input_weight;

  double sigma = MeanDiagonal(sigma_y);
  if (std::isfinite(request.eps_y) && n_y.trace() > 0) {
    sigma = std::min(sigma, 0.5 * request.eps_y / n_y.trace());
  }
  std::vector<MatrixXd> values(p.problem.variables().size());
  values[p.g] = MatrixXd::Identity(ky, ky);
  values[p.sigma_z] = sigma_y + sigma * MatrixXd::Identity(ky, ky);
  const MatrixXd cross = p.moments.cross_ys;
  const MatrixXd schur =
      sigma_s - cross.transpose() *
                    values[p.sigma_z].llt().solve(cross);
  const double lam = MinEigenvalue(Symmetrize(schur));
  values[p.pi] = 0.5 * std::max(lam, 0.0) * MatrixXd::Identity(ks, ks);
  const double h = std::isfinite(request.eps_u)
                       ? request.eps_u / (2.0 * n_u.trace())
                       : 1.0;
  values[p.sigma_h] = h * MatrixXd::Identity(ku, ku);
  return p.problem.Pack(values);
}

// ---------------------------------------------------------------------------
// Metrics.

MechanismMetrics EvaluateMechanism(const SystemModel& model,
                                   const LiftedSystem& lift,
                                   const SynthesisRequest& request,
                                   const Mechanism& mech) {
  mech.CheckCompatible(model, lift.horizon);
  const LiftedMoments mom = OutputMoments(lift, model);
  const MatrixXd g = mech.GTilde();
  MechanismMetrics out;
  const GaussianJoint joint =
      JointZsMoments(mom, model.ny(), g, mech.sigma_v());
  const MutualInformation mi = MutualInformationBits(joint);
  out.mi_bits = mi.bits;
  out.mi_infinite = mi.schur_singular;
  out.mi_bits_entropy_route = MutualInformationFromEntropies(joint);
  out.entropy_h_bits = EntropyBits(mech.sigma_h());
  out.cost = out.mi_bits - out.entropy_h_bits;

  const MatrixXd w_y = request.OutputWeight(model);
  const MatrixXd w_u = request.InputWeight(model);
  const MatrixXd n_y = w_y.transpose() * w_y;
  const MatrixXd sigma_z = g * mom.cov_y * g.transpose() + mech.sigma_v();
  const MatrixXd ky_id = MatrixXd::Identity(g.rows(), g.cols());
  out.distortion_y = (n_y * (sigma_z + mom.cov_y)).trace() -
                     2.0 * (n_y * g * mom.cov_y).trace() +
                     (w_y * (g - ky_id) * mom.mean_y).squaredNorm();
  out.distortion_u = (w_u * mech.sigma_h() * w_u.transpose()).trace();
  return out;
}

// ---------------------------------------------------------------------------
// Synthesis.

SynthesisReport Synthesize(const SystemModel& model,
                           const SynthesisRequest& request,
                           const SynthesisOptions& opts) {
  const LiftedSystem lift = BuildLift(model, request.horizon);
  const PrivacyProgram program = AssembleProgram(lift, model, request, opts);
  SynthesisReport report;
  report.solution = sdp::Solve(program.problem, opts.solver,
                               AnalyticStart(program, request));
  report.status = report.solution.status;
  report.message = report.solution.message;
  const auto& blocking = report.solution.blocking_constraints;
  if (report.status == sdp::SolveStatus::kInfeasible) {
    if (Mentions(blocking, kInputDistortion)) {
      report.message = "input distortion budget infeasible: " + report.message;
    } else if (Mentions(blocking, kOutputDistortion)) {
      report.message = "output distortion budget infeasible: " + report.message;
    }
  }
  if (report.status == sdp::SolveStatus::kUnbounded &&
      !std::isfinite(request.eps_u)) {
    report.message =
        "unbounded: eps_U = inf lets h[H] grow without limit (" +
        report.message + ")";
  }
  if (report.status != sdp::SolveStatus::kOptimal) return report;

  const auto& values = report.solution.values;
  const MatrixXd& g = values[program.g];
  report.sigma_z = values[program.sigma_z];
  report.pi = values[program.pi];
  const MatrixXd& sigma_y = program.moments.cov_y;
  const MatrixXd sigma_v =
      Symmetrize(report.sigma_z - g * sigma_y * g.transpose());
  report.sigma_v_min_eigenvalue = MinEigenvalue(sigma_v);
  if (!(report.sigma_v_min_eigenvalue > 0)) {
    throw ExtractionFailure(fmt::format(
        "extracted Sigma_V is not PD (min eigenvalue {:.6e}, margin {:.3e})",
        report.sigma_v_min_eigenvalue, program.delta_v));
  }
  const int ny = model.ny();
  std::vector<MatrixXd> blocks;
  for (int k = 0; k < lift.horizon; ++k) {
    blocks.push_back(g.block(k * ny, k * ny, ny, ny));
  }
  const MatrixXd sigma_h = Symmetrize(values[program.sigma_h]);
  try {
    report.mechanism.emplace(blocks, sigma_v, sigma_h);
  } catch (const NotPositiveDefiniteError& e) {
    throw ExtractionFailure(std::string("mechanism rejected: ") + e.what());
  }
  const Mechanism& mech = *report.mechanism;
  report.reconstruction_error =
      (report.sigma_z - (g * sigma_y * g.transpose() + mech.sigma_v())).norm() /
      report.sigma_z.norm();

  report.metrics = EvaluateMechanism(model, lift, request, mech);
  const double n_h = static_cast<double>(sigma_h.rows());
  const double log2_2pie = std::log2(2.0 * std::numbers::pi * std::numbers::e);
  const double logdet_s = LogDet(CholeskyOrThrow(program.moments.cov_s, "Sigma_S"));
  report.cost_from_solver = 0.5 * logdet_s / std::numbers::ln2 +
                            report.solution.objective / (2.0 * std::numbers::ln2) -
                            0.5 * n_h * log2_2pie;
  report.reconciliation_gap = report.metrics.cost - report.cost_from_solver;

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (std::abs(blocks[k].determinant()) < 1e-10) {
      report.g_near_singular = true;
      report.warnings.push_back(fmt::format(
          "G_{} is near-singular (|det| = {:.3e})", k + 1,
          std::abs(blocks[k].determinant())));
    }
  }
  auto tight = [](double eps, double used) {
    return std::isfinite(eps) && eps - used <= 1e-4 * std::max(eps, 1e-300);
  };
  report.output_budget_tight = tight(request.eps_y, report.metrics.distortion_y);
  report.input_budget_tight = tight(request.eps_u, report.metrics.distortion_u);
  if (std::isfinite(request.eps_y) && std::isfinite(request.eps_u) &&
      !report.output_budget_tight && !report.input_budget_tight) {
    report.warnings.push_back("no distortion budget is active at the optimum");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sampling.

VectorXd SampleOutputNoise(const Mechanism& mech, std::uint64_t seed,
                           std::uint64_t run) {
  auto rng = MakeStream(seed, run, StreamTag::kOutputMechanism);
  return mech.chol_v() * StandardNormal(rng, mech.chol_v().rows());
}

VectorXd SampleInputNoise(const Mechanism& mech, std::uint64_t seed,
                          std::uint64_t run) {
  auto rng = MakeStream(seed, run, StreamTag::kInputMechanism);
  return mech.chol_h() * StandardNormal(rng, mech.chol_h().rows());
}

DisclosedSequences SampleMechanism(const Mechanism& mech,
                                   const std::vector<VectorXd>& y,
                                   const std::vector<VectorXd>& u,
                                   std::uint64_t seed, std::uint64_t run) {
  const int k = mech.horizon();
  if (static_cast<int>(y.size()) != k || static_cast<int>(u.size()) != k) {
    throw DimensionError(fmt::format("expected {} outputs and inputs", k));
  }
  const VectorXd v = SampleOutputNoise(mech, seed, run);
  const VectorXd h = SampleInputNoise(mech, seed, run);
  DisclosedSequences out;
  const int ny = mech.ny();
  const int nu = mech.nu();
  for (int i = 0; i < k; ++i) {
    out.z.push_back(mech.g_blocks()[i] * y[i] + v.segment(i * ny, ny));
    out.r.push_back(u[i] + h.segment(i * nu, nu));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.

json MechanismToJson(const Mechanism& mech, const json& provenance) {
  json doc;
  doc["format"] = "privsynth-mechanism/1";
  doc["K"] = mech.horizon();
  doc["n_y"] = mech.ny();
  doc["n_u"] = mech.nu();
  json blocks = json::array();
  for (const MatrixXd& g : mech.g_blocks()) blocks.push_back(MatrixToJson(g));
  doc["G_blocks"] = blocks;
  doc["Sigma_V"] = MatrixToJson(mech.sigma_v());
  doc["Sigma_H"] = MatrixToJson(mech.sigma_h());
  if (!provenance.is_null()) doc["provenance"] = provenance;
  return doc;
}

Mechanism MechanismFromJson(const json& doc) {
  for (const char* field : {"G_blocks", "Sigma_V", "Sigma_H"}) {
    if (!doc.contains(field)) {
      throw SchemaError(fmt::format("missing field \"{}\"", field));
    }
  }
  if (!doc["G_blocks"].is_array() || doc["G_blocks"].empty()) {
    throw SchemaError("field \"G_blocks\" must be a non-empty array");
  }
  std::vector<MatrixXd> blocks;
  for (const json& g : doc["G_blocks"]) blocks.push_back(MatrixFromJson(g, "G_blocks"));
  try {
    return Mechanism(std::move(blocks), MatrixFromJson(doc["Sigma_V"], "Sigma_V"),
                     MatrixFromJson(doc["Sigma_H"], "Sigma_H"));
  } catch (const NotPositiveDefiniteError& e) {
    throw ValidationError(std::string("mechanism invalid: ") + e.what());
  }
}

json ReportToJson(const SynthesisReport& r) {
  auto number = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  };
  json doc;
  doc["status"] = sdp::ToString(r.status);
  doc["message"] = r.message;
  doc["mi_bits"] = number(r.metrics.mi_bits);
  doc["mi_bits_entropy_route"] = number(r.metrics.mi_bits_entropy_route);
  doc["mi_infinite"] = r.metrics.mi_infinite;
  doc["entropy_H_bits"] = number(r.metrics.entropy_h_bits);
  doc["cost"] = number(r.metrics.cost);
  doc["distortion_Y"] = number(r.metrics.distortion_y);
  doc["distortion_U"] = number(r.metrics.distortion_u);
  doc["solver"] = {
      {"objective_nats", number(r.solution.objective)},
      {"gap_bound", number(r.solution.gap_bound)},
      {"newton_steps", r.solution.newton_steps},
      {"max_psd_violation", number(r.solution.max_psd_violation)},
      {"max_linear_violation", number(r.solution.max_linear_violation)},
      {"blocking_constraints", r.solution.blocking_constraints},
  };
  doc["reconciliation"] = {
      {"cost_from_solver", number(r.cost_from_solver)},
      {"gap", number(r.reconciliation_gap)},
  };
  doc["extraction"] = {
      {"sigma_v_min_eigenvalue", number(r.sigma_v_min_eigenvalue)},
      {"reconstruction_error", number(r.reconstruction_error)},
  };
  doc["output_budget_tight"] = r.output_budget_tight;
  doc["input_budget_tight"] = r.input_budget_tight;
  doc["g_near_singular"] = r.g_near_singular;
  doc["warnings"] = r.warnings;
  return doc;
}

}  // namespace privsynth
