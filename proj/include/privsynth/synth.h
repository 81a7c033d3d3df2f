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

#ifndef PRIVSYNTH_SYNTH_H_
#define PRIVSYNTH_SYNTH_H_

// The optimal privacy program: choose Z = G~ Y + V and R = U + H to minimize
// I[S^K; Z^K] - h[H^K] under output and input distortion budgets.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "privsynth/lift.h"
#include "privsynth/model.h"
#include "privsynth/sdp.h"

namespace privsynth {

// Z(k) = G_k Y(k) + V(k), R(k) = U(k) + H(k); V^K ~ N(0, Sigma_V) and
// H^K ~ N(0, Sigma_H) are correlated across time.
class Mechanism {
 public:
  // Throws DimensionError on inconsistent shapes and
  // NotPositiveDefiniteError unless both covariances are PD.
  Mechanism(std::vector<MatrixXd> g_blocks, MatrixXd sigma_v, MatrixXd sigma_h);

  int horizon() const { return static_cast<int>(g_blocks_.size()); }
  int ny() const { return static_cast<int>(g_blocks_.front().rows()); }
  int nu() const { return static_cast<int>(sigma_h_.rows()) / horizon(); }

  const std::vector<MatrixXd>& g_blocks() const { return g_blocks_; }
  MatrixXd GTilde() const { return BlockDiagonal(g_blocks_); }
  const MatrixXd& sigma_v() const { return sigma_v_; }
  const MatrixXd& sigma_h() const { return sigma_h_; }
  // Lower Cholesky factors used for sampling.
  const MatrixXd& chol_v() const { return chol_v_; }
  const MatrixXd& chol_h() const { return chol_h_; }

  // Throws DimensionError unless the mechanism fits (model, horizon).
  void CheckCompatible(const SystemModel& model, int horizon) const;

 private:
  std::vector<MatrixXd> g_blocks_;
  MatrixXd sigma_v_, sigma_h_;
  MatrixXd chol_v_, chol_h_;
};

struct SynthesisOptions {
  sdp::SolverOptions solver;
  // Strict inequalities become >= margin * scale * I.
  double margin = 1e-8;
};

// Assembled program together with the handles needed to read it back.
struct PrivacyProgram {
  sdp::SdpProblem problem;
  sdp::VariableId pi = -1;       // Kn_s
  sdp::VariableId sigma_z = -1;  // Kn_y
  sdp::VariableId g = -1;        // K blocks n_y x n_y
  sdp::VariableId sigma_h = -1;  // Kn_u
  sdp::ConstraintId mi_lmi = -1;
  sdp::ConstraintId pi_positive = -1;
  sdp::ConstraintId output_distortion = -1;  // -1 when eps_Y = inf
  sdp::ConstraintId input_distortion = -1;   // -1 when eps_U = inf
  sdp::ConstraintId sigma_v_lmi = -1;
  sdp::ConstraintId sigma_h_positive = -1;
  double delta_s = 0.0, delta_v = 0.0, delta_h = 0.0;
  LiftedMoments moments;
  MatrixXd output_weight;  // stacked W_Y
  MatrixXd input_weight;   // stacked W_U
};

// Constraint names as they appear in messages.
inline constexpr char kMiLmi[] = "information LMI";
inline constexpr char kPiPositive[] = "Pi > 0";
inline constexpr char kOutputDistortion[] = "output distortion budget";
inline constexpr char kInputDistortion[] = "input distortion budget";
inline constexpr char kSigmaVLmi[] = "Sigma_V > 0 LMI";
inline constexpr char kSigmaHPositive[] = "Sigma_H > 0";

PrivacyProgram AssembleProgram(const LiftedSystem& lift,
                               const SystemModel& model,
                               const SynthesisRequest& request,
                               const SynthesisOptions& opts = {});

// Closed-form interior point (G~ = I, isotropic extra noise); may fail to be
// strictly feasible for degenerate budgets, in which case the solver's
// feasibility phase starts from it.
VectorXd AnalyticStart(const PrivacyProgram& program,
                       const SynthesisRequest& request);

struct MechanismMetrics {
  double mi_bits = 0.0;
  // Same quantity through h[S] + h[Z] - h[S, Z].
  double mi_bits_entropy_route = 0.0;
  bool mi_infinite = false;
  double entropy_h_bits = 0.0;
  double cost = 0.0;  // mi_bits - entropy_h_bits
  double distortion_y = 0.0;
  double distortion_u = 0.0;
};

// All metrics from closed forms, never from samples.
MechanismMetrics EvaluateMechanism(const SystemModel& model,
                                   const LiftedSystem& lift,
                                   const SynthesisRequest& request,
                                   const Mechanism& mech);

struct SynthesisReport {
  sdp::SolveStatus status = sdp::SolveStatus::kNumericalFailure;
  std::string message;
  std::optional<Mechanism> mechanism;
  MechanismMetrics metrics;
  sdp::SdpSolution solution;
  MatrixXd sigma_z;
  MatrixXd pi;
  // Solver objective mapped back to bits; equals metrics.cost at the optimum.
  double cost_from_solver = 0.0;
  double reconciliation_gap = 0.0;
  double sigma_v_min_eigenvalue = 0.0;
  // || Sigma_Z - (G~ Sigma_Y G~^T + Sigma_V) || / || Sigma_Z ||.
  double reconstruction_error = 0.0;
  bool output_budget_tight = false;
  bool input_budget_tight = false;
  bool g_near_singular = false;
  std::vector<std::string> warnings;

  bool ok() const {
    return status == sdp::SolveStatus::kOptimal && mechanism.has_value();
  }
};

// Assemble, solve and extract. Non-optimal solver outcomes are returned in
// the report; throws ExtractionFailure if an optimal solution does not yield
// a PD Sigma_V.
SynthesisReport Synthesize(const SystemModel& model,
                           const SynthesisRequest& request,
                           const SynthesisOptions& opts = {});

// Z(k) = G_k y(k) + V(k), R(k) = u(k) + H(k) with noise drawn from streams
// keyed by (seed, run).
struct DisclosedSequences {
  std::vector<VectorXd> z;
  std::vector<VectorXd> r;
};
DisclosedSequences SampleMechanism(const Mechanism& mech,
                                   const std::vector<VectorXd>& y,
                                   const std::vector<VectorXd>& u,
                                   std::uint64_t seed, std::uint64_t run = 0);

// Stacked noise draws, exposed for the sampling tests.
VectorXd SampleOutputNoise(const Mechanism& mech, std::uint64_t seed,
                           std::uint64_t run);
VectorXd SampleInputNoise(const Mechanism& mech, std::uint64_t seed,
                          std::uint64_t run);

nlohmann::json MechanismToJson(const Mechanism& mech,
                               const nlohmann::json& provenance = {});
// Validates shapes and positive definiteness before returning.
Mechanism MechanismFromJson(const nlohmann::json& doc);
nlohmann::json ReportToJson(const SynthesisReport& report);

}  // namespace privsynth

#endif  // PRIVSYNTH_SYNTH_H_
