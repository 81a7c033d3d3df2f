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

#ifndef PRIVSYNTH_SIM_H_
#define PRIVSYNTH_SIM_H_

// Monte-Carlo engine: simulate the plant, disclose through a mechanism and
// let MMSE eavesdroppers estimate the private output.
//
// Every run draws from RNG streams keyed by (seed, run, signal), and all
// reductions happen serially in run order, so the OpenMP and serial paths
// produce bit-identical summaries.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "privsynth/lift.h"
#include "privsynth/model.h"
#include "privsynth/synth.h"

namespace privsynth {

struct Trajectory {
  std::vector<VectorXd> x, y, s, u;
  std::vector<VectorXd> z, r;  // filled by ApplyMechanism
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
};

// Pre-mechanism trajectory of length `horizon`.
Trajectory Simulate(const SystemModel& model, int horizon, std::uint64_t seed,
                    std::uint64_t run = 0);

void ApplyMechanism(const Mechanism& mech, Trajectory& traj);

// Which disclosed inputs the adversary is handed: all K of them, or only the
// K-1 that drive the lifted dynamics. The estimates coincide because R(K)
// carries nothing about S^K; both are kept so that this stays checkable.
enum class InputWindow { kFull, kLifted };

struct AdversaryResult {
  std::vector<VectorXd> shat;
  // Filled only when the true private sequence is supplied.
  std::vector<double> step_sq_error;
  double stacked_sq_error = 0.0;
  MatrixXd posterior_cov;
};

// Eavesdropper on (Z^K, R): MMSE estimate of S^K given Z^K, with the unknown
// input replaced by the disclosed R wherever it enters the means. Its error
// covariance is Cov(S|Z) + M Sigma_H M^T, M = D~L - K_Z G~ C~ L.
class Adversary {
 public:
  Adversary(const SystemModel& model, const LiftedSystem& lift,
            const Mechanism& mech, InputWindow window = InputWindow::kFull);

  AdversaryResult Estimate(const std::vector<VectorXd>& z,
                           const std::vector<VectorXd>& r,
                           const std::vector<VectorXd>* s = nullptr) const;
  const MatrixXd& error_cov() const { return error_cov_; }
  const MatrixXd& gain() const { return gain_; }
  const MatrixXd& input_gain() const { return input_gain_; }
  const VectorXd& offset() const { return offset_; }

 private:
  int ns_ = 0, nu_ = 0, horizon_ = 0;
  InputWindow window_;
  VectorXd offset_;
  MatrixXd gain_;        // on Z^K
  MatrixXd input_gain_;  // on R^{K-1}
  MatrixXd error_cov_;
};

// Reference eavesdropper on the undistorted (Y^K, U): MMSE of S^K given Y^K
// with the input known exactly.
class BaselineAdversary {
 public:
  BaselineAdversary(const SystemModel& model, const LiftedSystem& lift);

  AdversaryResult Estimate(const std::vector<VectorXd>& y,
                           const std::vector<VectorXd>* s = nullptr) const;
  const MatrixXd& error_cov() const { return error_cov_; }

 private:
  int ns_ = 0;
  VectorXd offset_;  // mu_S - K_Y mu_Y
  MatrixXd gain_;
  MatrixXd error_cov_;
};

struct ExperimentOptions {
  int n_runs = 10000;
  std::uint64_t seed = 42;
  InputWindow window = InputWindow::kFull;
  int batches = 20;  // batch-means standard errors
};

struct StepStats {
  int k = 0;
  double mse_yu = 0.0;
  double mse_zr = 0.0;
  double se_mse_zr = 0.0;
  double se_mse_yu = 0.0;
  double s_mean = 0.0;        // mean over runs and components of S(k)
  double shat_zr_mean = 0.0;  // same for the disclosed-data estimate
};

struct SampleStat {
  double mean = 0.0;
  double se = 0.0;  // NaN with fewer than two runs
};

struct ExperimentSummary {
  int n_runs = 0;
  std::uint64_t seed = 0;
  std::vector<StepStats> steps;
  SampleStat distortion_y;  // ||W_Y (Z^K - Y^K)||^2
  SampleStat distortion_u;  // ||W_U H^K||^2
  SampleStat stacked_mse_zr;
  SampleStat stacked_mse_yu;
  // Closed-form counterparts.
  double predicted_mse_zr = 0.0;  // tr of the adversary error covariance
  double predicted_mse_yu = 0.0;
};

ExperimentSummary RunExperiment(const SystemModel& model,
                                const SynthesisRequest& request,
                                const Mechanism& mech,
                                const ExperimentOptions& opts);
// Single-threaded reference with identical output.
ExperimentSummary RunExperimentSerial(const SystemModel& model,
                                      const SynthesisRequest& request,
                                      const Mechanism& mech,
                                      const ExperimentOptions& opts);

// Empirical first and second moments of (Z^K, S^K), Z first, with standard
// errors of every entry.
struct EmpiricalJoint {
  VectorXd mean;
  MatrixXd cov;
  VectorXd mean_se;
  MatrixXd cov_se;
  int n_runs = 0;
};
EmpiricalJoint SampleJointMoments(const SystemModel& model,
                                  const Mechanism& mech, int n_runs,
                                  std::uint64_t seed);
EmpiricalJoint SampleJointMomentsSerial(const SystemModel& model,
                                        const Mechanism& mech, int n_runs,
                                        std::uint64_t seed);

// Batch means over `values` in order; se is NaN below two values.
SampleStat BatchMeans(const std::vector<double>& values, int batches);

// Per-step CSV: k,mse_yu,mse_zr,se_mse_zr,s_mean,shat_zr_mean. The first line
// is a comment carrying the manifest hash.
void WriteExperimentCsv(std::ostream& out, const ExperimentSummary& summary,
                        const std::string& manifest_sha256);

// Formats a double for CSV output (17 significant digits, inf/nan spelled).
std::string CsvNumber(double v);

}  // namespace privsynth

#endif  // PRIVSYNTH_SIM_H_
