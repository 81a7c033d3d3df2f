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

#include "privsynth/sim.h"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "privsynth/error.h"
#include "privsynth/gauss.h"
#include "privsynth/random.h"

namespace privsynth {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MatrixXd LowerFactor(const MatrixXd& m, std::string_view what) {
  return CholeskyOrThrow(m, what).matrixL();
}

// Stacks the first `steps` vectors of a sequence.
VectorXd StackFirst(const std::vector<VectorXd>& seq, int steps, int n) {
  VectorXd out(static_cast<Eigen::Index>(steps) * n);
  for (int k = 0; k < steps; ++k) out.segment(k * n, n) = seq.at(k);
  return out;
}

AdversaryResult Split(const VectorXd& shat, const MatrixXd& cov, int ns,
                      const std::vector<VectorXd>* s) {
  AdversaryResult res;
  const int k = static_cast<int>(shat.size()) / ns;
  res.posterior_cov = cov;
  for (int i = 0; i < k; ++i) res.shat.push_back(shat.segment(i * ns, ns));
  if (s) {
    if (static_cast<int>(s->size()) != k) {
      throw DimensionError("private sequence has the wrong length");
    }
    for (int i = 0; i < k; ++i) {
      const double e = (res.shat[i] - (*s)[i]).squaredNorm();
      res.step_sq_error.push_back(e);
      res.stacked_sq_error += e;
    }
  }
  return res;
}

// Everything one Monte-Carlo run needs, shared read-only across threads.
struct ExperimentContext {
  const SystemModel& model;
  const Mechanism& mech;
  int horizon;
  LiftedSystem lift;
  Adversary adversary;
  BaselineAdversary baseline;
  MatrixXd w_y, w_u;
  std::uint64_t seed;

  ExperimentContext(const SystemModel& m, const SynthesisRequest& req,
                    const Mechanism& mc, const ExperimentOptions& opts)
      : model(m),
        mech(mc),
        horizon(mc.horizon()),
        lift(BuildLift(m, mc.horizon())),
        adversary(m, lift, mc, opts.window),
        baseline(m, lift),
        w_y(req.w_y.Expand(mc.horizon(), m.ny())),
        w_u(req.w_u.Expand(mc.horizon(), m.nu())),
        seed(opts.seed) {}

  int fields() const { return 4 * horizon + 4; }

  // Row layout: per step (err_yu, err_zr, s_mean, shat_mean), then
  // distortion_y, distortion_u, stacked_zr, stacked_yu.
  void Run(std::uint64_t run, double* row) const {
    Trajectory t = Simulate(model, horizon, seed, run);
    ApplyMechanism(mech, t);
    const AdversaryResult zr = adversary.Estimate(t.z, t.r, &t.s);
    const AdversaryResult yu = baseline.Estimate(t.y, &t.s);
    for (int k = 0; k < horizon; ++k) {
      row[4 * k + 0] = yu.step_sq_error[k];
      row[4 * k + 1] = zr.step_sq_error[k];
      row[4 * k + 2] = t.s[k].mean();
      row[4 * k + 3] = zr.shat[k].mean();
    }
    const int ny = model.ny();
    const int nu = model.nu();
    const VectorXd dz = StackFirst(t.z, horizon, ny) - StackFirst(t.y, horizon, ny);
    const VectorXd h = StackFirst(t.r, horizon, nu) - StackFirst(t.u, horizon, nu);
    const int base = 4 * horizon;
    row[base + 0] = (w_y * dz).squaredNorm();
    row[base + 1] = (w_u * h).squaredNorm();
    row[base + 2] = zr.stacked_sq_error;
    row[base + 3] = yu.stacked_sq_error;
  }
};

ExperimentSummary Reduce(const ExperimentContext& ctx,
                         const std::vector<double>& rows,
                         const ExperimentOptions& opts) {
  const int n = opts.n_runs;
  const int f = ctx.fields();
  auto column = [&](int c) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = rows[static_cast<std::size_t>(i) * f + c];
    return v;
  };
  ExperimentSummary s;
  s.n_runs = n;
  s.seed = opts.seed;
  for (int k = 0; k < ctx.horizon; ++k) {
    StepStats st;
    st.k = k + 1;
    const SampleStat yu = BatchMeans(column(4 * k), opts.batches);
    const SampleStat zr = BatchMeans(column(4 * k + 1), opts.batches);
    st.mse_yu = yu.mean;
    st.se_mse_yu = yu.se;
    st.mse_zr = zr.mean;
    st.se_mse_zr = zr.se;
    st.s_mean = BatchMeans(column(4 * k + 2), opts.batches).mean;
    st.shat_zr_mean = BatchMeans(column(4 * k + 3), opts.batches).mean;
    s.steps.push_back(st);
  }
  const int base = 4 * ctx.horizon;
  s.distortion_y = BatchMeans(column(base + 0), opts.batches);
  s.distortion_u = BatchMeans(column(base + 1), opts.batches);
  s.stacked_mse_zr = BatchMeans(column(base + 2), opts.batches);
  s.stacked_mse_yu = BatchMeans(column(base + 3), opts.batches);
  s.predicted_mse_zr = ctx.adversary.error_cov().trace();
  s.predicted_mse_yu = ctx.baseline.error_cov().trace();
  return s;
}

void CheckRuns(int n_runs) {
  if (n_runs <= 0) throw ValidationError("n_runs must be positive");
}

// (Z^K, S^K) for one run, Z first.
VectorXd JointSample(const SystemModel& model, const Mechanism& mech,
                     std::uint64_t seed, std::uint64_t run) {
  Trajectory t = Simulate(model, mech.horizon(), seed, run);
  ApplyMechanism(mech, t);
  const int k = mech.horizon();
  VectorXd v(k * (model.ny() + model.ns()));
  v << StackFirst(t.z, k, model.ny()), StackFirst(t.s, k, model.ns());
  return v;
}

EmpiricalJoint ReduceJoint(const std::vector<VectorXd>& samples) {
  const int n = static_cast<int>(samples.size());
  const Eigen::Index d = samples.front().size();
  EmpiricalJoint out;
  out.n_runs = n;
  out.mean = VectorXd::Zero(d);
  for (const VectorXd& v : samples) out.mean += v;
  out.mean /= n;
  out.cov = MatrixXd::Zero(d, d);
  MatrixXd second = MatrixXd::Zero(d, d);
  for (const VectorXd& v : samples) {
    const VectorXd c = v - out.mean;
    const MatrixXd p = c * c.transpose();
    out.cov += p;
    second += p.cwiseProduct(p);
  }
  if (n < 2) {
    out.cov.setConstant(kNaN);
    out.cov_se.setConstant(d, d, kNaN);
    out.mean_se.setConstant(d, kNaN);
    return out;
  }
  const MatrixXd mean_p = out.cov / n;
  out.cov /= (n - 1);
  // Standard error of a sample covariance entry from the spread of the
  // centered products.
  const MatrixXd var_p = (second / n - mean_p.cwiseProduct(mean_p)) * n / (n - 1);
  out.cov_se = (var_p / n).cwiseSqrt();
  out.mean_se = (out.cov.diagonal() / n).cwiseSqrt();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectories.

Trajectory Simulate(const SystemModel& model, int horizon, std::uint64_t seed,
                    std::uint64_t run) {
  if (horizon < 1) throw DimensionError("horizon must be positive");
  Trajectory t;
  t.seed = seed;
  t.run = run;
  auto init = MakeStream(seed, run, StreamTag::kInitialState);
  auto process = MakeStream(seed, run, StreamTag::kProcessNoise);
  auto measure = MakeStream(seed, run, StreamTag::kMeasurementNoise);
  const MatrixXd l1 = LowerFactor(model.sigma_x1, "Sigma_x1");
  const MatrixXd lt = LowerFactor(model.sigma_t, "Sigma_T");
  const MatrixXd lw = LowerFactor(model.sigma_w, "Sigma_W");
  VectorXd x = model.mu_x1 + l1 * StandardNormal(init, model.nx());
  for (int k = 1; k <= horizon; ++k) {
    const VectorXd u = model.Input(k);
    t.x.push_back(x);
    t.u.push_back(u);
    t.y.push_back(model.C * x + lw * StandardNormal(measure, model.ny()));
    t.s.push_back(model.D * x);
    if (k < horizon) {
      x = model.A * x + model.B * u + lt * StandardNormal(process, model.nx());
    }
  }
  return t;
}

void ApplyMechanism(const Mechanism& mech, Trajectory& traj) {
  DisclosedSequences d = SampleMechanism(mech, traj.y, traj.u, traj.seed, traj.run);
  traj.z = std::move(d.z);
  traj.r = std::move(d.r);
}

// ---------------------------------------------------------------------------
// Adversaries.

Adversary::Adversary(const SystemModel& model, const LiftedSystem& lift,
                     const Mechanism& mech, InputWindow window)
    : ns_(model.ns()), nu_(model.nu()), horizon_(lift.horizon), window_(window) {
  mech.CheckCompatible(model, lift.horizon);
  const LiftedMoments mom = OutputMoments(lift, model);
  const MatrixXd g = mech.GTilde();
  const GaussianJoint joint =
      JointZsMoments(mom, model.ny(), g, mech.sigma_v()).Swapped();  // S first
  const LinearEstimator est = EstimatorFor(joint);
  gain_ = est.gain;
  const MatrixXd gc = g * lift.C_tilde;
  input_gain_ = lift.D_tilde * lift.L - gain_ * gc * lift.L;
  const VectorXd free_state = lift.F * model.mu_x1;
  offset_ = lift.D_tilde * free_state - gain_ * gc * free_state;
  const int ku = (horizon_ - 1) * nu_;
  const MatrixXd sigma_h = mech.sigma_h().topLeftCorner(ku, ku);
  error_cov_ = Symmetrize(est.error_cov +
                          input_gain_ * sigma_h * input_gain_.transpose());
}

AdversaryResult Adversary::Estimate(const std::vector<VectorXd>& z,
                                    const std::vector<VectorXd>& r,
                                    const std::vector<VectorXd>* s) const {
  const std::size_t expected_r =
      window_ == InputWindow::kFull ? horizon_ : horizon_ - 1;
  if (static_cast<int>(z.size()) != horizon_ || r.size() < expected_r) {
    throw DimensionError(fmt::format(
        "adversary needs {} outputs and {} inputs (got {} and {})", horizon_,
        expected_r, z.size(), r.size()));
  }
  const int ny = static_cast<int>(z.front().size());
  // Only R(1..K-1) reach the state; R(K) is independent of S^K.
  const VectorXd shat = offset_ + gain_ * StackFirst(z, horizon_, ny) +
                        input_gain_ * StackFirst(r, horizon_ - 1, nu_);
  return Split(shat, error_cov_, ns_, s);
}

BaselineAdversary::BaselineAdversary(const SystemModel& model,
                                     const LiftedSystem& lift)
    : ns_(model.ns()) {
  const LiftedMoments mom = OutputMoments(lift, model);
  GaussianJoint joint;
  const Eigen::Index ks = mom.mean_s.size();
  const Eigen::Index ky = mom.mean_y.size();
  joint.x_dim = ks;
  joint.mean.resize(ks + ky);
  joint.mean << mom.mean_s, mom.mean_y;
  joint.cov.resize(ks + ky, ks + ky);
  joint.cov << mom.cov_s, mom.cross_ys.transpose(), mom.cross_ys, mom.cov_y;
  const LinearEstimator est = EstimatorFor(joint);
  gain_ = est.gain;
  error_cov_ = est.error_cov;
  offset_ = mom.mean_s - gain_ * mom.mean_y;
}

AdversaryResult BaselineAdversary::Estimate(
    const std::vector<VectorXd>& y, const std::vector<VectorXd>* s) const {
  const int k = static_cast<int>(gain_.rows()) / ns_;
  if (static_cast<int>(y.size()) != k) {
    throw DimensionError("baseline adversary needs one output per step");
  }
  const int ny = static_cast<int>(y.front().size());
  return Split(offset_ + gain_ * StackFirst(y, k, ny), error_cov_, ns_, s);
}

// ---------------------------------------------------------------------------
// Experiments.

SampleStat BatchMeans(const std::vector<double>& values, int batches) {
  SampleStat out;
  const int n = static_cast<int>(values.size());
  if (n == 0) return {kNaN, kNaN};
  double total = 0.0;
  for (double v : values) total += v;
  out.mean = total / n;
  if (n < 2) {
    out.se = kNaN;
    return out;
  }
  const int b = std::min(batches, n);
  std::vector<double> means(b, 0.0);
  for (int i = 0; i < b; ++i) {
    const int lo = static_cast<int>(static_cast<long long>(i) * n / b);
    const int hi = static_cast<int>(static_cast<long long>(i + 1) * n / b);
    for (int j = lo; j < hi; ++j) means[i] += values[j];
    means[i] /= (hi - lo);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= b;
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  out.se = std::sqrt(ss / (b - 1) / b);
  return out;
}

ExperimentSummary RunExperiment(const SystemModel& model,
                                const SynthesisRequest& request,
                                const Mechanism& mech,
                                const ExperimentOptions& opts) {
  CheckRuns(opts.n_runs);
  const ExperimentContext ctx(model, request, mech, opts);
  const int f = ctx.fields();
  std::vector<double> rows(static_cast<std::size_t>(opts.n_runs) * f);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < opts.n_runs; ++i) {
    ctx.Run(static_cast<std::uint64_t>(i), &rows[static_cast<std::size_t>(i) * f]);
  }
  return Reduce(ctx, rows, opts);
}

ExperimentSummary RunExperimentSerial(const SystemModel& model,
                                      const SynthesisRequest& request,
                                      const Mechanism& mech,
                                      const ExperimentOptions& opts) {
  CheckRuns(opts.n_runs);
  const ExperimentContext ctx(model, request, mech, opts);
  const int f = ctx.fields();
  std::vector<double> rows(static_cast<std::size_t>(opts.n_runs) * f);
  for (int i = 0; i < opts.n_runs; ++i) {
    ctx.Run(static_cast<std::uint64_t>(i), &rows[static_cast<std::size_t>(i) * f]);
  }
  return Reduce(ctx, rows, opts);
}

EmpiricalJoint SampleJointMoments(const SystemModel& model,
                                  const Mechanism& mech, int n_runs,
                                  std::uint64_t seed) {
  CheckRuns(n_runs);
  std::vector<VectorXd> samples(n_runs);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_runs; ++i) {
    samples[i] = JointSample(model, mech, seed, static_cast<std::uint64_t>(i));
  }
  return ReduceJoint(samples);
}

EmpiricalJoint SampleJointMomentsSerial(const SystemModel& model,
                                        const Mechanism& mech, int n_runs,
                                        std::uint64_t seed) {
  CheckRuns(n_runs);
  std::vector<VectorXd> samples(n_runs);
  for (int i = 0; i < n_runs; ++i) {
    samples[i] = JointSample(model, mech, seed, static_cast<std::uint64_t>(i));
  }
  return ReduceJoint(samples);
}

// ---------------------------------------------------------------------------
// Output.

std::string CsvNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.16e}", v);
}

void WriteExperimentCsv(std::ostream& out, const ExperimentSummary& summary,
                        const std::string& manifest_sha256) {
  out << "# manifest_sha256=" << manifest_sha256 << "\n";
  out << "k,mse_yu,mse_zr,se_mse_zr,s_mean,shat_zr_mean\n";
  for (const StepStats& s : summary.steps) {
    out << s.k << ',' << CsvNumber(s.mse_yu) << ',' << CsvNumber(s.mse_zr)
        << ',' << CsvNumber(s.se_mse_zr) << ',' << CsvNumber(s.s_mean) << ','
        << CsvNumber(s.shat_zr_mean) << '\n';
  }
}

}  // namespace privsynth
