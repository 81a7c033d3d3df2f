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

#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "privsynth/error.h"
#include "privsynth/gauss.h"
#include "privsynth/random.h"
#include "privsynth/sim.h"
#include "privsynth/synth.h"

namespace privsynth {
namespace {

const std::filesystem::path kFixtures = PRIVSYNTH_FIXTURES;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum of -ln det Sigma_H - ln det Pi on fixtures/scalar.json, from the
// standalone brute-force search in tests/oracles/scalar_oracle.cc.
constexpr double kScalarOracleObjective = 2.404187149277;

ModelFile Scalar() { return LoadModel(kFixtures / "scalar.json"); }

int CountConstraints(const PrivacyProgram& p) {
  return static_cast<int>(p.problem.constraints().size());
}

TEST_CASE("unbounded budgets drop both distortion constraints") {
  ModelFile f = Scalar();
  f.request.eps_y = kInf;
  f.request.eps_u = kInf;
  const PrivacyProgram p =
      AssembleProgram(BuildLift(f.model, 2), f.model, f.request);
  CHECK(CountConstraints(p) == 4);
  CHECK(p.output_distortion == -1);
  CHECK(p.input_distortion == -1);
}

TEST_CASE("scalar program block dimensions") {
  const ModelFile f = Scalar();
  const PrivacyProgram p =
      AssembleProgram(BuildLift(f.model, 2), f.model, f.request);
  CHECK(CountConstraints(p) == 6);
  CHECK(p.problem.constraint(p.mi_lmi).dim == 4);
  CHECK(p.problem.constraint(p.sigma_v_lmi).dim == 4);
  CHECK(p.problem.constraint(p.output_distortion).dim == 3);
  CHECK(p.problem.constraint(p.input_distortion).linear);
}

TEST_CASE("zero output weight leaves a constant distortion LMI") {
  ModelFile f = Scalar();
  f.request.w_y = WeightSpec::Scalar(0.0);
  const PrivacyProgram p =
      AssembleProgram(BuildLift(f.model, 2), f.model, f.request);
  const sdp::Constraint& c = p.problem.constraint(p.output_distortion);
  MatrixXd expected = MatrixXd::Identity(3, 3);
  expected(0, 0) = f.request.eps_y;
  CHECK(c.constant.isApprox(expected));
  for (const auto& [coord, entries] : c.coefficients) {
    for (const auto& e : entries) CHECK(e.value == 0.0);
  }
}

TEST_CASE("analytic start is strictly feasible when both budgets are open") {
  ModelFile f = Scalar();
  f.request.eps_y = kInf;
  f.request.eps_u = kInf;
  const PrivacyProgram p =
      AssembleProgram(BuildLift(f.model, 2), f.model, f.request);
  const VectorXd x = AnalyticStart(p, f.request);
  CHECK(p.problem.IsStrictlyFeasible(x));
  const MatrixXd sigma_z = p.problem.Unpack(p.sigma_z, x);
  const double sigma = p.moments.cov_y.diagonal().mean();
  CHECK(sigma_z.isApprox(p.moments.cov_y + sigma * MatrixXd::Identity(2, 2)));
  CHECK(p.problem.Unpack(p.g, x).isApprox(MatrixXd::Identity(2, 2)));
  CHECK(p.problem.Unpack(p.sigma_h, x).isApprox(MatrixXd::Identity(2, 2)));
}

TEST_CASE("scalar optimum matches the brute-force oracle") {
  const ModelFile f = Scalar();
  const SynthesisReport r = Synthesize(f.model, f.request);
  REQUIRE(r.ok());
  CHECK(std::abs(r.solution.objective - kScalarOracleObjective) /
            kScalarOracleObjective <
        1e-6);
  CHECK(std::abs(r.reconciliation_gap) < 1e-6);
  CHECK(r.metrics.distortion_y <= f.request.eps_y * (1 + 1e-6));
  CHECK(r.metrics.distortion_u <= f.request.eps_u * (1 + 1e-6));
  CHECK(std::abs(r.metrics.mi_bits - r.metrics.mi_bits_entropy_route) < 1e-7);
  CHECK(r.sigma_v_min_eigenvalue > 0);
  CHECK(r.reconstruction_error < 1e-8);
  CHECK(r.output_budget_tight);
  CHECK(r.input_budget_tight);
}

TEST_CASE("the input part has the water-filling closed form") {
  // -ln det Sigma_H under tr(N Sigma_H) <= eps is minimized by
  // Sigma_H = eps / (K n_u) N^-1.
  ModelFile f = LoadModel(kFixtures / "two_state.json");
  const SynthesisReport r = Synthesize(f.model, f.request);
  REQUIRE(r.ok());
  const MatrixXd w = f.request.InputWeight(f.model);
  const MatrixXd n = w.transpose() * w;
  const double ku = static_cast<double>(n.rows());
  const MatrixXd expected = f.request.eps_u / ku * n.inverse();
  CHECK((r.mechanism->sigma_h() - expected).norm() / expected.norm() < 1e-5);
}

TEST_CASE("larger budgets lower the cost and drive information to zero") {
  ModelFile f = Scalar();
  const SynthesisReport tight = Synthesize(f.model, f.request);
  f.request.eps_y = 1e6;
  f.request.eps_u = 1e6;
  const SynthesisReport loose = Synthesize(f.model, f.request);
  REQUIRE(tight.ok());
  REQUIRE(loose.ok());
  CHECK(loose.metrics.cost < tight.metrics.cost);
  CHECK(loose.metrics.mi_bits < 1e-3);
  CHECK(loose.metrics.entropy_h_bits > tight.metrics.entropy_h_bits);
}

TEST_CASE("cost is non-increasing along both budget axes") {
  ModelFile f = Scalar();
  const std::vector<double> grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<std::vector<double>> cost(grid.size(),
                                        std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      f.request.eps_y = grid[i];
      f.request.eps_u = grid[j];
      const SynthesisReport r = Synthesize(f.model, f.request);
      REQUIRE(r.ok());
      cost[i][j] = r.metrics.cost;
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (i > 0) CHECK(cost[i][j] <= cost[i - 1][j] + 1e-6);
      if (j > 0) CHECK(cost[i][j] <= cost[i][j - 1] + 1e-6);
    }
  }
}

TEST_CASE("a zero input budget is infeasible and says so") {
  const ModelFile f = LoadModel(kFixtures / "eps_u_zero.json");
  const SynthesisReport r = Synthesize(f.model, f.request);
  CHECK(r.status == sdp::SolveStatus::kInfeasible);
  CHECK(r.message.find("input distortion budget infeasible") != std::string::npos);
  CHECK_FALSE(r.mechanism.has_value());
}

TEST_CASE("an unlimited input budget is unbounded") {
  ModelFile f = Scalar();
  f.request.eps_u = kInf;
  const SynthesisReport r = Synthesize(f.model, f.request);
  CHECK(r.status == sdp::SolveStatus::kUnbounded);
}

TEST_CASE("an unlimited output budget decouples the disclosure") {
  ModelFile f = Scalar();
  f.request.eps_y = kInf;
  const SynthesisReport r = Synthesize(f.model, f.request);
  REQUIRE(r.ok());
  CHECK(r.metrics.mi_bits < 1e-6);
  CHECK(r.g_near_singular);
}

TEST_CASE("optimum does not depend on the starting point") {
  const ModelFile f = LoadModel(kFixtures / "two_state.json");
  const LiftedSystem lift = BuildLift(f.model, f.request.horizon);
  const PrivacyProgram p = AssembleProgram(lift, f.model, f.request);
  const sdp::SdpSolution ref = sdp::Solve(p.problem, {}, AnalyticStart(p, f.request));
  REQUIRE(ref.status == sdp::SolveStatus::kOptimal);
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const sdp::FeasibilityResult start = sdp::RandomFeasiblePoint(p.problem, seed);
    REQUIRE(start.status == sdp::SolveStatus::kOptimal);
    const sdp::SdpSolution sol = sdp::Solve(p.problem, {}, start.x);
    REQUIRE(sol.status == sdp::SolveStatus::kOptimal);
    CHECK(std::abs(sol.objective - ref.objective) <
          1e-6 * std::max(1.0, std::abs(ref.objective)));
  }
}

TEST_CASE("distortion closed forms") {
  const ModelFile f = LoadModel(kFixtures / "two_state.json");
  const int k = f.request.horizon;
  const LiftedSystem lift = BuildLift(f.model, k);
  const double eps = 1e-9;
  const Mechanism mech(std::vector<MatrixXd>(k, MatrixXd::Identity(1, 1)),
                       eps * MatrixXd::Identity(k, k), MatrixXd::Identity(k, k));
  const MechanismMetrics m = EvaluateMechanism(f.model, lift, f.request, mech);
  CHECK(m.distortion_y == doctest::Approx(eps * k).epsilon(1e-6));
  CHECK(m.distortion_u == doctest::Approx(k));

  ModelFile r = LoadModel(kFixtures / "reactor4.json");
  r.request.horizon = 2;
  const Mechanism wide(std::vector<MatrixXd>(2, MatrixXd::Identity(1, 1)),
                       MatrixXd::Identity(2, 2), MatrixXd::Identity(6, 6));
  CHECK(EvaluateMechanism(r.model, BuildLift(r.model, 2), r.request, wide)
            .distortion_u == doctest::Approx(6.0));
}

TEST_CASE("near-zero noise discloses the data unchanged") {
  const int k = 3;
  const Mechanism mech(std::vector<MatrixXd>(k, MatrixXd::Identity(2, 2)),
                       1e-12 * MatrixXd::Identity(2 * k, 2 * k),
                       1e-12 * MatrixXd::Identity(k, k));
  std::vector<VectorXd> y, u;
  for (int i = 0; i < k; ++i) {
    y.push_back(VectorXd::Constant(2, i + 1.0));
    u.push_back(VectorXd::Constant(1, -i - 1.0));
  }
  const DisclosedSequences d = SampleMechanism(mech, y, u, 5);
  for (int i = 0; i < k; ++i) {
    CHECK((d.z[i] - y[i]).norm() < 1e-5);
    CHECK((d.r[i] - u[i]).norm() < 1e-5);
  }
  const DisclosedSequences again = SampleMechanism(mech, y, u, 5);
  for (int i = 0; i < k; ++i) CHECK(again.z[i] == d.z[i]);
}

TEST_CASE("output noise has the requested covariance") {
  MatrixXd sigma_v(3, 3);
  sigma_v << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5;
  const Mechanism mech(std::vector<MatrixXd>(3, MatrixXd::Identity(1, 1)),
                       sigma_v, MatrixXd::Identity(3, 3));
  const int n = 100000;
  MatrixXd acc = MatrixXd::Zero(3, 3);
  MatrixXd acc2 = MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const VectorXd v = SampleOutputNoise(mech, 11, i);
    const MatrixXd p = v * v.transpose();
    acc += p;
    acc2 += p.cwiseProduct(p);
  }
  const MatrixXd cov = acc / n;
  const MatrixXd se = ((acc2 / n - cov.cwiseProduct(cov)) / n).cwiseSqrt();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(std::abs(cov(i, j) - sigma_v(i, j)) < 3 * se(i, j));
  }
}

TEST_CASE("distortion cannot help the adversary") {
  const ModelFile f = LoadModel(kFixtures / "two_state.json");
  const SynthesisReport r = Synthesize(f.model, f.request);
  REQUIRE(r.ok());
  const LiftedSystem lift = BuildLift(f.model, f.request.horizon);
  const Adversary zr(f.model, lift, *r.mechanism);
  const BaselineAdversary yu(f.model, lift);
  CHECK(MinEigenvalue(Symmetrize(zr.error_cov() - yu.error_cov())) > -1e-8);
}

TEST_CASE("mechanism JSON round trip and validation") {
  const ModelFile f = Scalar();
  const SynthesisReport r = Synthesize(f.model, f.request);
  REQUIRE(r.ok());
  const nlohmann::json doc = MechanismToJson(*r.mechanism, {{"note", "x"}});
  const Mechanism back = MechanismFromJson(nlohmann::json::parse(doc.dump()));
  CHECK(back.sigma_v() == r.mechanism->sigma_v());
  CHECK(back.sigma_h() == r.mechanism->sigma_h());
  CHECK(back.GTilde() == r.mechanism->GTilde());
  nlohmann::json bad = doc;
  bad["Sigma_V"] = {{1.0, 0.0}, {0.0, -1.0}};
  CHECK_THROWS_AS(MechanismFromJson(bad), ValidationError);
  bad = doc;
  bad.erase("Sigma_H");
  CHECK_THROWS_AS(MechanismFromJson(bad), SchemaError);
  CHECK_THROWS_AS(r.mechanism->CheckCompatible(f.model, 3), DimensionError);
}

}  // namespace
}  // namespace privsynth
