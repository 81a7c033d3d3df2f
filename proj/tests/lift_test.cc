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

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "privsynth/error.h"
#include "privsynth/lift.h"

namespace privsynth {
namespace {

const std::filesystem::path kFixtures = PRIVSYNTH_FIXTURES;

// A = 0.5, Sigma_x1 = Sigma_T = Sigma_W = 1, C = D = 1, zero mean and input.
SystemModel ScalarModel() {
  SystemModel m = LoadModel(kFixtures / "scalar.json").model;
  m.mu_x1.setZero();
  m.inputs.clear();
  return m;
}

TEST_CASE("scalar lift matches hand evaluation") {
  const LiftedSystem lift = BuildLift(ScalarModel(), 2);
  CHECK(lift.F(0, 0) == 1.0);
  CHECK(lift.F(1, 0) == 0.5);
  CHECK(lift.J(0, 0) == 0.0);
  CHECK(lift.J(1, 0) == 1.0);
  MatrixXd q(2, 2);
  q << 1.0, 0.5, 0.5, 1.25;
  CHECK(lift.Q.isApprox(q, 1e-15));
}

TEST_CASE("scalar output moments") {
  const SystemModel m = ScalarModel();
  const LiftedMoments mom = OutputMoments(BuildLift(m, 2), m);
  MatrixXd sy(2, 2);
  sy << 2.0, 0.5, 0.5, 2.25;
  CHECK(mom.cov_y.isApprox(sy, 1e-15));
  CHECK(mom.mean_y.isZero());
  CHECK(mom.mean_s.isZero());
  // D = C, so Sigma_S = C~ Q C~^T.
  CHECK(mom.cov_s.isApprox(BuildLift(m, 2).Q, 1e-15));
}

TEST_CASE("identity dynamics stack identities") {
  SystemModel m = LoadModel(kFixtures / "two_state.json").model;
  m.A = MatrixXd::Identity(2, 2);
  const LiftedSystem lift = BuildLift(m, 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(lift.F.block(2 * k, 0, 2, 2) == MatrixXd::Identity(2, 2));
  }
}

TEST_CASE("structural invariants of the lift") {
  const ModelFile f = LoadModel(kFixtures / "reactor4.json");
  const int nx = f.model.nx();
  for (int k : {2, 5}) {
    const LiftedSystem lift = BuildLift(f.model, k);
    CHECK(lift.J.topRows(nx).isZero(0.0));
    for (int i = 1; i < k; ++i) {
      CHECK(lift.J.block(i * nx, (i - 1) * nx, nx, nx) ==
            MatrixXd::Identity(nx, nx));
      for (int j = i; j < k - 1; ++j) {
        CHECK(lift.J.block(i * nx, j * nx, nx, nx).isZero(0.0));
      }
    }
    CHECK(lift.C_tilde == Kron(MatrixXd::Identity(k, k), f.model.C));
    CHECK(lift.D_tilde == Kron(MatrixXd::Identity(k, k), f.model.D));
    CHECK(lift.Q.isApprox(lift.Q.transpose()));
    CHECK(MinEigenvalue(lift.Q) > 0);
    const LiftedMoments mom = OutputMoments(lift, f.model);
    const MatrixXd excess =
        mom.cov_y - RepeatDiagonal(f.model.sigma_w, k);
    CHECK(MinEigenvalue(Symmetrize(excess)) > -1e-12);
  }
}

TEST_CASE("joint moments with identity gain add the noise") {
  const SystemModel m = ScalarModel();
  const LiftedSystem lift = BuildLift(m, 2);
  const LiftedMoments mom = OutputMoments(lift, m);
  const GaussianJoint j =
      JointZsMoments(lift, m, MatrixXd::Identity(2, 2), 0.3 * MatrixXd::Identity(2, 2));
  CHECK(j.x_dim == 2);
  CHECK(j.cov_xx().isApprox(mom.cov_y + 0.3 * MatrixXd::Identity(2, 2)));
  CHECK(j.cov_xy().isApprox(mom.cross_ys));
  CHECK(j.cov_xy().isApprox(lift.C_tilde * lift.Q * lift.D_tilde.transpose()));
}

TEST_CASE("zero gain decouples Z from S") {
  const SystemModel m = ScalarModel();
  const LiftedSystem lift = BuildLift(m, 2);
  const GaussianJoint j =
      JointZsMoments(lift, m, MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2));
  CHECK(j.cov_xy().isZero());
  CHECK(MutualInformationBits(j).bits == doctest::Approx(0.0));
}

TEST_CASE("gains that mix time steps are rejected") {
  const SystemModel m = ScalarModel();
  const LiftedSystem lift = BuildLift(m, 2);
  CHECK_THROWS_AS(
      JointZsMoments(lift, m, MatrixXd::Ones(2, 2), MatrixXd::Identity(2, 2)),
      DimensionError);
}

TEST_CASE("oversized lifts are refused") {
  const SystemModel m = ScalarModel();
  CHECK_THROWS_AS(BuildLift(m, 50, 10), DimensionError);
  setenv("PRIVSYNTH_MAX_DIM", "7", 1);
  CHECK(MaxLiftedRows() == 7);
  unsetenv("PRIVSYNTH_MAX_DIM");
  CHECK(MaxLiftedRows() == kDefaultMaxLiftedRows);
}

}  // namespace
}  // namespace privsynth
