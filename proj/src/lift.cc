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

#include "privsynth/lift.h"

#include <fmt/format.h>

#include <cstdlib>
#include <string>
#include <vector>

#include "privsynth/error.h"

namespace privsynth {

int MaxLiftedRows() {
  if (const char* env = std::getenv("PRIVSYNTH_MAX_DIM")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return kDefaultMaxLiftedRows;
}

LiftedSystem BuildLift(const SystemModel& model, int horizon, int max_rows) {
  if (horizon < 2) {
    throw DimensionError(fmt::format("horizon must be >= 2, got {}", horizon));
  }
  const int nx = model.nx();
  if (static_cast<long long>(horizon) * nx > max_rows) {
    throw DimensionError(fmt::format(
        "lifted dimension K*n_x = {} exceeds the limit {}",
        static_cast<long long>(horizon) * nx, max_rows));
  }
  const int k = horizon;

  // powers[p] = A^p.
  std::vector<MatrixXd> powers;
  powers.reserve(k);
  powers.push_back(MatrixXd::Identity(nx, nx));
  for (int p = 1; p < k; ++p) powers.push_back(model.A * powers.back());

  LiftedSystem lift;
  lift.horizon = k;
  lift.F.resize(k * nx, nx);
  for (int i = 0; i < k; ++i) lift.F.block(i * nx, 0, nx, nx) = powers[i];

  lift.J = MatrixXd::Zero(k * nx, (k - 1) * nx);
  for (int i = 1; i < k; ++i) {
    for (int j = 0; j < i; ++j) {
      lift.J.block(i * nx, j * nx, nx, nx) = powers[i - j - 1];
    }
  }
  lift.L = lift.J * RepeatDiagonal(model.B, k - 1);
  lift.C_tilde = RepeatDiagonal(model.C, k);
  lift.D_tilde = RepeatDiagonal(model.D, k);
  lift.Q = Symmetrize(
      lift.F * model.sigma_x1 * lift.F.transpose() +
      lift.J * RepeatDiagonal(model.sigma_t, k - 1) * lift.J.transpose());
  return lift;
}

LiftedMoments OutputMoments(const LiftedSystem& lift,
                            const SystemModel& model) {
  const int k = lift.horizon;
  if (lift.F.rows() != k * model.nx()) {
    throw DimensionError("lift was built for a different model");
  }
  LiftedMoments mom;
  mom.input = model.StackedInput(k - 1);
  mom.mean_state = lift.F * model.mu_x1 + lift.L * mom.input;
  mom.mean_y = lift.C_tilde * mom.mean_state;
  mom.cov_y = Symmetrize(RepeatDiagonal(model.sigma_w, k) +
                         lift.C_tilde * lift.Q * lift.C_tilde.transpose());
  mom.mean_s = lift.D_tilde * mom.mean_state;
  mom.cov_s = Symmetrize(lift.D_tilde * lift.Q * lift.D_tilde.transpose());
  mom.cross_ys = lift.C_tilde * lift.Q * lift.D_tilde.transpose();
  return mom;
}

GaussianJoint JointZsMoments(const LiftedMoments& mom, int ny,
                             const MatrixXd& g_tilde,
                             const MatrixXd& sigma_v) {
  const Eigen::Index nz = mom.mean_y.size();
  const Eigen::Index ns = mom.mean_s.size();
  if (g_tilde.rows() != nz || g_tilde.cols() != nz || sigma_v.rows() != nz ||
      sigma_v.cols() != nz) {
    throw DimensionError(fmt::format(
        "G~ and Sigma_V must be {}x{} (got {}x{} and {}x{})", nz, nz,
        g_tilde.rows(), g_tilde.cols(), sigma_v.rows(), sigma_v.cols()));
  }
  for (Eigen::Index r = 0; r < nz; ++r) {
    for (Eigen::Index c = 0; c < nz; ++c) {
      if (r / ny != c / ny && g_tilde(r, c) != 0.0) {
        throw DimensionError("G~ must be block diagonal");
      }
    }
  }
  GaussianJoint joint;
  joint.x_dim = nz;
  joint.mean.resize(nz + ns);
  joint.mean << g_tilde * mom.mean_y, mom.mean_s;
  joint.cov.resize(nz + ns, nz + ns);
  const MatrixXd cov_zs = g_tilde * mom.cross_ys;
  joint.cov.topLeftCorner(nz, nz) =
      g_tilde * mom.cov_y * g_tilde.transpose() + sigma_v;
  joint.cov.topRightCorner(nz, ns) = cov_zs;
  joint.cov.bottomLeftCorner(ns, nz) = cov_zs.transpose();
  joint.cov.bottomRightCorner(ns, ns) = mom.cov_s;
  joint.cov = Symmetrize(joint.cov);
  CholeskyOrThrow(joint.cov, "joint covariance of (Z^K, S^K)");
  return joint;
}

GaussianJoint JointZsMoments(const LiftedSystem& lift, const SystemModel& model,
                             const MatrixXd& g_tilde,
                             const MatrixXd& sigma_v) {
  return JointZsMoments(OutputMoments(lift, model), model.ny(), g_tilde,
                        sigma_v);
}

}  // namespace privsynth
