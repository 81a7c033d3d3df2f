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

#ifndef PRIVSYNTH_LIFT_H_
#define PRIVSYNTH_LIFT_H_

#include "privsynth/gauss.h"
#include "privsynth/linalg.h"
#include "privsynth/model.h"

namespace privsynth {

inline constexpr int kDefaultMaxLiftedRows = 5000;

// Cap on K * n_x; PRIVSYNTH_MAX_DIM overrides the default.
int MaxLiftedRows();

// Horizon-K stacked representation of the plant. With X^K the stacked state,
//   X^K = F X(1) + J T^{K-1} + L U^{K-1},
// and Q = Cov(X^K) = F Sigma_x1 F^T + J (I (x) Sigma_T) J^T.
struct LiftedSystem {
  int horizon = 0;
  MatrixXd F;        // K nx x nx, block k is A^(k-1)
  MatrixXd J;        // K nx x (K-1) nx, block (i, j) is A^(i-j-1) for i > j
  MatrixXd L;        // J (I_{K-1} (x) B)
  MatrixXd C_tilde;  // I_K (x) C
  MatrixXd D_tilde;  // I_K (x) D
  MatrixXd Q;
};

LiftedSystem BuildLift(const SystemModel& model, int horizon,
                       int max_rows = MaxLiftedRows());

// First and second moments of the undistorted stacked signals.
struct LiftedMoments {
  VectorXd input;       // U^{K-1}
  VectorXd mean_state;  // F mu_x1 + L U^{K-1}
  VectorXd mean_y;
  MatrixXd cov_y;  // (I_K (x) Sigma_W) + C~ Q C~^T
  VectorXd mean_s;
  MatrixXd cov_s;     // D~ Q D~^T
  MatrixXd cross_ys;  // Cov(Y^K, S^K) = C~ Q D~^T
};

LiftedMoments OutputMoments(const LiftedSystem& lift, const SystemModel& model);

// Joint law of (Z^K, S^K) for Z = G~ Y + V, returned with Z as the first
// block. Throws NotPositiveDefiniteError if the assembled joint covariance
// fails its Cholesky check, DimensionError if G~ is not block diagonal.
GaussianJoint JointZsMoments(const LiftedSystem& lift, const SystemModel& model,
                             const MatrixXd& g_tilde, const MatrixXd& sigma_v);

// Same, from precomputed moments.
GaussianJoint JointZsMoments(const LiftedMoments& moments, int ny,
                             const MatrixXd& g_tilde, const MatrixXd& sigma_v);

}  // namespace privsynth

#endif  // PRIVSYNTH_LIFT_H_
