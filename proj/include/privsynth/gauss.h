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

#ifndef PRIVSYNTH_GAUSS_H_
#define PRIVSYNTH_GAUSS_H_

#include "privsynth/linalg.h"

namespace privsynth {

// Jointly Gaussian pair (X, Y) with X occupying the first `x_dim`
// coordinates of `mean` and `cov`.
struct GaussianJoint {
  VectorXd mean;
  MatrixXd cov;
  Eigen::Index x_dim = 0;

  Eigen::Index y_dim() const { return mean.size() - x_dim; }
  VectorXd mean_x() const { return mean.head(x_dim); }
  VectorXd mean_y() const { return mean.tail(y_dim()); }
  MatrixXd cov_xx() const { return cov.topLeftCorner(x_dim, x_dim); }
  MatrixXd cov_xy() const { return cov.topRightCorner(x_dim, y_dim()); }
  MatrixXd cov_yy() const { return cov.bottomRightCorner(y_dim(), y_dim()); }

  // The same joint with the roles of X and Y exchanged.
  GaussianJoint Swapped() const;

  // Throws DimensionError if the partition is inconsistent.
  void CheckShape() const;
};

// Differential entropy of N(mu, sigma) in bits:
//   1/2 log2 det(sigma) + (n/2) log2(2 pi e).
double EntropyBits(const MatrixXd& sigma);

struct MutualInformation {
  double bits = 0.0;
  // Conditional covariance Sigma_XX - Sigma_XY Sigma_YY^-1 Sigma_YX was not
  // numerically PD; `bits` is +inf.
  bool schur_singular = false;
};

// I[X;Y] = 1/2 log2 det Sigma_XX - 1/2 log2 det(Sigma_XX|Y). Uses Cholesky
// solves only. Throws NotPositiveDefiniteError when Sigma_XX or Sigma_YY is
// not PD.
MutualInformation MutualInformationBits(const GaussianJoint& joint);

// I[X;Y] = h[X] + h[Y] - h[X,Y]. Requires the full joint to be PD.
double MutualInformationFromEntropies(const GaussianJoint& joint);

struct MmseEstimate {
  VectorXd x_hat;
  // Posterior (error) covariance Sigma_XX - Sigma_XY Sigma_YY^-1 Sigma_YX.
  MatrixXd error_cov;
};

// Conditional mean of X given Y = y.
MmseEstimate Estimate(const GaussianJoint& joint, const VectorXd& y);

// Gain Sigma_XY Sigma_YY^-1 and the posterior covariance, for callers that
// apply the same estimator to many observations.
struct LinearEstimator {
  MatrixXd gain;
  MatrixXd error_cov;
};
LinearEstimator EstimatorFor(const GaussianJoint& joint);

}  // namespace privsynth

#endif  // PRIVSYNTH_GAUSS_H_
