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

#include "privsynth/gauss.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "privsynth/error.h"

namespace privsynth {
namespace {

constexpr double kLn2 = std::numbers::ln2;

}  // namespace

GaussianJoint GaussianJoint::Swapped() const {
  CheckShape();
  const Eigen::Index nx = x_dim, ny = y_dim();
  GaussianJoint out;
  out.x_dim = ny;
  out.mean.resize(mean.size());
  out.mean << mean.tail(ny), mean.head(nx);
  out.cov.resize(cov.rows(), cov.cols());
  out.cov.topLeftCorner(ny, ny) = cov.bottomRightCorner(ny, ny);
  out.cov.topRightCorner(ny, nx) = cov.bottomLeftCorner(ny, nx);
  out.cov.bottomLeftCorner(nx, ny) = cov.topRightCorner(nx, ny);
  out.cov.bottomRightCorner(nx, nx) = cov.topLeftCorner(nx, nx);
  return out;
}

void GaussianJoint::CheckShape() const {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size() || x_dim < 0 ||
      x_dim > mean.size()) {
    throw DimensionError("inconsistent Gaussian joint partition");
  }
}

double EntropyBits(const MatrixXd& sigma) {
  const auto llt = CholeskyOrThrow(sigma, "covariance");
  const double n = static_cast<double>(sigma.rows());
  return 0.5 * LogDet(llt) / kLn2 +
         0.5 * n * std::log2(2.0 * std::numbers::pi * std::numbers::e);
}

MutualInformation MutualInformationBits(const GaussianJoint& joint) {
  joint.CheckShape();
  const MatrixXd sxx = joint.cov_xx();
  const auto llt_xx = CholeskyOrThrow(sxx, "Sigma_XX");
  const auto llt_yy = CholeskyOrThrow(joint.cov_yy(), "Sigma_YY");
  const MatrixXd sxy = joint.cov_xy();
  const MatrixXd schur =
      Symmetrize(sxx - sxy * llt_yy.solve(sxy.transpose()));
  const auto llt_schur = TryCholesky(schur);
  if (!llt_schur) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {0.5 * (LogDet(llt_xx) - LogDet(*llt_schur)) / kLn2, false};
}

double MutualInformationFromEntropies(const GaussianJoint& joint) {
  joint.CheckShape();
  return EntropyBits(joint.cov_xx()) + EntropyBits(joint.cov_yy()) -
         EntropyBits(Symmetrize(joint.cov));
}

LinearEstimator EstimatorFor(const GaussianJoint& joint) {
  joint.CheckShape();
  const auto llt_yy = CholeskyOrThrow(joint.cov_yy(), "Sigma_YY");
  const MatrixXd sxy = joint.cov_xy();
  LinearEstimator est;
  // gain = Sigma_XY Sigma_YY^-1 = (Sigma_YY^-1 Sigma_YX)^T.
  est.gain = llt_yy.solve(sxy.transpose()).transpose();
  est.error_cov = Symmetrize(joint.cov_xx() - est.gain * sxy.transpose());
  return est;
}

MmseEstimate Estimate(const GaussianJoint& joint, const VectorXd& y) {
  if (y.size() != joint.y_dim()) {
    throw DimensionError("observation has length " + std::to_string(y.size()) +
                         ", expected " + std::to_string(joint.y_dim()));
  }
  LinearEstimator est = EstimatorFor(joint);
  return {joint.mean_x() + est.gain * (y - joint.mean_y()),
          std::move(est.error_cov)};
}

}  // namespace privsynth
