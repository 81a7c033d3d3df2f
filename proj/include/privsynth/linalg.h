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

#ifndef PRIVSYNTH_LINALG_H_
#define PRIVSYNTH_LINALG_H_

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

namespace privsynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cholesky factor of a symmetric matrix, or nullopt when it is not
// numerically positive definite.
std::optional<Eigen::LLT<MatrixXd>> TryCholesky(const MatrixXd& m);

// Same, but throws NotPositiveDefiniteError naming `what`.
Eigen::LLT<MatrixXd> CholeskyOrThrow(const MatrixXd& m, std::string_view what);

// Natural-log determinant from a Cholesky factor.
double LogDet(const Eigen::LLT<MatrixXd>& llt);

inline MatrixXd Symmetrize(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Eigenvalue extremes of a symmetric matrix (self-adjoint solver, so this
// path is independent of Cholesky).
double MinEigenvalue(const MatrixXd& symmetric);
double MaxEigenvalue(const MatrixXd& symmetric);

// Singular values in decreasing order.
VectorXd SingularValues(const MatrixXd& m);

MatrixXd Kron(const MatrixXd& a, const MatrixXd& b);

// I_k (x) m.
MatrixXd RepeatDiagonal(const MatrixXd& m, int k);

MatrixXd BlockDiagonal(const std::vector<MatrixXd>& blocks);

// Splits a stacked vector into `k` consecutive pieces of equal length.
std::vector<VectorXd> Unstack(const VectorXd& v, int k);
VectorXd Stack(const std::vector<VectorXd>& pieces);

}  // namespace privsynth

#endif  // PRIVSYNTH_LINALG_H_
