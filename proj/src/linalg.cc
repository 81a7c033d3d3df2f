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

#include "privsynth/linalg.h"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <string>

#include "privsynth/error.h"

namespace privsynth {

std::optional<Eigen::LLT<MatrixXd>> TryCholesky(const MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return std::nullopt;
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) return std::nullopt;
  }
  return llt;
}

Eigen::LLT<MatrixXd> CholeskyOrThrow(const MatrixXd& m, std::string_view what) {
  auto llt = TryCholesky(m);
  if (!llt) {
    throw NotPositiveDefiniteError(std::string(what) +
                                   " is not positive definite");
  }
  return *std::move(llt);
}

double LogDet(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double MinEigenvalue(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetric,
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double MaxEigenvalue(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetric,
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

VectorXd SingularValues(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues();
}

MatrixXd Kron(const MatrixXd& a, const MatrixXd& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

MatrixXd RepeatDiagonal(const MatrixXd& m, int k) {
  MatrixXd out = MatrixXd::Zero(k * m.rows(), k * m.cols());
  for (int i = 0; i < k; ++i) {
    out.block(i * m.rows(), i * m.cols(), m.rows(), m.cols()) = m;
  }
  return out;
}

MatrixXd BlockDiagonal(const std::vector<MatrixXd>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

std::vector<VectorXd> Unstack(const VectorXd& v, int k) {
  if (k <= 0 || v.size() % k != 0) {
    throw DimensionError("cannot split vector of length " +
                         std::to_string(v.size()) + " into " +
                         std::to_string(k) + " steps");
  }
  const Eigen::Index n = v.size() / k;
  std::vector<VectorXd> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(v.segment(i * n, n));
  return out;
}

VectorXd Stack(const std::vector<VectorXd>& pieces) {
  Eigen::Index n = 0;
  for (const auto& p : pieces) n += p.size();
  VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& p : pieces) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace privsynth
