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

#ifndef PRIVSYNTH_MODEL_H_
#define PRIVSYNTH_MODEL_H_

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "privsynth/linalg.h"

namespace privsynth {

inline constexpr double kUnboundedBudget =
    std::numeric_limits<double>::infinity();

// Relative tolerances for the positive-definiteness and rank checks.
inline constexpr double kTolPd = 1e-10;
inline constexpr double kTolRank = 1e-8;

// Discrete-time LTI plant with Gaussian noise:
//   X(k+1) = A X(k) + B U(k) + T(k),  Y(k) = C X(k) + W(k),  S(k) = D X(k).
struct SystemModel {
  MatrixXd A, B, C, D;
  VectorXd mu_x1;
  MatrixXd sigma_x1;
  MatrixXd sigma_t;
  MatrixXd sigma_w;
  // Known input U(1), U(2), ... Missing trailing entries are zero.
  std::vector<VectorXd> inputs;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int ny() const { return static_cast<int>(C.rows()); }
  int ns() const { return static_cast<int>(D.rows()); }

  // U(k) for 1-based step k.
  VectorXd Input(int k) const;
  // (U(1), ..., U(steps)) stacked.
  VectorXd StackedInput(int steps) const;
};

// A distortion weight as written in a model file: either a scalar w
// (meaning w * I) or a matrix. A matrix with n rows is a per-step weight and
// is expanded as I_K (x) W; one with K*n rows is taken as the full stacked
// weight. The choice is deferred to Expand so the horizon can be overridden
// after parsing.
struct WeightSpec {
  enum class Kind { kScalar, kMatrix };
  Kind kind = Kind::kScalar;
  double scalar = 1.0;
  MatrixXd matrix;

  static WeightSpec Scalar(double w) { return {Kind::kScalar, w, {}}; }
  static WeightSpec Matrix(MatrixXd w) {
    return {Kind::kMatrix, 0.0, std::move(w)};
  }

  // Stacked (K*n x K*n) weight; throws DimensionError on a shape mismatch.
  MatrixXd Expand(int horizon, int n) const;
};

struct SynthesisRequest {
  int horizon = 2;
  double eps_y = kUnboundedBudget;
  double eps_u = kUnboundedBudget;
  WeightSpec w_y;
  WeightSpec w_u;

  MatrixXd OutputWeight(const SystemModel& m) const {
    return w_y.Expand(horizon, m.ny());
  }
  MatrixXd InputWeight(const SystemModel& m) const {
    return w_u.Expand(horizon, m.nu());
  }
};

struct ValidationIssue {
  std::string field;
  std::string message;
  // Offending eigenvalue / singular value / size, when there is one.
  double value = 0.0;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::string ToString() const;
};

ValidationReport Validate(const SystemModel& model,
                          const SynthesisRequest& request);

struct ModelFile {
  SystemModel model;
  SynthesisRequest request;
};

// Parses without validating; throws ParseError / SchemaError.
ModelFile ParseModel(const nlohmann::json& doc);
ModelFile ParseModelFile(const std::filesystem::path& path);

// ParseModelFile followed by Validate; throws ValidationError with the
// report text when any invariant fails.
ModelFile LoadModel(const std::filesystem::path& path);

nlohmann::json ModelToJson(const SystemModel& model,
                           const SynthesisRequest& request);
void SaveModel(const std::filesystem::path& path, const SystemModel& model,
               const SynthesisRequest& request);

// JSON helpers shared by the mechanism and report writers.
nlohmann::json MatrixToJson(const MatrixXd& m);
nlohmann::json VectorToJson(const VectorXd& v);
nlohmann::json BudgetToJson(double eps);
MatrixXd MatrixFromJson(const nlohmann::json& j, const std::string& field);
VectorXd VectorFromJson(const nlohmann::json& j, const std::string& field);
double BudgetFromJson(const nlohmann::json& j, const std::string& field);

}  // namespace privsynth

#endif  // PRIVSYNTH_MODEL_H_
