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

#include "privsynth/model.h"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "privsynth/error.h"

namespace privsynth {
namespace {

using nlohmann::json;

bool AllFinite(const MatrixXd& m) { return m.allFinite(); }

void CheckShape(ValidationReport& report, const std::string& field,
                const MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    report.issues.push_back(
        {field,
         fmt::format("{} has shape {}x{}, expected {}x{}", field, m.rows(),
                     m.cols(), rows, cols),
         static_cast<double>(m.rows())});
  }
}

// Symmetric with min eigenvalue > kTolPd * max |eigenvalue|.
void CheckPositiveDefinite(ValidationReport& report, const std::string& field,
                           const MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return;
  if (!AllFinite(m)) {
    report.issues.push_back({field, field + " has non-finite entries", 0.0});
    return;
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    report.issues.push_back(
        {field, fmt::format("{} not symmetric (max asymmetry {:.3e})", field,
                            asym),
         asym});
    return;
  }
  const MatrixXd sym = Symmetrize(m);
  const double lo = MinEigenvalue(sym);
  const double hi = std::max(std::abs(MaxEigenvalue(sym)), std::abs(lo));
  if (!(lo > 0.0) || lo <= kTolPd * hi) {
    report.issues.push_back(
        {field,
         fmt::format("{} not PD (min eigenvalue {:.6e}, max {:.6e})", field,
                     lo, hi),
         lo});
  }
}

void CheckFullColumnRank(ValidationReport& report, const std::string& field,
                         const MatrixXd& m) {
  if (m.size() == 0) return;
  const VectorXd sv = SingularValues(m);
  const double smallest = sv.size() < m.cols() ? 0.0 : sv(sv.size() - 1);
  if (!(smallest > kTolRank * sv(0))) {
    report.issues.push_back(
        {field,
         fmt::format("{} not full column rank (smallest singular value "
                     "{:.6e})",
                     field, smallest),
         smallest});
  }
}

const json& Require(const json& doc, const std::string& field) {
  auto it = doc.find(field);
  if (it == doc.end()) {
    throw SchemaError("missing field \"" + field + "\"");
  }
  return *it;
}

double NumberFromJson(const json& j, const std::string& field) {
  if (!j.is_number()) {
    throw SchemaError("field \"" + field + "\" must be a number");
  }
  return j.get<double>();
}

// Matrix field that may also be a scalar standing for sigma^2 * I_n.
MatrixXd ScaledIdentityOrMatrix(const json& j, const std::string& field,
                                int n) {
  if (j.is_number()) {
    return NumberFromJson(j, field) * MatrixXd::Identity(n, n);
  }
  return MatrixFromJson(j, field);
}

WeightSpec WeightFromJson(const json& doc, const std::string& field) {
  auto it = doc.find(field);
  if (it == doc.end()) return WeightSpec::Scalar(1.0);
  if (it->is_number()) return WeightSpec::Scalar(it->get<double>());
  return WeightSpec::Matrix(MatrixFromJson(*it, field));
}

json WeightToJson(const WeightSpec& w) {
  if (w.kind == WeightSpec::Kind::kScalar) return w.scalar;
  return MatrixToJson(w.matrix);
}

}  // namespace

VectorXd SystemModel::Input(int k) const {
  if (k >= 1 && k <= static_cast<int>(inputs.size())) return inputs[k - 1];
  return VectorXd::Zero(nu());
}

VectorXd SystemModel::StackedInput(int steps) const {
  VectorXd out(steps * nu());
  for (int k = 1; k <= steps; ++k) out.segment((k - 1) * nu(), nu()) = Input(k);
  return out;
}

MatrixXd WeightSpec::Expand(int horizon, int n) const {
  if (kind == Kind::kScalar) {
    return scalar * MatrixXd::Identity(horizon * n, horizon * n);
  }
  if (matrix.rows() == n && matrix.cols() == n) {
    return RepeatDiagonal(matrix, horizon);
  }
  if (matrix.rows() == horizon * n && matrix.cols() == horizon * n) {
    return matrix;
  }
  throw DimensionError(fmt::format(
      "weight has shape {}x{}; expected {}x{} (per step) or {}x{} (stacked)",
      matrix.rows(), matrix.cols(), n, n, horizon * n, horizon * n));
}

std::string ValidationReport::ToString() const {
  std::string out;
  for (const auto& issue : issues) {
    out += issue.message;
    out += '\n';
  }
  return out;
}

ValidationReport Validate(const SystemModel& m, const SynthesisRequest& req) {
  ValidationReport report;
  const Eigen::Index nx = m.A.rows();
  if (nx == 0 || m.A.cols() != nx) {
    report.issues.push_back({"A", "A must be a non-empty square matrix",
                             static_cast<double>(m.A.cols())});
    return report;
  }
  CheckShape(report, "B", m.B, nx, m.B.cols());
  CheckShape(report, "C", m.C, m.C.rows(), nx);
  CheckShape(report, "D", m.D, m.D.rows(), nx);
  if (m.B.cols() == 0 || m.C.rows() == 0 || m.D.rows() == 0) {
    report.issues.push_back({"dimensions", "B, C and D must be non-empty", 0});
  }
  if (m.mu_x1.size() != nx) {
    report.issues.push_back(
        {"mu_x1",
         fmt::format("mu_x1 has length {}, expected {}", m.mu_x1.size(), nx),
         static_cast<double>(m.mu_x1.size())});
  }
  CheckShape(report, "Sigma_x1", m.sigma_x1, nx, nx);
  CheckShape(report, "Sigma_T", m.sigma_t, nx, nx);
  CheckShape(report, "Sigma_W", m.sigma_w, m.C.rows(), m.C.rows());
  for (const auto* mat : {&m.A, &m.B, &m.C, &m.D}) {
    if (!AllFinite(*mat)) {
      report.issues.push_back({"matrices", "non-finite system matrix entry", 0});
      break;
    }
  }
  if (!report.ok()) return report;

  CheckPositiveDefinite(report, "Sigma_x1", m.sigma_x1);
  CheckPositiveDefinite(report, "Sigma_T", m.sigma_t);
  CheckPositiveDefinite(report, "Sigma_W", m.sigma_w);

  // Full row rank of D.
  {
    const VectorXd sv = SingularValues(m.D);
    const double smallest =
        m.D.rows() > m.D.cols() ? 0.0 : sv(sv.size() - 1);
    if (!(smallest > kTolRank * sv(0))) {
      report.issues.push_back(
          {"D",
           fmt::format("D not full row rank (smallest singular value {:.6e})",
                       smallest),
           smallest});
    }
  }

  for (std::size_t k = 0; k < m.inputs.size(); ++k) {
    if (m.inputs[k].size() != m.B.cols() || !m.inputs[k].allFinite()) {
      report.issues.push_back(
          {"U", fmt::format("U({}) has length {}, expected {}", k + 1,
                            m.inputs[k].size(), m.B.cols()),
           static_cast<double>(k + 1)});
    }
  }
  if (!m.inputs.empty() &&
      static_cast<int>(m.inputs.size()) < req.horizon - 1) {
    report.issues.push_back(
        {"U",
         fmt::format("U has {} entries; horizon {} needs at least {}",
                     m.inputs.size(), req.horizon, req.horizon - 1),
         static_cast<double>(m.inputs.size())});
  }

  if (req.horizon < 2) {
    report.issues.push_back(
        {"K", fmt::format("horizon too short: K = {} (need K >= 2)",
                          req.horizon),
         static_cast<double>(req.horizon)});
  }
  for (const auto& [name, eps] :
       {std::pair{"eps_Y", req.eps_y}, std::pair{"eps_U", req.eps_u}}) {
    if (std::isnan(eps) || eps < 0.0) {
      report.issues.push_back(
          {name, fmt::format("{} must be non-negative or inf", name), eps});
    }
  }
  if (req.horizon >= 1) {
    for (const auto& [name, spec, n] :
         {std::tuple{"W_Y", &req.w_y, m.C.rows()},
          std::tuple{"W_U", &req.w_u, m.B.cols()}}) {
      try {
        CheckFullColumnRank(report, name,
                            spec->Expand(req.horizon, static_cast<int>(n)));
      } catch (const DimensionError& e) {
        report.issues.push_back({name, std::string(name) + ": " + e.what(), 0});
      }
    }
  }
  return report;
}

MatrixXd MatrixFromJson(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw SchemaError("field \"" + field +
                      "\" must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array()) {
      throw SchemaError("field \"" + field + "\" row " + std::to_string(r) +
                        " is not an array");
    }
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols || cols == 0) {
      throw SchemaError("field \"" + field + "\" has ragged rows");
    }
  }
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = NumberFromJson(j[r][c], field);
    }
  }
  return m;
}

VectorXd VectorFromJson(const json& j, const std::string& field) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) {
    throw SchemaError("field \"" + field + "\" must be an array of numbers");
  }
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(i) = NumberFromJson(j[i], field);
  }
  return v;
}

double BudgetFromJson(const json& j, const std::string& field) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (s == "inf" || s == "+inf" || s == "infinity") return kUnboundedBudget;
    throw SchemaError("field \"" + field + "\" must be a number or \"inf\"");
  }
  return NumberFromJson(j, field);
}

json MatrixToJson(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json VectorToJson(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json BudgetToJson(double eps) {
  if (std::isinf(eps)) return "inf";
  return eps;
}

ModelFile ParseModel(const json& doc) {
  if (!doc.is_object()) throw SchemaError("model file must be a JSON object");
  ModelFile out;
  SystemModel& m = out.model;
  m.A = MatrixFromJson(Require(doc, "A"), "A");
  m.B = MatrixFromJson(Require(doc, "B"), "B");
  m.C = MatrixFromJson(Require(doc, "C"), "C");
  m.D = MatrixFromJson(Require(doc, "D"), "D");
  const int nx = static_cast<int>(m.A.rows());
  const int ny = static_cast<int>(m.C.rows());
  m.mu_x1 = VectorFromJson(Require(doc, "mu_x1"), "mu_x1");
  m.sigma_x1 = ScaledIdentityOrMatrix(Require(doc, "Sigma_x1"), "Sigma_x1", nx);
  m.sigma_t = ScaledIdentityOrMatrix(Require(doc, "Sigma_T"), "Sigma_T", nx);
  m.sigma_w = ScaledIdentityOrMatrix(Require(doc, "Sigma_W"), "Sigma_W", ny);
  if (auto it = doc.find("U"); it != doc.end()) {
    if (!it->is_array()) throw SchemaError("field \"U\" must be an array");
    for (const auto& step : *it) m.inputs.push_back(VectorFromJson(step, "U"));
  }

  SynthesisRequest& r = out.request;
  const json& k = Require(doc, "K");
  if (!k.is_number_integer()) {
    throw SchemaError("field \"K\" must be an integer");
  }
  r.horizon = k.get<int>();
  r.eps_y = BudgetFromJson(Require(doc, "eps_Y"), "eps_Y");
  r.eps_u = BudgetFromJson(Require(doc, "eps_U"), "eps_U");
  r.w_y = WeightFromJson(doc, "W_Y");
  r.w_u = WeightFromJson(doc, "W_U");
  return out;
}

ModelFile ParseModelFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed model file " + path.string() + ": " +
                     e.what());
  }
  return ParseModel(doc);
}

ModelFile LoadModel(const std::filesystem::path& path) {
  ModelFile file = ParseModelFile(path);
  const ValidationReport report = Validate(file.model, file.request);
  if (!report.ok()) throw ValidationError(report.ToString());
  return file;
}

json ModelToJson(const SystemModel& m, const SynthesisRequest& r) {
  json doc;
  doc["A"] = MatrixToJson(m.A);
  doc["B"] = MatrixToJson(m.B);
  doc["C"] = MatrixToJson(m.C);
  doc["D"] = MatrixToJson(m.D);
  doc["mu_x1"] = VectorToJson(m.mu_x1);
  doc["Sigma_x1"] = MatrixToJson(m.sigma_x1);
  doc["Sigma_T"] = MatrixToJson(m.sigma_t);
  doc["Sigma_W"] = MatrixToJson(m.sigma_w);
  json u = json::array();
  for (const auto& step : m.inputs) u.push_back(VectorToJson(step));
  doc["U"] = std::move(u);
  doc["K"] = r.horizon;
  doc["eps_Y"] = BudgetToJson(r.eps_y);
  doc["eps_U"] = BudgetToJson(r.eps_u);
  doc["W_Y"] = WeightToJson(r.w_y);
  doc["W_U"] = WeightToJson(r.w_u);
  return doc;
}

void SaveModel(const std::filesystem::path& path, const SystemModel& m,
               const SynthesisRequest& r) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file " + path.string());
  out << ModelToJson(m, r).dump(2) << '\n';
}

}  // namespace privsynth
