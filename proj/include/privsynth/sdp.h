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

#ifndef PRIVSYNTH_SDP_H_
#define PRIVSYNTH_SDP_H_

// Determinant-maximization over block-structured symmetric variables:
//
//   minimize   sum_v tr(C_v X_v) - sum_v w_v ln det X_v
//   subject to F_k(X) >= margin_k * I      (each F_k affine, symmetric)
//
// Variables are either symmetric matrices or block-diagonal (general blocks)
// matrices that enter only affinely. Scalar linear inequalities are 1x1
// LMIs. Solved with a log-barrier path-following method.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "privsynth/linalg.h"

namespace privsynth::sdp {

using VariableId = int;
using ConstraintId = int;

enum class VariableKind { kSymmetric, kBlockDiagonal };

struct Variable {
  std::string name;
  VariableKind kind = VariableKind::kSymmetric;
  int dim = 0;
  int block_size = 0;  // kBlockDiagonal only
  int offset = 0;      // first coordinate in the packed vector
  int size = 0;        // number of coordinates
};

struct Entry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct Constraint {
  std::string name;
  int dim = 0;
  double margin = 0.0;
  bool linear = false;
  MatrixXd constant;
  // coordinate -> entries of d F / d x_coord (both triangles).
  std::map<int, std::vector<Entry>> coefficients;
};

class SdpProblem {
 public:
  VariableId AddSymmetric(std::string name, int dim);
  VariableId AddBlockDiagonal(std::string name, int num_blocks, int block_size);

  // F(x) >= margin * I, F of size dim x dim, initially zero.
  ConstraintId AddLmi(std::string name, int dim, double margin = 0.0);
  // rhs + (terms added later at (0, 0)) >= margin.
  ConstraintId AddLinear(std::string name, double rhs, double margin = 0.0);

  // Objective pieces.
  void SetLogDetWeight(VariableId v, double weight);
  void AddLinearObjective(VariableId v, const MatrixXd& weight);  // tr(W X)

  // Block writers. (row, col) is the top-left corner of the block. A block
  // whose row and column ranges coincide is a diagonal block and receives
  // the symmetric part of the contribution; any other block is mirrored.
  void AddConstant(ConstraintId c, int row, int col, const MatrixXd& block);
  void AddVariable(ConstraintId c, int row, int col, VariableId v,
                   double scale = 1.0);
  // scale * left * X * right.
  void AddProduct(ConstraintId c, int row, int col, const MatrixXd& left,
                  VariableId v, const MatrixXd& right, double scale = 1.0);
  // Entry (row, col) += scale * tr(weight * X).
  void AddTrace(ConstraintId c, int row, int col, VariableId v,
                const MatrixXd& weight, double scale = 1.0);
  // scale * x * I on the whole constraint, for a 1x1 symmetric variable x.
  void AddScalarIdentity(ConstraintId c, VariableId v, double scale = 1.0);

  int num_coordinates() const { return num_coordinates_; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<double>& logdet_weights() const { return logdet_weights_; }
  const VectorXd& linear_objective() const { return linear_objective_; }
  const Variable& variable(VariableId v) const { return variables_.at(v); }
  const Constraint& constraint(ConstraintId c) const {
    return constraints_.at(c);
  }

  // Conversions between packed coordinates and variable matrices.
  MatrixXd Unpack(VariableId v, const VectorXd& x) const;
  std::vector<MatrixXd> UnpackAll(const VectorXd& x) const;
  VectorXd Pack(const std::vector<MatrixXd>& values) const;

  // F_c(x), without the margin.
  MatrixXd Evaluate(ConstraintId c, const VectorXd& x) const;
  // sum tr(C X) - sum w ln det X; +inf if a weighted variable is not PD.
  double Objective(const VectorXd& x) const;

  // Every LMI shifted by its margin admits a Cholesky factor and every
  // logdet-weighted variable is PD.
  bool IsStrictlyFeasible(const VectorXd& x) const;

 private:
  struct Position {
    int row;
    int col;
  };
  // Matrix positions carrying coordinate `local` of variable v.
  void Positions(const Variable& v, int local, std::vector<Position>& out) const;
  void AddEntry(Constraint& c, int coord, int row, int col, double value);
  void CheckBlock(const Constraint& c, int row, int col, Eigen::Index rows,
                  Eigen::Index cols) const;

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<double> logdet_weights_;
  VectorXd linear_objective_;
  int num_coordinates_ = 0;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kMaxIterations,
  kNumericalFailure,
};

const char* ToString(SolveStatus status);

struct SolverOptions {
  double tol_gap = 1e-7;   // duality-measure target, relative to max(1,|f|)
  double tol_feas = 1e-8;  // certificate floor on slack eigenvalues
  int max_outer_iterations = 60;
  int max_newton_steps = 50;
  double barrier_factor = 10.0;  // mu <- mu / barrier_factor
  // Phase 1 succeeds once every shifted LMI clears this margin.
  double feasibility_margin = 1e-10;
  // Radius of the ball ||x|| <= R that keeps the barrier bounded; 0 picks
  // 1e4 * (1 + data scale).
  double domain_radius = 0.0;
  // d f* / d ln R above this at termination means the objective was still
  // being pushed by the artificial bound.
  double unbounded_sensitivity = 1e-3;
  double regularization = 1e-12;
  int regularization_retries = 3;
  std::uint64_t seed = 0;
};

struct IterationRecord {
  int component = 0;
  int phase = 2;  // 1 = feasibility, 2 = optimization
  int iteration = 0;
  double mu = 0.0;  // 1 / t
  double objective = 0.0;
  double gap_bound = 0.0;
  double newton_decrement = 0.0;  // lambda^2 / 2 at the end of centering
  int newton_steps = 0;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::string message;
  VectorXd x;
  std::vector<MatrixXd> values;  // one per variable
  double objective = 0.0;        // natural-log units
  double gap_bound = 0.0;
  double max_psd_violation = 0.0;
  double max_linear_violation = 0.0;
  int newton_steps = 0;
  // Constraints closest to violation when infeasible.
  std::vector<std::string> blocking_constraints;
  std::vector<IterationRecord> log;
};

struct FeasibilityResult {
  SolveStatus status = SolveStatus::kInfeasible;  // kOptimal when found
  VectorXd x;
  std::vector<std::string> blocking_constraints;
  std::vector<IterationRecord> log;
};

// Phase 1: minimize s subject to F_k(x) - margin_k I + s I >= 0.
FeasibilityResult FindFeasible(const SdpProblem& problem,
                               const SolverOptions& opts = {},
                               const std::optional<VectorXd>& start = {});

// Strictly feasible point reached from a random start drawn with `seed`.
FeasibilityResult RandomFeasiblePoint(const SdpProblem& problem,
                                      std::uint64_t seed,
                                      const SolverOptions& opts = {});

SdpSolution Solve(const SdpProblem& problem, const SolverOptions& opts = {},
                  const std::optional<VectorXd>& start = {});

// Independent residual check: minimum eigenvalue of F_k(x) - margin_k I for
// every constraint, via a symmetric eigensolver.
struct Certificate {
  double min_slack_eigenvalue = 0.0;  // over all LMIs (non-linear)
  double max_linear_violation = 0.0;
  std::vector<std::pair<std::string, double>> slacks;

  bool Passes(double tol) const {
    return min_slack_eigenvalue >= -tol && max_linear_violation <= tol;
  }
};
Certificate CheckCertificate(const SdpProblem& problem, const VectorXd& x);

// Human-readable dump (variables, constraint constants, sparse
// coefficients) for cross-checking against other solvers.
std::string DumpProblem(const SdpProblem& problem);

// CSV with header component,phase,iter,mu,objective,gap_bound,
// max_residual,newton_steps.
std::string IterationLogCsv(const std::vector<IterationRecord>& log);

}  // namespace privsynth::sdp

#endif  // PRIVSYNTH_SDP_H_
