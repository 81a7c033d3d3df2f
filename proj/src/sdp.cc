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

#include "privsynth/sdp.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "privsynth/error.h"

namespace privsynth::sdp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls fn(local, row, col) for every position carrying a coordinate. For
// symmetric variables the upper-triangle position is reported first and the
// mirrored one follows with the same local index.
template <typename Fn>
void ForEachPosition(const Variable& v, Fn&& fn) {
  if (v.kind == VariableKind::kSymmetric) {
    int local = 0;
    for (int b = 0; b < v.dim; ++b) {
      for (int a = 0; a <= b; ++a, ++local) {
        fn(local, a, b);
        if (a != b) fn(local, b, a);
      }
    }
    return;
  }
  const int bs = v.block_size;
  const int blocks = v.dim / bs;
  int local = 0;
  for (int k = 0; k < blocks; ++k) {
    for (int a = 0; a < bs; ++a) {
      for (int b = 0; b < bs; ++b, ++local) fn(local, k * bs + a, k * bs + b);
    }
  }
}

std::vector<std::vector<int>> NonzeroColumns(const MatrixXd& m) {
  std::vector<std::vector<int>> out(m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) out[j].push_back(i);
    }
  }
  return out;
}

// One log-det barrier piece: -weight * ln det(constant + sum_k x_k F_k).
struct Term {
  int dim = 0;
  MatrixXd constant;
  std::vector<int> coords;
  std::vector<std::vector<Entry>> entries;
  double weight = 1.0;
  int source = -1;  // constraint index, or variable index for objectives
};

struct Program {
  int n = 0;
  std::vector<Term> constraints;
  std::vector<Term> logdets;
  VectorXd linear;
  std::vector<int> global;  // local coordinate -> problem coordinate
  double radius = 0.0;
};

std::vector<Entry> Merge(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    return l.row != r.row ? l.row < r.row : l.col < r.col;
  });
  std::vector<Entry> out;
  for (const Entry& e : entries) {
    if (!out.empty() && out.back().row == e.row && out.back().col == e.col) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const Entry& e) { return e.value == 0.0; }),
            out.end());
  return out;
}

MatrixXd EvaluateTerm(const Term& term, const VectorXd& x) {
  MatrixXd m = term.constant;
  for (std::size_t k = 0; k < term.coords.size(); ++k) {
    const double xk = x[term.coords[k]];
    if (xk == 0.0) continue;
    for (const Entry& e : term.entries[k]) m(e.row, e.col) += xk * e.value;
  }
  return m;
}

// Derivatives of scale * (-ln det M), M = term(x), S = M^{-1}:
//   d/dx_i     = -scale tr(S F_i)
//   d2/dx_i dx_j = scale tr(S F_i S F_j).
void AddTermGradient(const Term& term, const MatrixXd& s, double scale,
                     VectorXd& g) {
  for (std::size_t i = 0; i < term.coords.size(); ++i) {
    double gi = 0.0;
    for (const Entry& e : term.entries[i]) gi += e.value * s(e.col, e.row);
    g[term.coords[i]] -= scale * gi;
  }
}

void AddTermHessian(const Term& term, const MatrixXd& s, double scale,
                    MatrixXd& h) {
  const std::size_t m = term.coords.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& ei = term.entries[i];
    const int ci = term.coords[i];
    for (std::size_t j = i; j < m; ++j) {
      double hij = 0.0;
      for (const Entry& e : ei) {
        for (const Entry& f : term.entries[j]) {
          hij += e.value * f.value * s(e.col, f.row) * s(f.col, e.row);
        }
      }
      if (hij == 0.0) continue;
      const int cj = term.coords[j];
      h(ci, cj) += scale * hij;
      if (ci != cj) h(cj, ci) += scale * hij;
    }
  }
}

class Barrier {
 public:
  explicit Barrier(const Program& p) : p_(p) {}

  // Objective without barrier terms; +inf outside the log-det domain.
  double Objective(const VectorXd& x) const {
    double f = p_.linear.dot(x);
    for (const Term& t : p_.logdets) {
      auto llt = TryCholesky(EvaluateTerm(t, x));
      if (!llt) return kInf;
      f -= t.weight * LogDet(*llt);
    }
    return f;
  }

  double Value(const VectorXd& x, double t) const {
    const double ball = p_.radius * p_.radius - x.squaredNorm();
    if (!(ball > 0)) return kInf;
    double v = -std::log(ball);
    for (const Term& term : p_.constraints) {
      auto llt = TryCholesky(EvaluateTerm(term, x));
      if (!llt) return kInf;
      v -= LogDet(*llt);
    }
    const double f = Objective(x);
    if (!std::isfinite(f)) return kInf;
    return v + t * f;
  }

  // Gradients of the constraint barrier (with ball) and of the objective.
  bool Gradients(const VectorXd& x, VectorXd& g_barrier,
                 VectorXd& g_objective) const {
    return Accumulate(x, 1.0, g_barrier, g_objective, nullptr);
  }

  // Gradient and Hessian of barrier + t * objective.
  bool Derivatives(const VectorXd& x, double t, VectorXd& g,
                   MatrixXd& h) const {
    VectorXd g_obj;
    if (!Accumulate(x, t, g, g_obj, &h)) return false;
    g += t * g_obj;
    return true;
  }

 private:
  bool Accumulate(const VectorXd& x, double t, VectorXd& g_barrier,
                  VectorXd& g_objective, MatrixXd* h) const {
    const int n = p_.n;
    g_barrier.setZero(n);
    g_objective = p_.linear;
    if (h) h->setZero(n, n);
    const double ball = p_.radius * p_.radius - x.squaredNorm();
    if (!(ball > 0)) return false;
    g_barrier += 2.0 * x / ball;
    if (h) {
      h->diagonal().array() += 2.0 / ball;
      h->noalias() += (4.0 / (ball * ball)) * x * x.transpose();
    }
    auto add = [&](const Term& term, double weight, double hess_scale,
                   VectorXd& g) {
      auto llt = TryCholesky(EvaluateTerm(term, x));
      if (!llt) return false;
      const MatrixXd s = llt->solve(MatrixXd::Identity(term.dim, term.dim));
      AddTermGradient(term, s, weight, g);
      if (h) AddTermHessian(term, s, hess_scale, *h);
      return true;
    };
    for (const Term& term : p_.constraints) {
      if (!add(term, 1.0, 1.0, g_barrier)) return false;
    }
    for (const Term& term : p_.logdets) {
      if (!add(term, term.weight, t * term.weight, g_objective)) return false;
    }
    return true;
  }

  const Program& p_;
};

struct CenterResult {
  int steps = 0;
  double decrement = 0.0;  // lambda^2 / 2
  bool converged = false;
  bool stalled = false;
  bool numerical_failure = false;
  bool exited_early = false;
};

constexpr double kCenteringTolerance = 1e-9;

CenterResult Center(const Barrier& barrier, VectorXd& x, double t,
                    const SolverOptions& opts,
                    const std::function<bool(const VectorXd&)>& early_exit) {
  CenterResult r;
  VectorXd g;
  MatrixXd h;
  for (r.steps = 0; r.steps < opts.max_newton_steps;) {
    if (!barrier.Derivatives(x, t, g, h)) {
      r.numerical_failure = true;
      return r;
    }
    Eigen::LLT<MatrixXd> llt(h);
    double reg = opts.regularization * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    int retries = 0;
    while (llt.info() != Eigen::Success) {
      if (retries++ >= opts.regularization_retries) {
        r.numerical_failure = true;
        return r;
      }
      MatrixXd hr = h;
      hr.diagonal().array() += reg;
      llt.compute(hr);
      reg *= 100.0;
    }
    const VectorXd dx = -llt.solve(g);
    const double slope = g.dot(dx);
    r.decrement = -0.5 * slope;
    if (!(r.decrement >= 0) || !std::isfinite(r.decrement)) {
      r.numerical_failure = true;
      return r;
    }
    if (r.decrement <= kCenteringTolerance) {
      r.converged = true;
      return r;
    }
    const double phi0 = barrier.Value(x, t);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-14) {
      const VectorXd trial = x + alpha * dx;
      const double phi = barrier.Value(trial, t);
      if (std::isfinite(phi) && phi <= phi0 + 0.25 * alpha * slope) {
        x = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++r.steps;
    if (!accepted) {
      // Rounding in phi dominates the predicted decrease.
      r.stalled = true;
      return r;
    }
    if (early_exit && early_exit(x)) {
      r.exited_early = true;
      return r;
    }
  }
  return r;
}

double InitialT(const Barrier& barrier, const VectorXd& x) {
  VectorXd gb, go;
  if (!barrier.Gradients(x, gb, go)) return 1.0;
  const double no = go.norm();
  if (!(no > 0)) return 1.0;
  return std::clamp(gb.norm() / no, 1e-6, 1e6);
}

int TotalDim(const Program& p) {
  int d = 1;  // ball
  for (const Term& t : p.constraints) d += t.dim;
  return d;
}

double DataScale(const SdpProblem& problem) {
  double s = 1.0;
  for (const Constraint& c : problem.constraints()) {
    if (c.constant.size() > 0) s = std::max(s, c.constant.cwiseAbs().maxCoeff());
    s = std::max(s, std::abs(c.margin));
  }
  return s;
}

double AutoRadius(const SdpProblem& problem, const SolverOptions& opts,
                  const VectorXd& x0) {
  if (opts.domain_radius > 0) return opts.domain_radius;
  return std::max(1e4 * (1.0 + DataScale(problem)), 10.0 * x0.norm());
}

// Coordinate -> variable lookup.
std::vector<int> CoordinateOwners(const SdpProblem& problem) {
  std::vector<int> owner(problem.num_coordinates());
  for (std::size_t v = 0; v < problem.variables().size(); ++v) {
    const Variable& var = problem.variables()[v];
    for (int i = 0; i < var.size; ++i) owner[var.offset + i] = static_cast<int>(v);
  }
  return owner;
}

// Groups of variables linked through shared constraints.
std::vector<std::vector<int>> Components(const SdpProblem& problem) {
  const int nv = static_cast<int>(problem.variables().size());
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    return parent[a] == a ? a : parent[a] = find(parent[a]);
  };
  const auto owner = CoordinateOwners(problem);
  for (const Constraint& c : problem.constraints()) {
    int first = -1;
    for (const auto& [coord, entries] : c.coefficients) {
      const int v = find(owner[coord]);
      if (first < 0) {
        first = v;
      } else if (v != first) {
        parent[v] = first;
      }
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < nv; ++v) groups[find(v)].push_back(v);
  std::vector<std::vector<int>> out;
  for (auto& [root, vars] : groups) out.push_back(std::move(vars));
  std::sort(out.begin(), out.end());
  return out;
}

Term CompileConstraint(const Constraint& c, int index,
                       const std::vector<int>& local_of) {
  Term t;
  t.dim = c.dim;
  t.constant = c.constant;
  t.constant.diagonal().array() -= c.margin;
  t.source = index;
  for (const auto& [coord, entries] : c.coefficients) {
    auto merged = Merge(entries);
    if (merged.empty()) continue;
    t.coords.push_back(local_of[coord]);
    t.entries.push_back(std::move(merged));
  }
  return t;
}

// Builds the program over the variables in `vars` (all when empty).
Program Compile(const SdpProblem& problem, const std::vector<int>& vars) {
  Program p;
  std::vector<int> local_of(problem.num_coordinates(), -1);
  std::vector<char> in_set(problem.variables().size(), 0);
  for (int v : vars) {
    in_set[v] = 1;
    const Variable& var = problem.variable(v);
    for (int i = 0; i < var.size; ++i) {
      local_of[var.offset + i] = p.n++;
      p.global.push_back(var.offset + i);
    }
  }
  const auto owner = CoordinateOwners(problem);
  for (std::size_t c = 0; c < problem.constraints().size(); ++c) {
    const Constraint& con = problem.constraints()[c];
    if (con.coefficients.empty()) continue;
    if (!in_set[owner[con.coefficients.begin()->first]]) continue;
    p.constraints.push_back(CompileConstraint(con, static_cast<int>(c), local_of));
  }
  p.linear = VectorXd::Zero(p.n);
  for (int i = 0; i < p.n; ++i) p.linear[i] = problem.linear_objective()[p.global[i]];
  for (int v : vars) {
    const double w = problem.logdet_weights()[v];
    if (w == 0.0) continue;
    const Variable& var = problem.variable(v);
    Term t;
    t.dim = var.dim;
    t.constant = MatrixXd::Zero(var.dim, var.dim);
    t.weight = w;
    t.source = v;
    t.coords.resize(var.size);
    t.entries.resize(var.size);
    for (int i = 0; i < var.size; ++i) t.coords[i] = local_of[var.offset + i];
    ForEachPosition(var, [&](int local, int row, int col) {
      t.entries[local].push_back({row, col, 1.0});
    });
    p.logdets.push_back(std::move(t));
  }
  return p;
}

VectorXd Restrict(const Program& p, const VectorXd& x) {
  VectorXd out(p.n);
  for (int i = 0; i < p.n; ++i) out[i] = x[p.global[i]];
  return out;
}

double MinSlack(const Term& term, const VectorXd& x) {
  return MinEigenvalue(Symmetrize(EvaluateTerm(term, x)));
}

}  // namespace

// ---------------------------------------------------------------------------
// Problem construction.

VariableId SdpProblem::AddSymmetric(std::string name, int dim) {
  if (dim <= 0) throw DimensionError("variable " + name + " has no rows");
  Variable v;
  v.name = std::move(name);
  v.kind = VariableKind::kSymmetric;
  v.dim = dim;
  v.offset = num_coordinates_;
  v.size = dim * (dim + 1) / 2;
  num_coordinates_ += v.size;
  variables_.push_back(std::move(v));
  logdet_weights_.push_back(0.0);
  linear_objective_.conservativeResize(num_coordinates_);
  linear_objective_.tail(variables_.back().size).setZero();
  return static_cast<VariableId>(variables_.size() - 1);
}

VariableId SdpProblem::AddBlockDiagonal(std::string name, int num_blocks,
                                        int block_size) {
  if (num_blocks <= 0 || block_size <= 0) {
    throw DimensionError("variable " + name + " has no blocks");
  }
  Variable v;
  v.name = std::move(name);
  v.kind = VariableKind::kBlockDiagonal;
  v.dim = num_blocks * block_size;
  v.block_size = block_size;
  v.offset = num_coordinates_;
  v.size = num_blocks * block_size * block_size;
  num_coordinates_ += v.size;
  variables_.push_back(std::move(v));
  logdet_weights_.push_back(0.0);
  linear_objective_.conservativeResize(num_coordinates_);
  linear_objective_.tail(variables_.back().size).setZero();
  return static_cast<VariableId>(variables_.size() - 1);
}

ConstraintId SdpProblem::AddLmi(std::string name, int dim, double margin) {
  if (dim <= 0) throw DimensionError("constraint " + name + " has no rows");
  Constraint c;
  c.name = std::move(name);
  c.dim = dim;
  c.margin = margin;
  c.constant = MatrixXd::Zero(dim, dim);
  constraints_.push_back(std::move(c));
  return static_cast<ConstraintId>(constraints_.size() - 1);
}

ConstraintId SdpProblem::AddLinear(std::string name, double rhs, double margin) {
  const ConstraintId id = AddLmi(std::move(name), 1, margin);
  constraints_[id].linear = true;
  constraints_[id].constant(0, 0) = rhs;
  return id;
}

void SdpProblem::SetLogDetWeight(VariableId v, double weight) {
  if (variables_.at(v).kind != VariableKind::kSymmetric) {
    throw DimensionError("log-det term on non-symmetric variable " +
                         variables_[v].name);
  }
  logdet_weights_.at(v) = weight;
}

void SdpProblem::AddLinearObjective(VariableId v, const MatrixXd& weight) {
  const Variable& var = variables_.at(v);
  if (weight.rows() != var.dim || weight.cols() != var.dim) {
    throw DimensionError("objective weight for " + var.name + " is " +
                         std::to_string(weight.rows()) + "x" +
                         std::to_string(weight.cols()));
  }
  ForEachPosition(var, [&](int local, int row, int col) {
    linear_objective_[var.offset + local] += weight(col, row);
  });
}

void SdpProblem::CheckBlock(const Constraint& c, int row, int col,
                            Eigen::Index rows, Eigen::Index cols) const {
  if (row < 0 || col < 0 || row + rows > c.dim || col + cols > c.dim) {
    throw DimensionError(fmt::format(
        "block {}x{} at ({}, {}) does not fit constraint {} of size {}", rows,
        cols, row, col, c.name, c.dim));
  }
  const bool diagonal = row == col && rows == cols;
  const bool overlap = row < col + cols && col < row + rows;
  if (overlap && !diagonal) {
    throw DimensionError("block straddles the diagonal of " + c.name);
  }
}

void SdpProblem::AddEntry(Constraint& c, int coord, int row, int col,
                          double value) {
  if (value != 0.0) c.coefficients[coord].push_back({row, col, value});
}

void SdpProblem::AddConstant(ConstraintId id, int row, int col,
                             const MatrixXd& block) {
  Constraint& c = constraints_.at(id);
  CheckBlock(c, row, col, block.rows(), block.cols());
  if (row == col) {
    c.constant.block(row, col, block.rows(), block.cols()) += Symmetrize(block);
  } else {
    c.constant.block(row, col, block.rows(), block.cols()) += block;
    c.constant.block(col, row, block.cols(), block.rows()) += block.transpose();
  }
}

void SdpProblem::AddVariable(ConstraintId c, int row, int col, VariableId v,
                             double scale) {
  const int n = variables_.at(v).dim;
  AddProduct(c, row, col, MatrixXd::Identity(n, n), v, MatrixXd::Identity(n, n),
             scale);
}

void SdpProblem::AddProduct(ConstraintId id, int row, int col,
                            const MatrixXd& left, VariableId vid,
                            const MatrixXd& right, double scale) {
  Constraint& c = constraints_.at(id);
  const Variable& v = variables_.at(vid);
  if (left.cols() != v.dim || right.rows() != v.dim) {
    throw DimensionError(fmt::format("product with {} ({}x{}) has factors {}x{} "
                                     "and {}x{}",
                                     v.name, v.dim, v.dim, left.rows(),
                                     left.cols(), right.rows(), right.cols()));
  }
  CheckBlock(c, row, col, left.rows(), right.cols());
  const bool diagonal = row == col;
  const auto left_nz = NonzeroColumns(left);
  const auto right_nz = NonzeroColumns(right.transpose());
  ForEachPosition(v, [&](int local, int a, int b) {
    const int coord = v.offset + local;
    for (int p : left_nz[a]) {
      for (int q : right_nz[b]) {
        const double val = scale * left(p, a) * right(b, q);
        if (diagonal) {
          AddEntry(c, coord, row + p, col + q, 0.5 * val);
          AddEntry(c, coord, col + q, row + p, 0.5 * val);
        } else {
          AddEntry(c, coord, row + p, col + q, val);
          AddEntry(c, coord, col + q, row + p, val);
        }
      }
    }
  });
}

void SdpProblem::AddTrace(ConstraintId id, int row, int col, VariableId vid,
                          const MatrixXd& weight, double scale) {
  Constraint& c = constraints_.at(id);
  const Variable& v = variables_.at(vid);
  if (weight.rows() != v.dim || weight.cols() != v.dim) {
    throw DimensionError("trace weight does not match " + v.name);
  }
  CheckBlock(c, row, col, 1, 1);
  ForEachPosition(v, [&](int local, int a, int b) {
    const double val = scale * weight(b, a);
    AddEntry(c, v.offset + local, row, col, val);
    if (row != col) AddEntry(c, v.offset + local, col, row, val);
  });
}

void SdpProblem::AddScalarIdentity(ConstraintId id, VariableId vid,
                                   double scale) {
  Constraint& c = constraints_.at(id);
  const Variable& v = variables_.at(vid);
  if (v.size != 1) throw DimensionError(v.name + " is not a scalar");
  for (int a = 0; a < c.dim; ++a) AddEntry(c, v.offset, a, a, scale);
}

MatrixXd SdpProblem::Unpack(VariableId vid, const VectorXd& x) const {
  const Variable& v = variables_.at(vid);
  MatrixXd m = MatrixXd::Zero(v.dim, v.dim);
  ForEachPosition(v, [&](int local, int r, int c) { m(r, c) = x[v.offset + local]; });
  return m;
}

std::vector<MatrixXd> SdpProblem::UnpackAll(const VectorXd& x) const {
  std::vector<MatrixXd> out;
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    out.push_back(Unpack(static_cast<VariableId>(v), x));
  }
  return out;
}

VectorXd SdpProblem::Pack(const std::vector<MatrixXd>& values) const {
  if (values.size() != variables_.size()) {
    throw DimensionError("expected one value per variable");
  }
  VectorXd x = VectorXd::Zero(num_coordinates_);
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const Variable& v = variables_[i];
    const MatrixXd& m = values[i];
    if (m.rows() != v.dim || m.cols() != v.dim) {
      throw DimensionError("value for " + v.name + " has wrong shape");
    }
    ForEachPosition(v, [&](int local, int r, int c) {
      if (v.kind == VariableKind::kSymmetric) {
        x[v.offset + local] = 0.5 * (m(r, c) + m(c, r));
      } else {
        x[v.offset + local] = m(r, c);
      }
    });
  }
  return x;
}

MatrixXd SdpProblem::Evaluate(ConstraintId id, const VectorXd& x) const {
  const Constraint& c = constraints_.at(id);
  MatrixXd m = c.constant;
  for (const auto& [coord, entries] : c.coefficients) {
    for (const Entry& e : entries) m(e.row, e.col) += x[coord] * e.value;
  }
  return m;
}

double SdpProblem::Objective(const VectorXd& x) const {
  double f = linear_objective_.dot(x);
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    if (logdet_weights_[v] == 0.0) continue;
    auto llt = TryCholesky(Unpack(static_cast<VariableId>(v), x));
    if (!llt) return kInf;
    f -= logdet_weights_[v] * LogDet(*llt);
  }
  return f;
}

bool SdpProblem::IsStrictlyFeasible(const VectorXd& x) const {
  if (x.size() != num_coordinates_ || !x.allFinite()) return false;
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    MatrixXd m = Evaluate(static_cast<ConstraintId>(c), x);
    m.diagonal().array() -= constraints_[c].margin;
    if (!TryCholesky(m)) return false;
  }
  return std::isfinite(Objective(x));
}

const char* ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "Optimal";
    case SolveStatus::kInfeasible:
      return "Infeasible";
    case SolveStatus::kUnbounded:
      return "Unbounded";
    case SolveStatus::kMaxIterations:
      return "MaxIterations";
    case SolveStatus::kNumericalFailure:
      return "NumericalFailure";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Phase 1.

FeasibilityResult FindFeasible(const SdpProblem& problem,
                               const SolverOptions& opts,
                               const std::optional<VectorXd>& start) {
  FeasibilityResult result;
  const int n = problem.num_coordinates();
  VectorXd x0 = start.value_or(VectorXd::Zero(n));
  if (x0.size() != n) throw DimensionError("start point has wrong length");

  std::vector<int> all(problem.variables().size());
  std::iota(all.begin(), all.end(), 0);
  Program p = Compile(problem, all);
  // Constant-only constraints cannot be repaired.
  for (std::size_t c = 0; c < problem.constraints().size(); ++c) {
    const Constraint& con = problem.constraints()[c];
    if (!con.coefficients.empty()) continue;
    MatrixXd m = con.constant;
    m.diagonal().array() -= con.margin;
    if (MinEigenvalue(Symmetrize(m)) <= 0) {
      result.blocking_constraints.push_back(con.name);
    }
  }
  if (!result.blocking_constraints.empty()) return result;

  // Weighted log-det variables must be PD; treat them as constraints here.
  for (const Term& t : p.logdets) {
    Term c = t;
    c.weight = 1.0;
    c.source = -1 - t.source;
    p.constraints.push_back(std::move(c));
  }
  p.logdets.clear();

  double min_slack = kInf;
  for (const Term& t : p.constraints) min_slack = std::min(min_slack, MinSlack(t, x0));
  if (p.constraints.empty() || min_slack > opts.feasibility_margin) {
    result.status = SolveStatus::kOptimal;
    result.x = x0;
    return result;
  }

  // Append the shift coordinate s.
  const int s_index = p.n++;
  p.global.push_back(-1);
  for (Term& t : p.constraints) {
    t.coords.push_back(s_index);
    std::vector<Entry> diag;
    for (int a = 0; a < t.dim; ++a) diag.push_back({a, a, 1.0});
    t.entries.push_back(std::move(diag));
  }
  p.linear = VectorXd::Zero(p.n);
  p.linear[s_index] = 1.0;
  VectorXd x(p.n);
  x.head(n) = x0;
  x[s_index] = -min_slack + std::max(1.0, 0.1 * std::abs(min_slack));
  p.radius = std::max(AutoRadius(problem, opts, x0), 10.0 * x.norm());

  Barrier barrier(p);
  const double theta = TotalDim(p);
  double t = InitialT(barrier, x);
  const double target = -opts.feasibility_margin;
  auto done = [&](const VectorXd& y) { return y[s_index] < target; };

  auto tight = [&](const VectorXd& y) {
    std::vector<std::pair<double, std::string>> slacks;
    for (const Term& term : p.constraints) {
      const double sl = MinSlack(term, y);
      const std::string name =
          term.source >= 0 ? problem.constraints()[term.source].name
                           : problem.variables()[-1 - term.source].name +
                                 " (log-det domain)";
      slacks.emplace_back(sl, name);
    }
    std::sort(slacks.begin(), slacks.end());
    std::vector<std::string> out;
    const double floor = slacks.front().first;
    for (const auto& [sl, name] : slacks) {
      if (sl <= floor + 1e-4 * (1.0 + std::abs(y[s_index])) &&
          std::find(out.begin(), out.end(), name) == out.end()) {
        out.push_back(name);
      }
    }
    return out;
  };

  for (int outer = 1; outer <= opts.max_outer_iterations; ++outer) {
    const CenterResult c = Center(barrier, x, t, opts, done);
    IterationRecord rec;
    rec.component = 0;
    rec.phase = 1;
    rec.iteration = outer;
    rec.mu = 1.0 / t;
    rec.objective = x[s_index];
    rec.gap_bound = theta / t;
    rec.newton_decrement = c.decrement;
    rec.newton_steps = c.steps;
    result.log.push_back(rec);
    if (c.exited_early || done(x)) {
      result.status = SolveStatus::kOptimal;
      result.x = x.head(n);
      return result;
    }
    if (c.numerical_failure) {
      result.status = SolveStatus::kNumericalFailure;
      result.x = x.head(n);
      return result;
    }
    if (x[s_index] - theta / t > target) {
      result.status = SolveStatus::kInfeasible;
      result.x = x.head(n);
      result.blocking_constraints = tight(x);
      return result;
    }
    if (c.stalled) {
      result.status = SolveStatus::kNumericalFailure;
      result.x = x.head(n);
      return result;
    }
    t *= opts.barrier_factor;
  }
  result.status = SolveStatus::kMaxIterations;
  result.x = x.head(n);
  return result;
}

FeasibilityResult RandomFeasiblePoint(const SdpProblem& problem,
                                      std::uint64_t seed,
                                      const SolverOptions& opts) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = DataScale(problem);
  VectorXd x0(problem.num_coordinates());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = scale * normal(rng);
  return FindFeasible(problem, opts, x0);
}

// ---------------------------------------------------------------------------
// Phase 2.

namespace {

struct ComponentResult {
  SolveStatus status = SolveStatus::kOptimal;
  std::string message;
  double objective = 0.0;
  double gap = 0.0;
  int steps = 0;
};

ComponentResult SolveComponent(const SdpProblem& problem, Program& p,
                               int component, const SolverOptions& opts,
                               VectorXd& x, std::vector<IterationRecord>& log) {
  ComponentResult r;
  Barrier barrier(p);
  if (!std::isfinite(barrier.Value(x, 1.0))) {
    r.status = SolveStatus::kNumericalFailure;
    r.message = "start point left the barrier domain";
    return r;
  }
  const double theta = TotalDim(p);
  double t = InitialT(barrier, x);
  for (int outer = 1; outer <= opts.max_outer_iterations; ++outer) {
    const CenterResult c = Center(barrier, x, t, opts, nullptr);
    r.steps += c.steps;
    r.objective = barrier.Objective(x);
    r.gap = theta / t;
    IterationRecord rec;
    rec.component = component;
    rec.phase = 2;
    rec.iteration = outer;
    rec.mu = 1.0 / t;
    rec.objective = r.objective;
    rec.gap_bound = r.gap;
    rec.newton_decrement = c.decrement;
    rec.newton_steps = c.steps;
    log.push_back(rec);
    if (c.numerical_failure) {
      r.status = SolveStatus::kNumericalFailure;
      r.message = fmt::format("Newton system broke down at mu = {:.3e}", 1.0 / t);
      return r;
    }
    const bool gap_met = r.gap <= opts.tol_gap * std::max(1.0, std::abs(r.objective));
    if (c.stalled && !gap_met) {
      // Line search cannot make progress: accept only if the central-path
      // bound is already near the target.
      if (r.gap <= 1e2 * opts.tol_gap * std::max(1.0, std::abs(r.objective))) {
        r.message = "line search stalled near the target gap";
        break;
      }
      r.status = SolveStatus::kNumericalFailure;
      r.message = fmt::format("line search stalled at mu = {:.3e}", 1.0 / t);
      return r;
    }
    if (gap_met && (c.converged || c.stalled)) break;
    if (outer == opts.max_outer_iterations) {
      r.status = SolveStatus::kMaxIterations;
      r.message = "outer iteration limit reached";
      return r;
    }
    t *= opts.barrier_factor;
  }
  // Multiplier of the artificial ball gives d f* / d ln R.
  const double ball = p.radius * p.radius - x.squaredNorm();
  const double sensitivity = 2.0 * p.radius * p.radius / (t * ball);
  if (sensitivity > opts.unbounded_sensitivity * std::max(1.0, std::abs(r.objective))) {
    r.status = SolveStatus::kUnbounded;
    r.message = fmt::format(
        "objective still improving at the domain bound (d f / d ln R = {:.3e})",
        sensitivity);
  }
  (void)problem;
  return r;
}

SolveStatus Worse(SolveStatus a, SolveStatus b) {
  auto rank = [](SolveStatus s) {
    switch (s) {
      case SolveStatus::kOptimal:
        return 0;
      case SolveStatus::kUnbounded:
        return 1;
      case SolveStatus::kMaxIterations:
        return 2;
      case SolveStatus::kNumericalFailure:
        return 3;
      case SolveStatus::kInfeasible:
        return 4;
    }
    return 3;
  };
  return rank(a) >= rank(b) ? a : b;
}

}  // namespace

SdpSolution Solve(const SdpProblem& problem, const SolverOptions& opts,
                  const std::optional<VectorXd>& start) {
  SdpSolution sol;
  const int n = problem.num_coordinates();
  VectorXd x = start.value_or(VectorXd::Zero(n));
  if (x.size() != n) throw DimensionError("start point has wrong length");

  if (!problem.IsStrictlyFeasible(x)) {
    FeasibilityResult f = FindFeasible(problem, opts, x);
    sol.log = f.log;
    if (f.status != SolveStatus::kOptimal) {
      sol.status = f.status;
      sol.x = f.x;
      sol.blocking_constraints = f.blocking_constraints;
      sol.message = f.status == SolveStatus::kInfeasible
                        ? "no strictly feasible point"
                        : "feasibility phase did not finish";
      if (!f.blocking_constraints.empty()) {
        sol.message += " (tight: ";
        for (std::size_t i = 0; i < f.blocking_constraints.size(); ++i) {
          sol.message += (i ? ", " : "") + f.blocking_constraints[i];
        }
        sol.message += ")";
      }
      sol.values = problem.UnpackAll(sol.x);
      return sol;
    }
    x = f.x;
  }

  sol.status = SolveStatus::kOptimal;
  const auto components = Components(problem);
  for (std::size_t ci = 0; ci < components.size(); ++ci) {
    Program p = Compile(problem, components[ci]);
    if (p.constraints.empty()) {
      bool has_objective = !p.logdets.empty() || p.linear.cwiseAbs().maxCoeff() > 0;
      if (has_objective) {
        sol.status = Worse(sol.status, SolveStatus::kUnbounded);
        sol.message = "variable " + problem.variable(components[ci][0]).name +
                      " is unconstrained";
      }
      continue;
    }
    VectorXd xc = Restrict(p, x);
    p.radius = AutoRadius(problem, opts, xc);
    ComponentResult r =
        SolveComponent(problem, p, static_cast<int>(ci) + 1, opts, xc, sol.log);
    for (int i = 0; i < p.n; ++i) x[p.global[i]] = xc[i];
    sol.objective += r.objective;
    sol.gap_bound += r.gap;
    sol.newton_steps += r.steps;
    if (r.status != SolveStatus::kOptimal || sol.message.empty()) {
      if (!r.message.empty()) sol.message = r.message;
    }
    sol.status = Worse(sol.status, r.status);
  }
  sol.x = x;
  sol.values = problem.UnpackAll(x);
  sol.objective = problem.Objective(x);
  const Certificate cert = CheckCertificate(problem, x);
  sol.max_psd_violation = std::max(0.0, -cert.min_slack_eigenvalue);
  sol.max_linear_violation = cert.max_linear_violation;
  if (sol.status == SolveStatus::kOptimal && !cert.Passes(opts.tol_feas)) {
    sol.status = SolveStatus::kNumericalFailure;
    sol.message = fmt::format("certificate failed: min slack {:.3e}",
                              cert.min_slack_eigenvalue);
  }
  return sol;
}

Certificate CheckCertificate(const SdpProblem& problem, const VectorXd& x) {
  Certificate cert;
  cert.min_slack_eigenvalue = kInf;
  for (std::size_t c = 0; c < problem.constraints().size(); ++c) {
    const Constraint& con = problem.constraints()[c];
    MatrixXd m = problem.Evaluate(static_cast<ConstraintId>(c), x);
    m.diagonal().array() -= con.margin;
    const double slack = MinEigenvalue(Symmetrize(m));
    cert.slacks.emplace_back(con.name, slack);
    if (con.linear) {
      cert.max_linear_violation = std::max(cert.max_linear_violation, -slack);
    } else {
      cert.min_slack_eigenvalue = std::min(cert.min_slack_eigenvalue, slack);
    }
  }
  if (cert.min_slack_eigenvalue == kInf) cert.min_slack_eigenvalue = 0.0;
  return cert;
}

std::string DumpProblem(const SdpProblem& problem) {
  std::ostringstream out;
  out << "# maxdet problem\n";
  out << "coordinates " << problem.num_coordinates() << "\n";
  for (std::size_t v = 0; v < problem.variables().size(); ++v) {
    const Variable& var = problem.variables()[v];
    out << fmt::format("variable {} {} {} dim={} block={} offset={} size={} "
                       "logdet_weight={:.17g}\n",
                       v, var.name,
                       var.kind == VariableKind::kSymmetric ? "symmetric"
                                                            : "block_diagonal",
                       var.dim, var.block_size, var.offset, var.size,
                       problem.logdet_weights()[v]);
  }
  const VectorXd& c = problem.linear_objective();
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0) out << fmt::format("linear {} {:.17g}\n", i, c[i]);
  }
  for (const Constraint& con : problem.constraints()) {
    out << fmt::format("constraint {} dim={} margin={:.17g} {}\n", con.name,
                       con.dim, con.margin, con.linear ? "linear" : "lmi");
    for (int i = 0; i < con.dim; ++i) {
      for (int j = 0; j < con.dim; ++j) {
        if (con.constant(i, j) != 0.0) {
          out << fmt::format("  F0 {} {} {:.17g}\n", i, j, con.constant(i, j));
        }
      }
    }
    for (const auto& [coord, entries] : con.coefficients) {
      for (const Entry& e : Merge(entries)) {
        out << fmt::format("  F {} {} {} {:.17g}\n", coord, e.row, e.col, e.value);
      }
    }
  }
  return out.str();
}

std::string IterationLogCsv(const std::vector<IterationRecord>& log) {
  std::string out =
      "component,phase,iter,mu,objective,gap_bound,max_residual,newton_steps\n";
  for (const IterationRecord& r : log) {
    out += fmt::format("{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                       r.component, r.phase, r.iteration, r.mu, r.objective,
                       r.gap_bound, r.newton_decrement, r.newton_steps);
  }
  return out;
}

}  // namespace privsynth::sdp
