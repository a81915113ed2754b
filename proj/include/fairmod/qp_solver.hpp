/*
 * Copyright 2026 The FairMod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense convex QP with a diagonal quadratic term:
//
//   minimize    constant + sum_j (q_j x_j^2 + c_j x_j)
//   subject to  A x <= b,  lo <= x <= hi,  q >= 0.
//
// The solver is a primal active-set method. Bounds and general rows share one
// working set; because the Hessian is diagonal, each equality-constrained
// subproblem reduces to a |W| x |W| system in the row multipliers. Variables
// with q_j = 0 get a proximal term and the subproblem is re-solved around the
// previous iterate until it stops moving (partial proximal point), so the
// inner solve always sees a strictly convex objective.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairmod/error.hpp"
#include "json.hpp"

namespace fairmod {

inline constexpr double kQpFeasibilityTolerance = 1e-8;
inline constexpr double kQpKktTolerance = 1e-6;
inline constexpr int kQpDefaultMaxIterations = 10000;

struct QpProblem {
  std::size_t n = 0;
  std::vector<double> q;
  std::vector<double> c;
  std::vector<double> a;  // row-major, num_constraints() x n
  std::vector<double> b;
  std::vector<double> lo;
  std::vector<double> hi;
  double constant = 0.0;

  std::size_t num_constraints() const { return b.size(); }

  double A(std::size_t row, std::size_t col) const { return a[row * n + col]; }

  void AddConstraint(std::span<const double> row, double bound) {
    a.insert(a.end(), row.begin(), row.end());
    b.push_back(bound);
  }

  void Validate() const {
    if (q.size() != n || c.size() != n || lo.size() != n || hi.size() != n ||
        a.size() != b.size() * n) {
      throw Error(ErrorKind::kInvalidArgument, "qp dimensions are inconsistent");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!(q[j] >= 0.0)) {
        throw Error(ErrorKind::kInvalidArgument,
                    "qp quadratic coefficient " + std::to_string(j) +
                        " is negative");
      }
      if (!(lo[j] <= hi[j])) {
        throw Error(ErrorKind::kInvalidArgument,
                    "qp box is empty for variable " + std::to_string(j));
      }
    }
  }

  double Objective(std::span<const double> x) const {
    double value = constant;
    for (std::size_t j = 0; j < n; ++j) value += (q[j] * x[j] + c[j]) * x[j];
    return value;
  }

  double RowActivity(std::size_t row, std::span<const double> x) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += a[row * n + j] * x[j];
    return sum;
  }

  // Largest violation of any row or bound; 0 when x is feasible.
  double ConstraintViolation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      worst = std::max({worst, lo[j] - x[j], x[j] - hi[j]});
    }
    for (std::size_t k = 0; k < num_constraints(); ++k) {
      worst = std::max(worst, RowActivity(k, x) - b[k]);
    }
    return worst;
  }

  nlohmann::json ToJson() const {
    return nlohmann::json{{"n", n},   {"q", q},   {"c", c},
                          {"A", a},   {"b", b},   {"lo", lo},
                          {"hi", hi}, {"constant", constant}};
  }

  static QpProblem FromJson(const nlohmann::json& doc) {
    QpProblem problem;
    try {
      problem.n = doc.at("n").get<std::size_t>();
      problem.q = doc.at("q").get<std::vector<double>>();
      problem.c = doc.at("c").get<std::vector<double>>();
      problem.a = doc.at("A").get<std::vector<double>>();
      problem.b = doc.at("b").get<std::vector<double>>();
      problem.lo = doc.at("lo").get<std::vector<double>>();
      problem.hi = doc.at("hi").get<std::vector<double>>();
      if (doc.contains("constant")) problem.constant = doc.at("constant").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedInput, std::string("qp: ") + e.what());
    }
    problem.Validate();
    return problem;
  }
};

enum class QpStatus { kOptimal, kMaxIterations, kInfeasible };

inline const char* QpStatusName(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kMaxIterations: return "max_iterations";
    case QpStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

// Multipliers of A x <= b (lambda), x >= lo (z_lower) and x <= hi (z_upper).
// All are non-negative at a KKT point.
struct QpDuals {
  std::vector<double> lambda;
  std::vector<double> z_lower;
  std::vector<double> z_upper;

  static QpDuals Zero(const QpProblem& problem) {
    return QpDuals{std::vector<double>(problem.num_constraints(), 0.0),
                   std::vector<double>(problem.n, 0.0),
                   std::vector<double>(problem.n, 0.0)};
  }
};

struct QpSolution {
  std::vector<double> x;
  double objective = 0.0;
  QpStatus status = QpStatus::kInfeasible;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double constraint_violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
  QpDuals duals;
};

struct QpOptions {
  int max_iterations = kQpDefaultMaxIterations;
  double feasibility_tolerance = kQpFeasibilityTolerance;
  double kkt_tolerance = kQpKktTolerance;
};

// Max-norm of the Lagrangian gradient, plus the largest complementarity
// product, plus the largest dual sign violation, plus the primal violation.
// Zero exactly at a KKT point.
inline double KktResidual(const QpProblem& problem, std::span<const double> x,
                          const QpDuals& duals) {
  const std::size_t n = problem.n;
  const std::size_t k = problem.num_constraints();
  if (x.size() != n || duals.lambda.size() != k || duals.z_lower.size() != n ||
      duals.z_upper.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "kkt: dimension mismatch");
  }
  double stationarity = 0.0;
  double complementarity = 0.0;
  double dual_sign = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double grad = 2.0 * problem.q[j] * x[j] + problem.c[j] - duals.z_lower[j] +
                  duals.z_upper[j];
    for (std::size_t r = 0; r < k; ++r) grad += problem.A(r, j) * duals.lambda[r];
    stationarity = std::max(stationarity, std::abs(grad));
    complementarity =
        std::max({complementarity, std::abs(duals.z_lower[j] * (x[j] - problem.lo[j])),
                  std::abs(duals.z_upper[j] * (problem.hi[j] - x[j]))});
    dual_sign = std::max({dual_sign, -duals.z_lower[j], -duals.z_upper[j]});
  }
  for (std::size_t r = 0; r < k; ++r) {
    complementarity = std::max(
        complementarity,
        std::abs(duals.lambda[r] * (problem.b[r] - problem.RowActivity(r, x))));
    dual_sign = std::max(dual_sign, -duals.lambda[r]);
  }
  return stationarity + complementarity + dual_sign +
         std::max(0.0, problem.ConstraintViolation(x));
}

namespace internal {

enum class BoundState : unsigned char { kFree, kLower, kUpper, kFixed };

// Working state of the active-set iteration, kept across proximal rounds.
struct ActiveSet {
  std::vector<BoundState> bounds;
  std::vector<std::size_t> rows;  // general rows held at equality
};

struct InnerResult {
  bool converged = false;
  int iterations = 0;
  std::vector<double> lambda;  // aligned with problem rows
};

// Minimizes sum_j (h_j/2 x_j^2 + g0_j x_j) over the feasible set, starting at
// the feasible point x. Every h_j must be positive.
inline InnerResult SolveStrictlyConvex(const QpProblem& problem,
                                       std::span<const double> h,
                                       std::span<const double> g0,
                                       std::vector<double>& x, ActiveSet& active,
                                       int iteration_budget) {
  const std::size_t n = problem.n;
  const std::size_t k = problem.num_constraints();
  InnerResult result;
  result.lambda.assign(k, 0.0);

  double scale = 1.0;
  for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(g0[j]));
  const double multiplier_tol = 1e-11 * scale;

  std::vector<double> grad(n), p(n), atl(n);
  std::vector<std::size_t> free_vars;
  bool at_subspace_minimum = false;

  while (result.iterations < iteration_budget) {
    ++result.iterations;
    for (std::size_t j = 0; j < n; ++j) grad[j] = h[j] * x[j] + g0[j];
    free_vars.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (active.bounds[j] == BoundState::kFree) free_vars.push_back(j);
    }

    // Row multipliers of the equality subproblem:
    //   (A_WF H_F^-1 A_WF^T) lambda = -A_WF H_F^-1 g_F.
    const std::size_t w = active.rows.size();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w));
    if (w > 0) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w),
                                                static_cast<Eigen::Index>(w));
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w));
      for (std::size_t r1 = 0; r1 < w; ++r1) {
        const std::size_t row1 = active.rows[r1];
        for (std::size_t j : free_vars) {
          const double a1 = problem.A(row1, j);
          if (a1 == 0.0) continue;
          rhs(static_cast<Eigen::Index>(r1)) -= a1 * grad[j] / h[j];
          for (std::size_t r2 = 0; r2 <= r1; ++r2) {
            m(static_cast<Eigen::Index>(r1), static_cast<Eigen::Index>(r2)) +=
                a1 * problem.A(active.rows[r2], j) / h[j];
          }
        }
      }
      m = m.selfadjointView<Eigen::Lower>();
      Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        lambda = ldlt.solve(rhs);
      } else {
        lambda = m.completeOrthogonalDecomposition().solve(rhs);
      }
    }

    std::fill(atl.begin(), atl.end(), 0.0);
    for (std::size_t r = 0; r < w; ++r) {
      const double lr = lambda(static_cast<Eigen::Index>(r));
      for (std::size_t j = 0; j < n; ++j) atl[j] += problem.A(active.rows[r], j) * lr;
    }
    std::fill(p.begin(), p.end(), 0.0);
    double p_norm = 0.0;
    double reduced_norm = 0.0;
    double grad_scale = scale;
    for (std::size_t j : free_vars) {
      const double reduced = grad[j] + atl[j];
      p[j] = -reduced / h[j];
      p_norm = std::max(p_norm, std::abs(p[j]));
      reduced_norm = std::max(reduced_norm, std::abs(reduced));
      grad_scale = std::max(grad_scale, std::abs(grad[j]));
    }

    if (at_subspace_minimum || reduced_norm <= 1e-13 * grad_scale) {
      // Stationary on the working set: check multiplier signs and release
      // the most negative one, if any.
      double most_negative = -multiplier_tol;
      std::optional<std::size_t> release_row;
      std::optional<std::size_t> release_bound;
      for (std::size_t r = 0; r < w; ++r) {
        const double lr = lambda(static_cast<Eigen::Index>(r));
        if (lr < most_negative) {
          most_negative = lr;
          release_row = r;
          release_bound.reset();
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        double nu = 0.0;
        if (active.bounds[j] == BoundState::kLower) {
          nu = grad[j] + atl[j];
        } else if (active.bounds[j] == BoundState::kUpper) {
          nu = -(grad[j] + atl[j]);
        } else {
          continue;
        }
        if (nu < most_negative) {
          most_negative = nu;
          release_bound = j;
          release_row.reset();
        }
      }
      if (!release_row && !release_bound) {
        std::fill(result.lambda.begin(), result.lambda.end(), 0.0);
        for (std::size_t r = 0; r < w; ++r) {
          result.lambda[active.rows[r]] =
              std::max(0.0, lambda(static_cast<Eigen::Index>(r)));
        }
        result.converged = true;
        return result;
      }
      if (release_row) {
        active.rows.erase(active.rows.begin() +
                          static_cast<std::ptrdiff_t>(*release_row));
      } else {
        active.bounds[*release_bound] = BoundState::kFree;
      }
      at_subspace_minimum = false;
      continue;
    }

    // Ratio test over inactive rows and the bounds of free variables.
    double step = 1.0;
    std::optional<std::size_t> block_row;
    std::optional<std::size_t> block_var;
    BoundState block_state = BoundState::kFree;
    for (std::size_t r = 0; r < k; ++r) {
      if (std::find(active.rows.begin(), active.rows.end(), r) != active.rows.end()) {
        continue;
      }
      double ap = 0.0;
      double row_norm = 0.0;
      for (std::size_t j : free_vars) {
        ap += problem.A(r, j) * p[j];
        row_norm = std::max(row_norm, std::abs(problem.A(r, j)));
      }
      if (ap <= 1e-14 * row_norm * p_norm) continue;
      const double slack = std::max(0.0, problem.b[r] - problem.RowActivity(r, x));
      const double ratio = slack / ap;
      if (ratio < step) {
        step = ratio;
        block_row = r;
        block_var.reset();
      }
    }
    for (std::size_t j : free_vars) {
      double ratio = std::numeric_limits<double>::infinity();
      BoundState state = BoundState::kFree;
      if (p[j] < 0.0) {
        ratio = std::max(0.0, (problem.lo[j] - x[j]) / p[j]);
        state = BoundState::kLower;
      } else if (p[j] > 0.0) {
        ratio = std::max(0.0, (problem.hi[j] - x[j]) / p[j]);
        state = BoundState::kUpper;
      }
      if (ratio < step) {
        step = ratio;
        block_var = j;
        block_state = state;
        block_row.reset();
      }
    }
    for (std::size_t j : free_vars) {
      x[j] = std::clamp(x[j] + step * p[j], problem.lo[j], problem.hi[j]);
    }
    if (block_var) {
      active.bounds[*block_var] = block_state;
      x[*block_var] = block_state == BoundState::kLower ? problem.lo[*block_var]
                                                        : problem.hi[*block_var];
      at_subspace_minimum = false;
    } else if (block_row) {
      active.rows.push_back(*block_row);
      at_subspace_minimum = false;
    } else {
      at_subspace_minimum = true;
    }
  }
  return result;
}

inline std::vector<double> ClampedOrigin(const QpProblem& problem) {
  std::vector<double> x(problem.n);
  for (std::size_t j = 0; j < problem.n; ++j) {
    x[j] = std::clamp(0.0, problem.lo[j], problem.hi[j]);
  }
  return x;
}

}  // namespace internal

// Solves from a caller-supplied feasible start.
inline QpSolution SolveQpFrom(const QpProblem& problem,
                              std::span<const double> start,
                              const QpOptions& options = {}) {
  problem.Validate();
  const std::size_t n = problem.n;
  if (start.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "qp start has wrong dimension");
  }
  QpSolution solution;
  solution.x.assign(start.begin(), start.end());
  for (std::size_t j = 0; j < n; ++j) {
    solution.x[j] = std::clamp(solution.x[j], problem.lo[j], problem.hi[j]);
  }
  if (problem.ConstraintViolation(solution.x) > options.feasibility_tolerance) {
    solution.status = QpStatus::kInfeasible;
    solution.constraint_violation = problem.ConstraintViolation(solution.x);
    solution.objective = problem.Objective(solution.x);
    solution.duals = QpDuals::Zero(problem);
    return solution;
  }

  double scale = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    scale = std::max({scale, std::abs(problem.c[j]), 2.0 * problem.q[j]});
  }
  const double prox = 1e-3 * scale;
  std::vector<double> h(n), g0(n), prox_weight(n, 0.0);
  bool needs_prox = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (problem.lo[j] < problem.hi[j] && 2.0 * problem.q[j] <= 1e-12 * scale) {
      prox_weight[j] = prox;
      needs_prox = true;
    }
    h[j] = 2.0 * problem.q[j] + prox_weight[j];
    if (h[j] <= 0.0) h[j] = prox;  // fixed variable, never free
  }

  internal::ActiveSet active;
  active.bounds.assign(n, internal::BoundState::kFree);
  for (std::size_t j = 0; j < n; ++j) {
    if (problem.lo[j] == problem.hi[j]) active.bounds[j] = internal::BoundState::kFixed;
  }

  internal::InnerResult inner;
  bool converged = false;
  std::vector<double> center = solution.x;
  int budget = options.max_iterations;
  while (budget > 0) {
    for (std::size_t j = 0; j < n; ++j) {
      g0[j] = problem.c[j] - prox_weight[j] * center[j];
    }
    inner = internal::SolveStrictlyConvex(problem, h, g0, solution.x, active, budget);
    budget -= inner.iterations;
    solution.iterations += inner.iterations;
    if (!inner.converged) break;
    if (!needs_prox) {
      converged = true;
      break;
    }
    double moved = 0.0;
    double size = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      moved = std::max(moved, std::abs(solution.x[j] - center[j]));
      size = std::max(size, std::abs(solution.x[j]));
    }
    center = solution.x;
    if (moved <= 1e-10 * size) {
      converged = true;
      break;
    }
  }

  // Recover multipliers for the original objective.
  solution.duals = QpDuals::Zero(problem);
  solution.duals.lambda = inner.lambda;
  if (solution.duals.lambda.size() != problem.num_constraints()) {
    solution.duals.lambda.assign(problem.num_constraints(), 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double reduced = 2.0 * problem.q[j] * solution.x[j] + problem.c[j];
    for (std::size_t r = 0; r < problem.num_constraints(); ++r) {
      reduced += problem.A(r, j) * solution.duals.lambda[r];
    }
    switch (active.bounds[j]) {
      case internal::BoundState::kLower:
        solution.duals.z_lower[j] = std::max(0.0, reduced);
        break;
      case internal::BoundState::kUpper:
        solution.duals.z_upper[j] = std::max(0.0, -reduced);
        break;
      case internal::BoundState::kFixed:
        (reduced >= 0.0 ? solution.duals.z_lower[j] : solution.duals.z_upper[j]) =
            std::abs(reduced);
        break;
      case internal::BoundState::kFree:
        break;
    }
  }
  solution.objective = problem.Objective(solution.x);
  solution.constraint_violation =
      std::max(0.0, problem.ConstraintViolation(solution.x));
  solution.kkt_residual = KktResidual(problem, solution.x, solution.duals);
  solution.status = converged &&
                            solution.constraint_violation <=
                                options.feasibility_tolerance &&
                            solution.kkt_residual <= options.kkt_tolerance
                        ? QpStatus::kOptimal
                        : QpStatus::kMaxIterations;
  return solution;
}

// Phase one: minimizes the total row violation over the box with an elastic
// slack per row. Returns nullopt when the violation cannot be driven below
// the feasibility tolerance.
inline std::optional<std::vector<double>> FeasiblePoint(
    const QpProblem& problem, const QpOptions& options = {}) {
  problem.Validate();
  std::vector<double> x = internal::ClampedOrigin(problem);
  if (problem.ConstraintViolation(x) <= options.feasibility_tolerance) return x;

  const std::size_t n = problem.n;
  const std::size_t k = problem.num_constraints();
  QpProblem elastic;
  elastic.n = n + k;
  elastic.q.assign(n + k, 0.0);
  elastic.c.assign(n, 0.0);
  elastic.c.resize(n + k, 1.0);
  elastic.lo = problem.lo;
  elastic.hi = problem.hi;
  std::vector<double> start = x;
  std::vector<double> row(n + k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) row[j] = problem.A(r, j);
    row[n + r] = -1.0;
    elastic.AddConstraint(row, problem.b[r]);
    const double excess = std::max(0.0, problem.RowActivity(r, x) - problem.b[r]);
    elastic.lo.push_back(0.0);
    elastic.hi.push_back(excess);
    start.push_back(excess);
  }
  const QpSolution phase_one = SolveQpFrom(elastic, start, options);
  std::vector<double> candidate(phase_one.x.begin(),
                                phase_one.x.begin() + static_cast<std::ptrdiff_t>(n));
  if (problem.ConstraintViolation(candidate) <= options.feasibility_tolerance) {
    return candidate;
  }
  return std::nullopt;
}

// Starts from the clamped origin when it is feasible, otherwise from a
// phase-one point.
inline QpSolution SolveQp(const QpProblem& problem,
                          int max_iterations = kQpDefaultMaxIterations) {
  QpOptions options;
  options.max_iterations = max_iterations;
  const auto start = FeasiblePoint(problem, options);
  if (!start) {
    QpSolution solution;
    solution.x = internal::ClampedOrigin(problem);
    solution.objective = problem.Objective(solution.x);
    solution.status = QpStatus::kInfeasible;
    solution.constraint_violation = problem.ConstraintViolation(solution.x);
    solution.duals = QpDuals::Zero(problem);
    return solution;
  }
  return SolveQpFrom(problem, *start, options);
}

}  // namespace fairmod
