#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medfs/objective.hpp"

namespace medfs {

enum class Method { axis_parallel, bounded_qp };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct OptimizerConfig {
  Method method = Method::axis_parallel;
  double tol = 1e-8;           // relative objective improvement per sweep
  int max_iter = 10000;        // sweeps (axis-parallel) or outer iterations (QP)
  std::uint64_t seed = 0;      // coordinate order and pair partners
  double qp_inner_tol = 1e-10;
  int qp_max_inner = 1000;

  void validate() const;
};

struct OptResult {
  Eigen::VectorXd lambda;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  std::vector<int> inner_steps;  // QP sweeps + Newton steps per outer iteration

  DualVars duals(Task task) const { return DualVars::from_flat(lambda, task); }
  double objective() const { return objective_trace.back(); }
};

/// Randomized axis-parallel ascent. Soft bias: one coordinate at a time in a
/// seeded random order, each maximized over [0, c - delta] by Brent's
/// method. Hard bias: each coordinate is paired with a seeded random partner
/// and moved along the direction that keeps sum alpha_k lambda_k fixed, then
/// paired again with the partner of steepest feasible ascent.
/// Stops when a sweep improves J by less than tol * max(1, |J|).
OptResult axis_parallel_maximize(const DualProblem& problem, const Eigen::VectorXd& init,
                                 const OptimizerConfig& cfg);

/// Tangent quadratic lower bound on one selection term
///   j_i(lambda) = -log(1 - p0 + p0 exp(lambda' M lambda / 2)),  M = u u',
/// anchored at `anchor`:
///   bound(lambda) = lambda'(N + hM) anchor - lambda'(M + N) lambda / 2 + constant
/// with N = (M anchor)(M anchor)'/4 and h = (1-p0)/(1-p0+p0 exp(anchor' M anchor/2)).
struct QuadBound {
  Eigen::MatrixXd M;
  Eigen::MatrixXd N;
  double h = 0.0;
  Eigen::VectorXd anchor;
  double constant = 0.0;

  double value(const Eigen::VectorXd& lambda) const;
};

QuadBound build_quad_bound(const DualProblem& problem, const Eigen::VectorXd& anchor,
                           Eigen::Index feature);
QuadBound build_quad_bound(const DualVars& anchor, const Dataset& d, const Hyperparams& h,
                           Eigen::Index feature);

/// j_i(lambda) for a selection problem.
double selection_term(const DualProblem& problem, const Eigen::VectorXd& lambda,
                      Eigen::Index feature);

/// linear' x + x' H x / 2 + sum_k penalty(k, x_k), H negative semidefinite.
/// `penalty` may be empty. `factor`, when set, is G with H = -G G' and
/// fewer columns than rows; the Newton solves then go through it.
struct QuadSurrogate {
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd factor;
  Eigen::VectorXd linear;
  std::function<ScalarDerivs(Eigen::Index, double)> penalty;

  double value(const Eigen::VectorXd& x) const;
};

struct QpResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int sweeps = 0;
  int newton_steps = 0;
  bool converged = false;
};

/// Projected coordinate ascent on a concave surrogate over the box
/// [0, upper]^d, optionally with sum equality_k x_k held fixed (pairwise
/// moves). Each scalar step is solved exactly. After every sweep a Newton
/// step on the coordinates off the bounds is tried and kept if it helps.
QpResult qp_subsolve(const QuadSurrogate& surrogate, double upper,
                     const std::optional<Eigen::VectorXd>& equality,
                     const Eigen::VectorXd& start, const OptimizerConfig& cfg);

/// Minorize-maximize: bound every selection term at the current duals,
/// maximize the surrogate with qp_subsolve (warm-started), re-anchor.
/// Margin penalties stay exact inside the surrogate.
OptResult iterated_bounded_qp(const DualProblem& problem, const Eigen::VectorXd& init,
                              const OptimizerConfig& cfg);

/// Runs cfg.method. bounded_qp is followed by an axis-parallel polish.
OptResult maximize(const DualProblem& problem, const Eigen::VectorXd& init,
                   const OptimizerConfig& cfg);

/// Maximizes a concave scalar function on [lo, hi] given its first and
/// second derivatives (safeguarded Newton with bisection).
double maximize_concave_1d(const std::function<ScalarDerivs(double)>& f, double lo,
                           double hi);

}  // namespace medfs
