#include "medfs/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/tools/minima.hpp>

#include <spdlog/spdlog.h>

#include "medfs/error.hpp"

namespace medfs {

std::string to_string(Method method) {
  return method == Method::axis_parallel ? "axis_parallel" : "bounded_qp";
}

Method method_from_string(const std::string& name) {
  if (name == "axis_parallel") return Method::axis_parallel;
  if (name == "bounded_qp") return Method::bounded_qp;
  throw InvalidArgument("unknown optimizer '" + name +
                        "' (expected axis_parallel or bounded_qp)");
}

void OptimizerConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (!(qp_inner_tol > 0.0)) throw InvalidArgument("qp_inner_tol must be positive");
  if (qp_max_inner < 1) throw InvalidArgument("qp_max_inner must be >= 1");
}

namespace {

bool small_gain(double gain, double reference, double tol) {
  return gain < tol * std::max(1.0, std::abs(reference));
}

void check_start(const DualProblem& problem, const Eigen::VectorXd& init) {
  problem.check_box(init);
  if (problem.hard_equality()) problem.check_equality(init);
  const double v = problem.value(init);
  if (!std::isfinite(v)) throw NumericalError("objective is not finite at the initial point");
}

// Maximizes t -> f(t) on [lo, hi] with Brent's method and also tries the
// endpoint `lo` and the current point t = 0 (which must lie in the
// interval). Returns the best t found; never worse than t = 0.
template <typename F>
double brent_step(F&& f, double lo, double hi, double current_value) {
  constexpr int kBits = std::numeric_limits<double>::digits / 2;
  if (!(hi > lo)) return 0.0;
  std::uintmax_t max_iter = 200;
  auto neg = [&](double t) { return -f(t); };
  const auto [t_best, neg_best] =
      boost::math::tools::brent_find_minima(neg, lo, hi, kBits, max_iter);
  double best_t = 0.0;
  double best_v = current_value;
  if (-neg_best > best_v) {
    best_t = t_best;
    best_v = -neg_best;
  }
  const double at_lo = f(lo);
  if (at_lo > best_v) best_t = lo;
  return best_t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Axis-parallel search

OptResult axis_parallel_maximize(const DualProblem& problem, const Eigen::VectorXd& init,
                                 const OptimizerConfig& cfg) {
  cfg.validate();
  check_start(problem, init);

  const Eigen::Index dim = problem.size();
  const double upper = problem.upper();
  const Eigen::VectorXd& alpha = problem.constraint();
  const bool paired = problem.hard_equality();
  const bool twins = problem.task() == Task::regression;
  const Eigen::Index examples = problem.examples();
  if (paired && dim < 2) {
    throw InvalidArgument("hard bias mode needs at least two dual variables");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  OptResult result;
  DualProblem::Cursor cur = problem.cursor(init);
  result.objective_trace.push_back(cur.value);

  // lambda_k + t and lambda_l - (alpha_k / alpha_l) t keep S fixed.
  auto pair_move = [&](Eigen::Index k, Eigen::Index l) {
    const double start_k = cur.lambda[k];
    const double start_l = cur.lambda[l];
    const double ratio = alpha[k] / alpha[l];
    double lo = -start_k;
    double hi = upper - start_k;
    if (ratio > 0.0) {
      lo = std::max(lo, (start_l - upper) / ratio);
      hi = std::min(hi, start_l / ratio);
    } else {
      lo = std::max(lo, start_l / ratio);
      hi = std::min(hi, (start_l - upper) / ratio);
    }
    if (!(hi > lo)) return;
    std::array<CoordinateStep, 2> steps{{{k, 0.0}, {l, 0.0}}};
    auto place = [&](double t) {
      steps[0].value = std::clamp(start_k + t, 0.0, upper);
      steps[1].value = std::clamp(start_l - ratio * t, 0.0, upper);
    };
    auto f = [&](double t) {
      place(t);
      return problem.trial(cur, steps);
    };
    const double t = brent_step(f, std::min(lo, 0.0), std::max(hi, 0.0), cur.value);
    if (t != 0.0) {
      place(t);
      problem.commit(cur, steps);
    }
  };

  // Hard mode: near a corner few random partners give an ascent direction,
  // so each coordinate also tries the partner with the largest first-order
  // gain under the gradient taken at the start of the sweep.
  Eigen::VectorXd scaled;  // alpha_k * dJ/dlambda_k
  auto steepest_partner = [&](Eigen::Index k) {
    const bool k_up = cur.lambda[k] < upper;
    const bool k_down = cur.lambda[k] > 0.0;
    Eigen::Index best = -1;
    double best_gain = 0.0;
    for (Eigen::Index l = 0; l < dim; ++l) {
      if (l == k) continue;
      // t > 0 raises lambda_k and moves lambda_l by -(alpha_k/alpha_l) t
      const bool same = alpha[k] * alpha[l] > 0.0;
      const bool l_down = cur.lambda[l] > 0.0;
      const bool l_up = cur.lambda[l] < upper;
      const double slope = alpha[k] * (scaled[k] - scaled[l]);
      double gain = 0.0;
      if (slope > 0.0 && k_up && (same ? l_down : l_up)) gain = slope;
      if (slope < 0.0 && k_down && (same ? l_up : l_down)) gain = -slope;
      if (gain > best_gain) {
        best_gain = gain;
        best = l;
      }
    }
    return best;
  };

  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    const double before = cur.value;
    std::shuffle(order.begin(), order.end(), rng);
    if (paired) scaled = alpha.cwiseProduct(problem.evaluate(cur.lambda).gradient);

    for (const Eigen::Index k : order) {
      if (!paired) {
        const double start_k = cur.lambda[k];
        std::array<CoordinateStep, 1> step{{{k, 0.0}}};
        auto f = [&](double t) {
          step[0].value = std::clamp(start_k + t, 0.0, upper);
          return problem.trial(cur, step);
        };
        const double t = brent_step(f, -start_k, upper - start_k, cur.value);
        if (t != 0.0) {
          step[0].value = std::clamp(start_k + t, 0.0, upper);
          problem.commit(cur, step);
        }
        // The bias penalty couples all duals strongly; a move that keeps
        // S fixed lets the search travel along that valley.
        if (dim < 2) continue;
      }

      if (twins) {
        // lambda_t and lambda'_t moved together leave W and S untouched.
        const Eigen::Index m = k < examples ? k + examples : k - examples;
        const double start_k = cur.lambda[k];
        const double start_m = cur.lambda[m];
        const double lo = -std::min(start_k, start_m);
        const double hi = upper - std::max(start_k, start_m);
        if (hi > lo) {
          std::array<CoordinateStep, 2> steps{{{k, 0.0}, {m, 0.0}}};
          auto place = [&](double t) {
            steps[0].value = std::clamp(start_k + t, 0.0, upper);
            steps[1].value = std::clamp(start_m + t, 0.0, upper);
          };
          auto f = [&](double t) {
            place(t);
            return problem.trial(cur, steps);
          };
          const double t = brent_step(f, std::min(lo, 0.0), std::max(hi, 0.0), cur.value);
          if (t != 0.0) {
            place(t);
            problem.commit(cur, steps);
          }
        }
      }

      std::uniform_int_distribution<Eigen::Index> pick(0, dim - 2);
      Eigen::Index l = pick(rng);
      if (l >= k) ++l;
      pair_move(k, l);
      if (paired) {
        const Eigen::Index best = steepest_partner(k);
        if (best >= 0 && best != l) pair_move(k, best);
      }
    }

    // Rebuild the running sums so rounding does not accumulate.
    cur = problem.cursor(cur.lambda);
    result.objective_trace.push_back(cur.value);
    result.iterations = sweep;
    if (!std::isfinite(cur.value)) throw NumericalError("objective became non-finite");
    if (sweep % 100 == 0) spdlog::debug("sweep {}: J = {:.12g}", sweep, cur.value);
    if (small_gain(cur.value - before, cur.value, cfg.tol)) {
      result.converged = true;
      break;
    }
  }
  result.lambda = cur.lambda;
  return result;
}

// ---------------------------------------------------------------------------
// Quadratic bound

namespace {

// u_k = alpha_k X_{row(k), i}: selection term i depends on lambda via u'lambda.
Eigen::VectorXd feature_direction(const DualProblem& problem, Eigen::Index feature) {
  Eigen::VectorXd u(problem.size());
  for (Eigen::Index k = 0; k < problem.size(); ++k) {
    u[k] = problem.constraint()[k] * problem.design()(problem.row_of(k), feature);
  }
  return u;
}

const SelectionTerm& selection_of(const DualProblem& problem) {
  const auto* term = dynamic_cast<const SelectionTerm*>(&problem.feature_term());
  if (term == nullptr) {
    throw InvalidArgument("quadratic bounds need a feature-selection objective");
  }
  return *term;
}

}  // namespace

double QuadBound::value(const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd lin = (N + h * M) * anchor;
  return lambda.dot(lin) - 0.5 * lambda.dot((M + N) * lambda) + constant;
}

double selection_term(const DualProblem& problem, const Eigen::VectorXd& lambda,
                      Eigen::Index feature) {
  const double p0 = selection_of(problem).p0();
  const double w = feature_direction(problem, feature).dot(lambda);
  return -log_selection_partition(w, p0);
}

QuadBound build_quad_bound(const DualProblem& problem, const Eigen::VectorXd& anchor,
                           Eigen::Index feature) {
  const double p0 = selection_of(problem).p0();
  if (feature < 0 || feature >= problem.features()) {
    throw InvalidArgument("feature index out of range");
  }
  if (anchor.size() != problem.size()) throw InvalidArgument("anchor has wrong length");
  const Eigen::VectorXd u = feature_direction(problem, feature);
  const double w = u.dot(anchor);

  QuadBound bound;
  bound.M = u * u.transpose();
  const Eigen::VectorXd m_anchor = bound.M * anchor;
  bound.N = 0.25 * m_anchor * m_anchor.transpose();
  bound.h = 1.0 - feature_inclusion_prob(w, p0);
  bound.anchor = anchor;
  bound.constant = 0.0;
  bound.constant = -log_selection_partition(w, p0) - bound.value(anchor);
  return bound;
}

QuadBound build_quad_bound(const DualVars& anchor, const Dataset& d, const Hyperparams& h,
                           Eigen::Index feature) {
  Hyperparams fs = h;
  fs.variant = Variant::feature_selection;
  const DualProblem problem(d, fs);
  return build_quad_bound(problem, anchor.flat(), feature);
}

// ---------------------------------------------------------------------------
// QP sub-solver

double QuadSurrogate::value(const Eigen::VectorXd& x) const {
  double v = linear.dot(x) + 0.5 * x.dot(hessian * x);
  if (penalty) {
    for (Eigen::Index k = 0; k < x.size(); ++k) v += penalty(k, x[k]).value;
  }
  return v;
}

double maximize_concave_1d(const std::function<ScalarDerivs(double)>& f, double lo,
                           double hi) {
  if (!(hi > lo)) return lo;
  const double d_lo = f(lo).first;
  if (d_lo <= 0.0) return lo;
  const double d_hi = f(hi).first;
  if (d_hi >= 0.0) return hi;

  // Root of the decreasing derivative, bracketed in (a, b).
  double a = lo;
  double b = hi;
  double t = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const ScalarDerivs s = f(t);
    if (s.first == 0.0) return t;
    if (s.first > 0.0) a = t; else b = t;
    double next = (s.second < 0.0) ? t - s.first / s.second : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - t) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::abs(t))) {
      return next;
    }
    t = next;
  }
  return t;
}

namespace {

// Gradient of the surrogate (quadratic plus penalty) and the penalty's
// second derivatives.
void surrogate_derivs(const QuadSurrogate& s, const Eigen::VectorXd& z, Eigen::VectorXd& g,
                      Eigen::VectorXd& curv) {
  g = s.linear + s.hessian * z;
  curv = Eigen::VectorXd::Zero(z.size());
  if (!s.penalty) return;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const ScalarDerivs p = s.penalty(k, z[k]);
    g[k] += p.first;
    curv[k] = p.second;
  }
}

// Solves (D - H) d = g, minus the component along the equality weights when
// there is one. D is diagonal and positive.
std::optional<Eigen::VectorXd> newton_direction(const QuadSurrogate& s, const Eigen::VectorXd& diag,
                                                const Eigen::VectorXd& g,
                                                const std::optional<Eigen::VectorXd>& eq) {
  const Eigen::Index dim = g.size();
  Eigen::MatrixXd rhs(dim, eq ? 2 : 1);
  rhs.col(0) = g;
  if (eq) rhs.col(1) = *eq;
  Eigen::MatrixXd sol;
  if (s.factor.rows() == dim && s.factor.cols() < dim) {
    // D + G G' by Woodbury.
    const Eigen::MatrixXd& G = s.factor;
    const Eigen::VectorXd inv = diag.cwiseInverse();
    Eigen::MatrixXd core = G.transpose() * inv.asDiagonal() * G;
    core.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(core);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::MatrixXd scaled = inv.asDiagonal() * rhs;
    sol = scaled - inv.asDiagonal() * (G * llt.solve(G.transpose() * scaled));
  } else {
    Eigen::MatrixXd A = -s.hessian;
    A.diagonal() += diag;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return std::nullopt;
    sol = llt.solve(rhs);
  }
  Eigen::VectorXd d = sol.col(0);
  if (eq) {
    const double aa = eq->dot(sol.col(1));
    if (!(aa > 0.0)) return std::nullopt;
    d -= (eq->dot(d) / aa) * sol.col(1);
  }
  if (!d.allFinite()) return std::nullopt;
  return d;
}

// Log-barrier Newton solve of the surrogate, started just inside the box
// from x. The barrier weight starts at the complementarity of that start,
// so a warm start needs few steps. The result replaces x only when it
// raises the surrogate; the next coordinate sweep then snaps near-zero
// entries onto the bound. Returns the number of Newton steps.
int barrier_refine(const QuadSurrogate& s, double upper, const std::optional<Eigen::VectorXd>& eq,
                   Eigen::VectorXd& x, double& current, double tol) {
  const Eigen::Index dim = x.size();
  const double push = 1e-3 * std::min(1.0, upper);
  Eigen::VectorXd z = x.cwiseMin(upper - push);
  if (!eq) {
    z = z.cwiseMax(push);
  } else {
    // Shift the two sign groups of the equality weights so that sum a_k z_k
    // is what it was at x.
    const Eigen::VectorXd& a = *eq;
    double pos = 0.0;
    double neg = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) (a[k] > 0.0 ? pos : neg) += std::abs(a[k]);
    if (pos == 0.0 || neg == 0.0) return 0;
    const double up_shift = (a.dot(x - z) + push * neg) / pos;
    for (Eigen::Index k = 0; k < dim; ++k) z[k] += a[k] > 0.0 ? up_shift : push;
    if ((z.array() <= 0.0).any() || (z.array() >= upper).any()) return 0;
  }

  auto barrier_value = [&](const Eigen::VectorXd& v, double mu) {
    double out = s.value(v);
    for (Eigen::Index k = 0; k < dim; ++k) out += mu * (std::log(v[k]) + std::log(upper - v[k]));
    return out;
  };

  Eigen::VectorXd g;
  Eigen::VectorXd curv;
  surrogate_derivs(s, z, g, curv);
  const double goal = 0.1 * tol * std::max(1.0, std::abs(current));
  const double floor = goal / static_cast<double>(dim);
  const double gap =
      (z.cwiseMin((upper - z.array()).matrix()).array() * g.array().abs()).mean();
  int steps = 0;
  bool failed = false;
  for (double mu = std::clamp(gap, 10.0 * floor, 1e-2); mu > floor && !failed; mu *= 0.1) {
    for (int iter = 0; iter < 50; ++iter) {
      surrogate_derivs(s, z, g, curv);
      Eigen::VectorXd diag(dim);
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double lo = z[k];
        const double hi = upper - z[k];
        g[k] += mu / lo - mu / hi;
        diag[k] = -curv[k] + mu / (lo * lo) + mu / (hi * hi);
      }
      const std::optional<Eigen::VectorXd> d = newton_direction(s, diag, g, eq);
      if (!d) {
        failed = true;
        break;
      }
      const double decrement = g.dot(*d);
      if (!(decrement >= 1e-3 * goal)) break;

      double t = 1.0;
      for (Eigen::Index k = 0; k < dim; ++k) {
        if ((*d)[k] < 0.0) t = std::min(t, -0.99 * z[k] / (*d)[k]);
        if ((*d)[k] > 0.0) t = std::min(t, 0.99 * (upper - z[k]) / (*d)[k]);
      }
      const double base = barrier_value(z, mu);
      while (t > 1e-12 && !(barrier_value(z + t * *d, mu) >= base + 1e-4 * t * decrement)) {
        t *= 0.5;
      }
      if (t <= 1e-12) break;
      z += t * *d;
      ++steps;
    }
  }
  const double v = s.value(z);
  if (std::isfinite(v) && v > current) {
    x = z;
    current = v;
  }
  return steps;
}

}  // namespace

QpResult qp_subsolve(const QuadSurrogate& surrogate, double upper,
                     const std::optional<Eigen::VectorXd>& equality,
                     const Eigen::VectorXd& start, const OptimizerConfig& cfg) {
  const Eigen::MatrixXd& H = surrogate.hessian;
  const Eigen::Index dim = surrogate.linear.size();
  if (H.rows() != dim || H.cols() != dim || start.size() != dim) {
    throw InvalidArgument("qp_subsolve: inconsistent dimensions");
  }
  if (equality && equality->size() != dim) {
    throw InvalidArgument("qp_subsolve: equality vector has wrong length");
  }
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (!(H(k, k) <= 0.0) || !std::isfinite(H(k, k))) {
      throw NumericalError("qp_subsolve: surrogate not concave along coordinate " +
                           std::to_string(k) + " (H_kk = " + std::to_string(H(k, k)) + ")");
    }
  }

  auto pen = [&](Eigen::Index k, double v) -> ScalarDerivs {
    return surrogate.penalty ? surrogate.penalty(k, v) : ScalarDerivs{};
  };

  QpResult out;
  Eigen::VectorXd x = start.cwiseMax(0.0).cwiseMin(upper);
  Eigen::VectorXd grad = surrogate.linear + H * x;  // quadratic part only
  double current = surrogate.value(x);

  for (int sweep = 1; sweep <= cfg.qp_max_inner; ++sweep) {
    const double before = current;
    if (!equality) {
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double xk = x[k];
        const double hkk = H(k, k);
        const double slope = grad[k] - hkk * xk;
        auto f = [&](double v) {
          const ScalarDerivs p = pen(k, v);
          return ScalarDerivs{0.0, slope + hkk * v + p.first, hkk + p.second};
        };
        const double v = maximize_concave_1d(f, 0.0, upper);
        const double delta = v - xk;
        if (delta != 0.0) {
          grad.noalias() += delta * H.col(k);
          x[k] = v;
        }
      }
    } else {
      const Eigen::VectorXd& a = *equality;
      for (Eigen::Index k = 0; k < dim; ++k) {
        // Partner with the steepest feasible ascent along e_k - (a_k/a_l) e_l.
        const double gk = grad[k] + pen(k, x[k]).first;
        Eigen::Index best = -1;
        double best_rate = 0.0;
        for (Eigen::Index l = 0; l < dim; ++l) {
          if (l == k || a[l] == 0.0) continue;
          const double ratio = a[k] / a[l];
          const double rate = gk - ratio * (grad[l] + pen(l, x[l]).first);
          // Moving t > 0 needs room to raise x_k and move x_l by -ratio t.
          const bool can_up = x[k] < upper && (ratio > 0.0 ? x[l] > 0.0 : x[l] < upper);
          const bool can_down = x[k] > 0.0 && (ratio > 0.0 ? x[l] < upper : x[l] > 0.0);
          const double gain = rate > 0.0 ? (can_up ? rate : 0.0) : (can_down ? -rate : 0.0);
          if (gain > best_rate) {
            best_rate = gain;
            best = l;
          }
        }
        if (best < 0) continue;
        const Eigen::Index l = best;
        const double ratio = a[k] / a[l];
        const double xk = x[k];
        const double xl = x[l];
        double lo = -xk;
        double hi = upper - xk;
        if (ratio > 0.0) {
          lo = std::max(lo, (xl - upper) / ratio);
          hi = std::min(hi, xl / ratio);
        } else {
          lo = std::max(lo, xl / ratio);
          hi = std::min(hi, (xl - upper) / ratio);
        }
        if (!(hi > lo)) continue;
        const double curvature = H(k, k) - 2.0 * ratio * H(k, l) + ratio * ratio * H(l, l);
        const double slope0 = grad[k] - ratio * grad[l];
        auto f = [&](double t) {
          const ScalarDerivs pk = pen(k, std::clamp(xk + t, 0.0, upper));
          const ScalarDerivs pl = pen(l, std::clamp(xl - ratio * t, 0.0, upper));
          return ScalarDerivs{0.0, slope0 + curvature * t + pk.first - ratio * pl.first,
                              curvature + pk.second + ratio * ratio * pl.second};
        };
        const double t = maximize_concave_1d(f, std::min(lo, 0.0), std::max(hi, 0.0));
        if (t == 0.0) continue;
        const double new_k = std::clamp(xk + t, 0.0, upper);
        const double new_l = std::clamp(xl - ratio * t, 0.0, upper);
        grad.noalias() += (new_k - xk) * H.col(k) + (new_l - xl) * H.col(l);
        x[k] = new_k;
        x[l] = new_l;
      }
    }
    current = surrogate.value(x);
    out.sweeps = sweep;
    if (sweep > 1 && small_gain(current - before, current, cfg.qp_inner_tol)) {
      out.converged = true;
      break;
    }
    out.newton_steps += barrier_refine(surrogate, upper, equality, x, current, cfg.qp_inner_tol);
    grad = surrogate.linear + H * x;
    if (small_gain(current - before, current, cfg.qp_inner_tol)) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  out.value = current;
  return out;
}

// ---------------------------------------------------------------------------
// Iterated bounded QP

OptResult iterated_bounded_qp(const DualProblem& problem, const Eigen::VectorXd& init,
                              const OptimizerConfig& cfg) {
  constexpr double kMaxStretch = 100.0;
  cfg.validate();
  check_start(problem, init);

  const auto* selection = dynamic_cast<const SelectionTerm*>(&problem.feature_term());
  const bool quadratic = dynamic_cast<const QuadraticTerm*>(&problem.feature_term()) != nullptr;
  if (selection == nullptr && !quadratic) {
    throw InvalidArgument("iterated_bounded_qp supports the linear MED objectives only");
  }

  const Eigen::Index dim = problem.size();
  const Eigen::Index n = problem.features();
  // U(k, i) = alpha_k X_{row(k), i}, so W = U' lambda.
  Eigen::MatrixXd U(dim, n);
  for (Eigen::Index k = 0; k < dim; ++k) {
    U.row(k) = problem.constraint()[k] * problem.row(k);
  }
  const Eigen::VectorXd& alpha = problem.constraint();

  QuadSurrogate surrogate;
  surrogate.penalty = [&problem](Eigen::Index k, double v) {
    return problem.separable_derivs(k, v);
  };
  std::optional<Eigen::VectorXd> equality;
  if (problem.hard_equality()) equality = alpha;

  OptResult result;
  Eigen::VectorXd lambda = init;
  double current = problem.value(lambda);
  result.objective_trace.push_back(current);
  Eigen::VectorXd prev_direction, prev_step, prev_grad;

  for (int outer = 1; outer <= cfg.max_iter; ++outer) {
    // Per feature, the bound is a quadratic in w_i = u_i' lambda with
    // curvature -(1 + w~^2/4) and slope w~^3/4 + h w~ (w~ = anchor value).
    const Eigen::VectorXd w = U.transpose() * lambda;
    Eigen::VectorXd curvature(n);
    Eigen::VectorXd slope(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (quadratic) {
        curvature[i] = 1.0;
        slope[i] = 0.0;
        continue;
      }
      const double h = 1.0 - feature_inclusion_prob(w[i], selection->p0());
      curvature[i] = 1.0 + 0.25 * w[i] * w[i];
      slope[i] = 0.25 * w[i] * w[i] * w[i] + h * w[i];
    }
    const Eigen::Index extra = problem.hard_equality() ? 0 : 1;
    surrogate.factor.resize(dim, n + extra);
    surrogate.factor.leftCols(n) = U * curvature.cwiseSqrt().asDiagonal();
    if (extra == 1) surrogate.factor.col(n) = std::sqrt(problem.bias_scale()) * alpha;
    surrogate.hessian = -(surrogate.factor * surrogate.factor.transpose());
    surrogate.linear = U * slope;
    if (!surrogate.hessian.allFinite() || !surrogate.linear.allFinite()) {
      throw NumericalError("bounded QP surrogate has non-finite entries at outer iteration " +
                           std::to_string(outer));
    }

    const QpResult qp = qp_subsolve(surrogate, problem.upper(), equality, lambda, cfg);
    result.inner_steps.push_back(qp.sweeps + qp.newton_steps);
    const double next = problem.value(qp.x);
    spdlog::debug("outer {}: J = {:.12g} after {} QP sweeps, {} Newton steps", outer, next, qp.sweeps,
                  qp.newton_steps);
    result.iterations = outer;
    if (!std::isfinite(next)) throw NumericalError("objective became non-finite");
    if (next < current) {
      // The surrogate step can only lose to rounding; keep the anchor.
      result.converged = true;
      break;
    }
    // The bound is loose where P is small, so the surrogate step is short.
    // Treat it as a preconditioned ascent direction, mix in the previous
    // direction (Polak-Ribiere) and line search the true objective. The
    // surrogate maximizer stays the fallback.
    const Eigen::VectorXd step = qp.x - lambda;
    const Eigen::VectorXd grad = problem.evaluate(lambda).gradient;
    Eigen::VectorXd direction = step;
    if (prev_direction.size() == dim) {
      const double denom = prev_grad.dot(prev_step);
      const double beta = denom > 0.0 ? grad.dot(step - prev_step) / denom : 0.0;
      if (beta > 0.0) direction += beta * prev_direction;
    }
    if (grad.dot(direction) <= 0.0) direction = step;
    double reach = kMaxStretch;
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (direction[k] < 0.0 && lambda[k] > 0.0) reach = std::min(reach, lambda[k] / -direction[k]);
      if (direction[k] > 0.0) reach = std::min(reach, (problem.upper() - lambda[k]) / direction[k]);
    }
    auto place = [&](double t) {
      return Eigen::VectorXd((lambda + t * direction).cwiseMax(0.0).cwiseMin(problem.upper()));
    };
    auto along = [&](double t) { return problem.value(place(t)); };
    const double t = brent_step(along, 0.0, reach, current);
    Eigen::VectorXd moved = qp.x;
    double reached = next;
    if (t > 0.0) {
      Eigen::VectorXd candidate = place(t);
      const double v = problem.value(candidate);
      if (v > reached) {
        moved = std::move(candidate);
        reached = v;
      }
    }
    prev_direction = moved - lambda;
    prev_step = step;
    prev_grad = grad;
    const double gain = reached - current;
    lambda = std::move(moved);
    current = reached;
    result.objective_trace.push_back(current);
    if (small_gain(gain, current, cfg.tol)) {
      result.converged = true;
      break;
    }
  }
  result.lambda = lambda;
  return result;
}

OptResult maximize(const DualProblem& problem, const Eigen::VectorXd& init,
                   const OptimizerConfig& cfg) {
  if (cfg.method == Method::axis_parallel) return axis_parallel_maximize(problem, init, cfg);

  OptResult bootstrap = iterated_bounded_qp(problem, init, cfg);
  OptResult polish = axis_parallel_maximize(problem, bootstrap.lambda, cfg);
  OptResult out = std::move(bootstrap);
  out.objective_trace.insert(out.objective_trace.end(), polish.objective_trace.begin() + 1,
                             polish.objective_trace.end());
  out.iterations += polish.iterations;
  out.converged = polish.converged;
  out.lambda = std::move(polish.lambda);
  return out;
}

}  // namespace medfs
