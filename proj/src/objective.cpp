#include "medfs/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medfs/error.hpp"

namespace medfs {

namespace {

constexpr double kBoxSlack = 1e-12;

// psi(x) = (1 - e^-x)/x and its first two derivatives. The power series
// sum_k (-x)^k/(k+1)! is used near zero where the closed forms cancel.
ScalarDerivs psi(double x) {
  if (std::abs(x) < 1.0) {
    ScalarDerivs out;
    double coef = 1.0;  // (-1)^k / (k+1)!
    double pow_k = 1.0, pow_k1 = 0.0, pow_k2 = 0.0;  // x^k, x^(k-1), x^(k-2)
    for (int k = 0; k < 30; ++k) {
      if (k > 0) {
        coef *= -1.0 / (k + 1);
        pow_k2 = pow_k1;
        pow_k1 = pow_k;
        pow_k *= x;
      }
      out.value += coef * pow_k;
      out.first += k * coef * pow_k1;
      out.second += k * (k - 1) * coef * pow_k2;
    }
    return out;
  }
  const double e = std::exp(-x);
  ScalarDerivs out;
  out.value = -std::expm1(-x) / x;
  out.first = (x * e + std::expm1(-x)) / (x * x);
  out.second = (2.0 - e * (x * x + 2.0 * x + 2.0)) / (x * x * x);
  return out;
}

// log Z for the tube prior, value only; -expm1(-x)/x has no cancellation.
double reg_log_partition(double lambda, double c, double epsilon) {
  const double x = epsilon * lambda;
  const double psi_value = x == 0.0 ? 1.0 : -std::expm1(-x) / x;
  return x + std::log(epsilon * psi_value + 1.0 / (c - lambda));
}

void check_scalar_box(double lambda, double c, const char* what) {
  if (!(c > 0.0)) throw InvalidArgument(std::string(what) + ": c must be positive");
  if (!(lambda >= 0.0)) {
    throw FeasibilityError(std::string(what) + ": lambda must be non-negative");
  }
  if (!(lambda < c)) {
    throw FeasibilityError(std::string(what) +
                           ": barrier violated, lambda must stay below c");
  }
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(BiasMode mode) { return mode == BiasMode::soft ? "soft" : "hard"; }

BiasMode bias_mode_from_string(const std::string& name) {
  if (name == "soft") return BiasMode::soft;
  if (name == "hard") return BiasMode::hard;
  throw InvalidArgument("unknown bias mode '" + name + "' (expected soft or hard)");
}

std::string to_string(Variant variant) {
  return variant == Variant::svm ? "svm" : "feature_selection";
}

Variant variant_from_string(const std::string& name) {
  if (name == "svm") return Variant::svm;
  if (name == "feature_selection") return Variant::feature_selection;
  throw InvalidArgument("unknown objective variant '" + name + "'");
}

void Hyperparams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("c must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be non-negative");
  }
  if (!(p0 > 0.0 && p0 < 1.0)) throw InvalidArgument("p0 must lie in (0, 1)");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sigma must be positive");
  }
}

double Hyperparams::box_upper() const { return c - kBoxSlack * c; }

Eigen::VectorXd DualVars::flat() const {
  Eigen::VectorXd out(size());
  out << lambda, lambda_prime;
  return out;
}

DualVars DualVars::from_flat(const Eigen::VectorXd& flat, Task task) {
  DualVars d;
  if (task == Task::classification) {
    d.lambda = flat;
    d.lambda_prime.resize(0);
    return d;
  }
  if (flat.size() % 2 != 0) {
    throw InvalidArgument("regression duals need an even length");
  }
  const Eigen::Index t = flat.size() / 2;
  d.lambda = flat.head(t);
  d.lambda_prime = flat.tail(t);
  return d;
}

// ---------------------------------------------------------------------------
// Scalar pieces

double clf_margin_penalty(double lambda, double c) {
  check_scalar_box(lambda, c, "clf_margin_penalty");
  return lambda + std::log1p(-lambda / c);
}

ScalarDerivs clf_margin_penalty_derivs(double lambda, double c) {
  const double gap = c - lambda;
  return {lambda + std::log1p(-lambda / c), 1.0 - 1.0 / gap, -1.0 / (gap * gap)};
}

double reg_margin_penalty(double lambda, double c, double epsilon) {
  check_scalar_box(lambda, c, "reg_margin_penalty");
  if (!(epsilon >= 0.0)) throw InvalidArgument("reg_margin_penalty: epsilon < 0");
  return reg_log_partition(lambda, c, epsilon);
}

ScalarDerivs reg_margin_penalty_derivs(double lambda, double c, double epsilon) {
  // log Z = eps*lambda + log F,  F = eps*psi(eps*lambda) + 1/(c - lambda).
  const double inv_gap = 1.0 / (c - lambda);
  const ScalarDerivs p = psi(epsilon * lambda);
  const double f = epsilon * p.value + inv_gap;
  const double f1 = epsilon * epsilon * p.first + inv_gap * inv_gap;
  const double f2 = epsilon * epsilon * epsilon * p.second + 2.0 * inv_gap * inv_gap * inv_gap;
  const double ratio = f1 / f;
  return {epsilon * lambda + std::log(f), epsilon + ratio, f2 / f - ratio * ratio};
}

double feature_inclusion_prob(double w, double p0) {
  return logistic(0.5 * w * w + std::log(p0) - std::log1p(-p0));
}

double selection_threshold(double p0) {
  return std::sqrt(2.0 * (std::log1p(-p0) - std::log(p0)));
}

double log_selection_partition(double w, double p0) {
  if (w == 0.0) return 0.0;
  const double a = std::log1p(-p0);
  const double b = std::log(p0) + 0.5 * w * w;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// ---------------------------------------------------------------------------
// Feature terms

double QuadraticTerm::value(const Eigen::VectorXd& w) const { return -0.5 * w.squaredNorm(); }

Eigen::VectorXd QuadraticTerm::gradient(const Eigen::VectorXd& w) const { return -w; }

double SelectionTerm::value(const Eigen::VectorXd& w) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) sum += log_selection_partition(w[i], p0_);
  return -sum;
}

Eigen::VectorXd SelectionTerm::gradient(const Eigen::VectorXd& w) const {
  Eigen::VectorXd g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    g[i] = -feature_inclusion_prob(w[i], p0_) * w[i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// DualProblem

namespace {

std::shared_ptr<const FeatureTerm> default_term(const Hyperparams& h) {
  if (h.variant == Variant::feature_selection) {
    return std::make_shared<SelectionTerm>(h.p0);
  }
  return std::make_shared<QuadraticTerm>();
}

}  // namespace

DualProblem::DualProblem(const Dataset& d, const Hyperparams& h)
    : task_(d.task()), hyper_(h), term_(default_term(h)), x_(d.examples()), y_(d.targets()) {
  hyper_.validate();
  upper_ = hyper_.box_upper();
  const Eigen::Index t = x_.rows();
  if (task_ == Task::classification) {
    alpha_ = y_;
    kappa_ = hyper_.sigma * hyper_.sigma;
  } else {
    alpha_.resize(2 * t);
    alpha_.head(t).setConstant(-1.0);
    alpha_.tail(t).setConstant(1.0);
    kappa_ = hyper_.sigma;
  }
}

DualProblem::DualProblem(const Dataset& d, const Hyperparams& h,
                         std::shared_ptr<const FeatureTerm> term)
    : task_(d.task()), hyper_(h), term_(std::move(term)), x_(d.examples()), y_(d.targets()) {
  hyper_.validate();
  if (task_ != Task::classification) {
    throw InvalidArgument("custom feature terms are only supported for classification");
  }
  if (!term_) throw InvalidArgument("feature term must not be null");
  upper_ = hyper_.box_upper();
  alpha_ = y_;
  kappa_ = hyper_.sigma * hyper_.sigma;
}

Eigen::VectorXd DualProblem::aggregate(const Eigen::VectorXd& lambda) const {
  const Eigen::Index t = x_.rows();
  Eigen::VectorXd coef = lambda.cwiseProduct(alpha_);
  if (task_ == Task::regression) {
    Eigen::VectorXd net = coef.head(t) + coef.tail(t);
    return x_.transpose() * net;
  }
  return x_.transpose() * coef;
}

double DualProblem::constraint_sum(const Eigen::VectorXd& lambda) const {
  return alpha_.dot(lambda);
}

double DualProblem::separable(Eigen::Index k, double lambda_k) const {
  if (task_ == Task::classification) {
    return lambda_k + std::log1p(-lambda_k / hyper_.c);
  }
  const double y = y_[row_of(k)];
  return alpha_[k] * y * lambda_k - reg_log_partition(lambda_k, hyper_.c, hyper_.epsilon);
}

ScalarDerivs DualProblem::separable_derivs(Eigen::Index k, double lambda_k) const {
  if (task_ == Task::classification) return clf_margin_penalty_derivs(lambda_k, hyper_.c);
  const double y = y_[row_of(k)];
  const ScalarDerivs g = reg_margin_penalty_derivs(lambda_k, hyper_.c, hyper_.epsilon);
  return {alpha_[k] * y * lambda_k - g.value, alpha_[k] * y - g.first, -g.second};
}

double DualProblem::assemble(double separable_sum, const Eigen::VectorXd& w,
                             double s) const {
  double v = separable_sum + term_->value(w);
  if (!hard_equality()) v -= 0.5 * kappa_ * s * s;
  return v;
}

double DualProblem::value(const Eigen::VectorXd& lambda) const {
  if (lambda.size() != size()) {
    throw InvalidArgument("expected " + std::to_string(size()) + " dual variables, got " +
                          std::to_string(lambda.size()));
  }
  double sep = 0.0;
  for (Eigen::Index k = 0; k < size(); ++k) sep += separable(k, lambda[k]);
  return assemble(sep, aggregate(lambda), constraint_sum(lambda));
}

ObjectiveEval DualProblem::evaluate(const Eigen::VectorXd& lambda) const {
  ObjectiveEval out;
  out.value = value(lambda);
  const Eigen::VectorXd w = aggregate(lambda);
  const Eigen::VectorXd dw = term_->gradient(w);
  const Eigen::VectorXd per_row = x_ * dw;
  const double s = constraint_sum(lambda);
  out.gradient.resize(size());
  for (Eigen::Index k = 0; k < size(); ++k) {
    double g = separable_derivs(k, lambda[k]).first + alpha_[k] * per_row[row_of(k)];
    if (!hard_equality()) g -= kappa_ * s * alpha_[k];
    out.gradient[k] = g;
  }
  return out;
}

void DualProblem::check_box(const Eigen::VectorXd& lambda) const {
  if (lambda.size() != size()) {
    throw InvalidArgument("expected " + std::to_string(size()) + " dual variables, got " +
                          std::to_string(lambda.size()));
  }
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] >= 0.0)) {
      throw FeasibilityError("dual " + std::to_string(k) + " is negative");
    }
    if (!(lambda[k] <= upper_)) {
      throw FeasibilityError("dual " + std::to_string(k) + " = " +
                             std::to_string(lambda[k]) + " violates the barrier at c = " +
                             std::to_string(hyper_.c));
    }
  }
}

void DualProblem::check_equality(const Eigen::VectorXd& lambda, double tol) const {
  const double s = constraint_sum(lambda);
  const double scale = std::max(1.0, lambda.cwiseAbs().sum());
  if (std::abs(s) > tol * scale) {
    throw FeasibilityError("equality constraint violated: sum alpha*lambda = " +
                           std::to_string(s));
  }
}

Eigen::VectorXd DualProblem::initial_point() const {
  const double start = std::min(0.1, hyper_.c / 10.0);
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(size(), start);
  if (!hard_equality() || task_ == Task::regression) return lambda;

  const double positives = static_cast<double>((y_.array() > 0.0).count());
  const double negatives = static_cast<double>(y_.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw InvalidArgument("hard bias mode needs examples from both classes");
  }
  const double smaller = std::min(positives, negatives);
  for (Eigen::Index k = 0; k < size(); ++k) {
    lambda[k] = start * smaller / (y_[k] > 0.0 ? positives : negatives);
  }
  return lambda;
}

DualProblem::Cursor DualProblem::cursor(const Eigen::VectorXd& lambda) const {
  Cursor cur;
  cur.lambda = lambda;
  cur.w = aggregate(lambda);
  cur.s = constraint_sum(lambda);
  cur.separable_sum = 0.0;
  for (Eigen::Index k = 0; k < size(); ++k) cur.separable_sum += separable(k, lambda[k]);
  cur.value = assemble(cur.separable_sum, cur.w, cur.s);
  cur.scratch.resize(cur.w.size());
  return cur;
}

double DualProblem::trial(Cursor& cur, std::span<const CoordinateStep> steps) const {
  cur.scratch = cur.w;
  double s = cur.s;
  double sep = cur.separable_sum;
  for (const auto& step : steps) {
    const double delta = step.value - cur.lambda[step.index];
    cur.scratch.noalias() += (delta * alpha_[step.index]) * row(step.index).transpose();
    s += delta * alpha_[step.index];
    sep += separable(step.index, step.value) - separable(step.index, cur.lambda[step.index]);
  }
  return assemble(sep, cur.scratch, s);
}

void DualProblem::commit(Cursor& cur, std::span<const CoordinateStep> steps) const {
  for (const auto& step : steps) {
    const double delta = step.value - cur.lambda[step.index];
    cur.w.noalias() += (delta * alpha_[step.index]) * row(step.index).transpose();
    cur.s += delta * alpha_[step.index];
    cur.separable_sum +=
        separable(step.index, step.value) - separable(step.index, cur.lambda[step.index]);
    cur.lambda[step.index] = step.value;
  }
  cur.value = assemble(cur.separable_sum, cur.w, cur.s);
}

// ---------------------------------------------------------------------------
// Named objectives

namespace {

ObjectiveEval evaluate_checked(const DualVars& duals, const Dataset& d, Hyperparams h,
                               Task task, Variant variant, const char* name) {
  if (d.task() != task) {
    throw InvalidArgument(std::string(name) + " needs a " + to_string(task) + " dataset");
  }
  if (task == Task::classification && duals.lambda_prime.size() != 0) {
    throw InvalidArgument(std::string(name) + ": classification has no lambda'");
  }
  if (task == Task::regression && duals.lambda.size() != duals.lambda_prime.size()) {
    throw InvalidArgument(std::string(name) + ": lambda and lambda' lengths differ");
  }
  h.variant = variant;
  DualProblem problem(d, h);
  const Eigen::VectorXd flat = duals.flat();
  problem.check_box(flat);
  if (problem.hard_equality()) problem.check_equality(flat);
  return problem.evaluate(flat);
}

}  // namespace

ObjectiveEval j_svm_classification(const DualVars& duals, const Dataset& d,
                                   const Hyperparams& h) {
  return evaluate_checked(duals, d, h, Task::classification, Variant::svm,
                          "j_svm_classification");
}

ObjectiveEval j_fs_classification(const DualVars& duals, const Dataset& d,
                                  const Hyperparams& h) {
  return evaluate_checked(duals, d, h, Task::classification, Variant::feature_selection,
                          "j_fs_classification");
}

ObjectiveEval j_svm_regression(const DualVars& duals, const Dataset& d,
                               const Hyperparams& h) {
  return evaluate_checked(duals, d, h, Task::regression, Variant::svm, "j_svm_regression");
}

ObjectiveEval j_fs_regression(const DualVars& duals, const Dataset& d,
                              const Hyperparams& h) {
  return evaluate_checked(duals, d, h, Task::regression, Variant::feature_selection,
                          "j_fs_regression");
}

FeatureStats feature_stats(const DualProblem& problem, const Eigen::VectorXd& lambda) {
  FeatureStats stats;
  stats.W = problem.aggregate(lambda);
  stats.P.resize(stats.W.size());
  const double p0 = problem.hyperparams().p0;
  for (Eigen::Index i = 0; i < stats.W.size(); ++i) {
    stats.P[i] = problem.has_selection() ? feature_inclusion_prob(stats.W[i], p0) : 1.0;
  }
  return stats;
}

}  // namespace medfs
