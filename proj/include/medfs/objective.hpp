#pragma once

#include <memory>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "medfs/data.hpp"

namespace medfs {

// How the bias b enters. `soft` puts a Gaussian prior on b, which turns the
// equality constraint on the duals into a quadratic penalty. `hard` keeps a
// flat prior and the equality constraint.
enum class BiasMode { soft, hard };

// `svm` is the plain Gaussian-prior linear machine; `feature_selection`
// adds Bernoulli(p0) switches on every weight.
enum class Variant { svm, feature_selection };

std::string to_string(BiasMode mode);
BiasMode bias_mode_from_string(const std::string& name);
std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

struct Hyperparams {
  double c = 10.0;          // margin penalty scale, duals live in [0, c)
  double epsilon = 0.2;     // tube half-width (regression only)
  double p0 = 0.99999;      // prior inclusion probability of each feature
  double sigma = 10.0;      // bias prior scale (soft bias)
  BiasMode bias = BiasMode::soft;
  Variant variant = Variant::feature_selection;

  /// Throws InvalidArgument when any field is out of range.
  void validate() const;

  /// Largest admissible dual value, c - 1e-12 c.
  double box_upper() const;
};

/// Lagrange multipliers. `lambda_prime` is empty for classification.
struct DualVars {
  Eigen::VectorXd lambda;
  Eigen::VectorXd lambda_prime;

  Eigen::Index size() const { return lambda.size() + lambda_prime.size(); }
  Eigen::VectorXd flat() const;
  static DualVars from_flat(const Eigen::VectorXd& flat, Task task);
};

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct FeatureStats {
  Eigen::VectorXd W;  // aggregated dual weight per feature
  Eigen::VectorXd P;  // inclusion probability per feature
};

struct ScalarDerivs {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// lambda + log(1 - lambda/c): the per-example J term induced by the
/// exponential margin prior c exp(-c(1 - gamma)) on gamma <= 1.
double clf_margin_penalty(double lambda, double c);
ScalarDerivs clf_margin_penalty_derivs(double lambda, double c);

/// log Z_gamma(lambda) for the epsilon-tube margin prior,
///   eps*lambda - log(lambda) + log(1 - exp(-lambda eps) + lambda/(c - lambda)),
/// evaluated as eps*lambda + log(eps*psi(lambda eps) + 1/(c - lambda)) with
/// psi(x) = (1 - e^-x)/x so that lambda = 0 gives log(eps + 1/c).
double reg_margin_penalty(double lambda, double c, double epsilon);
ScalarDerivs reg_margin_penalty_derivs(double lambda, double c, double epsilon);

/// Posterior probability that feature i is switched on,
/// Logistic(W^2/2 + log(p0/(1-p0))). Equals p0 at W = 0.
double feature_inclusion_prob(double w, double p0);

/// |W| at which the inclusion probability crosses 1/2.
double selection_threshold(double p0);

/// log(1 - p0 + p0 exp(W^2/2)), computed without overflow.
double log_selection_partition(double w, double p0);

/// The part of J that depends on the duals only through the aggregated
/// weights W. Value and gradient with respect to W.
class FeatureTerm {
 public:
  virtual ~FeatureTerm() = default;
  virtual double value(const Eigen::VectorXd& w) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w) const = 0;
  virtual bool is_selection() const { return false; }
};

/// -1/2 |W|^2 (Gaussian prior on the weights).
class QuadraticTerm final : public FeatureTerm {
 public:
  double value(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override;
};

/// -sum_i log(1 - p0 + p0 exp(W_i^2/2)) (switched Gaussian prior).
class SelectionTerm final : public FeatureTerm {
 public:
  explicit SelectionTerm(double p0) : p0_(p0) {}
  double value(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override;
  bool is_selection() const override { return true; }
  double p0() const { return p0_; }

 private:
  double p0_;
};

/// Single coordinate assignment lambda_k := value.
struct CoordinateStep {
  Eigen::Index index = 0;
  double value = 0.0;
};

/// The concave dual J(lambda) of a linear MED problem, written uniformly as
///
///   J = sum_k s_k(lambda_k) + F(W) - (kappa/2) S^2        (soft bias)
///   W = sum_k alpha_k lambda_k X_{row(k)},  S = sum_k alpha_k lambda_k
///
/// Classification: one dual per example, alpha_k = y_k,
///   s_k = lambda + log(1 - lambda/c), kappa = sigma^2.
/// Regression: duals [lambda; lambda'], alpha = -1 for lambda and +1 for
///   lambda', s_k = alpha_k y lambda - log Z_gamma(lambda), kappa = sigma.
/// With this orientation W is the posterior mean weight vector and kappa S
/// the posterior mean bias. In hard mode the kappa term is dropped and
/// S = 0 is imposed as a constraint instead.
class DualProblem {
 public:
  /// Linear MED problem for the dataset's task and `h.variant`.
  DualProblem(const Dataset& d, const Hyperparams& h);

  /// Classification problem with a caller-supplied feature term.
  DualProblem(const Dataset& d, const Hyperparams& h,
              std::shared_ptr<const FeatureTerm> term);

  Task task() const { return task_; }
  const Hyperparams& hyperparams() const { return hyper_; }
  const FeatureTerm& feature_term() const { return *term_; }
  bool has_selection() const { return term_->is_selection(); }
  bool hard_equality() const { return hyper_.bias == BiasMode::hard; }

  Eigen::Index size() const { return alpha_.size(); }
  Eigen::Index examples() const { return x_.rows(); }
  Eigen::Index features() const { return x_.cols(); }
  double upper() const { return upper_; }
  double bias_scale() const { return kappa_; }

  /// Coefficients of the linear constraint S = sum alpha_k lambda_k.
  const Eigen::VectorXd& constraint() const { return alpha_; }
  Eigen::Index row_of(Eigen::Index k) const { return k % x_.rows(); }
  auto row(Eigen::Index k) const { return x_.row(row_of(k)); }
  const Eigen::MatrixXd& design() const { return x_; }

  Eigen::VectorXd aggregate(const Eigen::VectorXd& lambda) const;
  double constraint_sum(const Eigen::VectorXd& lambda) const;

  double separable(Eigen::Index k, double lambda_k) const;
  ScalarDerivs separable_derivs(Eigen::Index k, double lambda_k) const;

  double value(const Eigen::VectorXd& lambda) const;
  ObjectiveEval evaluate(const Eigen::VectorXd& lambda) const;

  /// Throws FeasibilityError when any dual leaves [0, c - delta].
  void check_box(const Eigen::VectorXd& lambda) const;
  /// Throws FeasibilityError when |S| exceeds tol * max(1, sum lambda).
  void check_equality(const Eigen::VectorXd& lambda, double tol = 1e-8) const;

  /// min(0.1, c/10) everywhere, rebalanced per class in hard mode so that
  /// the equality holds.
  Eigen::VectorXd initial_point() const;

  /// Running state for coordinate-wise search: evaluating a move touching
  /// one or two duals costs O(n).
  struct Cursor {
    Eigen::VectorXd lambda;
    Eigen::VectorXd w;
    double s = 0.0;
    double separable_sum = 0.0;
    double value = 0.0;
    Eigen::VectorXd scratch;
  };

  Cursor cursor(const Eigen::VectorXd& lambda) const;
  double trial(Cursor& cur, std::span<const CoordinateStep> steps) const;
  void commit(Cursor& cur, std::span<const CoordinateStep> steps) const;

 private:
  double assemble(double separable_sum, const Eigen::VectorXd& w, double s) const;

  Task task_;
  Hyperparams hyper_;
  std::shared_ptr<const FeatureTerm> term_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd alpha_;
  double kappa_ = 0.0;
  double upper_ = 0.0;
};

/// Closed-form objectives. Each validates the task, the box and (hard bias
/// mode) the equality constraint before evaluating.
ObjectiveEval j_svm_classification(const DualVars& duals, const Dataset& d,
                                   const Hyperparams& h);
ObjectiveEval j_fs_classification(const DualVars& duals, const Dataset& d,
                                  const Hyperparams& h);
ObjectiveEval j_svm_regression(const DualVars& duals, const Dataset& d,
                               const Hyperparams& h);
ObjectiveEval j_fs_regression(const DualVars& duals, const Dataset& d,
                              const Hyperparams& h);

FeatureStats feature_stats(const DualProblem& problem, const Eigen::VectorXd& lambda);

}  // namespace medfs
