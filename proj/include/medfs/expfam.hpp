#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "medfs/data.hpp"
#include "medfs/model.hpp"
#include "medfs/objective.hpp"
#include "medfs/optimizer.hpp"

namespace medfs {

/// An exponential family p(X|theta) = exp(A(X) + X'theta - K(theta)) with
/// conjugate prior p(theta|chi) = exp(A~(theta) + theta'chi - K~(chi)).
/// Only what the dual needs is stored: the carrier A, the conjugate
/// cumulant K~ and its gradient (the posterior mean of theta), and the
/// posterior expectation of K(theta).
struct ExpFamilyDescriptor {
  std::string name;
  int dim = 0;
  Eigen::VectorXd chi0;
  std::function<double(const Eigen::VectorXd&)> a_fn;
  std::function<double(const Eigen::VectorXd&)> k_tilde_fn;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> k_tilde_grad;
  std::function<double(const Eigen::VectorXd&)> expected_cumulant;
};

/// Unit-covariance Gaussian with a N(0, I) prior on its mean:
/// A(X) = -|X|^2/2 - (dim/2) log 2pi, K~(chi) = |chi|^2/2, chi0 = 0.
ExpFamilyDescriptor gaussian_family(int dim);

enum class ClassSign { plus, minus };

/// log Z_theta = K~(chi0 + s v) + s sum_t lambda_t y_t A(X_t) - K~(chi0),
/// v = sum_t lambda_t y_t X_t, s = +1 / -1. Requires sum lambda_t y_t = 0
/// (within 1e-8).
double expfam_log_partition(const ExpFamilyDescriptor& fam, const DualVars& duals,
                            const Dataset& d, ClassSign sign);

/// Dual feature term -[K~(chi0 + w) - K~(chi0)] - [K~(chi0 - w) - K~(chi0)];
/// the carrier terms cancel between the two class models.
class GenerativeTerm final : public FeatureTerm {
 public:
  explicit GenerativeTerm(ExpFamilyDescriptor fam) : fam_(std::move(fam)) {}
  double value(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override;

 private:
  ExpFamilyDescriptor fam_;
};

struct GenerativeMedModel {
  ExpFamilyDescriptor family;
  std::vector<std::string> feature_names;
  Eigen::VectorXd natural_plus;   // chi0 + sum lambda y X
  Eigen::VectorXd natural_minus;  // chi0 - sum lambda y X
  double bias = 0.0;
  Hyperparams hyperparams;
  DualVars duals;
  bool converged = false;
  double objective = 0.0;
  int iterations = 0;

  Eigen::VectorXd mean_plus() const { return family.k_tilde_grad(natural_plus); }
  Eigen::VectorXd mean_minus() const { return family.k_tilde_grad(natural_minus); }
};

/// Hard bias mode is forced. The bias is recovered by putting the largest
/// dual of each class on its expected margin constraint.
GenerativeMedModel fit_generative(const Dataset& train, const Hyperparams& h,
                                  const OptimizerConfig& opt);

/// Posterior average of log p(x|theta+)/p(x|theta-) + b:
///   x'(mu+ - mu-) - (E K(theta+) - E K(theta-)) + b.
Prediction predict_generative(const GenerativeMedModel& model, const Eigen::VectorXd& x);

void save_generative(const GenerativeMedModel& model, const std::filesystem::path& path);
GenerativeMedModel load_generative(const std::filesystem::path& path);

}  // namespace medfs
