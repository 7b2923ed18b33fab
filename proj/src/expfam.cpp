#include "medfs/expfam.hpp"

#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "medfs/error.hpp"
#include "serial.hpp"

namespace medfs {

namespace {

constexpr const char* kGaussianMode = "generative-gaussian";

const std::vector<std::string> kSections = {"version", "mode", "hyperparams",
                                            "feature_names", "dim", "natural_plus",
                                            "natural_minus", "bias", "duals", "converged"};

}  // namespace

ExpFamilyDescriptor gaussian_family(int dim) {
  if (dim < 1) throw InvalidArgument("gaussian_family: dim must be >= 1");
  ExpFamilyDescriptor fam;
  fam.name = "gaussian";
  fam.dim = dim;
  fam.chi0 = Eigen::VectorXd::Zero(dim);
  const double log_norm = 0.5 * dim * std::log(2.0 * std::numbers::pi);
  fam.a_fn = [log_norm](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm() - log_norm; };
  // The prior's normalizer is folded in so that K~(0) = 0.
  fam.k_tilde_fn = [](const Eigen::VectorXd& chi) { return 0.5 * chi.squaredNorm(); };
  fam.k_tilde_grad = [](const Eigen::VectorXd& chi) -> Eigen::VectorXd { return chi; };
  // theta ~ N(chi, I) a posteriori, K(theta) = |theta|^2/2.
  fam.expected_cumulant = [dim](const Eigen::VectorXd& chi) {
    return 0.5 * chi.squaredNorm() + 0.5 * dim;
  };
  return fam;
}

double expfam_log_partition(const ExpFamilyDescriptor& fam, const DualVars& duals,
                            const Dataset& d, ClassSign sign) {
  if (d.task() != Task::classification) {
    throw InvalidArgument("expfam_log_partition needs a classification dataset");
  }
  if (d.cols() != fam.dim) {
    throw InvalidArgument("data has " + std::to_string(d.cols()) + " features, family has dim " +
                          std::to_string(fam.dim));
  }
  const Eigen::VectorXd& lambda = duals.lambda;
  if (lambda.size() != d.rows() || duals.lambda_prime.size() != 0) {
    throw InvalidArgument("expfam_log_partition: one dual per example expected");
  }
  if ((lambda.array() < 0.0).any()) throw FeasibilityError("duals must be non-negative");
  const Eigen::VectorXd& y = d.targets();
  const double s_sum = lambda.dot(y);
  if (std::abs(s_sum) > 1e-8) {
    throw FeasibilityError("sum lambda_t y_t = " + std::to_string(s_sum) +
                           " violates the equality constraint");
  }
  const double s = sign == ClassSign::plus ? 1.0 : -1.0;
  const Eigen::VectorXd ly = lambda.cwiseProduct(y);
  const Eigen::VectorXd v = d.examples().transpose() * ly;
  double carrier = 0.0;
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    if (ly[t] != 0.0) carrier += ly[t] * fam.a_fn(d.examples().row(t).transpose());
  }
  return fam.k_tilde_fn(fam.chi0 + s * v) + s * carrier - fam.k_tilde_fn(fam.chi0);
}

double GenerativeTerm::value(const Eigen::VectorXd& w) const {
  const double base = fam_.k_tilde_fn(fam_.chi0);
  return -(fam_.k_tilde_fn(fam_.chi0 + w) - base) - (fam_.k_tilde_fn(fam_.chi0 - w) - base);
}

Eigen::VectorXd GenerativeTerm::gradient(const Eigen::VectorXd& w) const {
  return fam_.k_tilde_grad(fam_.chi0 - w) - fam_.k_tilde_grad(fam_.chi0 + w);
}

namespace {

double score_without_bias(const GenerativeMedModel& m, const Eigen::VectorXd& x) {
  return x.dot(m.mean_plus() - m.mean_minus()) -
         (m.family.expected_cumulant(m.natural_plus) -
          m.family.expected_cumulant(m.natural_minus));
}

}  // namespace

GenerativeMedModel fit_generative(const Dataset& train, const Hyperparams& h,
                                  const OptimizerConfig& opt) {
  if (train.task() != Task::classification) {
    throw InvalidArgument("fit_generative needs binary +1/-1 labels");
  }
  const Eigen::VectorXd& y = train.targets();
  if ((y.array() > 0.0).all() || (y.array() < 0.0).all()) {
    throw InvalidArgument("fit_generative needs examples from both classes");
  }
  if (opt.method != Method::axis_parallel) {
    throw InvalidArgument("fit_generative supports the axis_parallel optimizer only");
  }
  Hyperparams hard = h;
  hard.bias = BiasMode::hard;
  hard.validate();

  GenerativeMedModel model;
  model.family = gaussian_family(static_cast<int>(train.cols()));
  model.feature_names = train.feature_names();
  model.hyperparams = hard;

  const DualProblem problem(train, hard, std::make_shared<GenerativeTerm>(model.family));
  const OptResult result = maximize(problem, problem.initial_point(), opt);
  if (!result.converged) {
    spdlog::warn("generative fit stopped after {} sweeps without meeting tol={}",
                 result.iterations, opt.tol);
  }
  model.duals = result.duals(Task::classification);
  model.converged = result.converged;
  model.objective = result.objective();
  model.iterations = result.iterations;

  const Eigen::VectorXd v = problem.aggregate(result.lambda);
  model.natural_plus = model.family.chi0 + v;
  model.natural_minus = model.family.chi0 - v;

  // b is the multiplier of the equality constraint. At the optimum every
  // dual is interior, so any example satisfies
  //   y_t (score_t + b) = E[gamma_t] = 1 - 1/(c - lambda_t);
  // the largest dual per class is used and the two values averaged.
  const Eigen::VectorXd& lambda = model.duals.lambda;
  double total = 0.0;
  int used = 0;
  for (const double side : {1.0, -1.0}) {
    Eigen::Index best = -1;
    for (Eigen::Index t = 0; t < lambda.size(); ++t) {
      if (y[t] == side && (best < 0 || lambda[t] > lambda[best])) best = t;
    }
    if (best < 0 || lambda[best] == 0.0) continue;
    const double expected_margin = 1.0 - 1.0 / (hard.c - lambda[best]);
    total += side * expected_margin -
             score_without_bias(model, train.examples().row(best).transpose());
    ++used;
  }
  if (used == 0) throw NumericalError("bias is indeterminate: every dual is zero");
  model.bias = total / used;
  return model;
}

// For the Gaussian family the posterior average of the log-ratio is
//   x'(E theta+ - E theta-) - (E K(theta+) - E K(theta-)) + b
// since log p(x|theta) is affine in theta apart from -K(theta). With
// E K(theta) = |mu|^2/2 + dim/2 the dim/2 terms cancel, so this is the
// plug-in rule at the posterior means.
Prediction predict_generative(const GenerativeMedModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.family.dim) {
    throw InvalidArgument("input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(model.family.dim));
  }
  Prediction p;
  p.score = score_without_bias(model, x) + model.bias;
  p.value = p.score >= 0.0 ? 1.0 : -1.0;
  return p;
}

void save_generative(const GenerativeMedModel& model, const std::filesystem::path& path) {
  using serial::to_json;
  serial::Json doc;
  doc["version"] = kModelFormatVersion;
  doc["mode"] = kGaussianMode;
  doc["hyperparams"] = to_json(model.hyperparams);
  doc["feature_names"] = model.feature_names;
  doc["dim"] = model.family.dim;
  doc["natural_plus"] = to_json(model.natural_plus);
  doc["natural_minus"] = to_json(model.natural_minus);
  doc["bias"] = model.bias;
  doc["duals"] = to_json(model.duals);
  doc["converged"] = model.converged;
  doc["objective"] = model.objective;
  doc["iterations"] = model.iterations;
  serial::write_text(path, doc.dump(2));
}

GenerativeMedModel load_generative(const std::filesystem::path& path) {
  const serial::Json doc = serial::parse_document(serial::read_text(path), kSections);
  const int version = doc["version"].get<int>();
  if (version != kModelFormatVersion) {
    throw InvalidArgument("unsupported model format version " + std::to_string(version));
  }
  if (!doc["mode"].is_string() || doc["mode"].get<std::string>() != kGaussianMode) {
    throw InvalidArgument("mode mismatch: file does not hold a " + std::string(kGaussianMode) +
                          " model");
  }
  GenerativeMedModel model;
  if (!doc["dim"].is_number_integer()) throw ParseError("section 'dim' must be an integer");
  model.family = gaussian_family(doc["dim"].get<int>());
  model.hyperparams = serial::hyperparams_from(doc["hyperparams"]);
  try {
    model.feature_names = doc["feature_names"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("section 'feature_names' must be an array of strings");
  }
  model.natural_plus = serial::vector_from(doc["natural_plus"], "natural_plus");
  model.natural_minus = serial::vector_from(doc["natural_minus"], "natural_minus");
  if (model.natural_plus.size() != model.family.dim ||
      model.natural_minus.size() != model.family.dim) {
    throw ParseError("natural parameter length disagrees with dim");
  }
  if (!doc["bias"].is_number()) throw ParseError("section 'bias' must be a number");
  model.bias = doc["bias"].get<double>();
  model.duals = serial::duals_from(doc["duals"]);
  if (!doc["converged"].is_boolean()) throw ParseError("section 'converged' must be a boolean");
  model.converged = doc["converged"].get<bool>();
  if (doc.contains("objective") && doc["objective"].is_number()) {
    model.objective = doc["objective"].get<double>();
  }
  if (doc.contains("iterations") && doc["iterations"].is_number_integer()) {
    model.iterations = doc["iterations"].get<int>();
  }
  return model;
}

}  // namespace medfs
