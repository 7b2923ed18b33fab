#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medfs/data.hpp"
#include "medfs/objective.hpp"
#include "medfs/optimizer.hpp"

namespace medfs {

inline constexpr int kModelFormatVersion = 1;

/// Posterior-mean linear predictor. Immutable once fitted.
struct MedModel {
  Task task = Task::classification;
  Hyperparams hyperparams;
  std::vector<std::string> feature_names;
  Eigen::VectorXd W;        // posterior mean weight before switching
  Eigen::VectorXd P;        // inclusion probabilities (1 without selection)
  Eigen::VectorXd W_tilde;  // P .* W, used by the decision rule
  double bias = 0.0;
  std::optional<Preprocessing> preprocessing;
  DualVars duals;
  bool converged = false;
  double objective = 0.0;
  int iterations = 0;

  Eigen::Index features() const { return W_tilde.size(); }
};

struct Coefficients {
  Eigen::VectorXd W;
  Eigen::VectorXd P;
  Eigen::VectorXd W_tilde;
};

struct Prediction {
  double score = 0.0;
  double value = 0.0;  // +1/-1 for classification, the score for regression
};

/// Trains on an already prepared design matrix.
MedModel fit(const Dataset& train, const Hyperparams& h, const OptimizerConfig& opt);

/// Expands (degree) and optionally standardizes `raw` first; the fitted
/// preprocessing is stored in the model and replayed at prediction time.
MedModel fit(const Dataset& raw, const Hyperparams& h, const OptimizerConfig& opt,
             int degree, bool standardize, Basis basis = Basis::monomial);

Coefficients effective_coefficients(const DualVars& duals, const Dataset& d,
                                    const Hyperparams& h);

/// Soft bias: kappa * S. Hard bias: the largest dual on each side is put on
/// its expected margin constraint with equality, results averaged.
double recover_bias(const DualVars& duals, const Dataset& d, const Hyperparams& h);

/// `x` lives in the model's feature space (after preprocessing).
Prediction predict(const MedModel& model, const Eigen::VectorXd& x);
/// `raw` is run through the stored preprocessing first.
Prediction predict_raw(const MedModel& model, const Eigen::VectorXd& raw);
/// Scores for every row of a raw dataset whose task must match the model.
Eigen::VectorXd predict_scores(const MedModel& model, const Dataset& raw);

void save_model(const MedModel& model, const std::filesystem::path& path);
std::string model_to_json(const MedModel& model);

/// Throws ParseError on malformed or truncated files (naming the missing
/// section) and InvalidArgument on version or mode mismatch.
MedModel load_model(const std::filesystem::path& path,
                    std::optional<Task> expected = std::nullopt);
MedModel model_from_json(const std::string& text, std::optional<Task> expected = std::nullopt);

}  // namespace medfs
