#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "medfs/data.hpp"
#include "medfs/eval.hpp"
#include "medfs/objective.hpp"
#include "medfs/optimizer.hpp"

namespace medfs {

/// Everything a subcommand may need. Paths that a command does not use
/// are ignored.
struct RunConfig {
  Hyperparams hyper;
  OptimizerConfig opt;
  int degree = 1;
  bool standardize = false;
  Basis basis = Basis::monomial;

  std::optional<Task> task;       // train defaults to classification
  std::string target = "target";  // target column name in CSV inputs

  std::filesystem::path input;     // training or test CSV
  std::filesystem::path model;     // model file (written by train, read otherwise)
  std::filesystem::path output;    // predictions / metrics / curve file
  std::filesystem::path baseline;  // training CSV for the least-squares baseline
  std::filesystem::path out_dir = ".";
  int grid_size = 200;

  void validate() const;
};

// Each command returns the process exit code: 0 success, 1 user or input
// error, 2 numerical failure. Errors are reported on `err`.
int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_roc(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_cdf(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_demo_sinc(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_demo_sparse(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_demo_generative(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Metrics for a model file on a test CSV (plus the least-squares baseline
/// when cfg.baseline is set). Throws on error.
Metrics evaluate_model(const RunConfig& cfg);

// Demo recipes. They write their files under cfg.out_dir and return the
// headline numbers.

struct SincDemoResult {
  double clean_train_rmse = 0.0;
  double clean_grid_rmse = 0.0;
  double noisy_train_rmse = 0.0;
  double noisy_grid_rmse = 0.0;  // against the noise-free function
  bool clean_converged = false;
  bool noisy_converged = false;
};

/// 100 points from sinc on [-10, 10], once noise-free and once with noise
/// 0.2, degree-8 expansion. Writes sinc_clean.csv and sinc_noisy.csv with
/// columns x,y_true,y_pred: the 100 training rows, then a dense grid.
SincDemoResult demo_sinc(const RunConfig& cfg);
inline constexpr int kSincGridPoints = 401;

struct SparseDemoResult {
  double auc_select = 0.0;  // p0 = 1e-5
  double auc_plain = 0.0;   // p0 = 0.99999
  CoeffCdf cdf_select;
  CoeffCdf cdf_plain;
  bool select_dominates = false;  // cdf_select >= cdf_plain at every grid point
  bool converged_select = false;
  bool converged_plain = false;
};

/// Planted-sparse binary task trained with and without selection. Writes
/// roc_select.csv, roc_plain.csv, cdf_select.csv, cdf_plain.csv (shared
/// grid), sparse_train.csv, sparse_test.csv and planted.json.
SparseDemoResult demo_sparse(const RunConfig& cfg);

struct GenerativeDemoResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  bool converged = false;
};

/// Two Gaussian clouds at +/-3 (dim 2, 50 per class) fitted with the
/// generative classifier. Writes generative_model.json.
GenerativeDemoResult demo_generative(const RunConfig& cfg);

/// Hyperparameters the sinc demo uses unless overridden.
Hyperparams sinc_demo_defaults();

}  // namespace medfs
