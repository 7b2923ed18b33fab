#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "medfs/data.hpp"

namespace medfs {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Starts at (0,0), ends at (1,1), both coordinates non-decreasing.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Threshold sweep over the distinct scores in descending order; tied
/// scores move together as one step. AUC by the trapezoid rule.
RocCurve roc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

struct CdfPoint {
  double x = 0.0;
  double fraction = 0.0;
};

struct CoeffCdf {
  std::vector<CdfPoint> points;
};

/// Fraction of |coeffs| <= x on `grid_size` evenly spaced points from 0 to
/// max |coeffs|. The last fraction is 1.
CoeffCdf coefficient_cdf(const Eigen::VectorXd& coeffs, int grid_size = 200);
/// Same, on a caller-supplied grid (for comparing two models pointwise).
CoeffCdf coefficient_cdf(const Eigen::VectorXd& coeffs, const std::vector<double>& grid);
std::vector<double> uniform_grid(double upper, int grid_size);

/// mean_t max(0, |pred_t - y_t| - epsilon).
double eps_insensitive_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& y,
                            double epsilon);

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

/// Fraction of sign(score) (ties -> +1) matching the +/-1 labels.
double accuracy(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

struct LinearFit {
  Eigen::VectorXd coef;
  double bias = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Ordinary least squares with an intercept; normal equations with a 1e-10
/// ridge so rank-deficient designs still solve.
LinearFit least_squares_fit(const Dataset& train);

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path);
void write_cdf_csv(const CoeffCdf& cdf, const std::filesystem::path& path);

using ConfigValue = std::variant<double, std::string>;

struct Metrics {
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, ConfigValue>> config;
};

/// Flat name -> number object plus a "config" echo object.
std::string metrics_to_json(const Metrics& metrics);
void write_metrics_json(const Metrics& metrics, const std::filesystem::path& path);

}  // namespace medfs
