#include "medfs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "medfs/error.hpp"

namespace medfs {

namespace {

void check_lengths(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size()) {
    throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  return out;
}

}  // namespace

RocCurve roc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  check_lengths(scores, labels, "roc_curve");
  double pos = 0.0;
  double neg = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      pos += 1.0;
    } else if (labels[i] == -1.0) {
      neg += 1.0;
    } else {
      throw InvalidArgument("roc_curve: labels must be +1 or -1");
    }
  }
  if (pos == 0.0 || neg == 0.0) {
    throw InvalidArgument("roc_curve needs at least one positive and one negative label");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  double tp = 0.0;
  double fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] > 0.0) tp += 1.0; else fp += 1.0;
      ++i;
    }
    const RocPoint next{fp / neg, tp / pos};
    const RocPoint& prev = roc.points.back();
    roc.auc += (next.fpr - prev.fpr) * 0.5 * (next.tpr + prev.tpr);
    roc.points.push_back(next);
  }
  return roc;
}

std::vector<double> uniform_grid(double upper, int grid_size) {
  if (grid_size < 1) throw InvalidArgument("grid_size must be positive");
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  if (grid_size == 1) {
    grid[0] = upper;
    return grid;
  }
  for (int k = 0; k < grid_size; ++k) grid[k] = upper * k / (grid_size - 1);
  grid.back() = upper;
  return grid;
}

CoeffCdf coefficient_cdf(const Eigen::VectorXd& coeffs, const std::vector<double>& grid) {
  if (coeffs.size() == 0) throw InvalidArgument("coefficient_cdf: empty coefficient vector");
  if (grid.empty()) throw InvalidArgument("coefficient_cdf: empty grid");
  std::vector<double> mags(static_cast<std::size_t>(coeffs.size()));
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) mags[i] = std::abs(coeffs[i]);
  std::sort(mags.begin(), mags.end());
  CoeffCdf cdf;
  cdf.points.reserve(grid.size());
  const double n = static_cast<double>(mags.size());
  for (const double x : grid) {
    const auto below = std::upper_bound(mags.begin(), mags.end(), x) - mags.begin();
    cdf.points.push_back({x, static_cast<double>(below) / n});
  }
  return cdf;
}

CoeffCdf coefficient_cdf(const Eigen::VectorXd& coeffs, int grid_size) {
  if (coeffs.size() == 0) throw InvalidArgument("coefficient_cdf: empty coefficient vector");
  return coefficient_cdf(coeffs, uniform_grid(coeffs.cwiseAbs().maxCoeff(), grid_size));
}

double eps_insensitive_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& y,
                            double epsilon) {
  check_lengths(pred, y, "eps_insensitive_loss");
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be non-negative");
  if (pred.size() == 0) throw InvalidArgument("eps_insensitive_loss: empty input");
  return ((pred - y).cwiseAbs().array() - epsilon).max(0.0).mean();
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  check_lengths(pred, y, "rmse");
  if (pred.size() == 0) throw InvalidArgument("rmse: empty input");
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(pred.size()));
}

double accuracy(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  check_lengths(scores, labels, "accuracy");
  if (scores.size() == 0) throw InvalidArgument("accuracy: empty input");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double label = scores[i] >= 0.0 ? 1.0 : -1.0;
    if (label == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

Eigen::VectorXd LinearFit::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != coef.size()) throw InvalidArgument("LinearFit: feature count mismatch");
  return (x * coef).array() + bias;
}

LinearFit least_squares_fit(const Dataset& train) {
  if (train.task() != Task::regression) {
    throw InvalidArgument("least_squares_fit needs a regression dataset");
  }
  const Eigen::Index t = train.rows();
  const Eigen::Index n = train.cols();
  Eigen::MatrixXd a(t, n + 1);
  a.leftCols(n) = train.examples();
  a.col(n).setOnes();
  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += 1e-10;
  const Eigen::VectorXd beta = gram.ldlt().solve(a.transpose() * train.targets());
  LinearFit fit;
  fit.coef = beta.head(n);
  fit.bias = beta[n];
  return fit;
}

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "fpr,tpr\n";
  for (const auto& p : roc.points) out << p.fpr << ',' << p.tpr << '\n';
}

void write_cdf_csv(const CoeffCdf& cdf, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,fraction\n";
  for (const auto& p : cdf.points) out << p.x << ',' << p.fraction << '\n';
}

std::string metrics_to_json(const Metrics& metrics) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [name, value] : metrics.values) doc[name] = value;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [name, value] : metrics.config) {
    std::visit([&](const auto& v) { config[name] = v; }, value);
  }
  doc["config"] = std::move(config);
  return doc.dump(2);
}

void write_metrics_json(const Metrics& metrics, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << metrics_to_json(metrics) << '\n';
}

}  // namespace medfs
