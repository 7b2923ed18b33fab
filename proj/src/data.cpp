#include "medfs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "medfs/error.hpp"

namespace medfs {

std::string to_string(Task task) {
  return task == Task::classification ? "classification" : "regression";
}

Task task_from_string(const std::string& name) {
  if (name == "classification") return Task::classification;
  if (name == "regression") return Task::regression;
  throw InvalidArgument("unknown task '" + name +
                        "' (expected classification or regression)");
}

Dataset::Dataset(Eigen::MatrixXd examples, Eigen::VectorXd targets,
                 std::vector<std::string> feature_names, Task task)
    : examples_(std::move(examples)),
      targets_(std::move(targets)),
      names_(std::move(feature_names)),
      task_(task) {
  if (examples_.rows() < 1 || examples_.cols() < 1) {
    throw InvalidArgument("dataset needs at least one row and one feature");
  }
  if (targets_.size() != examples_.rows()) {
    throw InvalidArgument("dataset has " + std::to_string(examples_.rows()) +
                          " rows but " + std::to_string(targets_.size()) +
                          " targets");
  }
  if (names_.empty()) names_ = default_names(examples_.cols());
  if (static_cast<Eigen::Index>(names_.size()) != examples_.cols()) {
    throw InvalidArgument("feature name count does not match column count");
  }
  if (!examples_.allFinite()) {
    throw InvalidArgument("dataset contains non-finite feature values");
  }
  for (Eigen::Index t = 0; t < targets_.size(); ++t) {
    const double y = targets_[t];
    if (!std::isfinite(y)) {
      throw InvalidArgument("non-finite target at row " + std::to_string(t));
    }
    if (task_ == Task::classification && y != 1.0 && y != -1.0) {
      throw InvalidArgument("classification target at row " +
                            std::to_string(t) + " is not +1 or -1");
    }
  }
}

Dataset Dataset::with_examples(Eigen::MatrixXd examples,
                               std::vector<std::string> names) const {
  return Dataset(std::move(examples), targets_, std::move(names), task_);
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), cols());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = examples_.row(rows[r]);
    y[static_cast<Eigen::Index>(r)] = targets_[rows[r]];
  }
  return Dataset(std::move(x), std::move(y), names_, task_);
}

std::vector<std::string> Dataset::default_names(Eigen::Index n) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("f" + std::to_string(i + 1));
  return names;
}

// ---------------------------------------------------------------------------
// Scaling

Eigen::VectorXd ScalingParams::apply(const Eigen::VectorXd& x) const {
  if (x.size() != shift.size()) {
    throw InvalidArgument("scaling expects " + std::to_string(shift.size()) +
                          " features, got " + std::to_string(x.size()));
  }
  return ((x - shift).array() / scale.array()).matrix();
}

Eigen::MatrixXd ScalingParams::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != shift.size()) {
    throw InvalidArgument("scaling expects " + std::to_string(shift.size()) +
                          " features, got " + std::to_string(x.cols()));
  }
  Eigen::MatrixXd z = x.rowwise() - shift.transpose();
  z.array().rowwise() /= scale.transpose().array();
  return z;
}

Dataset ScalingParams::apply(const Dataset& d) const {
  return d.with_examples(apply(d.examples()), d.feature_names());
}

Eigen::MatrixXd ScalingParams::invert(const Eigen::MatrixXd& z) const {
  Eigen::MatrixXd x = z;
  x.array().rowwise() *= scale.transpose().array();
  x.rowwise() += shift.transpose();
  return x;
}

std::pair<Dataset, ScalingParams> standardize(const Dataset& d) {
  if (d.rows() < 2) throw InvalidArgument("standardize needs at least 2 rows");
  const auto& x = d.examples();
  const double count = static_cast<double>(x.rows());
  ScalingParams params;
  params.shift = x.colwise().mean().transpose();
  params.scale.resize(x.cols());
  params.constant.assign(static_cast<std::size_t>(x.cols()), false);
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double var =
        (x.col(i).array() - params.shift[i]).square().sum() / count;
    const double sd = std::sqrt(var);
    if (sd > 0.0 && std::isfinite(sd)) {
      params.scale[i] = sd;
    } else {
      params.scale[i] = 1.0;
      params.constant[static_cast<std::size_t>(i)] = true;
    }
  }
  return {params.apply(d), params};
}

// ---------------------------------------------------------------------------
// Expansion

Eigen::VectorXd polynomial_expand(const Eigen::VectorXd& x, int degree) {
  if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
  const Eigen::Index m = degree;
  Eigen::VectorXd out(x.size() * m);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      p *= x[i];
      out[i * m + k] = p;
    }
  }
  return out;
}

Dataset polynomial_expand(const Dataset& d, int degree) {
  if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
  const Eigen::Index m = degree;
  Eigen::MatrixXd out(d.rows(), d.cols() * m);
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    out.row(t) = polynomial_expand(Eigen::VectorXd(d.examples().row(t).transpose()),
                                   degree)
                     .transpose();
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(out.cols()));
  for (const auto& name : d.feature_names()) {
    for (int k = 1; k <= degree; ++k) {
      names.push_back(degree == 1 ? name : name + "^" + std::to_string(k));
    }
  }
  return d.with_examples(std::move(out), std::move(names));
}

Eigen::VectorXd legendre_expand(const Eigen::VectorXd& x, int degree, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi) {
  if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
  if (lo.size() != x.size() || hi.size() != x.size()) {
    throw InvalidArgument("legendre_expand: range vectors do not match the input");
  }
  const Eigen::Index m = degree;
  Eigen::VectorXd out(x.size() * m);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double width = hi[i] - lo[i];
    const double u = width > 0.0 ? (2.0 * x[i] - lo[i] - hi[i]) / width : 0.0;
    // (k+1) P_{k+1} = (2k+1) u P_k - k P_{k-1}; also fine outside [-1, 1].
    double prev = 1.0;
    double cur = u;
    for (Eigen::Index k = 0; k < m; ++k) {
      out[i * m + k] = cur;
      const double next = ((2.0 * k + 3.0) * u * cur - (k + 1.0) * prev) / (k + 2.0);
      prev = cur;
      cur = next;
    }
  }
  return out;
}

Dataset legendre_expand(const Dataset& d, int degree, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  if (lo.size() != d.cols() || hi.size() != d.cols()) {
    throw InvalidArgument("legendre_expand: range vectors do not match the data");
  }
  Eigen::MatrixXd out(d.rows(), d.cols() * degree);
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    out.row(t) =
        legendre_expand(Eigen::VectorXd(d.examples().row(t).transpose()), degree, lo, hi)
            .transpose();
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(out.cols()));
  for (const auto& name : d.feature_names()) {
    for (int k = 1; k <= degree; ++k) names.push_back("P" + std::to_string(k) + "(" + name + ")");
  }
  return d.with_examples(std::move(out), std::move(names));
}

std::string to_string(Basis basis) {
  return basis == Basis::monomial ? "monomial" : "legendre";
}

Basis basis_from_string(const std::string& name) {
  if (name == "monomial") return Basis::monomial;
  if (name == "legendre") return Basis::legendre;
  throw InvalidArgument("unknown basis '" + name + "' (expected monomial or legendre)");
}

std::pair<Preprocessing, Dataset> Preprocessing::fit(const Dataset& raw,
                                                     int degree,
                                                     bool standardize_features,
                                                     Basis basis) {
  if (raw.rows() == 0) throw InvalidArgument("cannot fit preprocessing on an empty dataset");
  Preprocessing pre;
  pre.degree = degree;
  pre.standardize = standardize_features;
  pre.basis = basis;
  pre.raw_feature_names = raw.feature_names();
  if (basis == Basis::legendre) {
    pre.input_lo = raw.examples().colwise().minCoeff().transpose();
    pre.input_hi = raw.examples().colwise().maxCoeff().transpose();
  }
  Dataset expanded = pre.expand(raw);
  if (!standardize_features) return {std::move(pre), std::move(expanded)};
  auto [scaled, params] = medfs::standardize(expanded);
  pre.scaling = std::move(params);
  return {std::move(pre), std::move(scaled)};
}

Dataset Preprocessing::expand(const Dataset& raw) const {
  if (basis == Basis::legendre) return legendre_expand(raw, degree, input_lo, input_hi);
  return polynomial_expand(raw, degree);
}

Eigen::VectorXd Preprocessing::expand(const Eigen::VectorXd& raw) const {
  if (basis == Basis::legendre) return legendre_expand(raw, degree, input_lo, input_hi);
  return polynomial_expand(raw, degree);
}

Dataset Preprocessing::apply(const Dataset& raw) const {
  if (!raw_feature_names.empty() &&
      raw.cols() != static_cast<Eigen::Index>(raw_feature_names.size())) {
    throw InvalidArgument("expected " + std::to_string(raw_feature_names.size()) +
                          " raw features, got " + std::to_string(raw.cols()));
  }
  Dataset expanded = expand(raw);
  return scaling ? scaling->apply(expanded) : expanded;
}

Eigen::VectorXd Preprocessing::apply(const Eigen::VectorXd& raw) const {
  if (!raw_feature_names.empty() &&
      raw.size() != static_cast<Eigen::Index>(raw_feature_names.size())) {
    throw InvalidArgument("expected " + std::to_string(raw_feature_names.size()) +
                          " raw features, got " + std::to_string(raw.size()));
  }
  Eigen::VectorXd expanded = expand(raw);
  return scaling ? scaling->apply(expanded) : expanded;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos
                        ? std::string()
                        : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_real(const std::string& text, double& value) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end && begin != end;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const TargetColumn& target,
                 Task task) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open data file " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path.string() + ": missing header row");
  }
  const auto header = split_line(line);

  std::size_t target_index = 0;
  if (const auto* name = std::get_if<std::string>(&target)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) {
      throw InvalidArgument(path.string() + ": no target column '" + *name + "'");
    }
    target_index = static_cast<std::size_t>(it - header.begin());
  } else {
    target_index = std::get<std::size_t>(target);
    if (target_index >= header.size()) {
      throw InvalidArgument(path.string() + ": target column index " +
                            std::to_string(target_index) + " out of range");
    }
  }
  if (header.size() < 2) {
    throw ParseError(path.string() + ": need at least one feature column");
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != target_index) names.push_back(header[j]);
  }

  std::vector<double> values;
  std::vector<double> targets;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = 0.0;
      if (!parse_real(cells[j], v) || !std::isfinite(v)) {
        throw ParseError(path.string() + ": row " + std::to_string(row) +
                         ", column '" + header[j] + "': non-numeric value '" +
                         cells[j] + "'");
      }
      if (j == target_index) {
        if (task == Task::classification && v != 1.0 && v != -1.0) {
          throw ParseError(path.string() + ": row " + std::to_string(row) +
                           ": classification label '" + cells[j] +
                           "' is not +1 or -1");
        }
        targets.push_back(v);
      } else {
        values.push_back(v);
      }
    }
  }
  if (row == 0) throw ParseError(path.string() + ": no data rows");

  const auto n = static_cast<Eigen::Index>(names.size());
  const auto t = static_cast<Eigen::Index>(row);
  Eigen::MatrixXd x =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          values.data(), t, n);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(targets.data(), t);
  return Dataset(std::move(x), std::move(y), std::move(names), task);
}

void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.precision(17);
  for (const auto& name : d.feature_names()) out << name << ',';
  out << target_name << '\n';
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    for (Eigen::Index i = 0; i < d.cols(); ++i) out << d.examples()(t, i) << ',';
    out << d.targets()[t] << '\n';
  }
}

void write_index_sidecar(const std::vector<std::size_t>& indices,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << nlohmann::json(indices).dump() << '\n';
}

std::vector<std::size_t> read_index_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Generators

double sinc(double x) {
  const double a = std::abs(x);
  return a == 0.0 ? 1.0 : std::sin(a) / a;
}

Dataset gen_sinc(std::size_t count, double noise_std, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("gen_sinc: count must be >= 1");
  if (!(noise_std >= 0.0)) throw InvalidArgument("gen_sinc: noise_std must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> input(-10.0, 10.0);
  const auto t = static_cast<Eigen::Index>(count);
  Eigen::MatrixXd x(t, 1);
  Eigen::VectorXd y(t);
  // All inputs are drawn before any noise so clean and noisy sets built
  // from the same seed share their inputs.
  for (Eigen::Index i = 0; i < t; ++i) x(i, 0) = input(rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index i = 0; i < t; ++i) {
    y[i] = sinc(x(i, 0));
    if (noise_std > 0.0) y[i] += noise_std * noise(rng);
  }
  return Dataset(std::move(x), std::move(y), {"x"}, Task::regression);
}

SparseBinaryTask gen_sparse_binary(const SparseBinaryConfig& cfg) {
  if (cfg.n < 1 || cfg.train < 1 || cfg.test < 1) {
    throw InvalidArgument("gen_sparse_binary: sizes must be positive");
  }
  if (cfg.k_informative < 1 || cfg.k_informative > cfg.n) {
    throw InvalidArgument("gen_sparse_binary: k_informative must be in [1, n]");
  }
  if (!(cfg.label_flip >= 0.0 && cfg.label_flip < 0.5)) {
    throw InvalidArgument("gen_sparse_binary: label_flip must be in [0, 0.5)");
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(cfg.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> informative(order.begin(),
                                       order.begin() + static_cast<std::ptrdiff_t>(cfg.k_informative));
  std::sort(informative.begin(), informative.end());

  const auto n = static_cast<Eigen::Index>(cfg.n);
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
  std::uniform_real_distribution<double> magnitude(1.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (auto i : informative) {
    weights[static_cast<Eigen::Index>(i)] = (coin(rng) ? 1.0 : -1.0) * magnitude(rng);
  }

  std::bernoulli_distribution flip(cfg.label_flip);
  auto draw = [&](std::size_t count) {
    const auto t = static_cast<Eigen::Index>(count);
    Eigen::MatrixXd x(t, n);
    Eigen::VectorXd y(t);
    for (Eigen::Index r = 0; r < t; ++r) {
      for (Eigen::Index i = 0; i < n; ++i) x(r, i) = coin(rng) ? 1.0 : 0.0;
      const double score = weights.dot((x.row(r).array() - 0.5).matrix().transpose());
      double label = score >= 0.0 ? 1.0 : -1.0;
      if (flip(rng)) label = -label;
      y[r] = label;
    }
    return Dataset(std::move(x), std::move(y), Dataset::default_names(n),
                   Task::classification);
  };
  Dataset train = draw(cfg.train);
  Dataset test = draw(cfg.test);
  return SparseBinaryTask{std::move(train), std::move(test), std::move(informative),
                          std::move(weights)};
}

RegressionSplit gen_housing_like(std::uint64_t seed, std::size_t train,
                                 std::size_t test) {
  constexpr Eigen::Index kFeatures = 13;
  constexpr Eigen::Index kFactors = 3;
  if (train < 1 || test < 1) throw InvalidArgument("gen_housing_like: empty split");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Inputs share a few latent factors so that columns are correlated.
  Eigen::MatrixXd loadings(kFeatures, kFactors);
  for (Eigen::Index i = 0; i < kFeatures; ++i) {
    for (Eigen::Index f = 0; f < kFactors; ++f) loadings(i, f) = 0.6 * normal(rng);
  }

  const auto total = static_cast<Eigen::Index>(train + test);
  Eigen::MatrixXd x(total, kFeatures);
  Eigen::VectorXd y(total);
  for (Eigen::Index t = 0; t < total; ++t) {
    Eigen::VectorXd factors(kFactors);
    for (Eigen::Index f = 0; f < kFactors; ++f) factors[f] = normal(rng);
    for (Eigen::Index i = 0; i < kFeatures; ++i) {
      x(t, i) = loadings.row(i).dot(factors) + normal(rng);
    }
    double target = 1.5 * x(t, 0) - 1.0 * x(t, 4) + 0.5 * (x(t, 7) * x(t, 7) - 1.0);
    target += 0.3 * normal(rng);
    if (unit(rng) < 0.06) {
      target += (unit(rng) < 0.5 ? -1.0 : 1.0) * (4.0 + 4.0 * unit(rng));
    }
    y[t] = target;
  }
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < kFeatures; ++i) names.push_back("x" + std::to_string(i + 1));
  Dataset all(std::move(x), std::move(y), names, Task::regression);

  std::vector<Eigen::Index> train_rows(train);
  std::vector<Eigen::Index> test_rows(test);
  std::iota(train_rows.begin(), train_rows.end(), Eigen::Index{0});
  std::iota(test_rows.begin(), test_rows.end(), static_cast<Eigen::Index>(train));
  return RegressionSplit{all.subset(train_rows), all.subset(test_rows)};
}

Dataset gen_gaussian_clouds(std::size_t per_class, int dim, double separation,
                            std::uint64_t seed) {
  if (per_class < 1 || dim < 1) throw InvalidArgument("gen_gaussian_clouds: empty");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto t = static_cast<Eigen::Index>(2 * per_class);
  Eigen::MatrixXd x(t, dim);
  Eigen::VectorXd y(t);
  for (Eigen::Index r = 0; r < t; ++r) {
    const double label = (r % 2 == 0) ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < dim; ++i) x(r, i) = label * separation + normal(rng);
    y[r] = label;
  }
  return Dataset(std::move(x), std::move(y), Dataset::default_names(dim),
                 Task::classification);
}

}  // namespace medfs
