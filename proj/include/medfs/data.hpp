#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace medfs {

enum class Task { classification, regression };

std::string to_string(Task task);
Task task_from_string(const std::string& name);

/// A T x n design matrix with its targets. Validated on construction and
/// immutable afterwards.
///
/// Classification targets must be exactly +1 or -1; every entry of the
/// design matrix must be finite.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd examples, Eigen::VectorXd targets,
          std::vector<std::string> feature_names, Task task);

  const Eigen::MatrixXd& examples() const { return examples_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  Task task() const { return task_; }

  Eigen::Index rows() const { return examples_.rows(); }
  Eigen::Index cols() const { return examples_.cols(); }

  Dataset with_examples(Eigen::MatrixXd examples,
                        std::vector<std::string> names) const;
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

  /// Default names f1..fn.
  static std::vector<std::string> default_names(Eigen::Index n);

 private:
  Eigen::MatrixXd examples_;
  Eigen::VectorXd targets_;
  std::vector<std::string> names_;
  Task task_;
};

/// Per-feature affine map x -> (x - shift) / scale. Features whose
/// population standard deviation is zero keep scale 1 and are flagged.
struct ScalingParams {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;
  std::vector<bool> constant;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Dataset apply(const Dataset& d) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;
};

using TargetColumn = std::variant<std::string, std::size_t>;

Dataset load_csv(const std::filesystem::path& path, const TargetColumn& target,
                 Task task);
void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::string& target_name = "target");

/// Component-wise powers [x, x^2, ..., x^m] per feature, no cross terms.
/// Output column i*m + (k-1) holds feature i raised to k and is named
/// "<name>^k".
Dataset polynomial_expand(const Dataset& d, int degree);
Eigen::VectorXd polynomial_expand(const Eigen::VectorXd& x, int degree);

/// Per-feature Legendre polynomials [P1(u), ..., Pm(u)] of u, the input
/// mapped affinely from [lo, hi] onto [-1, 1]. Same span as the
/// monomials but far better conditioned. Column layout as above, names
/// "P<k>(<name>)".
Dataset legendre_expand(const Dataset& d, int degree, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi);
Eigen::VectorXd legendre_expand(const Eigen::VectorXd& x, int degree, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi);

enum class Basis { monomial, legendre };

std::string to_string(Basis basis);
Basis basis_from_string(const std::string& name);

/// Zero mean, unit population standard deviation (divides by T).
std::pair<Dataset, ScalingParams> standardize(const Dataset& d);

/// Expansion followed by optional standardization. Fitted once on
/// training data and replayed on anything passed to a model later.
struct Preprocessing {
  int degree = 1;
  bool standardize = false;
  Basis basis = Basis::monomial;
  std::vector<std::string> raw_feature_names;
  Eigen::VectorXd input_lo;  // training range per raw feature (legendre)
  Eigen::VectorXd input_hi;
  std::optional<ScalingParams> scaling;

  static std::pair<Preprocessing, Dataset> fit(const Dataset& raw, int degree,
                                                bool standardize,
                                                Basis basis = Basis::monomial);
  Dataset apply(const Dataset& raw) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;

  /// Expansion only, no scaling.
  Dataset expand(const Dataset& raw) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& raw) const;
};

double sinc(double x);

/// Inputs uniform on [-10, 10], targets sin|x|/|x| plus N(0, noise_std^2).
Dataset gen_sinc(std::size_t count, double noise_std, std::uint64_t seed);

struct SparseBinaryTask {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> informative;
  Eigen::VectorXd planted_weights;  // zero outside `informative`
};

struct SparseBinaryConfig {
  std::size_t train = 500;
  std::size_t test = 4724;
  std::size_t n = 100;
  std::size_t k_informative = 10;
  double label_flip = 0.1;
  std::uint64_t seed = 0;
};

/// Binary features with labels from a planted sparse linear rule; a
/// stand-in for binary-encoded sequence data.
SparseBinaryTask gen_sparse_binary(const SparseBinaryConfig& cfg);

struct RegressionSplit {
  Dataset train;
  Dataset test;
};

/// Housing-like regression: 13 correlated continuous inputs, a target
/// driven by three of them (one through its square) plus Gaussian noise
/// and occasional large outliers. 481/25 split by default.
RegressionSplit gen_housing_like(std::uint64_t seed, std::size_t train = 481,
                                 std::size_t test = 25);

/// Two isotropic unit-variance Gaussian clouds centred at +/- separation*1.
Dataset gen_gaussian_clouds(std::size_t per_class, int dim, double separation,
                            std::uint64_t seed);

void write_index_sidecar(const std::vector<std::size_t>& indices,
                         const std::filesystem::path& path);
std::vector<std::size_t> read_index_sidecar(const std::filesystem::path& path);

}  // namespace medfs
