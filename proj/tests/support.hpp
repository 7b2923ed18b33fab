#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "medfs/data.hpp"
#include "medfs/objective.hpp"

namespace medfs::testing {

inline Dataset random_dataset(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                              Task task) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  Eigen::VectorXd y(rows);
  for (Eigen::Index t = 0; t < rows; ++t) {
    if (task == Task::classification) {
      // both classes always present
      y[t] = t % 2 == 0 ? 1.0 : -1.0;
    } else {
      y[t] = x.row(t).sum() * 0.5 + 0.3 * normal(rng);
    }
  }
  return Dataset(x, y, Dataset::default_names(cols), task);
}

// Uniform draw in [margin, 1 - margin] * upper for every dual.
inline Eigen::VectorXd random_duals(std::mt19937_64& rng, Eigen::Index size, double upper,
                                    double margin = 0.02) {
  std::uniform_real_distribution<double> u(margin, 1.0 - margin);
  Eigen::VectorXd lam(size);
  for (Eigen::Index k = 0; k < size; ++k) lam[k] = u(rng) * upper;
  return lam;
}

// Moves the duals onto sum alpha_k lambda_k = 0 by scaling down the heavier
// sign group.
inline Eigen::VectorXd project_equality(const Eigen::VectorXd& lam, const Eigen::VectorXd& alpha) {
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) (alpha[k] > 0 ? pos : neg) += lam[k];
  Eigen::VectorXd out = lam;
  const double target = std::min(pos, neg);
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    out[k] *= target / (alpha[k] > 0 ? pos : neg);
  }
  return out;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("medfs_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return {};
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
  std::fclose(f);
  return out;
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

}  // namespace medfs::testing
