#pragma once

// Independent reference computations. None of these call into the library's
// closed forms.

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <Eigen/Dense>

namespace medfs::testing {

// -log of  int_{gamma <= 1} c exp(-c(1 - gamma)) exp(-lambda gamma) dgamma,
// integrated in u = 1 - gamma over [0, inf).
inline double clf_penalty_quadrature(double lambda, double c) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double u) { return c * std::exp(-c * u - lambda * (1.0 - u)); };
  return -std::log(integrator.integrate(f));
}

// log of  int_0^eps exp(lambda gamma) dgamma
//       + int_eps^inf exp(c(eps - gamma)) exp(lambda gamma) dgamma.
inline double reg_penalty_quadrature(double lambda, double c, double epsilon) {
  double inside = 0.0;
  if (epsilon > 0.0) {
    boost::math::quadrature::tanh_sinh<double> ts;
    inside = ts.integrate([&](double g) { return std::exp(lambda * g); }, 0.0, epsilon);
  }
  boost::math::quadrature::exp_sinh<double> es;
  auto tail = [&](double v) {
    const double g = epsilon + v;
    return std::exp(c * (epsilon - g) + lambda * g);
  };
  return std::log(inside + es.integrate(tail));
}

// Log partition of one class model for the unit-variance 1-D Gaussian with
// a N(0, 1) prior on its mean:
//   log int N(theta; 0, 1) prod_t exp(s lambda_t y_t (A(x_t) + x_t theta - theta^2/2)) dtheta
inline double gaussian_partition_quadrature(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& lambda, double sign) {
  const double log2pi = std::log(2.0 * M_PI);
  auto log_integrand = [&](double theta) {
    double s = -0.5 * theta * theta - 0.5 * log2pi;
    for (Eigen::Index t = 0; t < x.size(); ++t) {
      const double a = -0.5 * x[t] * x[t] - 0.5 * log2pi;
      s += sign * lambda[t] * y[t] * (a + x[t] * theta - 0.5 * theta * theta);
    }
    return s;
  };
  // scale by the integrand at a coarse-grid peak to keep exp() in range
  double peak = -std::numeric_limits<double>::infinity();
  for (double th = -60.0; th <= 60.0; th += 0.25) peak = std::max(peak, log_integrand(th));
  auto f = [&](double theta) { return std::exp(log_integrand(theta) - peak); };
  double err = 0.0;
  const double z = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -60.0, 60.0, 20, 1e-14, &err);
  return std::log(z) + peak;
}

}  // namespace medfs::testing
