#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "medfs/error.hpp"
#include "medfs/model.hpp"
#include "medfs/optimizer.hpp"
#include "support.hpp"

using namespace medfs;
using namespace medfs::testing;

namespace {

Dataset toy() {
  Eigen::MatrixXd x(2, 1);
  x << 1, -1;
  return Dataset(x, Eigen::Vector2d(1, -1), Dataset::default_names(1), Task::classification);
}

Eigen::MatrixXd random_negdef(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  return -(g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim));
}

double quad_value(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
  return b.dot(x) + 0.5 * x.dot(H * x);
}

// Every assignment of each coordinate to {0, upper, free}; the free block
// solves its stationarity system (with a multiplier when `a` is given).
// The best assignment that lands inside the box is the maximizer.
double brute_force_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, double upper,
                          const Eigen::VectorXd* a, double a_sum) {
  const int dim = static_cast<int>(b.size());
  int total = 1;
  for (int i = 0; i < dim; ++i) total *= 3;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> state(dim);
  for (int code = 0; code < total; ++code) {
    int rest = code;
    std::vector<int> free_idx;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) {
      state[i] = rest % 3;
      rest /= 3;
      if (state[i] == 1) x[i] = upper;
      if (state[i] == 2) free_idx.push_back(i);
    }
    const int m = static_cast<int>(free_idx.size());
    const int extra = a ? 1 : 0;
    if (m + extra == 0) {
      // nothing to solve
    } else {
      if (a && m == 0) continue;
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + extra, m + extra);
      Eigen::VectorXd rhs(m + extra);
      for (int r = 0; r < m; ++r) {
        double fixed = 0.0;
        for (int j = 0; j < dim; ++j) {
          if (state[j] != 2) fixed += H(free_idx[r], j) * x[j];
        }
        rhs[r] = -(b[free_idx[r]] + fixed);
        for (int s = 0; s < m; ++s) K(r, s) = H(free_idx[r], free_idx[s]);
        if (a) {
          K(r, m) = (*a)[free_idx[r]];
          K(m, r) = (*a)[free_idx[r]];
        }
      }
      if (a) {
        double fixed = 0.0;
        for (int j = 0; j < dim; ++j) {
          if (state[j] != 2) fixed += (*a)[j] * x[j];
        }
        rhs[m] = a_sum - fixed;
      }
      Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
      if (!((K * sol - rhs).norm() < 1e-9)) continue;
      for (int r = 0; r < m; ++r) x[free_idx[r]] = sol[r];
    }
    if ((x.array() < -1e-12).any() || (x.array() > upper + 1e-12).any()) continue;
    if (a && std::abs(a->dot(x) - a_sum) > 1e-9) continue;
    best = std::max(best, quad_value(H, b, x));
  }
  return best;
}

}  // namespace

TEST_CASE("qp_subsolve scalar case clips the unconstrained maximum") {
  OptimizerConfig cfg;
  for (double b : {-1.0, 0.5, 7.0}) {
    QuadSurrogate s;
    s.hessian = Eigen::MatrixXd::Constant(1, 1, -2.0);
    s.linear = Eigen::VectorXd::Constant(1, b);
    QpResult r = qp_subsolve(s, 3.0, std::nullopt, Eigen::VectorXd::Zero(1), cfg);
    CHECK(r.x[0] == doctest::Approx(std::clamp(b / 2.0, 0.0, 3.0)).epsilon(1e-12));
  }
}

TEST_CASE("qp_subsolve interior optimum is stationary") {
  std::mt19937_64 rng(2);
  OptimizerConfig cfg;
  Eigen::MatrixXd H = random_negdef(rng, 6);
  Eigen::VectorXd target = Eigen::VectorXd::Constant(6, 0.5);
  QuadSurrogate s;
  s.hessian = H;
  s.linear = -H * target;
  QpResult r = qp_subsolve(s, 1.0, std::nullopt, Eigen::VectorXd::Zero(6), cfg);
  CHECK(r.converged);
  CHECK((s.linear + H * r.x).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("qp_subsolve matches brute-force active sets") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  OptimizerConfig cfg;
  for (int rep = 0; rep < 5; ++rep) {
    const int dim = 10;
    Eigen::MatrixXd H = random_negdef(rng, dim);
    Eigen::VectorXd b(dim);
    for (int i = 0; i < dim; ++i) b[i] = 4.0 * normal(rng);
    QuadSurrogate s;
    s.hessian = H;
    s.linear = b;
    QpResult r = qp_subsolve(s, 1.0, std::nullopt, Eigen::VectorXd::Zero(dim), cfg);
    const double oracle = brute_force_box_qp(H, b, 1.0, nullptr, 0.0);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(std::abs(quad_value(H, b, r.x) - oracle) < 1e-6 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("qp_subsolve with an equality matches brute force") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  OptimizerConfig cfg;
  for (int rep = 0; rep < 5; ++rep) {
    const int dim = 8;
    Eigen::MatrixXd H = random_negdef(rng, dim);
    Eigen::VectorXd b(dim);
    for (int i = 0; i < dim; ++i) b[i] = 4.0 * normal(rng);
    Eigen::VectorXd a(dim);
    for (int i = 0; i < dim; ++i) a[i] = i % 2 ? 1.0 : -1.0;
    QuadSurrogate s;
    s.hessian = H;
    s.linear = b;
    Eigen::VectorXd start = Eigen::VectorXd::Constant(dim, 0.5);
    QpResult r = qp_subsolve(s, 1.0, a, start, cfg);
    CHECK(std::abs(a.dot(r.x)) < 1e-10);
    CHECK((r.x.array() >= 0.0).all());
    CHECK((r.x.array() <= 1.0).all());
    const double oracle = brute_force_box_qp(H, b, 1.0, &a, 0.0);
    CHECK(quad_value(H, b, r.x) == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("maximize_concave_1d") {
  auto f = [](double x) { return ScalarDerivs{-(x - 2) * (x - 2), -2 * (x - 2), -2}; };
  CHECK(maximize_concave_1d(f, 0.0, 5.0) == doctest::Approx(2.0));
  CHECK(maximize_concave_1d(f, 3.0, 5.0) == doctest::Approx(3.0));
  auto g = [](double x) { return ScalarDerivs{std::log(x) - x, 1 / x - 1, -1 / (x * x)}; };
  CHECK(maximize_concave_1d(g, 1e-9, 10.0) == doctest::Approx(1.0));
}

TEST_CASE("toy problem recovers the hard-margin solution") {
  Dataset d = toy();
  for (Method m : {Method::axis_parallel, Method::bounded_qp}) {
    for (BiasMode mode : {BiasMode::soft, BiasMode::hard}) {
      Hyperparams h;
      h.c = 1e6;
      h.bias = mode;
      h.p0 = 1.0 - 1e-12;
      OptimizerConfig o;
      o.method = m;
      MedModel model = fit(d, h, o);
      CAPTURE(to_string(m));
      CAPTURE(to_string(mode));
      CHECK(std::abs(model.duals.lambda[0] - 0.5) < 1e-4);
      CHECK(std::abs(model.duals.lambda[1] - 0.5) < 1e-4);
      CHECK(std::abs(model.W_tilde[0] - 1.0) < 1e-3);
      CHECK(std::abs(model.bias) < 1e-6);
    }
  }
}

TEST_CASE("axis_parallel from the optimum stays put") {
  Dataset d = toy();
  Hyperparams h;
  h.c = 1e6;
  h.bias = BiasMode::hard;
  h.variant = Variant::svm;
  DualProblem problem(d, h);
  // stationary point of 2 lam + 2 log(1 - lam/c) - 2 lam^2
  const double c = h.c;
  const double b = 2 * c + 1;
  const double star = (b - std::sqrt(b * b - 8 * (c - 1))) / 4;
  OptimizerConfig o;
  OptResult r = axis_parallel_maximize(problem, Eigen::Vector2d(star, star), o);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK((r.lambda - Eigen::Vector2d(star, star)).norm() < 1e-8);
}

TEST_CASE("ascent is monotone, feasible and deterministic") {
  std::mt19937_64 rng(8);
  for (Task task : {Task::classification, Task::regression}) {
    for (BiasMode mode : {BiasMode::soft, BiasMode::hard}) {
      Dataset d = random_dataset(rng, 15, 4, task);
      Hyperparams h;
      h.bias = mode;
      h.p0 = 1e-3;
      h.c = 3.0;
      DualProblem problem(d, h);
      OptimizerConfig o;
      o.seed = 3;
      OptResult r = axis_parallel_maximize(problem, problem.initial_point(), o);
      for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
        CHECK(r.objective_trace[i] >= r.objective_trace[i - 1] - 1e-10);
      }
      CHECK_NOTHROW(problem.check_box(r.lambda));
      CHECK((r.lambda.array() < h.c).all());
      if (mode == BiasMode::hard) {
        CHECK(std::abs(problem.constraint_sum(r.lambda)) < 1e-10 * std::max(1.0, r.lambda.sum()));
      }
      OptResult again = axis_parallel_maximize(problem, problem.initial_point(), o);
      CHECK(again.lambda == r.lambda);
      CHECK(again.objective_trace == r.objective_trace);
    }
  }
}

TEST_CASE("quadratic bound touches and lies below the selection term") {
  std::mt19937_64 rng(10);
  for (Task task : {Task::classification, Task::regression}) {
    Dataset d = random_dataset(rng, 8, 3, task);
    Hyperparams h;
    h.p0 = 0.02;
    h.c = 2.0;
    DualProblem problem(d, h);
    Eigen::VectorXd anchor = random_duals(rng, problem.size(), h.c);
    for (Eigen::Index i = 0; i < d.cols(); ++i) {
      QuadBound q = build_quad_bound(problem, anchor, i);
      const double at = selection_term(problem, anchor, i);
      CHECK(std::abs(q.value(anchor) - at) < 1e-10 * std::max(1.0, std::abs(at)));
      auto term = [&](const Eigen::VectorXd& v) { return selection_term(problem, v, i); };
      auto bound = [&](const Eigen::VectorXd& v) { return q.value(v); };
      CHECK((central_difference(term, anchor, 1e-6) - central_difference(bound, anchor, 1e-6))
                .norm() < 1e-6);
      for (int s = 0; s < 50; ++s) {
        Eigen::VectorXd p = random_duals(rng, problem.size(), h.c, 0.0);
        CHECK(q.value(p) <= selection_term(problem, p, i) + 1e-10);
      }
    }
  }
}

TEST_CASE("bound at p0 -> 1 and at a zero anchor") {
  std::mt19937_64 rng(12);
  Dataset d = random_dataset(rng, 6, 2, Task::classification);
  Hyperparams h;
  h.p0 = 1.0 - 1e-15;
  DualProblem problem(d, h);
  Eigen::VectorXd anchor = random_duals(rng, 6, h.c);
  QuadBound q = build_quad_bound(problem, anchor, 0);
  CHECK(q.h < 1e-14);
  // only the N curvature separates the bound from -lambda'M lambda/2
  Eigen::VectorXd p = random_duals(rng, 6, h.c);
  const Eigen::VectorXd dev = p - anchor;
  CHECK(q.value(p) == doctest::Approx(selection_term(problem, p, 0) - 0.5 * dev.dot(q.N * dev))
                          .epsilon(1e-9));

  h.p0 = 0.2;
  DualProblem other(d, h);
  QuadBound z = build_quad_bound(other, Eigen::VectorXd::Zero(6), 0);
  CHECK(z.N.isZero());
  CHECK(z.h == doctest::Approx(0.8));
  CHECK(z.value(Eigen::VectorXd::Zero(6)) == 0.0);
}

TEST_CASE("bounded QP agrees with axis-parallel ascent") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 4; ++rep) {
    const Task task = rep % 2 ? Task::regression : Task::classification;
    Dataset d = random_dataset(rng, 12, 4, task);
    Hyperparams h;
    h.p0 = 0.01;
    h.c = 2.0;
    h.bias = rep < 2 ? BiasMode::soft : BiasMode::hard;
    DualProblem problem(d, h);
    OptimizerConfig o;
    OptResult ap = axis_parallel_maximize(problem, problem.initial_point(), o);
    OptResult qp = iterated_bounded_qp(problem, problem.initial_point(), o);
    for (std::size_t i = 1; i < qp.objective_trace.size(); ++i) {
      CHECK(qp.objective_trace[i] >= qp.objective_trace[i - 1] - 1e-10);
    }
    CHECK(qp.converged);
    CHECK(std::abs(qp.objective() - ap.objective()) <=
          10 * o.tol * std::max(1.0, std::abs(ap.objective())));
  }
}

TEST_CASE("warm-started inner solves shrink") {
  SparseBinaryConfig sc;
  sc.train = 120;
  sc.test = 10;
  sc.n = 20;
  sc.k_informative = 3;
  SparseBinaryTask task = gen_sparse_binary(sc);
  Hyperparams h;
  h.p0 = 1e-3;
  DualProblem problem(task.train, h);
  OptimizerConfig o;
  o.method = Method::bounded_qp;
  OptResult r = iterated_bounded_qp(problem, problem.initial_point(), o);
  REQUIRE(r.inner_steps.size() >= 2);
  CHECK(r.inner_steps[1] < r.inner_steps[0]);
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig o;
  o.tol = 0.0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o = OptimizerConfig{};
  o.max_iter = 0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  CHECK_THROWS_AS(method_from_string("newton"), InvalidArgument);
}
