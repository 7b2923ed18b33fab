#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "medfs/error.hpp"
#include "medfs/model.hpp"
#include "support.hpp"

using namespace medfs;
using namespace medfs::testing;

namespace {

Dataset toy() {
  Eigen::MatrixXd x(2, 1);
  x << 1, -1;
  return Dataset(x, Eigen::Vector2d(1, -1), Dataset::default_names(1), Task::classification);
}

// One example whose aggregated weight W equals `w`.
Dataset single_weight(double w) {
  Eigen::MatrixXd x(2, 1);
  x << w, -w;
  return Dataset(x, Eigen::Vector2d(1, -1), Dataset::default_names(1), Task::classification);
}

MedModel small_model(Task task) {
  std::mt19937_64 rng(21);
  Dataset d = random_dataset(rng, 14, 3, task);
  Hyperparams h;
  h.p0 = 0.05;
  h.c = 3.0;
  OptimizerConfig o;
  return fit(d, h, o, 2, true);
}

}  // namespace

TEST_CASE("effective coefficients") {
  Hyperparams h;
  h.p0 = 0.5;
  // W = 0.5 * 3 + 0.5 * 3
  Coefficients c = effective_coefficients(DualVars{Eigen::Vector2d(0.5, 0.5), {}}, single_weight(3.0), h);
  CHECK(c.W[0] == doctest::Approx(3.0));
  CHECK(c.P[0] == doctest::Approx(1.0 / (1.0 + std::exp(-4.5))).epsilon(1e-12));
  CHECK(c.W_tilde[0] == doctest::Approx(2.967040).epsilon(1e-6));

  Coefficients z = effective_coefficients(DualVars{Eigen::Vector2d::Zero(), {}}, toy(), h);
  CHECK(z.W_tilde[0] == 0.0);

  h.p0 = 0.01;
  const double star = selection_threshold(h.p0);
  Coefficients t =
      effective_coefficients(DualVars{Eigen::Vector2d(0.5, 0.5), {}}, single_weight(star), h);
  CHECK(t.W_tilde[0] == doctest::Approx(0.5 * star));
}

TEST_CASE("shrinkage never grows a coefficient") {
  std::mt19937_64 rng(3);
  Dataset d = random_dataset(rng, 10, 6, Task::classification);
  Hyperparams h;
  h.p0 = 1e-5;
  DualVars duals{random_duals(rng, 10, 0.01), {}};
  Coefficients c = effective_coefficients(duals, d, h);
  for (Eigen::Index i = 0; i < c.W.size(); ++i) {
    CHECK(std::abs(c.W_tilde[i]) <= std::abs(c.W[i]));
    CHECK(c.P[i] == doctest::Approx(1e-5).epsilon(1e-2));
    CHECK(std::abs(c.W_tilde[i]) < 1e-3 * std::abs(c.W[i]) + 1e-300);
  }
}

TEST_CASE("recover_bias") {
  std::mt19937_64 rng(5);
  Dataset d = random_dataset(rng, 6, 2, Task::classification);
  Hyperparams h;
  Eigen::VectorXd lam = project_equality(random_duals(rng, 6, h.c), d.targets());
  CHECK(std::abs(recover_bias(DualVars{lam, {}}, d, h)) < 1e-9);

  Eigen::VectorXd skew = Eigen::VectorXd::Zero(6);
  skew[0] = 0.2;  // y = +1
  CHECK(recover_bias(DualVars{skew, {}}, d, h) == doctest::Approx(h.sigma * h.sigma * 0.2));

  h.bias = BiasMode::hard;
  CHECK_THROWS_AS(recover_bias(DualVars{Eigen::VectorXd::Zero(6), {}}, d, h), InvalidArgument);
  CHECK(std::abs(recover_bias(DualVars{Eigen::Vector2d(0.5, 0.5), {}}, toy(), h)) < 1e-12);
}

TEST_CASE("toy model predictions") {
  Hyperparams h;
  h.c = 1e6;
  h.p0 = 1.0 - 1e-12;
  OptimizerConfig o;
  MedModel m = fit(toy(), h, o);
  Prediction p = predict(m, Eigen::VectorXd::Constant(1, 1.0));
  CHECK(p.value == 1.0);
  CHECK(p.score == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(predict(m, Eigen::VectorXd::Zero(1)).score == doctest::Approx(m.bias));
  CHECK_THROWS_AS(predict(m, Eigen::VectorXd::Zero(2)), InvalidArgument);
}

TEST_CASE("pure noise features stay switched off") {
  std::mt19937_64 rng(7);
  Dataset d = random_dataset(rng, 40, 5, Task::classification);
  Hyperparams h;
  h.p0 = 1e-5;
  h.c = 0.01;
  OptimizerConfig o;
  MedModel m = fit(d, h, o);
  for (Eigen::Index i = 0; i < m.features(); ++i) {
    CHECK(m.P[i] < 2e-5);
    CHECK(std::abs(m.W_tilde[i]) < 1e-3 * std::abs(m.W[i]) + 1e-300);
  }
}

TEST_CASE("model round-trip is bit-exact") {
  TempDir dir("model");
  for (Task task : {Task::classification, Task::regression}) {
    MedModel m = small_model(task);
    save_model(m, dir / "m.json");
    MedModel back = load_model(dir / "m.json", task);
    CHECK(back.task == m.task);
    CHECK(back.W == m.W);
    CHECK(back.P == m.P);
    CHECK(back.W_tilde == m.W_tilde);
    CHECK(back.bias == m.bias);
    CHECK(back.duals.lambda == m.duals.lambda);
    CHECK(back.duals.lambda_prime == m.duals.lambda_prime);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.objective == m.objective);
    CHECK(back.iterations == m.iterations);
    CHECK(back.converged == m.converged);
    REQUIRE(back.preprocessing.has_value());
    CHECK(back.preprocessing->scaling->shift == m.preprocessing->scaling->shift);
    CHECK(back.preprocessing->scaling->scale == m.preprocessing->scaling->scale);
    CHECK(back.hyperparams.p0 == m.hyperparams.p0);
    CHECK(model_to_json(back) == model_to_json(m));
  }
}

TEST_CASE("refit is deterministic") {
  CHECK(model_to_json(small_model(Task::regression)) ==
        model_to_json(small_model(Task::regression)));
}

TEST_CASE("load_model errors") {
  TempDir dir("model");
  MedModel m = small_model(Task::classification);
  const std::string text = model_to_json(m);

  spit(dir / "cut.json", text.substr(0, text.size() / 2));
  try {
    load_model(dir / "cut.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("section '") != std::string::npos);
  }

  CHECK_THROWS_AS(model_from_json(text, Task::regression), InvalidArgument);
  try {
    model_from_json(text, Task::regression);
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("mode mismatch") != std::string::npos);
  }
  CHECK_THROWS_AS(load_model(dir / "nope.json"), InvalidArgument);
  CHECK_THROWS_AS(model_from_json("{\"version\": 99}"), InvalidArgument);
}

TEST_CASE("predict_scores replays preprocessing") {
  std::mt19937_64 rng(21);
  Dataset raw = random_dataset(rng, 14, 3, Task::regression);
  MedModel m = small_model(Task::regression);
  Eigen::VectorXd scores = predict_scores(m, raw);
  for (Eigen::Index t = 0; t < raw.rows(); ++t) {
    const Eigen::VectorXd row = raw.examples().row(t).transpose();
    CHECK(scores[t] == doctest::Approx(predict_raw(m, row).score).epsilon(1e-12));
  }
  Dataset wrong = random_dataset(rng, 4, 3, Task::classification);
  CHECK_THROWS_AS(predict_scores(m, wrong), InvalidArgument);
}
