#include "medfs/model.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "medfs/error.hpp"
#include "serial.hpp"

namespace medfs {

namespace {

const std::vector<std::string> kSections = {"version", "mode", "hyperparams", "feature_names",
                                            "W", "P", "W_tilde", "bias", "scaling",
                                            "duals", "converged"};

void check_feasible(const DualProblem& problem, const Eigen::VectorXd& lambda) {
  if (lambda.size() != problem.size()) {
    throw InvalidArgument("dual vector has " + std::to_string(lambda.size()) +
                          " entries, problem needs " + std::to_string(problem.size()));
  }
  problem.check_box(lambda);
  if (problem.hard_equality()) problem.check_equality(lambda);
}

Eigen::Index argmax_where(const Eigen::VectorXd& v, Eigen::Index begin, Eigen::Index end,
                          const Eigen::VectorXd* sign, double wanted) {
  Eigen::Index best = -1;
  for (Eigen::Index k = begin; k < end; ++k) {
    if (sign != nullptr && (*sign)[k - begin] != wanted) continue;
    if (best < 0 || v[k] > v[best]) best = k;
  }
  return best;
}

}  // namespace

Coefficients effective_coefficients(const DualVars& duals, const Dataset& d,
                                    const Hyperparams& h) {
  const DualProblem problem(d, h);
  const Eigen::VectorXd lambda = duals.flat();
  check_feasible(problem, lambda);
  FeatureStats stats = feature_stats(problem, lambda);
  Coefficients out;
  out.W_tilde = stats.P.cwiseProduct(stats.W);
  out.W = std::move(stats.W);
  out.P = std::move(stats.P);
  return out;
}

double recover_bias(const DualVars& duals, const Dataset& d, const Hyperparams& h) {
  const DualProblem problem(d, h);
  const Eigen::VectorXd lambda = duals.flat();
  check_feasible(problem, lambda);
  if (!problem.hard_equality()) return problem.bias_scale() * problem.constraint_sum(lambda);

  if ((lambda.array() == 0.0).all()) {
    throw InvalidArgument("bias is indeterminate in hard mode when every dual is zero");
  }
  const Coefficients coef = effective_coefficients(duals, d, h);
  const Eigen::MatrixXd& x = d.examples();
  const Eigen::VectorXd& y = d.targets();
  const double c = h.c;
  const Eigen::Index t = d.rows();

  // Estimate from one constraint k held with equality at its expected margin.
  double total = 0.0;
  int used = 0;
  if (d.task() == Task::classification) {
    for (const double side : {1.0, -1.0}) {
      const Eigen::Index k = argmax_where(lambda, 0, t, &y, side);
      if (k < 0 || lambda[k] == 0.0) continue;
      const double expected_margin = 1.0 - 1.0 / (c - lambda[k]);
      total += side * expected_margin - x.row(k).dot(coef.W_tilde);
      ++used;
    }
  } else {
    const Eigen::Index up = argmax_where(lambda, 0, t, nullptr, 0.0);
    if (lambda[up] > 0.0) {
      const double slack = reg_margin_penalty_derivs(lambda[up], c, h.epsilon).first;
      total += y[up] - x.row(up).dot(coef.W_tilde) + slack;
      ++used;
    }
    const Eigen::Index down = argmax_where(lambda, t, 2 * t, nullptr, 0.0);
    if (lambda[down] > 0.0) {
      const double slack = reg_margin_penalty_derivs(lambda[down], c, h.epsilon).first;
      total += y[down - t] - x.row(down - t).dot(coef.W_tilde) - slack;
      ++used;
    }
  }
  return total / used;
}

MedModel fit(const Dataset& train, const Hyperparams& h, const OptimizerConfig& opt) {
  h.validate();
  opt.validate();
  if (train.rows() == 0) throw InvalidArgument("training set is empty");

  const DualProblem problem(train, h);
  const OptResult result = maximize(problem, problem.initial_point(), opt);
  if (!result.converged) {
    spdlog::warn("optimizer stopped after {} iterations without meeting tol={}",
                 result.iterations, opt.tol);
  }

  MedModel model;
  model.task = train.task();
  model.hyperparams = h;
  model.feature_names = train.feature_names();
  model.duals = result.duals(train.task());
  Coefficients coef = effective_coefficients(model.duals, train, h);
  model.W = std::move(coef.W);
  model.P = std::move(coef.P);
  model.W_tilde = std::move(coef.W_tilde);
  model.bias = recover_bias(model.duals, train, h);
  model.converged = result.converged;
  model.objective = result.objective();
  model.iterations = result.iterations;
  return model;
}

MedModel fit(const Dataset& raw, const Hyperparams& h, const OptimizerConfig& opt, int degree,
             bool standardize, Basis basis) {
  auto [pre, prepared] = Preprocessing::fit(raw, degree, standardize, basis);
  MedModel model = fit(prepared, h, opt);
  model.preprocessing = std::move(pre);
  return model;
}

Prediction predict(const MedModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.features()) {
    throw InvalidArgument("input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(model.features()));
  }
  Prediction p;
  p.score = model.W_tilde.dot(x) + model.bias;
  if (model.task == Task::classification) {
    p.value = p.score >= 0.0 ? 1.0 : -1.0;
  } else {
    p.value = p.score;
  }
  return p;
}

Prediction predict_raw(const MedModel& model, const Eigen::VectorXd& raw) {
  if (!model.preprocessing) return predict(model, raw);
  return predict(model, model.preprocessing->apply(raw));
}

Eigen::VectorXd predict_scores(const MedModel& model, const Dataset& raw) {
  if (raw.task() != model.task) {
    throw InvalidArgument("mode mismatch: model is " + to_string(model.task) + ", data is " +
                          to_string(raw.task()));
  }
  const Dataset prepared = model.preprocessing ? model.preprocessing->apply(raw) : raw;
  if (prepared.cols() != model.features()) {
    throw InvalidArgument("data has " + std::to_string(prepared.cols()) +
                          " features after preprocessing, model expects " +
                          std::to_string(model.features()));
  }
  return (prepared.examples() * model.W_tilde).array() + model.bias;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const MedModel& model) {
  using serial::Json;
  using serial::to_json;
  Json doc;
  doc["version"] = kModelFormatVersion;
  doc["mode"] = to_string(model.task);
  doc["hyperparams"] = to_json(model.hyperparams);
  doc["feature_names"] = model.feature_names;
  doc["W"] = to_json(model.W);
  doc["P"] = to_json(model.P);
  doc["W_tilde"] = to_json(model.W_tilde);
  doc["bias"] = model.bias;
  if (model.preprocessing) {
    const Preprocessing& pre = *model.preprocessing;
    Json s{{"degree", pre.degree},
           {"standardize", pre.standardize},
           {"basis", to_string(pre.basis)},
           {"raw_feature_names", pre.raw_feature_names}};
    if (pre.basis == Basis::legendre) {
      s["input_lo"] = to_json(pre.input_lo);
      s["input_hi"] = to_json(pre.input_hi);
    }
    if (pre.scaling) {
      s["shift"] = to_json(pre.scaling->shift);
      s["scale"] = to_json(pre.scaling->scale);
      s["constant"] = pre.scaling->constant;
    }
    doc["scaling"] = std::move(s);
  } else {
    doc["scaling"] = nullptr;
  }
  doc["duals"] = to_json(model.duals);
  doc["converged"] = model.converged;
  doc["objective"] = model.objective;
  doc["iterations"] = model.iterations;
  return doc.dump(2);
}

void save_model(const MedModel& model, const std::filesystem::path& path) {
  serial::write_text(path, model_to_json(model));
}

MedModel model_from_json(const std::string& text, std::optional<Task> expected) {
  using serial::vector_from;
  const serial::Json doc = serial::parse_document(text, kSections);
  const int version = doc["version"].get<int>();
  if (version != kModelFormatVersion) {
    throw InvalidArgument("unsupported model format version " + std::to_string(version) +
                          " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  if (!doc["mode"].is_string()) throw ParseError("section 'mode' must be a string");
  const std::string mode = doc["mode"].get<std::string>();
  if (mode != "classification" && mode != "regression") {
    throw InvalidArgument("mode mismatch: file holds a '" + mode + "' model");
  }

  MedModel model;
  model.task = task_from_string(mode);
  if (expected && *expected != model.task) {
    throw InvalidArgument("mode mismatch: model was trained for " + mode + ", requested " +
                          to_string(*expected));
  }
  model.hyperparams = serial::hyperparams_from(doc["hyperparams"]);
  try {
    model.feature_names = doc["feature_names"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("section 'feature_names' must be an array of strings");
  }
  model.W = vector_from(doc["W"], "W");
  model.P = vector_from(doc["P"], "P");
  model.W_tilde = vector_from(doc["W_tilde"], "W_tilde");
  const auto n = static_cast<Eigen::Index>(model.feature_names.size());
  if (model.W.size() != n || model.P.size() != n || model.W_tilde.size() != n) {
    throw ParseError("coefficient sections disagree with feature_names in length");
  }
  if (!doc["bias"].is_number()) throw ParseError("section 'bias' must be a number");
  model.bias = doc["bias"].get<double>();

  const serial::Json& s = doc["scaling"];
  if (!s.is_null()) {
    try {
      Preprocessing pre;
      pre.degree = s.at("degree").get<int>();
      pre.standardize = s.at("standardize").get<bool>();
      pre.basis = basis_from_string(s.at("basis").get<std::string>());
      pre.raw_feature_names = s.at("raw_feature_names").get<std::vector<std::string>>();
      if (pre.basis == Basis::legendre) {
        pre.input_lo = vector_from(s.at("input_lo"), "scaling.input_lo");
        pre.input_hi = vector_from(s.at("input_hi"), "scaling.input_hi");
      }
      if (s.contains("shift")) {
        ScalingParams sp;
        sp.shift = vector_from(s["shift"], "scaling.shift");
        sp.scale = vector_from(s["scale"], "scaling.scale");
        sp.constant = s.at("constant").get<std::vector<bool>>();
        pre.scaling = std::move(sp);
      }
      model.preprocessing = std::move(pre);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("section 'scaling' is malformed: ") + e.what());
    }
  }
  model.duals = serial::duals_from(doc["duals"]);
  if (!doc["converged"].is_boolean()) throw ParseError("section 'converged' must be a boolean");
  model.converged = doc["converged"].get<bool>();
  if (doc.contains("objective") && doc["objective"].is_number()) {
    model.objective = doc["objective"].get<double>();
  }
  if (doc.contains("iterations") && doc["iterations"].is_number_integer()) {
    model.iterations = doc["iterations"].get<int>();
  }
  return model;
}

MedModel load_model(const std::filesystem::path& path, std::optional<Task> expected) {
  return model_from_json(serial::read_text(path), expected);
}

}  // namespace medfs
