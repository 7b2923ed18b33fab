#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "medfs/data.hpp"
#include "medfs/error.hpp"
#include "medfs/eval.hpp"
#include "medfs/expfam.hpp"
#include "medfs/model.hpp"
#include "medfs/objective.hpp"
#include "medfs/optimizer.hpp"

namespace py = pybind11;
using namespace medfs;

namespace {

Dataset make_dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::optional<std::vector<std::string>> names,
                     Task task) {
  std::vector<std::string> n = names ? *names : Dataset::default_names(x.cols());
  return Dataset(std::move(x), std::move(y), std::move(n), task);
}

// Raw feature rows, scored one by one.
Eigen::VectorXd score_rows(const MedModel& m, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Eigen::VectorXd row = x.row(t).transpose();
    out[t] = predict_raw(m, row).score;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_medfs, m) {
  m.doc() = "Maximum entropy discrimination with feature selection";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", invalid.ptr());
  py::register_exception<FeasibilityError>(m, "FeasibilityError", invalid.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());

  py::enum_<Task>(m, "Task")
      .value("classification", Task::classification)
      .value("regression", Task::regression);
  py::enum_<BiasMode>(m, "BiasMode").value("soft", BiasMode::soft).value("hard", BiasMode::hard);
  py::enum_<Variant>(m, "Variant")
      .value("svm", Variant::svm)
      .value("feature_selection", Variant::feature_selection);
  py::enum_<Method>(m, "Method")
      .value("axis_parallel", Method::axis_parallel)
      .value("bounded_qp", Method::bounded_qp);
  py::enum_<Basis>(m, "Basis").value("monomial", Basis::monomial).value("legendre", Basis::legendre);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("c", &Hyperparams::c)
      .def_readwrite("epsilon", &Hyperparams::epsilon)
      .def_readwrite("p0", &Hyperparams::p0)
      .def_readwrite("sigma", &Hyperparams::sigma)
      .def_readwrite("bias", &Hyperparams::bias)
      .def_readwrite("variant", &Hyperparams::variant)
      .def("validate", &Hyperparams::validate);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("method", &OptimizerConfig::method)
      .def_readwrite("tol", &OptimizerConfig::tol)
      .def_readwrite("max_iter", &OptimizerConfig::max_iter)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("qp_inner_tol", &OptimizerConfig::qp_inner_tol)
      .def_readwrite("qp_max_inner", &OptimizerConfig::qp_max_inner)
      .def("validate", &OptimizerConfig::validate);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("examples"), py::arg("targets"),
           py::arg("feature_names") = py::none(), py::arg("task") = Task::classification)
      .def_property_readonly("examples", &Dataset::examples)
      .def_property_readonly("targets", &Dataset::targets)
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("task", &Dataset::task)
      .def_property_readonly("rows", &Dataset::rows)
      .def_property_readonly("cols", &Dataset::cols);

  m.def("load_csv",
        [](const std::filesystem::path& path, const std::string& target, Task task) {
          return load_csv(path, TargetColumn(target), task);
        },
        py::arg("path"), py::arg("target") = "target", py::arg("task") = Task::classification);
  m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"), py::arg("target") = "target");
  m.def("gen_sinc", &gen_sinc, py::arg("count"), py::arg("noise_std"), py::arg("seed"));
  m.def("gen_sparse_binary",
        [](std::size_t train, std::size_t test, std::size_t n, std::size_t k, double flip,
           std::uint64_t seed) {
          SparseBinaryConfig cfg{train, test, n, k, flip, seed};
          SparseBinaryTask task = gen_sparse_binary(cfg);
          return py::make_tuple(task.train, task.test, task.informative);
        },
        py::arg("train") = 500, py::arg("test") = 4724, py::arg("n") = 100,
        py::arg("k_informative") = 10, py::arg("label_flip") = 0.1, py::arg("seed") = 0);
  m.def("gen_housing_like",
        [](std::uint64_t seed, std::size_t train, std::size_t test) {
          RegressionSplit s = gen_housing_like(seed, train, test);
          return py::make_tuple(s.train, s.test);
        },
        py::arg("seed") = 0, py::arg("train") = 481, py::arg("test") = 25);
  m.def("gen_gaussian_clouds", &gen_gaussian_clouds, py::arg("per_class"), py::arg("dim"),
        py::arg("separation"), py::arg("seed"));

  m.def("clf_margin_penalty", &clf_margin_penalty, py::arg("lam"), py::arg("c"));
  m.def("reg_margin_penalty", &reg_margin_penalty, py::arg("lam"), py::arg("c"),
        py::arg("epsilon"));
  m.def("feature_inclusion_prob", &feature_inclusion_prob, py::arg("w"), py::arg("p0"));
  m.def("selection_threshold", &selection_threshold, py::arg("p0"));
  m.def("dual_objective",
        [](const Dataset& d, const Hyperparams& h, const Eigen::VectorXd& lambda) {
          ObjectiveEval e = DualProblem(d, h).evaluate(lambda);
          return py::make_tuple(e.value, e.gradient);
        },
        py::arg("dataset"), py::arg("hyper"), py::arg("lam"),
        "J and its gradient at the flat dual vector (lambda, then lambda' for regression).");

  py::class_<MedModel>(m, "MedModel")
      .def_readonly("task", &MedModel::task)
      .def_readonly("hyperparams", &MedModel::hyperparams)
      .def_readonly("feature_names", &MedModel::feature_names)
      .def_readonly("W", &MedModel::W)
      .def_readonly("P", &MedModel::P)
      .def_readonly("W_tilde", &MedModel::W_tilde)
      .def_readonly("bias", &MedModel::bias)
      .def_readonly("converged", &MedModel::converged)
      .def_readonly("objective", &MedModel::objective)
      .def_readonly("iterations", &MedModel::iterations)
      .def_property_readonly("lam", [](const MedModel& mm) { return mm.duals.lambda; })
      .def_property_readonly("lam_prime", [](const MedModel& mm) { return mm.duals.lambda_prime; })
      .def("to_json", &model_to_json);

  m.def("fit",
        [](const Dataset& d, const Hyperparams& h, const OptimizerConfig& o, int degree,
           bool standardize, Basis basis) {
          py::gil_scoped_release release;
          return fit(d, h, o, degree, standardize, basis);
        },
        py::arg("dataset"), py::arg("hyper") = Hyperparams{}, py::arg("optimizer") = OptimizerConfig{},
        py::arg("degree") = 1, py::arg("standardize") = false, py::arg("basis") = Basis::monomial);
  m.def("predict_scores",
        [](const MedModel& mm, const Eigen::MatrixXd& x) { return score_rows(mm, x); },
        py::arg("model"), py::arg("x"), "Scores for raw feature rows (preprocessing replayed).");
  m.def("predict",
        [](const MedModel& mm, const Eigen::MatrixXd& x) {
          Eigen::VectorXd s = score_rows(mm, x);
          if (mm.task == Task::classification) {
            for (Eigen::Index t = 0; t < s.size(); ++t) s[t] = s[t] >= 0.0 ? 1.0 : -1.0;
          }
          return s;
        },
        py::arg("model"), py::arg("x"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"), py::arg("task") = py::none());
  m.def("model_from_json", &model_from_json, py::arg("text"), py::arg("task") = py::none());

  py::class_<GenerativeMedModel>(m, "GenerativeMedModel")
      .def_readonly("bias", &GenerativeMedModel::bias)
      .def_readonly("converged", &GenerativeMedModel::converged)
      .def_readonly("objective", &GenerativeMedModel::objective)
      .def_property_readonly("mean_plus", &GenerativeMedModel::mean_plus)
      .def_property_readonly("mean_minus", &GenerativeMedModel::mean_minus);
  m.def("fit_generative",
        [](const Dataset& d, const Hyperparams& h, const OptimizerConfig& o) {
          py::gil_scoped_release release;
          return fit_generative(d, h, o);
        },
        py::arg("dataset"), py::arg("hyper") = Hyperparams{}, py::arg("optimizer") = OptimizerConfig{});
  m.def("predict_generative",
        [](const GenerativeMedModel& g, const Eigen::MatrixXd& x) {
          Eigen::VectorXd out(x.rows());
          for (Eigen::Index t = 0; t < x.rows(); ++t) {
            out[t] = predict_generative(g, x.row(t).transpose()).score;
          }
          return out;
        },
        py::arg("model"), py::arg("x"));

  m.def("roc_curve",
        [](const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
          RocCurve r = roc_curve(scores, labels);
          std::vector<double> fpr, tpr;
          for (const RocPoint& p : r.points) {
            fpr.push_back(p.fpr);
            tpr.push_back(p.tpr);
          }
          return py::make_tuple(fpr, tpr, r.auc);
        },
        py::arg("scores"), py::arg("labels"), "Returns (fpr, tpr, auc).");
  m.def("coefficient_cdf",
        [](const Eigen::VectorXd& coeffs, int grid_size) {
          CoeffCdf cdf = coefficient_cdf(coeffs, grid_size);
          std::vector<double> x, f;
          for (const CdfPoint& p : cdf.points) {
            x.push_back(p.x);
            f.push_back(p.fraction);
          }
          return py::make_tuple(x, f);
        },
        py::arg("coeffs"), py::arg("grid_size") = 200, "Returns (x, fraction).");
  m.def("eps_insensitive_loss", &eps_insensitive_loss, py::arg("pred"), py::arg("y"),
        py::arg("epsilon"));
  m.def("rmse", &rmse, py::arg("pred"), py::arg("y"));
  m.def("accuracy", &accuracy, py::arg("scores"), py::arg("labels"));
}
