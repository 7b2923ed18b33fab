#include "medfs/commands.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <ostream>

#include <spdlog/spdlog.h>

#include "medfs/error.hpp"
#include "medfs/expfam.hpp"
#include "medfs/model.hpp"

namespace medfs {

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

void require_path(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw InvalidArgument(std::string("missing required ") + flag);
}

std::filesystem::path output_or(const RunConfig& cfg, const char* fallback) {
  return cfg.output.empty() ? cfg.out_dir / fallback : cfg.output;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create directory '" + dir.string() + "': " + ec.message());
}

MedModel load_for(const RunConfig& cfg) {
  require_path(cfg.model, "--model");
  return load_model(cfg.model, cfg.task);
}

Dataset load_test(const RunConfig& cfg, Task task) {
  require_path(cfg.input, "--input");
  return load_csv(cfg.input, cfg.target, task);
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

void RunConfig::validate() const {
  hyper.validate();
  opt.validate();
  if (degree < 1) throw InvalidArgument("degree must be >= 1");
  if (grid_size < 2) throw InvalidArgument("grid size must be >= 2");
}

// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    require_path(cfg.input, "--input");
    require_path(cfg.model, "--model");
    const Task task = cfg.task.value_or(Task::classification);
    const Dataset raw = load_csv(cfg.input, cfg.target, task);
    spdlog::info("training on {} examples with {} features", raw.rows(), raw.cols());
    const MedModel model = fit(raw, cfg.hyper, cfg.opt, cfg.degree, cfg.standardize, cfg.basis);
    save_model(model, cfg.model);
    out.precision(12);
    out << "objective " << model.objective << '\n'
        << "iterations " << model.iterations << '\n'
        << "converged " << bool_text(model.converged) << '\n'
        << "model " << cfg.model.string() << '\n';
  });
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const MedModel model = load_for(cfg);
    const Dataset data = load_test(cfg, model.task);
    const Eigen::VectorXd scores = predict_scores(model, data);
    const auto path = output_or(cfg, "predictions.csv");
    std::ofstream file(path);
    if (!file) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
    file.precision(17);
    file << "score,prediction\n";
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      const double value =
          model.task == Task::classification ? (scores[i] >= 0.0 ? 1.0 : -1.0) : scores[i];
      file << scores[i] << ',' << value << '\n';
    }
    out << "wrote " << scores.size() << " predictions to " << path.string() << '\n';
  });
}

Metrics evaluate_model(const RunConfig& cfg) {
  const MedModel model = load_for(cfg);
  const Dataset data = load_test(cfg, model.task);
  const Eigen::VectorXd scores = predict_scores(model, data);

  Metrics m;
  m.values.emplace_back("n_test", static_cast<double>(data.rows()));
  if (model.task == Task::classification) {
    m.values.emplace_back("auc", roc_curve(scores, data.targets()).auc);
    m.values.emplace_back("accuracy", accuracy(scores, data.targets()));
  } else {
    const double eps = model.hyperparams.epsilon;
    m.values.emplace_back("rmse", rmse(scores, data.targets()));
    m.values.emplace_back("med_eps_loss", eps_insensitive_loss(scores, data.targets(), eps));
    if (!cfg.baseline.empty()) {
      Dataset train = load_csv(cfg.baseline, cfg.target, Task::regression);
      Dataset test = data;
      if (model.preprocessing) {
        train = model.preprocessing->apply(train);
        test = model.preprocessing->apply(test);
      }
      const LinearFit ls = least_squares_fit(train);
      const Eigen::VectorXd ls_pred = ls.predict(test.examples());
      m.values.emplace_back("ls_rmse", rmse(ls_pred, test.targets()));
      m.values.emplace_back("ls_eps_loss", eps_insensitive_loss(ls_pred, test.targets(), eps));
    }
  }
  const Hyperparams& h = model.hyperparams;
  m.config = {{"model", cfg.model.string()},
              {"input", cfg.input.string()},
              {"mode", to_string(model.task)},
              {"c", h.c},
              {"epsilon", h.epsilon},
              {"p0", h.p0},
              {"sigma", h.sigma},
              {"bias_mode", to_string(h.bias)},
              {"variant", to_string(h.variant)},
              {"degree", static_cast<double>(model.preprocessing ? model.preprocessing->degree : 1)}};
  if (!cfg.baseline.empty()) m.config.emplace_back("baseline", cfg.baseline.string());
  return m;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const Metrics m = evaluate_model(cfg);
    if (cfg.output.empty()) {
      out << metrics_to_json(m) << '\n';
    } else {
      write_metrics_json(m, cfg.output);
      out << "wrote metrics to " << cfg.output.string() << '\n';
    }
  });
}

int cmd_roc(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const MedModel model = load_for(cfg);
    if (model.task != Task::classification) {
      throw InvalidArgument("roc needs a classification model");
    }
    const Dataset data = load_test(cfg, model.task);
    const RocCurve roc = roc_curve(predict_scores(model, data), data.targets());
    const auto path = output_or(cfg, "roc.csv");
    write_roc_csv(roc, path);
    out.precision(12);
    out << "auc " << roc.auc << '\n' << "wrote " << path.string() << '\n';
  });
}

int cmd_cdf(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const MedModel model = load_for(cfg);
    const CoeffCdf cdf = coefficient_cdf(model.W_tilde, cfg.grid_size);
    const auto path = output_or(cfg, "cdf.csv");
    write_cdf_csv(cdf, path);
    out << "wrote " << path.string() << '\n';
  });
}

// ---------------------------------------------------------------------------
// Demos

Hyperparams sinc_demo_defaults() {
  Hyperparams h;
  h.c = 100.0;
  h.epsilon = 0.05;
  return h;
}

SincDemoResult demo_sinc(const RunConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);

  Eigen::MatrixXd grid_x(kSincGridPoints, 1);
  Eigen::VectorXd grid_y(kSincGridPoints);
  for (int i = 0; i < kSincGridPoints; ++i) {
    grid_x(i, 0) = -10.0 + 20.0 * i / (kSincGridPoints - 1);
    grid_y[i] = sinc(grid_x(i, 0));
  }

  struct Arm {
    double train_rmse;
    double grid_rmse;
    bool converged;
  };
  auto run = [&](double noise, const char* file) {
    const Dataset train = gen_sinc(100, noise, cfg.opt.seed);
    const MedModel model =
        fit(train, cfg.hyper, cfg.opt, cfg.degree, true, cfg.basis);
    const Dataset grid(grid_x, grid_y, train.feature_names(), Task::regression);
    const Eigen::VectorXd train_pred = predict_scores(model, train);
    const Eigen::VectorXd grid_pred = predict_scores(model, grid);

    std::ofstream csv(cfg.out_dir / file);
    if (!csv) throw InvalidArgument("cannot write " + (cfg.out_dir / file).string());
    csv.precision(17);
    csv << "x,y_true,y_pred\n";
    for (Eigen::Index i = 0; i < train.rows(); ++i) {
      csv << train.examples()(i, 0) << ',' << train.targets()[i] << ',' << train_pred[i] << '\n';
    }
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      csv << grid_x(i, 0) << ',' << grid_y[i] << ',' << grid_pred[i] << '\n';
    }
    return Arm{rmse(train_pred, train.targets()), rmse(grid_pred, grid_y), model.converged};
  };

  // Independent arms; each owns all of its state.
  auto noisy = std::async(std::launch::async, run, 0.2, "sinc_noisy.csv");
  const Arm clean = run(0.0, "sinc_clean.csv");
  const Arm dirty = noisy.get();
  return {clean.train_rmse, clean.grid_rmse, dirty.train_rmse, dirty.grid_rmse, clean.converged,
          dirty.converged};
}

SparseDemoResult demo_sparse(const RunConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  SparseBinaryConfig gen;
  gen.seed = cfg.opt.seed;
  const SparseBinaryTask task = gen_sparse_binary(gen);
  save_csv(task.train, cfg.out_dir / "sparse_train.csv");
  save_csv(task.test, cfg.out_dir / "sparse_test.csv");
  write_index_sidecar(task.informative, cfg.out_dir / "planted.json");

  auto train_arm = [&](double p0) {
    Hyperparams h = cfg.hyper;
    h.p0 = p0;
    h.variant = Variant::feature_selection;
    return fit(task.train, h, cfg.opt);
  };
  auto plain_future = std::async(std::launch::async, train_arm, 0.99999);
  const MedModel select = train_arm(1e-5);
  const MedModel plain = plain_future.get();

  SparseDemoResult r;
  const RocCurve roc_select = roc_curve(predict_scores(select, task.test), task.test.targets());
  const RocCurve roc_plain = roc_curve(predict_scores(plain, task.test), task.test.targets());
  r.auc_select = roc_select.auc;
  r.auc_plain = roc_plain.auc;
  const double upper =
      std::max(select.W_tilde.cwiseAbs().maxCoeff(), plain.W_tilde.cwiseAbs().maxCoeff());
  const auto grid = uniform_grid(upper, cfg.grid_size);
  r.cdf_select = coefficient_cdf(select.W_tilde, grid);
  r.cdf_plain = coefficient_cdf(plain.W_tilde, grid);
  r.select_dominates = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (r.cdf_select.points[i].fraction < r.cdf_plain.points[i].fraction) r.select_dominates = false;
  }
  r.converged_select = select.converged;
  r.converged_plain = plain.converged;

  write_roc_csv(roc_select, cfg.out_dir / "roc_select.csv");
  write_roc_csv(roc_plain, cfg.out_dir / "roc_plain.csv");
  write_cdf_csv(r.cdf_select, cfg.out_dir / "cdf_select.csv");
  write_cdf_csv(r.cdf_plain, cfg.out_dir / "cdf_plain.csv");
  return r;
}

GenerativeDemoResult demo_generative(const RunConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const Dataset train = gen_gaussian_clouds(50, 2, 3.0, cfg.opt.seed);
  const Dataset test = gen_gaussian_clouds(500, 2, 3.0, cfg.opt.seed + 1);
  const GenerativeMedModel model = fit_generative(train, cfg.hyper, cfg.opt);
  save_generative(model, cfg.out_dir / "generative_model.json");

  auto acc = [&](const Dataset& d) {
    Eigen::VectorXd scores(d.rows());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      scores[i] = predict_generative(model, d.examples().row(i).transpose()).score;
    }
    return accuracy(scores, d.targets());
  };
  return {acc(train), acc(test), model.converged};
}

int cmd_demo_sinc(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SincDemoResult r = demo_sinc(cfg);
    out.precision(6);
    out << "noise-free: train rmse " << r.clean_train_rmse << ", grid rmse " << r.clean_grid_rmse
        << ", converged " << bool_text(r.clean_converged) << '\n'
        << "noise 0.2:  train rmse " << r.noisy_train_rmse << ", grid rmse " << r.noisy_grid_rmse
        << ", converged " << bool_text(r.noisy_converged) << '\n'
        << "wrote " << (cfg.out_dir / "sinc_clean.csv").string() << " and "
        << (cfg.out_dir / "sinc_noisy.csv").string() << '\n';
  });
}

int cmd_demo_sparse(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SparseDemoResult r = demo_sparse(cfg);
    out.precision(6);
    out << "auc p0=1e-05:   " << r.auc_select << '\n'
        << "auc p0=0.99999: " << r.auc_plain << '\n'
        << "coefficient cdf with selection dominates: " << bool_text(r.select_dominates) << '\n'
        << "converged " << bool_text(r.converged_select) << " / " << bool_text(r.converged_plain)
        << '\n'
        << "wrote ROC, CDF and data files to " << cfg.out_dir.string() << '\n';
  });
}

int cmd_demo_generative(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GenerativeDemoResult r = demo_generative(cfg);
    out.precision(6);
    out << "train accuracy " << r.train_accuracy << '\n'
        << "test accuracy " << r.test_accuracy << '\n'
        << "converged " << bool_text(r.converged) << '\n';
  });
}

}  // namespace medfs
