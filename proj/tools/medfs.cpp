// medfs: train, evaluate and demo the MED feature-selection machines.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "medfs/commands.hpp"
#include "medfs/error.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("medfs");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("MED_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

struct Flags {
  double c = 10.0;
  double epsilon = 0.2;
  double p0 = 0.99999;
  double sigma = 10.0;
  int degree = 1;
  std::string optimizer = "axis_parallel";
  std::string bias_mode = "soft";
  std::string variant = "feature_selection";
  std::string basis = "monomial";
  bool standardize = false;
  double tol = 1e-8;
  int max_iter = 10000;
  std::uint64_t seed = 0;
  std::string task;
  std::string target = "target";
  std::string input, model, output, baseline, out_dir = ".";
  int grid_size = 200;
};

// Options registered on a subcommand, kept so demos can tell which flags
// were given explicitly.
struct Registered {
  CLI::Option* c = nullptr;
  CLI::Option* epsilon = nullptr;
  CLI::Option* degree = nullptr;
  CLI::Option* basis = nullptr;
  CLI::Option* optimizer = nullptr;
};

Registered add_model_flags(CLI::App* sub, Flags& f) {
  Registered r;
  r.c = sub->add_option("--c", f.c, "margin penalty scale (duals live in [0, c))");
  r.epsilon = sub->add_option("--epsilon", f.epsilon, "epsilon-tube half width (regression)");
  sub->add_option("--p0", f.p0, "prior probability that a feature is switched on");
  sub->add_option("--sigma", f.sigma, "bias prior scale (soft bias mode)");
  r.degree = sub->add_option("--degree", f.degree, "component-wise polynomial degree");
  r.basis = sub->add_option("--basis", f.basis, "expansion basis: monomial or legendre");
  sub->add_flag("--standardize", f.standardize, "standardize expanded features");
  r.optimizer = sub->add_option("--optimizer", f.optimizer, "axis_parallel or bounded_qp");
  sub->add_option("--bias-mode", f.bias_mode, "soft or hard");
  sub->add_option("--variant", f.variant, "feature_selection or svm");
  sub->add_option("--tol", f.tol, "relative improvement per sweep that stops the search");
  sub->add_option("--max-iter", f.max_iter, "maximum sweeps / outer iterations");
  sub->add_option("--seed", f.seed, "random seed");
  return r;
}

medfs::RunConfig to_config(const Flags& f) {
  medfs::RunConfig cfg;
  cfg.hyper.c = f.c;
  cfg.hyper.epsilon = f.epsilon;
  cfg.hyper.p0 = f.p0;
  cfg.hyper.sigma = f.sigma;
  cfg.hyper.bias = medfs::bias_mode_from_string(f.bias_mode);
  cfg.hyper.variant = medfs::variant_from_string(f.variant);
  cfg.opt.method = medfs::method_from_string(f.optimizer);
  cfg.opt.tol = f.tol;
  cfg.opt.max_iter = f.max_iter;
  cfg.opt.seed = f.seed;
  cfg.degree = f.degree;
  cfg.standardize = f.standardize;
  cfg.basis = medfs::basis_from_string(f.basis);
  if (!f.task.empty()) cfg.task = medfs::task_from_string(f.task);
  cfg.target = f.target;
  cfg.input = f.input;
  cfg.model = f.model;
  cfg.output = f.output;
  cfg.baseline = f.baseline;
  cfg.out_dir = f.out_dir;
  cfg.grid_size = f.grid_size;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Maximum entropy discrimination with feature selection"};
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, Registered> registered;

  auto io = [&](CLI::App* sub, bool needs_model, bool needs_input) {
    if (needs_input) sub->add_option("--input,-i", f.input, "CSV with a header row");
    if (needs_model) sub->add_option("--model,-m", f.model, "model file");
    sub->add_option("--task", f.task, "classification or regression");
    sub->add_option("--target", f.target, "name of the target column");
  };

  auto* train = app.add_subcommand("train", "fit a model and write the model file");
  registered["train"] = add_model_flags(train, f);
  io(train, true, true);

  auto* predict = app.add_subcommand("predict", "score a CSV with a trained model");
  io(predict, true, true);
  predict->add_option("--output,-o", f.output, "predictions CSV (score,prediction)");

  auto* eval = app.add_subcommand("eval", "metrics JSON for a model on a test CSV");
  io(eval, true, true);
  eval->add_option("--output,-o", f.output, "metrics JSON file (stdout if omitted)");
  eval->add_option("--baseline", f.baseline, "training CSV for a least-squares baseline");

  auto* roc = app.add_subcommand("roc", "ROC curve CSV (fpr,tpr)");
  io(roc, true, true);
  roc->add_option("--output,-o", f.output, "ROC CSV");

  auto* cdf = app.add_subcommand("cdf", "coefficient magnitude CDF CSV (x,fraction)");
  io(cdf, true, false);
  cdf->add_option("--output,-o", f.output, "CDF CSV");
  cdf->add_option("--grid-size", f.grid_size, "number of grid points");

  auto* sinc = app.add_subcommand("demo-sinc", "sinc regression with a degree-8 expansion");
  registered["demo-sinc"] = add_model_flags(sinc, f);
  sinc->add_option("--out-dir", f.out_dir, "directory for the CSV files");

  auto* sparse = app.add_subcommand("demo-sparse", "planted sparse classification, p0 on/off");
  registered["demo-sparse"] = add_model_flags(sparse, f);
  sparse->add_option("--out-dir", f.out_dir, "directory for the output files");
  sparse->add_option("--grid-size", f.grid_size, "CDF grid points");

  auto* gen = app.add_subcommand("demo-generative", "Gaussian generative classifier");
  registered["demo-generative"] = add_model_flags(gen, f);
  gen->add_option("--out-dir", f.out_dir, "directory for the model file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  if (name == "demo-sinc") {
    const Registered& r = registered[name];
    const medfs::Hyperparams d = medfs::sinc_demo_defaults();
    if (r.c->count() == 0) f.c = d.c;
    if (r.epsilon->count() == 0) f.epsilon = d.epsilon;
    if (r.degree->count() == 0) f.degree = 8;
    if (r.basis->count() == 0) f.basis = "legendre";
  }
  if (name == "demo-sinc" || name == "demo-sparse") {
    if (registered[name].optimizer->count() == 0) f.optimizer = "bounded_qp";
  }

  medfs::RunConfig cfg;
  try {
    cfg = to_config(f);
  } catch (const medfs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
  if (name == "train") return medfs::cmd_train(cfg, out, err);
  if (name == "predict") return medfs::cmd_predict(cfg, out, err);
  if (name == "eval") return medfs::cmd_eval(cfg, out, err);
  if (name == "roc") return medfs::cmd_roc(cfg, out, err);
  if (name == "cdf") return medfs::cmd_cdf(cfg, out, err);
  if (name == "demo-sinc") return medfs::cmd_demo_sinc(cfg, out, err);
  if (name == "demo-sparse") return medfs::cmd_demo_sparse(cfg, out, err);
  return medfs::cmd_demo_generative(cfg, out, err);
}
