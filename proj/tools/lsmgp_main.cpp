// Command-line front end: train / predict / eval / gibbs / gen-toy / grid.
//
// Every option can come from a JSON config file of flat dotted keys
// ("train.iters": 500) with command-line flags taking precedence; the fully
// resolved configuration is written next to the outputs so any run can be
// reproduced byte-for-byte from its artifacts.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsmgp/cavi.hpp"
#include "lsmgp/checkpoint.hpp"
#include "lsmgp/gibbs.hpp"
#include "lsmgp/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lsmgp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Registry tying CLI options to dotted config keys for load + emission.
class OptionSet {
 public:
  using ValuePtr = std::variant<bool*, int*, long*, double*, std::uint64_t*, std::string*>;

  void add(CLI::App* app, const std::string& flag, const std::string& key, ValuePtr ptr,
           const std::string& help) {
    CLI::Option* opt = std::visit(
        [&](auto* p) -> CLI::Option* {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, bool>)
            return app->add_flag(flag, *p, help);
          else
            return app->add_option(flag, *p, help);
        },
        ptr);
    entries_.push_back({key, ptr, opt});
  }

  // Fill non-passed options from a dotted-key JSON object.
  void apply_config(const json& cfg) {
    for (auto& e : entries_) {
      if (e.opt->count() > 0) continue;
      auto it = cfg.find(e.key);
      if (it == cfg.end()) continue;
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            *p = it->get<T>();
          },
          e.ptr);
    }
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      bool known = false;
      for (const auto& e : entries_)
        if (e.key == it.key()) known = true;
      if (!known) throw ParseError("unknown config key '" + it.key() + "'");
    }
  }

  json resolved() const {
    json out;
    for (const auto& e : entries_)
      std::visit([&](auto* p) { out[e.key] = *p; }, e.ptr);
    return out;
  }

 private:
  struct Entry {
    std::string key;
    ValuePtr ptr;
    CLI::Option* opt;
  };
  std::vector<Entry> entries_;
};

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object of dotted keys");
  return j;
}

std::string resolve_out_dir(const std::string& flag_value, bool flag_passed) {
  if (!flag_passed) {
    if (const char* env = std::getenv("LSMGP_OUT_DIR"); env != nullptr && *env != '\0')
      return env;
  }
  return flag_value;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  out << text;
}

void emit_resolved(const OptionSet& opts, const fs::path& dir, const std::string& command) {
  json j = opts.resolved();
  j["command"] = command;
  write_text(dir / "resolved_config.json", j.dump(2) + "\n");
}

LabeledDataset load_dataset_checked(const std::string& path) {
  if (!fs::exists(path)) throw ParseError("data file '" + path + "' does not exist");
  return load_libsvm(path);
}

std::string predictions_csv(const Matrix& probs, const std::vector<int>& labels,
                            const std::vector<double>& label_map,
                            const Matrix* latent_mean = nullptr,
                            const Matrix* latent_var = nullptr) {
  std::ostringstream os;
  const long C = probs.cols();
  os << "id,true_label";
  for (long c = 1; c <= C; ++c) os << ",p" << c;
  if (latent_mean != nullptr)
    for (long c = 1; c <= C; ++c) os << ",mu" << c;
  if (latent_var != nullptr)
    for (long c = 1; c <= C; ++c) os << ",var" << c;
  os << ",argmax\n";
  for (long i = 0; i < probs.rows(); ++i) {
    const ClassProbabilities row{probs.row(i).transpose()};
    const int pred = classify(row);
    const double pred_orig =
        label_map.empty() ? pred : label_map[static_cast<std::size_t>(pred - 1)];
    const double true_orig =
        label_map.empty()
            ? labels[static_cast<std::size_t>(i)]
            : label_map[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)];
    os << i << ',' << fmt17(true_orig);
    for (long c = 0; c < C; ++c) os << ',' << fmt17(probs(i, c));
    if (latent_mean != nullptr)
      for (long c = 0; c < C; ++c) os << ',' << fmt17((*latent_mean)(i, c));
    if (latent_var != nullptr)
      for (long c = 0; c < C; ++c) os << ',' << fmt17((*latent_var)(i, c));
    os << ',' << fmt17(pred_orig) << '\n';
  }
  return os.str();
}

std::string trace_csv(const FitResult& result) {
  std::ostringstream os;
  for (const auto& note : result.notes) os << note << '\n';
  os << "iteration,wall_time_s,elbo,test_error,test_nll\n";
  for (const auto& row : result.trace) {
    os << row.iteration << ',' << fmt17(row.wall_time_s) << ',' << fmt17(row.elbo) << ',';
    if (row.test_error.has_value()) os << fmt17(*row.test_error);
    os << ',';
    if (row.test_nll.has_value()) os << fmt17(*row.test_nll);
    os << '\n';
  }
  return os.str();
}

Matrix predict_probs_matrix(const SparseGPState& state, const Matrix& X, int n_samples,
                            SamplerKind kind, Rng& rng) {
  const auto [means, vars] = latent_predictive(state, X);
  Matrix probs(X.rows(), state.n_classes());
  for (long i = 0; i < X.rows(); ++i) {
    const ClassProbabilities p = predict_proba(means.row(i).transpose(),
                                               vars.row(i).transpose(), n_samples, kind, rng);
    probs.row(i) = p.probs.transpose();
  }
  return probs;
}

// ---------------------------------------------------------------------------

struct TrainCli {
  std::string data;
  std::string test;
  double test_fraction = 0.0;
  long m = 200;
  long iters = 2000;
  long minibatch = 200;
  double rho0 = 1.0;
  double rho_exp = 0.6;
  int inner = 5;
  int hyper_period = 10;
  double hyper_lr = 0.01;
  bool fix_hyper = false;
  int class_subsample = 0;
  bool independent_kernels = false;
  bool no_normalize = false;
  int trace_every = 10;
  int mc_samples = 1000;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_train(const TrainCli& cli, const OptionSet& opts, const fs::path& out_dir) {
  LabeledDataset raw = load_dataset_checked(cli.data);
  LabeledDataset train = cli.no_normalize ? raw : normalize(raw);

  LabeledDataset test;
  bool have_test = false;
  if (!cli.test.empty()) {
    LabeledDataset raw_test = load_dataset_checked(cli.test);
    test = raw_test;
    if (train.norm.has_value()) test.X = apply_normalization(raw_test.X, *train.norm);
    have_test = true;
  } else if (cli.test_fraction > 0.0) {
    auto [tr, te] = train_test_split(raw, cli.test_fraction, cli.seed);
    train = cli.no_normalize ? tr : normalize(tr);
    test = te;
    if (train.norm.has_value()) test.X = apply_normalization(te.X, *train.norm);
    have_test = true;
  }

  TrainConfig config;
  config.m = cli.m;
  config.shared_kernel = !cli.independent_kernels;
  config.minibatch_size = cli.minibatch;
  config.n_iterations = cli.iters;
  config.rho0 = cli.rho0;
  config.rho_exponent = cli.rho_exp;
  config.inner_iterations = cli.inner;
  config.hyper_period = cli.fix_hyper ? 0 : cli.hyper_period;
  config.hyper_lr = cli.hyper_lr;
  config.class_subsample = cli.class_subsample;
  config.seed = cli.seed;
  config.trace_every = cli.trace_every;
  config.predict_samples = cli.mc_samples;
  config.threads = cli.threads;

  FitResult result = fit(train, config, have_test ? &test : nullptr);

  ModelCheckpoint ckpt;
  ckpt.state = std::move(result.state);
  ckpt.norm = train.norm;
  ckpt.label_map = train.label_map;
  save_checkpoint(ckpt, (out_dir / "checkpoint.json").string());
  write_text(out_dir / "trace.csv", trace_csv(result));
  emit_resolved(opts, out_dir, "train");
  std::cout << "wrote " << (out_dir / "checkpoint.json").string() << "\n";
  return kExitOk;
}

struct PredictCli {
  std::string checkpoint;
  std::string data;
  int mc_samples = 1000;
  bool qmc = false;
  int bins = 10;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_predict_eval(const PredictCli& cli, const OptionSet& opts, const fs::path& out_dir,
                     bool with_eval) {
  if (!fs::exists(cli.checkpoint))
    throw ParseError("checkpoint '" + cli.checkpoint + "' does not exist");
  const ModelCheckpoint ckpt = load_checkpoint(cli.checkpoint);
  LabeledDataset data = load_dataset_checked(cli.data);
  Matrix X = ckpt.norm.has_value() ? apply_normalization(data.X, *ckpt.norm) : data.X;

  Rng rng = Rng::substream(cli.seed, "mc-predict");
  const SamplerKind kind = cli.qmc ? SamplerKind::kQuasiMonteCarlo : SamplerKind::kMonteCarlo;
  const Matrix probs = predict_probs_matrix(ckpt.state, X, cli.mc_samples, kind, rng);

  write_text(out_dir / "predictions.csv", predictions_csv(probs, data.y, ckpt.label_map));
  if (with_eval) {
    const CalibrationReport rep = evaluate(probs, data.y, cli.bins);
    write_text(out_dir / "calibration.json", report_to_json(rep));
    write_text(out_dir / "reliability.csv", bins_to_csv(rep));
    write_text(out_dir / "confidence_histogram.csv", confidence_histogram_csv(rep));
    std::cout << "error=" << rep.test_error << " nll=" << rep.mean_nll << " ece=" << rep.ece
              << "\n";
  }
  emit_resolved(opts, out_dir, with_eval ? "eval" : "predict");
  return kExitOk;
}

struct GibbsCli {
  std::string data;
  std::string test;
  double test_fraction = 0.0;
  long burnin = 1000;
  long samples = 300;
  int thin = 5;
  int chains = 1;
  bool dump_samples = false;
  bool no_normalize = false;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_gibbs(const GibbsCli& cli, const OptionSet& opts, const fs::path& out_dir) {
  if (cli.samples < 1) throw ParseError("gibbs: need at least one retained sample");
  LabeledDataset raw = load_dataset_checked(cli.data);
  LabeledDataset train = cli.no_normalize ? raw : normalize(raw);
  LabeledDataset test;
  bool have_test = false;
  if (!cli.test.empty()) {
    LabeledDataset raw_test = load_dataset_checked(cli.test);
    test = raw_test;
    if (train.norm.has_value()) test.X = apply_normalization(raw_test.X, *train.norm);
    have_test = true;
  } else if (cli.test_fraction > 0.0) {
    auto [tr, te] = train_test_split(raw, cli.test_fraction, cli.seed);
    train = cli.no_normalize ? tr : normalize(tr);
    test = te;
    if (train.norm.has_value()) test.X = apply_normalization(te.X, *train.norm);
    have_test = true;
  }
  const LabeledDataset& target = have_test ? test : train;

  const std::vector<KernelConfig> kernels = {KernelConfig(1.0, median_heuristic(train.X))};
  GibbsConfig gc;
  gc.n_burnin = cli.burnin;
  gc.n_samples = cli.samples;
  gc.thin = cli.thin;

  std::vector<GibbsResult> results;
  json summary;
  Rng rng_pred = Rng::substream(cli.seed, "mc-predict");
  Matrix probs_acc, mean_acc, var_acc;
  for (int ch = 0; ch < cli.chains; ++ch) {
    gc.seed = cli.seed + static_cast<std::uint64_t>(ch);
    results.push_back(run_gibbs(train, kernels, true, gc));
    const GibbsPredictive pred = predictive_from_samples(results.back(), train.X, target.X,
                                                         kernels, true, rng_pred);
    if (ch == 0) {
      probs_acc = pred.probs;
      mean_acc = pred.latent_mean;
      var_acc = pred.latent_var;
    } else {
      probs_acc += pred.probs;
      mean_acc += pred.latent_mean;
      var_acc += pred.latent_var;
    }
  }
  probs_acc /= cli.chains;
  mean_acc /= cli.chains;
  var_acc /= cli.chains;

  const CalibrationReport rep = evaluate(probs_acc, target.y, 10);
  summary["accuracy"] = 1.0 - rep.test_error;
  summary["mean_nll"] = rep.mean_nll;
  summary["n_chains"] = cli.chains;
  summary["n_retained_per_chain"] = results.front().n_retained;
  summary["burnin"] = cli.burnin;
  summary["thin"] = cli.thin;
  if (cli.chains > 1) summary["max_rhat"] = max_gelman_rubin(results);

  write_text(out_dir / "gibbs_predictions.csv",
             predictions_csv(probs_acc, target.y, train.label_map, &mean_acc, &var_acc));
  write_text(out_dir / "gibbs_summary.json", summary.dump(2) + "\n");
  if (cli.dump_samples) {
    std::ostringstream os;
    os << "# retained f samples, one row per sample; class-major layout: "
          "columns are f[c=1][i=1..N], f[c=2][i=1..N], ...\n";
    for (const auto& f : results.front().f_samples) {
      for (long c = 0; c < f.cols(); ++c)
        for (long i = 0; i < f.rows(); ++i)
          os << (c == 0 && i == 0 ? "" : ",") << fmt17(f(i, c));
      os << '\n';
    }
    write_text(out_dir / "gibbs_f_samples.csv", os.str());
  }
  emit_resolved(opts, out_dir, "gibbs");
  std::cout << "accuracy=" << 1.0 - rep.test_error << " nll=" << rep.mean_nll << "\n";
  return kExitOk;
}

struct GenToyCli {
  double sigma2 = 0.5;
  int n = 500;
  int classes = 3;
  bool sweep = false;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_gen_toy(const GenToyCli& cli, const OptionSet& opts, const fs::path& out_dir) {
  ToySpec spec;
  spec.n_points = cli.n;
  spec.n_classes = cli.classes;
  spec.seed = cli.seed;
  if (cli.sweep) {
    for (int k = 0; k <= 6; ++k) {
      spec.sigma2 = static_cast<double>(k) / 6.0;
      char name[64];
      std::snprintf(name, sizeof(name), "toy_sigma2_%.3f.libsvm", spec.sigma2);
      write_libsvm_file(gen_toy(spec), (out_dir / name).string());
    }
  } else {
    spec.sigma2 = cli.sigma2;
    write_libsvm_file(gen_toy(spec), (out_dir / "toy.libsvm").string());
  }
  emit_resolved(opts, out_dir, "gen-toy");
  return kExitOk;
}

struct GridCli {
  std::string checkpoint;
  double x_min = -2.0, x_max = 2.0, y_min = -2.0, y_max = 2.0;
  int resolution = 50;
  int mc_samples = 1000;
  bool qmc = false;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_grid(const GridCli& cli, const OptionSet& opts, const fs::path& out_dir) {
  if (!fs::exists(cli.checkpoint))
    throw ParseError("checkpoint '" + cli.checkpoint + "' does not exist");
  const ModelCheckpoint ckpt = load_checkpoint(cli.checkpoint);
  GridSpec spec;
  spec.x_min = cli.x_min;
  spec.x_max = cli.x_max;
  spec.y_min = cli.y_min;
  spec.y_max = cli.y_max;
  spec.resolution = cli.resolution;
  spec.n_samples = cli.mc_samples;
  spec.sampler = cli.qmc ? SamplerKind::kQuasiMonteCarlo : SamplerKind::kMonteCarlo;
  Rng rng = Rng::substream(cli.seed, "mc-predict");
  const Matrix grid =
      prediction_grid(ckpt.state, spec, ckpt.norm.has_value() ? &*ckpt.norm : nullptr, rng);
  write_text(out_dir / "grid.csv", grid_to_csv(grid, ckpt.state.n_classes(), spec.resolution));
  emit_resolved(opts, out_dir, "grid");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-class Gaussian process classification with the logistic-softmax "
               "likelihood: conjugate variational inference, an exact Gibbs sampler, and "
               "calibration evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file of flat dotted keys");

  TrainCli train_cli;
  OptionSet train_opts;
  CLI::App* train_app = app.add_subcommand("train", "Fit the variational model");
  train_opts.add(train_app, "--data", "train.data", &train_cli.data, "training LIBSVM file");
  train_opts.add(train_app, "--test", "train.test", &train_cli.test, "held-out LIBSVM file");
  train_opts.add(train_app, "--test-fraction", "train.test_fraction", &train_cli.test_fraction,
                 "stratified split fraction when no --test file is given");
  train_opts.add(train_app, "--m", "train.m", &train_cli.m,
                 "inducing points (0 = full, Z = X)");
  train_opts.add(train_app, "--iters", "train.iters", &train_cli.iters, "iterations");
  train_opts.add(train_app, "--minibatch", "train.minibatch", &train_cli.minibatch,
                 "minibatch size (>= N runs full batch)");
  train_opts.add(train_app, "--rho0", "train.rho0", &train_cli.rho0, "learning-rate scale");
  train_opts.add(train_app, "--rho-exp", "train.rho_exponent", &train_cli.rho_exp,
                 "learning-rate decay exponent (0 keeps rho = rho0)");
  train_opts.add(train_app, "--inner", "train.inner_iterations", &train_cli.inner,
                 "alpha-gamma inner-loop rounds");
  train_opts.add(train_app, "--hyper-period", "train.hyper_period", &train_cli.hyper_period,
                 "iterations between hyperparameter steps");
  train_opts.add(train_app, "--hyper-lr", "train.hyper_lr", &train_cli.hyper_lr,
                 "Adam learning rate for hyperparameters");
  train_opts.add(train_app, "--fix-hyper", "train.fix_hyper", &train_cli.fix_hyper,
                 "keep kernel hyperparameters fixed");
  train_opts.add(train_app, "--class-subsample", "train.class_subsample",
                 &train_cli.class_subsample, "|K| classes per iteration (0 = all)");
  train_opts.add(train_app, "--independent-kernels", "train.independent_kernels",
                 &train_cli.independent_kernels, "per-class kernel hyperparameters");
  train_opts.add(train_app, "--no-normalize", "train.no_normalize", &train_cli.no_normalize,
                 "skip feature standardization");
  train_opts.add(train_app, "--trace-every", "train.trace_every", &train_cli.trace_every,
                 "trace period in iterations (0 = off)");
  train_opts.add(train_app, "--mc-samples", "train.mc_samples", &train_cli.mc_samples,
                 "MC draws for held-out metrics");
  train_opts.add(train_app, "--threads", "train.threads", &train_cli.threads, "worker cap");
  train_opts.add(train_app, "--seed", "train.seed", &train_cli.seed, "master seed");
  train_opts.add(train_app, "--out", "train.out", &train_cli.out, "output directory");

  PredictCli predict_cli;
  OptionSet predict_opts;
  CLI::App* predict_app = app.add_subcommand("predict", "Class probabilities from a checkpoint");
  PredictCli eval_cli;
  OptionSet eval_opts;
  CLI::App* eval_app = app.add_subcommand("eval", "Predictions plus calibration report");
  for (auto [sub, cli, opts, prefix] :
       {std::tuple{predict_app, &predict_cli, &predict_opts, std::string("predict")},
        std::tuple{eval_app, &eval_cli, &eval_opts, std::string("eval")}}) {
    opts->add(sub, "--checkpoint", prefix + ".checkpoint", &cli->checkpoint, "model checkpoint");
    opts->add(sub, "--data", prefix + ".data", &cli->data, "LIBSVM file to score");
    opts->add(sub, "--mc-samples", prefix + ".mc_samples", &cli->mc_samples,
              "MC draws per point");
    opts->add(sub, "--qmc", prefix + ".qmc", &cli->qmc, "quasi-Monte Carlo integration");
    opts->add(sub, "--bins", prefix + ".bins", &cli->bins, "calibration bins");
    opts->add(sub, "--seed", prefix + ".seed", &cli->seed, "master seed");
    opts->add(sub, "--out", prefix + ".out", &cli->out, "output directory");
  }

  GibbsCli gibbs_cli;
  OptionSet gibbs_opts;
  CLI::App* gibbs_app = app.add_subcommand("gibbs", "Exact Gibbs sampler (full GP)");
  gibbs_opts.add(gibbs_app, "--data", "gibbs.data", &gibbs_cli.data, "training LIBSVM file");
  gibbs_opts.add(gibbs_app, "--test", "gibbs.test", &gibbs_cli.test, "held-out LIBSVM file");
  gibbs_opts.add(gibbs_app, "--test-fraction", "gibbs.test_fraction", &gibbs_cli.test_fraction,
                 "stratified split fraction when no --test file is given");
  gibbs_opts.add(gibbs_app, "--burnin", "gibbs.burnin", &gibbs_cli.burnin, "burn-in sweeps");
  gibbs_opts.add(gibbs_app, "--samples", "gibbs.samples", &gibbs_cli.samples,
                 "retained samples");
  gibbs_opts.add(gibbs_app, "--thin", "gibbs.thin", &gibbs_cli.thin, "thinning interval");
  gibbs_opts.add(gibbs_app, "--chains", "gibbs.chains", &gibbs_cli.chains,
                 "independent chains (R-hat reported when > 1)");
  gibbs_opts.add(gibbs_app, "--dump-samples", "gibbs.dump_samples", &gibbs_cli.dump_samples,
                 "export retained f samples as CSV");
  gibbs_opts.add(gibbs_app, "--no-normalize", "gibbs.no_normalize", &gibbs_cli.no_normalize,
                 "skip feature standardization");
  gibbs_opts.add(gibbs_app, "--seed", "gibbs.seed", &gibbs_cli.seed, "master seed");
  gibbs_opts.add(gibbs_app, "--out", "gibbs.out", &gibbs_cli.out, "output directory");

  GenToyCli toy_cli;
  OptionSet toy_opts;
  CLI::App* toy_app = app.add_subcommand("gen-toy", "Gaussian-mixture toy data");
  toy_opts.add(toy_app, "--sigma2", "gen-toy.sigma2", &toy_cli.sigma2, "noise variance");
  toy_opts.add(toy_app, "--n", "gen-toy.n", &toy_cli.n, "points");
  toy_opts.add(toy_app, "--classes", "gen-toy.classes", &toy_cli.classes, "classes");
  toy_opts.add(toy_app, "--sweep", "gen-toy.sweep", &toy_cli.sweep,
               "emit the seven files for sigma2 in {0, 1/6, ..., 1}");
  toy_opts.add(toy_app, "--seed", "gen-toy.seed", &toy_cli.seed, "master seed");
  toy_opts.add(toy_app, "--out", "gen-toy.out", &toy_cli.out, "output directory");

  GridCli grid_cli;
  OptionSet grid_opts;
  CLI::App* grid_app = app.add_subcommand("grid", "Probability grid for plotting");
  grid_opts.add(grid_app, "--checkpoint", "grid.checkpoint", &grid_cli.checkpoint,
                "model checkpoint");
  grid_opts.add(grid_app, "--x-min", "grid.x_min", &grid_cli.x_min, "");
  grid_opts.add(grid_app, "--x-max", "grid.x_max", &grid_cli.x_max, "");
  grid_opts.add(grid_app, "--y-min", "grid.y_min", &grid_cli.y_min, "");
  grid_opts.add(grid_app, "--y-max", "grid.y_max", &grid_cli.y_max, "");
  grid_opts.add(grid_app, "--resolution", "grid.resolution", &grid_cli.resolution,
                "grid cells per axis");
  grid_opts.add(grid_app, "--mc-samples", "grid.mc_samples", &grid_cli.mc_samples,
                "MC draws per cell");
  grid_opts.add(grid_app, "--qmc", "grid.qmc", &grid_cli.qmc, "quasi-Monte Carlo integration");
  grid_opts.add(grid_app, "--seed", "grid.seed", &grid_cli.seed, "master seed");
  grid_opts.add(grid_app, "--out", "grid.out", &grid_cli.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    OptionSet* opts = nullptr;
    if (sub == train_app) opts = &train_opts;
    else if (sub == predict_app) opts = &predict_opts;
    else if (sub == eval_app) opts = &eval_opts;
    else if (sub == gibbs_app) opts = &gibbs_opts;
    else if (sub == toy_app) opts = &toy_opts;
    else opts = &grid_opts;

    if (!config_path.empty()) opts->apply_config(load_config_file(config_path));

    auto out_for = [&](std::string& out_field, CLI::App* a, const char* flag) {
      out_field = resolve_out_dir(out_field, a->count(flag) > 0);
      fs::path dir(out_field);
      fs::create_directories(dir);
      return dir;
    };

    if (sub == train_app) {
      if (train_cli.data.empty()) throw CLI::RequiredError("--data");
      return cmd_train(train_cli, train_opts, out_for(train_cli.out, train_app, "--out"));
    }
    if (sub == predict_app) {
      if (predict_cli.checkpoint.empty() || predict_cli.data.empty())
        throw CLI::RequiredError("--checkpoint/--data");
      return cmd_predict_eval(predict_cli, predict_opts,
                              out_for(predict_cli.out, predict_app, "--out"), false);
    }
    if (sub == eval_app) {
      if (eval_cli.checkpoint.empty() || eval_cli.data.empty())
        throw CLI::RequiredError("--checkpoint/--data");
      return cmd_predict_eval(eval_cli, eval_opts, out_for(eval_cli.out, eval_app, "--out"),
                              true);
    }
    if (sub == gibbs_app) {
      if (gibbs_cli.data.empty()) throw CLI::RequiredError("--data");
      return cmd_gibbs(gibbs_cli, gibbs_opts, out_for(gibbs_cli.out, gibbs_app, "--out"));
    }
    if (sub == toy_app)
      return cmd_gen_toy(toy_cli, toy_opts, out_for(toy_cli.out, toy_app, "--out"));
    return cmd_grid(grid_cli, grid_opts, out_for(grid_cli.out, grid_app, "--out"));
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConditioningError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
